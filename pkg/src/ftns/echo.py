"""Spectrum reconstruction from spin-echo coherence.

The echo filter samples the spectrum at two scales at once: the cosine
transform of the echo chi'' is 2 M(2 omega) with

    M(omega) = S(omega) - S(omega/2) / 2.

On the discrete grid omega_j = j d_omega the combination is unwound by an
ascending recursion in j, seeded by S(0) = 2 M(0). Spectra with a power-law
part have no transform at all (chi'' of t^(gamma) with gamma > 2 keeps
growing), so that part is fitted in the time domain, subtracted, and added
back analytically after the recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .forward import CoherenceTrace, SpinEcho
from .fid import ReconstructedSpectrum, _cosine_transform, _fold_to_one_sided, second_derivative, trace_provenance
from .spectra import y_n_coefficient
from .traceprep import (
    MitigationConfig,
    fill_early_time,
    fit_early_time,
    mirror,
    mitigate,
    to_attenuation,
)

__all__ = [
    "FitConvergenceError",
    "MArray",
    "OneOverFFit",
    "extract_m",
    "recursion_s_from_m",
    "reconstruct_se",
    "fit_one_over_f",
    "reconstruct_with_one_over_f",
]


class FitConvergenceError(RuntimeError):
    """A nonlinear fit failed to converge."""


@dataclass(frozen=True)
class MArray:
    """Samples of M(omega) = S(omega) - S(omega/2)/2 on a uniform grid."""

    d_omega: float
    M: np.ndarray
    metadata: dict = field(default_factory=dict)


def _prepared_second_derivative(
    trace: CoherenceTrace,
    mitigation: MitigationConfig | None,
    epsilon: float | None,
):
    """Shared prep chain: attenuation, gap fill, mirror or mitigation."""
    att = to_attenuation(trace)
    meta: dict = {"trace_sha256": trace_provenance(trace)}

    if trace.plan.tau_min > 0.0:
        fit = fit_early_time(att, trace.sequence, trace.plan.tau_min, epsilon)
        att = fill_early_time(att, fit)
        meta["early_fit"] = {
            "kappa0": fit.kappa0,
            "kappa1": fit.kappa1,
            "kappa2": fit.kappa2,
            "powers": list(fit.powers),
        }

    config = mitigation
    if config is None and trace.plan.noise_sigma > 0.0:
        config = MitigationConfig()
    lowpass2 = None
    if config is not None:
        att = mitigate(att, config)
        if config.lowpass2_enabled:
            lowpass2 = config.lowpass2_cutoff
        meta["tail_fit"] = {
            "slope": att.tail_fit_slope,
            "intercept": att.tail_fit_intercept,
            "start_t": att.tail_start_t,
        }
    else:
        att = mirror(att)

    return second_derivative(att, lowpass2_cutoff=lowpass2), meta


def extract_m(
    trace: CoherenceTrace,
    *,
    pad_factor: int = 8,
    mitigation: MitigationConfig | None = None,
    epsilon: float | None = None,
) -> MArray:
    """Transform an echo trace into its M array.

    The cosine transform of the echo chi'' evaluated at omega_j returns
    2 M(2 omega_j), so sample j of the result lives at 2 omega_j: the M grid
    spacing is twice the transform's. M(0), which the transform cannot see
    separately (the j = 0 bin equals the tail slope for any sequence), is
    restored by quadratic extrapolation from the first three finite bins.
    """
    if not isinstance(trace.sequence, SpinEcho):
        raise ValueError("M extraction needs a spin-echo trace")
    deriv, meta = _prepared_second_derivative(trace, mitigation, epsilon)
    one_sided = _fold_to_one_sided(deriv)
    omega, g, d_omega_t, n_int = _cosine_transform(one_sided, deriv.dt, pad_factor)
    m = 0.5 * g
    if len(m) < 4:
        raise ValueError("M array needs at least 4 bins to restore M(0)")
    m[0] = 3.0 * m[1] - 3.0 * m[2] + m[3]
    meta.update({"pad_factor": pad_factor, "transform_d_omega": d_omega_t, "n_int": n_int})
    return MArray(d_omega=2.0 * d_omega_t, M=m, metadata=meta)


def recursion_s_from_m(m: MArray) -> ReconstructedSpectrum:
    """Unwind M(omega) = S(omega) - S(omega/2)/2 on its own grid.

    Even bins solve directly against an already known half-index bin; odd
    bins take the half-index value as the mean of its two neighbors, which
    closes the system. The j = 1 seed folds its own appearance on the right
    hand side into the prefactor 4/3.
    """
    vals = m.M
    s = np.empty_like(vals)
    s[0] = 2.0 * vals[0]
    if len(vals) > 1:
        s[1] = (4.0 / 3.0) * (vals[1] + s[0] / 4.0)
    for j in range(2, len(vals)):
        if j % 2 == 0:
            s[j] = vals[j] + s[j // 2] / 2.0
        else:
            s[j] = vals[j] + (s[(j - 1) // 2] + s[(j + 1) // 2]) / 4.0
    omega = np.arange(len(vals)) * m.d_omega
    return ReconstructedSpectrum(
        omega=omega,
        S=s,
        d_omega=m.d_omega,
        omega_max=float(omega[-1]),
        t_tilde_max=2.0 * math.pi / m.d_omega,
        method="se_ftns",
        metadata=dict(m.metadata),
    )


def reconstruct_se(
    trace: CoherenceTrace,
    *,
    pad_factor: int = 8,
    mitigation: MitigationConfig | None = None,
    epsilon: float | None = None,
) -> ReconstructedSpectrum:
    """Invert a spin-echo coherence trace into a noise spectrum."""
    return recursion_s_from_m(
        extract_m(trace, pad_factor=pad_factor, mitigation=mitigation, epsilon=epsilon)
    )


# ---------------------------------------------------------------------------
# Power-law (1/f-type) disentangling.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OneOverFFit:
    """Result of fitting chi(t) = alpha t^gamma + beta t + delta.

    When a genuine power-law part is present, gamma maps to the spectral
    exponent n = gamma - 1 and alpha to the amplitude A_coef of
    A_coef/|omega|^n via the known echo prefactor.
    """

    alpha: float
    beta: float
    delta: float
    gamma: float
    A_coef: float
    n: float
    has_one_over_f: bool


_GAMMA_LO = 1.0 + 1e-8
_GAMMA_HI = 4.0 - 1e-8


def fit_one_over_f(trace: CoherenceTrace) -> OneOverFFit:
    """Fit the attenuation of an echo trace to alpha t^gamma + beta t + delta.

    The t = 0 sample carries no information on the fit (all three terms of
    the model vanish or reduce to delta there) and is excluded. Starting
    values come from a linear fit of the tail and the log-log slope of what
    remains after removing it. A power law is declared absent when the
    fitted gamma pins to a bound or the alpha term never rises above noise
    level over the record.
    """
    if not isinstance(trace.sequence, SpinEcho):
        raise ValueError("power-law fitting needs a spin-echo trace")
    att = to_attenuation(trace)
    sel = att.t > 0
    t = att.t[sel]
    chi = att.chi[sel]
    if len(t) < 8:
        raise ValueError("power-law fit needs at least 8 points at t > 0")

    n_tail = max(2, int(0.4 * len(t)))
    beta0, delta0 = np.polyfit(t[-n_tail:], chi[-n_tail:], 1)
    resid = chi - (beta0 * t + delta0)
    head = t <= t[0] * 10.0
    pos = head & (resid > 0)
    if int(pos.sum()) >= 4:
        slope, loga = np.polyfit(np.log(t[pos]), np.log(resid[pos]), 1)
        gamma0 = float(np.clip(slope, 1.05, 3.95))
        alpha0 = float(np.exp(loga))
    else:
        gamma0 = 2.5
        alpha0 = max(float(np.max(np.abs(resid))), 1e-6)

    def residuals(x):
        alpha, gamma, beta, delta = x
        return alpha * t**gamma + beta * t + delta - chi

    res = least_squares(
        residuals,
        x0=[alpha0, gamma0, beta0, delta0],
        bounds=([0.0, _GAMMA_LO, -np.inf, -np.inf], [np.inf, _GAMMA_HI, np.inf, np.inf]),
        method="trf",
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
        max_nfev=2000,
    )
    if not res.success:
        raise FitConvergenceError(f"power-law fit did not converge: {res.message}")
    alpha, gamma, beta, delta = (float(v) for v in res.x)

    at_bound = gamma < _GAMMA_LO + 1e-6 or gamma > _GAMMA_HI - 1e-6
    chi_span = float(np.max(chi) - np.min(chi))
    negligible = alpha * float(t[-1]) ** gamma < 1e-4 * max(chi_span, 1e-300)
    has = not (at_bound or negligible)
    if has:
        n = gamma - 1.0
        a_coef = alpha / y_n_coefficient(1.0, n)
    else:
        n = 0.0
        a_coef = 0.0
    return OneOverFFit(
        alpha=alpha, beta=beta, delta=delta, gamma=gamma, A_coef=a_coef, n=n, has_one_over_f=has
    )


def reconstruct_with_one_over_f(
    trace: CoherenceTrace,
    *,
    pad_factor: int = 8,
    mitigation: MitigationConfig | None = None,
    epsilon: float | None = None,
) -> ReconstructedSpectrum:
    """Echo reconstruction with the power-law part handled analytically.

    The fitted alpha t^gamma is subtracted from the attenuation, the
    remainder goes through the usual M extraction and recursion, and the
    corresponding A_coef/|omega|^n is added back on the output grid. The
    omega = 0 bin of the result is infinite by construction. Traces without
    a detectable power-law part fall through to the plain reconstruction.
    """
    fit = fit_one_over_f(trace)
    fit_meta = {
        "alpha": fit.alpha,
        "beta": fit.beta,
        "delta": fit.delta,
        "gamma": fit.gamma,
        "A_coef": fit.A_coef,
        "n": fit.n,
        "has_one_over_f": fit.has_one_over_f,
    }
    if not fit.has_one_over_f:
        spec = reconstruct_se(
            trace, pad_factor=pad_factor, mitigation=mitigation, epsilon=epsilon
        )
        meta = dict(spec.metadata)
        meta["one_over_f_fit"] = fit_meta
        return ReconstructedSpectrum(
            omega=spec.omega,
            S=spec.S,
            d_omega=spec.d_omega,
            omega_max=spec.omega_max,
            t_tilde_max=spec.t_tilde_max,
            method="se_ftns_1f",
            metadata=meta,
        )

    # cap the rescale exponent; the product is clipped to 1 far before the
    # cap matters, this only keeps exp() finite
    chi_power = np.minimum(fit.alpha * np.abs(trace.t) ** fit.gamma, 700.0)
    c_resid = np.clip(trace.C * np.exp(chi_power), 1e-12, 1.0)
    c_resid.flags.writeable = False
    resid_trace = CoherenceTrace(
        t=trace.t, C=c_resid, mask=trace.mask, plan=trace.plan, sequence=trace.sequence
    )

    m = extract_m(resid_trace, pad_factor=pad_factor, mitigation=mitigation, epsilon=epsilon)
    spec = recursion_s_from_m(m)

    s_total = spec.S.copy()
    s_total[1:] += fit.A_coef / spec.omega[1:] ** fit.n
    s_total[0] = math.inf
    meta = dict(spec.metadata)
    meta["one_over_f_fit"] = fit_meta
    return ReconstructedSpectrum(
        omega=spec.omega,
        S=s_total,
        d_omega=spec.d_omega,
        omega_max=spec.omega_max,
        t_tilde_max=spec.t_tilde_max,
        method="se_ftns_1f",
        metadata=meta,
    )
