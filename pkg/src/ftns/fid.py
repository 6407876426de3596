"""Spectrum reconstruction from free-decay coherence.

For free decay the attenuation and the noise spectrum are a cosine-transform
pair once two time derivatives are taken:

    S(omega) = 2 Integral_0^inf chi''(t) cos(omega t) dt.

The discrete version inherits its frequency axis from the sampling: the grid
ends at omega_max = pi/dt exactly, and zero-padding the record to
T_tilde = pad_factor * T_max sets the spacing d_omega = 2 pi / T_tilde.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forward import FID, CoherenceTrace, trace_to_csv_text
from .traceprep import (
    AttenuationTrace,
    MitigationConfig,
    fill_early_time,
    fit_early_time,
    mirror,
    mitigate,
    to_attenuation,
)

__all__ = [
    "DerivativeTrace",
    "ReconstructedSpectrum",
    "second_derivative",
    "fourier_to_spectrum",
    "reconstruct_fid",
    "trace_provenance",
    "save_spectrum",
    "load_spectrum",
]


@dataclass(frozen=True)
class DerivativeTrace:
    """Samples of a time derivative on a uniform grid."""

    t: np.ndarray
    values: np.ndarray
    dt: float


@dataclass(frozen=True)
class ReconstructedSpectrum:
    """A noise spectrum estimate on a uniform frequency grid.

    omega_max and t_tilde_max record the transform geometry (pi/dt and the
    zero-padded record length); methods that do not transform, such as the
    pulse-train baseline, fill them with their own band edges and leave
    d_omega as NaN.
    """

    omega: np.ndarray
    S: np.ndarray
    d_omega: float
    omega_max: float
    t_tilde_max: float
    method: str
    metadata: dict = field(default_factory=dict)


def trace_provenance(trace: CoherenceTrace) -> str:
    """Short content hash tying a reconstruction to its input trace."""
    return hashlib.sha256(trace_to_csv_text(trace).encode()).hexdigest()[:16]


def second_derivative(
    att: AttenuationTrace, *, lowpass2_cutoff: float | None = None
) -> DerivativeTrace:
    """Two gradient passes over an attenuation record.

    When the record carries a fitted tail line, the first derivative is
    pinned to the fitted slope on the two samples flanking each replacement
    boundary; the gradient stencil straddling the boundary would otherwise
    mix the measured curvature into the flat tail and leave a spurious spike
    in the second derivative. An optional zero-phase low-pass runs between
    the two passes.
    """
    from .traceprep import lowpass

    if len(att.t) < 5:
        raise ValueError("need at least 5 samples to form a second derivative")
    if np.max(np.abs(np.diff(att.t) - att.dt)) > 1e-9 * att.dt:
        raise ValueError("derivative needs a uniform grid; fill the dead time first")

    d1 = np.gradient(att.chi, att.dt)

    if att.tail_start_t is not None and att.tail_fit_slope is not None:
        slope = att.tail_fit_slope
        i0 = int(np.argmin(np.abs(att.t - att.tail_start_t)))
        if i0 >= 1:
            d1[i0 - 1] = slope
            d1[i0] = slope
        if att.t[0] < 0.0:
            j0 = int(np.argmin(np.abs(att.t + att.tail_start_t)))
            d1[j0] = -slope
            if j0 + 1 < len(d1):
                d1[j0 + 1] = -slope

    if lowpass2_cutoff is not None:
        d1 = lowpass(d1, lowpass2_cutoff)

    d2 = np.gradient(d1, att.dt)
    return DerivativeTrace(t=att.t.copy(), values=d2, dt=att.dt)


def _fold_to_one_sided(deriv: DerivativeTrace) -> np.ndarray:
    """Average the two halves of a mirrored record; pass one-sided through."""
    t, v = deriv.t, deriv.values
    if t[0] >= 0.0:
        return v.copy()
    center = int(np.argmin(np.abs(t)))
    if abs(float(t[center])) > 1e-9 * deriv.dt:
        raise ValueError("two-sided record does not contain t = 0")
    n_neg, n_pos = center, len(t) - center - 1
    if n_neg != n_pos:
        raise ValueError("two-sided record is not symmetric about t = 0")
    left = v[center::-1]
    right = v[center:]
    odd = float(np.max(np.abs(left - right)))
    if odd > 1e-10 * max(float(np.max(np.abs(v))), 1e-300):
        raise ValueError(
            "record is not even about t = 0; its cosine transform would not be real"
        )
    return 0.5 * (left + right)


def _cosine_transform(values: np.ndarray, dt: float, pad_factor: int):
    """2 * Integral_0^inf f(t) cos(omega t) dt by trapezoid with zero padding.

    values holds f on t = 0, dt, ..., K dt and is treated as zero beyond.
    The returned grid is omega_j = j * 2 pi / (N dt) with N = pad_factor * K
    (rounded up to even), ending exactly at pi/dt.
    """
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    k_intervals = len(values) - 1
    if k_intervals < 1:
        raise ValueError("transform needs at least two samples")
    n_int = pad_factor * k_intervals
    if n_int % 2:
        n_int += 1
    omega = np.linspace(0.0, math.pi / dt, n_int // 2 + 1)
    d_omega = 2.0 * math.pi / (n_int * dt)

    # Zero padding makes the K-th sample an interior point, so it keeps full
    # trapezoid weight; only the t = 0 endpoint is halved.
    k = np.arange(1, k_intervals + 1) * dt
    tail = values[1:]
    out = np.empty_like(omega)
    chunk = max(1, int(4.0e6 / max(k_intervals, 1)))
    for lo in range(0, len(omega), chunk):
        wc = omega[lo : lo + chunk]
        out[lo : lo + chunk] = np.cos(wc[:, None] * k[None, :]) @ tail
    out = 2.0 * dt * (0.5 * values[0] + out)
    return omega, out, d_omega, n_int


def fourier_to_spectrum(deriv: DerivativeTrace, pad_factor: int = 8) -> ReconstructedSpectrum:
    """Cosine-transform a second-derivative record into a spectrum estimate."""
    one_sided = _fold_to_one_sided(deriv)
    omega, s, d_omega, n_int = _cosine_transform(one_sided, deriv.dt, pad_factor)
    return ReconstructedSpectrum(
        omega=omega,
        S=s,
        d_omega=d_omega,
        omega_max=float(omega[-1]),
        t_tilde_max=n_int * deriv.dt,
        method="fid_ftns",
        metadata={"pad_factor": pad_factor},
    )


def reconstruct_fid(
    trace: CoherenceTrace,
    *,
    pad_factor: int = 8,
    mitigation: MitigationConfig | None = None,
    epsilon: float | None = None,
) -> ReconstructedSpectrum:
    """Invert a free-decay coherence trace into a noise spectrum.

    The attenuation record is mirrored about t = 0 before differentiating.
    Dead-time gaps are closed with the short-time polynomial fit. Noise
    mitigation runs whenever a config is passed, or with default settings
    when the trace declares a nonzero noise level.

    Parameters
    ----------
    trace : CoherenceTrace
        Must come from free decay.
    pad_factor : int
        Zero-padding multiple of the record length.
    mitigation : MitigationConfig or None
        None keeps the clean pipeline unless the trace itself is noisy.
    epsilon : float or None
        Width of the early-time fit window above the dead time.
    """
    if not isinstance(trace.sequence, FID):
        raise ValueError("free-decay reconstruction needs a free-decay trace")

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

    deriv = second_derivative(att, lowpass2_cutoff=lowpass2)
    spec = fourier_to_spectrum(deriv, pad_factor=pad_factor)
    meta.update(spec.metadata)
    return ReconstructedSpectrum(
        omega=spec.omega,
        S=spec.S,
        d_omega=spec.d_omega,
        omega_max=spec.omega_max,
        t_tilde_max=spec.t_tilde_max,
        method="fid_ftns",
        metadata=meta,
    )


# ---------------------------------------------------------------------------
# Spectrum files: CSV columns plus a JSON sidecar with the grid geometry.
# ---------------------------------------------------------------------------


def save_spectrum(spec: ReconstructedSpectrum, csv_path) -> None:
    csv_path = Path(csv_path)
    lines = ["omega,S"]
    for w, s in zip(spec.omega, spec.S):
        lines.append(f"{w:.17g},{s:.17g}")
    csv_path.write_text("\n".join(lines) + "\n")
    sidecar = {
        "d_omega": spec.d_omega,
        "omega_max": spec.omega_max,
        "t_tilde_max": spec.t_tilde_max,
        "method": spec.method,
        "metadata": spec.metadata,
    }
    csv_path.with_suffix(".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )


def load_spectrum(csv_path) -> ReconstructedSpectrum:
    csv_path = Path(csv_path)
    rows = csv_path.read_text().strip().splitlines()
    if not rows or rows[0].strip() != "omega,S":
        raise ValueError(f"{csv_path}: expected header 'omega,S'")
    omega, s = [], []
    for i, row in enumerate(rows[1:], start=2):
        parts = row.split(",")
        if len(parts) != 2:
            raise ValueError(f"{csv_path}:{i}: expected 2 fields, got {len(parts)}")
        omega.append(float(parts[0]))
        s.append(float(parts[1]))
    omega = np.asarray(omega)
    s = np.asarray(s)
    sidecar_path = csv_path.with_suffix(".json")
    if sidecar_path.exists():
        doc = json.loads(sidecar_path.read_text())
        return ReconstructedSpectrum(
            omega=omega,
            S=s,
            d_omega=float(doc["d_omega"]),
            omega_max=float(doc["omega_max"]),
            t_tilde_max=float(doc["t_tilde_max"]),
            method=str(doc["method"]),
            metadata=dict(doc.get("metadata", {})),
        )
    d_omega = float(omega[1] - omega[0]) if len(omega) > 1 else math.nan
    return ReconstructedSpectrum(
        omega=omega,
        S=s,
        d_omega=d_omega,
        omega_max=float(omega[-1]),
        t_tilde_max=(2.0 * math.pi / d_omega) if d_omega == d_omega else math.nan,
        method="unknown",
        metadata={},
    )
