"""Forward simulation of pure-dephasing coherence under pulsed control.

The coherence of a dephasing qubit is C(t) = exp(-chi(t)) with

    chi(t) = (1/4 pi) Integral S(omega) F(omega, t) d omega,

where F is the filter function of the applied pulse sequence. Every sequence
handled here (free decay, spin echo, evenly spaced pi-pulse trains) has a
piecewise-constant switching function, so omega^2 F(omega, t) is a finite
cosine series in x = omega t with integer coefficients. That series drives
both the quadrature kernels and the exact special-case integrals.
"""

from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .spectra import (
    Constant,
    Gaussian,
    Lorentzian,
    OneOverF,
    SpectrumModel,
    lorentzian_pair_chi_fid,
    model_from_dict,
    model_to_dict,
)

__all__ = [
    "FID",
    "SpinEcho",
    "CPMG",
    "PulseSequence",
    "DivergentIntegralError",
    "QuadratureWarning",
    "Mask",
    "MeasurementPlan",
    "CoherenceTrace",
    "pulse_times",
    "filter_value",
    "attenuation",
    "coherence",
    "simulate_trace",
    "t2_from_trace",
    "save_trace",
    "load_trace",
    "sequence_to_obj",
    "sequence_from_obj",
]


class DivergentIntegralError(RuntimeError):
    """The requested overlap integral has no finite value."""


class QuadratureWarning(UserWarning):
    """The adaptive refinement loop stopped before reaching its target."""


# ---------------------------------------------------------------------------
# Pulse sequences and their filter series.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FID:
    """Free decay, no refocusing pulses."""


@dataclass(frozen=True)
class SpinEcho:
    """Single pi pulse at t/2."""


@dataclass(frozen=True)
class CPMG:
    """n_pulses evenly spaced pi pulses at t_j = (j - 1/2) t / n."""

    n_pulses: int

    def __post_init__(self) -> None:
        if self.n_pulses < 1:
            raise ValueError(f"a pulse train needs n_pulses >= 1, got {self.n_pulses}")


PulseSequence = FID | SpinEcho | CPMG


def pulse_times(sequence: PulseSequence, t: float) -> np.ndarray:
    """Pi-pulse instants of the sequence over a total evolution time t."""
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    if isinstance(sequence, FID):
        return np.array([])
    n = 1 if isinstance(sequence, SpinEcho) else sequence.n_pulses
    return (np.arange(1, n + 1) - 0.5) * t / n


def _n_pulses(sequence: PulseSequence) -> int:
    if isinstance(sequence, FID):
        return 0
    if isinstance(sequence, SpinEcho):
        return 1
    return sequence.n_pulses


@dataclass
class FilterSeries:
    """Cosine expansion omega^2 F = beta0 + sum_k betas[k] cos(nus[k] x).

    x = omega t. For free decay the series is 2 - 2 cos x. For an n-pulse
    train the switching function toggles at (j - 1/2)/n, so its segment
    coefficients live on the frequency grid j/(2n) and the betas follow from
    their autocorrelation. beta0 + sum(betas) = 0 always (the filter vanishes
    at omega = 0); for every refocusing sequence sum(betas * nus^2) = 0 as
    well, which is what makes the filter fourth order at the origin.
    """

    n_pulses: int
    beta0: float
    betas: np.ndarray
    nus: np.ndarray
    m2: float
    m4: float
    m6: float


@functools.lru_cache(maxsize=None)
def _filter_series(sequence: PulseSequence) -> FilterSeries:
    n = _n_pulses(sequence)
    if n == 0:
        betas = np.array([-2.0])
        nus = np.array([1.0])
        beta0 = 2.0
    else:
        # Segment coefficients of the switching transform on the grid j/(2n).
        c = np.zeros(2 * n + 1)
        c[0] = -1.0
        signs = np.where(np.arange(1, n + 1) % 2 == 1, 1.0, -1.0)
        c[1::2] = 2.0 * signs
        c[2 * n] += (-1.0) ** n
        auto = np.correlate(c, c, mode="full")
        beta0 = float(auto[2 * n])
        betas = 2.0 * auto[2 * n + 1 :]
        nus = np.arange(1, 2 * n + 1) / (2.0 * n)
    m2 = float(np.dot(betas, nus**2))
    m4 = float(np.dot(betas, nus**4))
    m6 = float(np.dot(betas, nus**6))
    if abs(beta0 + betas.sum()) > 1e-9 or (n >= 1 and abs(m2) > 1e-9):
        raise AssertionError("filter series lost its zero-frequency structure")
    betas.flags.writeable = False
    nus.flags.writeable = False
    return FilterSeries(n, beta0, betas, nus, m2, m4, m6)


def _v_of_x(series: FilterSeries, x: np.ndarray) -> np.ndarray:
    """V(x) = (omega^2 F)/x^2, the filter with its 1/omega^2 envelope removed.

    Near x = 0 the cosine sum cancels to machine noise, so the moment
    expansion V = -m2/2 + m4 x^2/24 - m6 x^4/720 takes over there.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-2
    xs = x[small]
    out[small] = -series.m2 / 2.0 + series.m4 * xs**2 / 24.0 - series.m6 * xs**4 / 720.0
    xb = x[~small]
    if xb.size:
        if series.n_pulses == 0:
            w = 4.0 * np.sin(xb / 2.0) ** 2
        elif series.n_pulses == 1:
            w = 16.0 * np.sin(xb / 4.0) ** 4
        else:
            w = np.full_like(xb, series.beta0)
            for beta, nu in zip(series.betas, series.nus):
                w += beta * np.cos(nu * xb)
        out[~small] = w / xb**2
    return out


def filter_value(sequence: PulseSequence, omega, t):
    """Filter function F(omega, t) of the sequence, F = t^2 V(omega t)."""
    series = _filter_series(sequence)
    omega_arr = np.asarray(omega, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    x = omega_arr * t_arr
    val = t_arr**2 * _v_of_x(series, np.atleast_1d(x)).reshape(np.shape(x))
    return val if np.shape(val) else float(val)


# ---------------------------------------------------------------------------
# Attenuation integrals.
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_LORENTZIAN_EXTENT = 400.0  # half widths; tail mass beyond is negligible under 1/omega^2
_GAUSSIAN_EXTENT = 8.0  # standard deviations
_PHASE_PER_PANEL = 8.0  # keeps 16-node panels in their spectral convergence regime
_EXACT_PATH_COST = 3.0e7  # node evaluations above which Lorentzians go analytic


def _power_law_k1(series: FilterSeries, n: float) -> float:
    """One-sided moment integral of the filter series against 1/x^(n+2).

    k1 = Integral_0^inf W(x) x^(-n-2) dx with W(x) = sum_k (-beta_k)
    (1 - cos nu_k x). For n < 1 each term converges separately; for n > 1
    the terms are regularized by subtracting (nu_k x)^2 / 2, which sums to
    zero because sum(betas * nus^2) = 0 for refocusing sequences. Either
    way the per-term value continues to -Gamma(1-s) sin(pi s/2) nu^(s-1),
    and the integer exponents are its limits.
    """
    from scipy.special import gamma

    neg_beta = -series.betas
    nus = series.nus
    s = n + 2.0
    if n == 1.0:
        return -0.5 * float(np.dot(neg_beta, nus**2 * np.log(nus)))
    if n == 2.0:
        return -(math.pi / 12.0) * float(np.dot(neg_beta, nus**3))
    per_term = -gamma(1.0 - s) * math.sin(math.pi * s / 2.0)
    return float(np.dot(neg_beta, nus ** (s - 1.0))) * per_term


def _lorentzian_series_chi(comp: Lorentzian, series: FilterSeries, t: np.ndarray) -> np.ndarray:
    """Exact attenuation of one Lorentzian line via the filter's cosine series.

    Each (1 - cos nu x) term of the filter is a free-decay overlap evaluated
    at the stretched time nu t, and those have a closed form. Costs one pair
    evaluation per series term instead of a quadrature grid, which is what
    makes long pulse-train time ladders affordable.
    """
    tau = np.multiply.outer(t, series.nus)
    pair = lorentzian_pair_chi_fid(1.0, comp.hwhm, abs(comp.d), tau)
    return (comp.s0 / 4.0) * pair @ (-series.betas)


def _component_geometry(comp) -> tuple[float, float, float]:
    """(center, scale, extent) of the quadrature window for one component."""
    if isinstance(comp, Lorentzian):
        return comp.d, comp.hwhm, _LORENTZIAN_EXTENT * comp.hwhm
    if isinstance(comp, Gaussian):
        return comp.mu, comp.sigma, _GAUSSIAN_EXTENT * comp.sigma
    raise TypeError(f"no quadrature geometry for {type(comp).__name__}")


def _panel_edges(scale: float, extent: float, cap: float, refine: int) -> np.ndarray:
    """One-sided panel edges from a component's center out to its extent.

    Uniform panels of width min(scale/2, cap) cover the core |x| <= 4 scale;
    beyond it widths grow geometrically (factor 1.4) up to the phase cap.
    refine halves every width.
    """
    w_core = min(scale / 2.0, cap) / 2.0**refine
    cap_r = cap / 2.0**refine
    core = min(4.0 * scale, extent)
    edges = [0.0]
    x = 0.0
    while x < core:
        x = min(x + w_core, core)
        edges.append(x)
    w = w_core
    while x < extent:
        w = min(w * 1.4, cap_r)
        x = min(x + w, extent)
        edges.append(x)
    return np.asarray(edges)


def _nodes_and_weights(center: float, scale: float, extent: float, cap: float, refine: int):
    one_sided = _panel_edges(scale, extent, cap, refine)
    edges = np.concatenate([center - one_sided[::-1], center + one_sided[1:]])
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _integrate_component(comp, series: FilterSeries, nodes, weights, t) -> np.ndarray:
    s_nodes = comp.evaluate(nodes)
    sw = s_nodes * weights
    chi = np.empty_like(t)
    chunk = max(1, int(4.0e6 / max(len(nodes), 1)))
    for lo in range(0, len(t), chunk):
        tc = t[lo : lo + chunk]
        v = _v_of_x(series, tc[:, None] * nodes[None, :])
        chi[lo : lo + chunk] = (tc**2 / (4.0 * math.pi)) * (v @ sw)
    return chi


def _gl_component_chi(comp, series: FilterSeries, t: np.ndarray, rel_tol: float) -> np.ndarray:
    """Composite Gauss-Legendre attenuation with an adaptive refinement check.

    The panel layout is validated on a small subsample of times by halving
    all widths until two consecutive refinements agree to rel_tol, then the
    accepted layout is applied to the full time grid.
    """
    center, scale, extent = _component_geometry(comp)
    t_max = float(t.max(initial=0.0))
    cap = _PHASE_PER_PANEL / t_max if t_max > 0 else math.inf

    positive = t[t > 0]
    if positive.size == 0:
        return np.zeros_like(t)
    if positive.size <= 33:
        sub = positive
    else:
        sub = positive[np.unique(np.linspace(0, positive.size - 1, 33).astype(int))]

    chosen = 2
    prev = None
    for refine in range(3):
        nodes, weights = _nodes_and_weights(center, scale, extent, cap, refine)
        chi_sub = _integrate_component(comp, series, nodes, weights, sub)
        if prev is not None:
            tol = rel_tol * max(float(np.max(np.abs(chi_sub))), 1e-300)
            if float(np.max(np.abs(chi_sub - prev))) <= tol:
                chosen = refine - 1
                break
        prev = chi_sub
    else:
        warnings.warn(
            "quadrature refinement did not converge to the requested tolerance",
            QuadratureWarning,
            stacklevel=2,
        )

    nodes, weights = _nodes_and_weights(center, scale, extent, cap, chosen)
    return _integrate_component(comp, series, nodes, weights, t)


def _estimated_gl_cost(comp: Lorentzian, t: np.ndarray) -> float:
    t_max = float(t.max(initial=0.0))
    if t_max == 0.0:
        return 0.0
    cap = _PHASE_PER_PANEL / t_max
    panels = 2.0 * _LORENTZIAN_EXTENT * comp.hwhm / min(comp.hwhm / 2.0, cap)
    return 16.0 * panels * len(t)


def attenuation(model: SpectrumModel, sequence: PulseSequence, t, *, rel_tol: float = 1e-8):
    """Attenuation exponent chi(t) = (1/4 pi) Integral S F d omega.

    Components are integrated independently: flat noise and power laws have
    exact expressions, Lorentzian and Gaussian lines use composite
    Gauss-Legendre panels shaped to the line and to the fastest filter
    oscillation. Lorentzians whose quadrature would be very large (long
    pulse-train ladders) switch to the exact cosine-series form.

    Parameters
    ----------
    model : SpectrumModel
    sequence : PulseSequence
    t : float or array of evolution times, all >= 0
    rel_tol : float
        Relative agreement target of the adaptive refinement check.

    Returns
    -------
    float or ndarray matching the shape of t.
    """
    t_in = np.asarray(t, dtype=float)
    t_arr = np.atleast_1d(t_in).astype(float)
    if np.any(t_arr < 0):
        raise ValueError("evolution times must be >= 0")
    series = _filter_series(sequence)
    chi = np.zeros_like(t_arr)
    for comp in model.components:
        mult = 2.0 if (model.symmetrize and not comp.is_even) else 1.0
        if isinstance(comp, Constant):
            # Plancherel: the filter's total weight is 2 pi t for any sequence.
            chi += 0.5 * comp.c * t_arr
        elif isinstance(comp, OneOverF):
            if isinstance(sequence, FID):
                raise DivergentIntegralError(
                    "free-decay attenuation of a power-law spectrum diverges at omega = 0"
                )
            k1 = _power_law_k1(series, comp.n)
            chi += comp.A_coef * (k1 / (2.0 * math.pi)) * t_arr ** (comp.n + 1.0)
        elif isinstance(comp, Lorentzian) and _estimated_gl_cost(comp, t_arr) > _EXACT_PATH_COST:
            chi += mult * _lorentzian_series_chi(comp, series, t_arr)
        else:
            chi += mult * _gl_component_chi(comp, series, t_arr, rel_tol)
    chi[t_arr == 0.0] = 0.0
    if t_in.shape:
        return chi
    return float(chi[0])


def coherence(model: SpectrumModel, sequence: PulseSequence, t, **kwargs):
    """exp(-chi(t)) for the given model and sequence."""
    return np.exp(-attenuation(model, sequence, t, **kwargs))


# ---------------------------------------------------------------------------
# Simulated measurements.
# ---------------------------------------------------------------------------


class Mask(IntEnum):
    MEASURED = 0
    WITHHELD = 1
    TRUNCATED = 2


_MASK_NAMES = {
    Mask.MEASURED: "measured",
    Mask.WITHHELD: "withheld_below_tau_min",
    Mask.TRUNCATED: "truncated_by_floor",
}
_MASK_FROM_NAME = {v: k for k, v in _MASK_NAMES.items()}


@dataclass(frozen=True)
class MeasurementPlan:
    """Sampling grid and noise description of one coherence measurement.

    Parameters
    ----------
    dt : float
        Sample spacing; the grid is t_k = k dt from 0 through t_max.
    t_max : float
        Last sample time.
    tau_min : float
        Dead time: samples with 0 < t < tau_min are withheld.
    coherence_floor : float
        Ideal-coherence level below which samples are flagged as truncated.
    noise_sigma : float
        Gaussian noise level as a fraction of the retained signal range.
    seed : int
        Seed of the noise generator.
    """

    dt: float
    t_max: float
    tau_min: float = 0.0
    coherence_floor: float = 0.005
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_max < self.dt:
            raise ValueError("t_max must cover at least one sample interval")
        if not 0.0 <= self.tau_min < self.t_max:
            raise ValueError("tau_min must satisfy 0 <= tau_min < t_max")
        if not 0.0 <= self.coherence_floor < 1.0:
            raise ValueError("coherence_floor must lie in [0, 1)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def time_grid(self) -> np.ndarray:
        n = int(round(self.t_max / self.dt))
        return np.arange(n + 1) * self.dt


@dataclass(frozen=True)
class CoherenceTrace:
    """One simulated or measured coherence record on a uniform grid."""

    t: np.ndarray
    C: np.ndarray
    mask: np.ndarray
    plan: MeasurementPlan
    sequence: PulseSequence

    def measured(self) -> np.ndarray:
        return self.mask == Mask.MEASURED


def simulate_trace(
    model: SpectrumModel, sequence: PulseSequence, plan: MeasurementPlan
) -> CoherenceTrace:
    """Simulate a coherence measurement of the model under the sequence.

    The ideal trace is exp(-chi) on the plan's grid. Truncation is decided
    on the ideal trace (every point after the last one above the floor is
    flagged), dead-time points are withheld, and seeded Gaussian noise
    scaled by the retained ideal range is added to the measured points only,
    after which the record is clamped to [1e-12, 1].
    """
    t = plan.time_grid()
    chi = attenuation(model, sequence, t)
    c_ideal = np.exp(-chi)

    mask = np.full(t.shape, Mask.MEASURED, dtype=np.int64)
    mask[(t > 0) & (t < plan.tau_min)] = Mask.WITHHELD
    above = np.nonzero(c_ideal > plan.coherence_floor)[0]
    if above.size == 0:
        raise ValueError("the whole trace sits below the coherence floor")
    mask[above[-1] + 1 :] = Mask.TRUNCATED

    c = c_ideal.copy()
    if plan.noise_sigma > 0:
        retained = c_ideal[mask != Mask.TRUNCATED]
        span = float(retained.max() - retained.min())
        rng = np.random.default_rng(plan.seed)
        measured = mask == Mask.MEASURED
        c[measured] += rng.normal(0.0, plan.noise_sigma * span, size=int(measured.sum()))
        c = np.clip(c, 1e-12, 1.0)

    c.flags.writeable = False
    mask.flags.writeable = False
    t.flags.writeable = False
    return CoherenceTrace(t=t, C=c, mask=mask, plan=plan, sequence=sequence)


def t2_from_trace(trace: CoherenceTrace, definition: str = "e_folding") -> float:
    """Coherence time of a trace.

    definition="e_folding" returns the first crossing of 1/e, linearly
    interpolated between samples. definition="slope" fits the attenuation
    tail (last fifth of the usable points) and returns 1/slope, the white
    noise reading.
    """
    usable = trace.mask == Mask.MEASURED
    t = trace.t[usable]
    c = trace.C[usable]
    if definition == "e_folding":
        target = 1.0 / math.e
        below = np.nonzero(c < target)[0]
        if below.size == 0 or below[0] == 0:
            raise ValueError("trace never decays through 1/e")
        i = below[0]
        frac = (c[i - 1] - target) / (c[i - 1] - c[i])
        return float(t[i - 1] + frac * (t[i] - t[i - 1]))
    if definition == "slope":
        chi = -np.log(np.clip(c, 1e-300, None))
        n_tail = max(2, len(t) // 5)
        slope, _ = np.polyfit(t[-n_tail:], chi[-n_tail:], 1)
        if slope <= 0:
            raise ValueError("attenuation tail has no positive slope")
        return float(1.0 / slope)
    raise ValueError(f"unknown T2 definition {definition!r}")


# ---------------------------------------------------------------------------
# Serialization.
# ---------------------------------------------------------------------------


def sequence_to_obj(sequence: PulseSequence):
    if isinstance(sequence, FID):
        return "fid"
    if isinstance(sequence, SpinEcho):
        return "spin_echo"
    return {"cpmg": sequence.n_pulses}


def sequence_from_obj(obj) -> PulseSequence:
    if obj == "fid":
        return FID()
    if obj == "spin_echo":
        return SpinEcho()
    if isinstance(obj, dict) and set(obj) == {"cpmg"}:
        return CPMG(int(obj["cpmg"]))
    raise ValueError(f"unknown pulse sequence {obj!r}")


def _plan_to_dict(plan: MeasurementPlan) -> dict:
    return {
        "dt": plan.dt,
        "t_max": plan.t_max,
        "tau_min": plan.tau_min,
        "coherence_floor": plan.coherence_floor,
        "noise_sigma": plan.noise_sigma,
        "seed": plan.seed,
    }


def _plan_from_dict(doc: dict) -> MeasurementPlan:
    try:
        return MeasurementPlan(**doc)
    except TypeError as exc:
        raise ValueError(f"bad measurement plan fields: {exc}") from exc


def trace_to_csv_text(trace: CoherenceTrace) -> str:
    lines = ["t,C,mask"]
    for ti, ci, mi in zip(trace.t, trace.C, trace.mask):
        lines.append(f"{ti:.17g},{ci:.17g},{_MASK_NAMES[Mask(mi)]}")
    return "\n".join(lines) + "\n"


def save_trace(trace: CoherenceTrace, csv_path, model: SpectrumModel | None = None) -> None:
    """Write a trace as CSV plus a JSON sidecar holding plan and sequence."""
    csv_path = Path(csv_path)
    csv_path.write_text(trace_to_csv_text(trace))
    sidecar = {
        "plan": _plan_to_dict(trace.plan),
        "sequence": sequence_to_obj(trace.sequence),
        "seed": trace.plan.seed,
    }
    if model is not None:
        sidecar["spectrum"] = model_to_dict(model)
    csv_path.with_suffix(".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )


def load_trace(csv_path, sequence: PulseSequence | None = None) -> CoherenceTrace:
    """Read a trace CSV, taking plan and sequence from its sidecar if present.

    Without a sidecar the plan is inferred from the grid and the sequence
    must be supplied.
    """
    csv_path = Path(csv_path)
    rows = csv_path.read_text().strip().splitlines()
    if not rows or rows[0].strip() != "t,C,mask":
        raise ValueError(f"{csv_path}: expected header 't,C,mask'")
    t, c, mask = [], [], []
    for i, row in enumerate(rows[1:], start=2):
        parts = row.split(",")
        if len(parts) != 3:
            raise ValueError(f"{csv_path}:{i}: expected 3 fields, got {len(parts)}")
        try:
            t.append(float(parts[0]))
            c.append(float(parts[1]))
        except ValueError as exc:
            raise ValueError(f"{csv_path}:{i}: {exc}") from exc
        name = parts[2].strip()
        if name not in _MASK_FROM_NAME:
            raise ValueError(f"{csv_path}:{i}: unknown mask value {name!r}")
        mask.append(int(_MASK_FROM_NAME[name]))
    t = np.asarray(t)
    c = np.asarray(c)
    mask = np.asarray(mask, dtype=np.int64)
    if len(t) < 2:
        raise ValueError(f"{csv_path}: a trace needs at least two samples")
    dt = t[1] - t[0]
    if np.max(np.abs(np.diff(t) - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError(f"{csv_path}: time grid is not uniform")

    sidecar_path = csv_path.with_suffix(".json")
    if sidecar_path.exists():
        doc = json.loads(sidecar_path.read_text())
        if "plan" not in doc or "sequence" not in doc:
            raise ValueError(f"{sidecar_path}: sidecar needs 'plan' and 'sequence'")
        plan = _plan_from_dict(doc["plan"])
        seq = sequence_from_obj(doc["sequence"])
        if sequence is not None and seq != sequence:
            raise ValueError(
                f"{csv_path}: sidecar sequence {sequence_to_obj(seq)!r} does not match "
                f"the requested {sequence_to_obj(sequence)!r}"
            )
    else:
        if sequence is None:
            raise ValueError(f"{csv_path}: no sidecar; a pulse sequence must be given")
        seq = sequence
        withheld = mask == Mask.WITHHELD
        tau_min = float(t[withheld].max() + dt) if withheld.any() else 0.0
        plan = MeasurementPlan(
            dt=float(dt), t_max=float(t[-1]), tau_min=tau_min, coherence_floor=0.0
        )
    for arr in (t, c, mask):
        arr.flags.writeable = False
    return CoherenceTrace(t=t, C=c, mask=mask, plan=plan, sequence=seq)
