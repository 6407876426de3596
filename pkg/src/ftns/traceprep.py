"""Preparation of attenuation records for spectral inversion.

Inversion works on chi(t) = -ln C(t), needs a uniform grid through t = 0,
and is extremely sensitive to noise on the nearly flat tail of chi. This
module closes dead-time gaps with a short-time polynomial fit and replaces
the noisy tail with its fitted straight line, mirroring the record to
negative times along the way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.signal import filtfilt, firwin
from scipy.special import erf

from .forward import FID, CPMG, CoherenceTrace, Mask, PulseSequence, SpinEcho

__all__ = [
    "Source",
    "AttenuationTrace",
    "EarlyTimeFit",
    "MitigationConfig",
    "to_attenuation",
    "fit_early_time",
    "fill_early_time",
    "mirror",
    "mitigate",
]


class Source(IntEnum):
    MEASURED = 0
    EARLY_FIT = 1
    LINEAR_FIT = 2
    ZERO_PAD = 3


@dataclass(frozen=True)
class AttenuationTrace:
    """Attenuation exponent samples with per-point provenance.

    The grid may be one-sided (t >= 0) or mirrored about zero. After tail
    replacement the fitted line is recorded in tail_fit_slope,
    tail_fit_intercept and tail_start_t so that later derivative steps can
    pin the slope at the replacement boundary.
    """

    t: np.ndarray
    chi: np.ndarray
    source: np.ndarray
    dt: float
    tail_fit_slope: float | None = None
    tail_fit_intercept: float | None = None
    tail_start_t: float | None = None


def _freeze(trace: AttenuationTrace) -> AttenuationTrace:
    for arr in (trace.t, trace.chi, trace.source):
        arr.flags.writeable = False
    return trace


def to_attenuation(trace: CoherenceTrace) -> AttenuationTrace:
    """chi = -ln C on the measured points of a coherence trace.

    Withheld and truncated samples are dropped, so a trace with dead time
    comes back with a gap that fill_early_time must close before any
    transform is taken.
    """
    sel = trace.mask == Mask.MEASURED
    if not np.any(sel):
        raise ValueError("trace has no measured points")
    t = trace.t[sel].copy()
    c = np.clip(trace.C[sel], 1e-300, 1.0)
    chi = -np.log(c)
    return _freeze(
        AttenuationTrace(
            t=t, chi=chi, source=np.zeros(t.shape, dtype=np.int64), dt=trace.plan.dt
        )
    )


def _early_powers(sequence: PulseSequence) -> tuple[int, int, int]:
    # Free decay starts quadratically; any refocused sequence starts quartically.
    if isinstance(sequence, FID):
        return (2, 4, 6)
    if isinstance(sequence, (SpinEcho, CPMG)):
        return (4, 6, 8)
    raise TypeError(f"unknown sequence {sequence!r}")


@dataclass(frozen=True)
class EarlyTimeFit:
    """Leading short-time expansion chi = k0 t^p0 + k1 t^p1 + k2 t^p2."""

    kappa0: float
    kappa1: float
    kappa2: float
    powers: tuple[int, int, int]
    tau_min: float
    epsilon: float

    def evaluate(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=float))
        p0, p1, p2 = self.powers
        return self.kappa0 * t**p0 + self.kappa1 * t**p1 + self.kappa2 * t**p2


def fit_early_time(
    att: AttenuationTrace,
    sequence: PulseSequence,
    tau_min: float,
    epsilon: float | None = None,
) -> EarlyTimeFit:
    """Fit the leading short-time polynomial just above the dead time.

    Uses the measured points with tau_min < t <= tau_min + epsilon (epsilon
    defaults to 10 samples). At least 4 points are required, enough to
    overdetermine the three-term basis.
    """
    if epsilon is None:
        epsilon = 10.0 * att.dt
    powers = _early_powers(sequence)
    sel = (att.source == Source.MEASURED) & (att.t > tau_min) & (att.t <= tau_min + epsilon)
    if int(sel.sum()) < 4:
        raise ValueError(
            f"early-time fit needs at least 4 measured points in "
            f"({tau_min:g}, {tau_min + epsilon:g}], found {int(sel.sum())}"
        )
    t = att.t[sel]
    design = np.stack([t**p for p in powers], axis=1)
    coef, *_ = np.linalg.lstsq(design, att.chi[sel], rcond=None)
    return EarlyTimeFit(
        kappa0=float(coef[0]),
        kappa1=float(coef[1]),
        kappa2=float(coef[2]),
        powers=powers,
        tau_min=tau_min,
        epsilon=epsilon,
    )


def fill_early_time(att: AttenuationTrace, fit: EarlyTimeFit) -> AttenuationTrace:
    """Close the dead-time gap with the fitted polynomial.

    The output grid is uniform from 0 to the last sample. Filled points take
    the polynomial value. Measured points are blended with the polynomial
    through an error-function step centered 5 samples above the dead time
    (width 5 samples), which removes the seam that a hard switch would leave
    in the second derivative.
    """
    dt = att.dt
    n = int(round(float(att.t[-1]) / dt))
    t_full = np.arange(n + 1) * dt
    poly = fit.evaluate(t_full)

    chi_full = poly.copy()
    source = np.full(t_full.shape, Source.EARLY_FIT, dtype=np.int64)

    idx = np.round(att.t / dt).astype(int)
    if np.max(np.abs(att.t - idx * dt)) > 1e-9 * dt:
        raise ValueError("attenuation samples do not sit on a uniform grid")
    t_center = fit.tau_min + 5.0 * dt
    width = 5.0 * dt
    w = 0.5 * (1.0 + erf(math.sqrt(math.pi) * (att.t - t_center) / width))
    chi_full[idx] = w * att.chi + (1.0 - w) * fit.evaluate(att.t)
    source[idx] = att.source
    chi_full[0] = 0.0

    return _freeze(AttenuationTrace(t=t_full, chi=chi_full, source=source, dt=dt))


# ---------------------------------------------------------------------------
# Measurement-noise mitigation.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MitigationConfig:
    """Knobs of the noise-mitigation pipeline.

    Parameters
    ----------
    tail_window : (float, float) or None
        Fit window for the linear tail, as fractions of the last sample
        time. None selects the window automatically from the flatness of
        the smoothed attenuation.
    lowpass1_cutoff : float
        Cutoff of the coherence-domain low-pass filter, as a fraction of
        the Nyquist frequency.
    lowpass2_enabled : bool
        Apply a second low-pass between the two derivative steps.
    lowpass2_cutoff : float
        Cutoff of that second filter, again as a fraction of Nyquist.
    extend_to : float or None
        Extend the record along the fitted tail line out to this time.
    """

    tail_window: tuple[float, float] | None = None
    lowpass1_cutoff: float = 0.5
    lowpass2_enabled: bool = False
    lowpass2_cutoff: float = 0.25
    extend_to: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.lowpass1_cutoff <= 1.0:
            raise ValueError("lowpass1_cutoff must lie in (0, 1] of Nyquist")
        if not 0.0 < self.lowpass2_cutoff <= 1.0:
            raise ValueError("lowpass2_cutoff must lie in (0, 1] of Nyquist")
        if self.tail_window is not None:
            lo, hi = self.tail_window
            if not 0.0 <= lo < hi <= 1.0:
                raise ValueError("tail_window fractions must satisfy 0 <= lo < hi <= 1")
        if self.extend_to is not None and self.extend_to <= 0:
            raise ValueError("extend_to must be > 0")


def lowpass(values: np.ndarray, cutoff: float) -> np.ndarray:
    """Zero-phase FIR low-pass; cutoff is a fraction of Nyquist."""
    if cutoff >= 1.0:
        return values.copy()
    ntaps = max(11, min(101, 2 * (len(values) // 8) + 1))
    if len(values) <= ntaps:
        return values.copy()
    taps = firwin(ntaps, cutoff, window="blackman")
    return filtfilt(taps, [1.0], values, padtype="even", padlen=min(3 * ntaps, len(values) - 1))


def _require_uniform_from_zero(att: AttenuationTrace) -> None:
    if att.t[0] != 0.0:
        raise ValueError("mitigation needs a record starting at t = 0")
    if np.max(np.abs(np.diff(att.t) - att.dt)) > 1e-9 * att.dt:
        raise ValueError("mitigation needs a uniform grid; fill the dead time first")


def _auto_tail_start(t: np.ndarray, chi: np.ndarray) -> int:
    """Index where the smoothed attenuation has settled onto its line.

    Looks at the coarse second difference (spacing 2 samples) and takes the
    longest suffix where it stays below 5% of its peak. Falls back to the
    last quarter of the record when the suffix is degenerate.
    """
    curv = np.abs(chi[:-4] - 2.0 * chi[2:-2] + chi[4:])  # index i maps to t[i+2]
    peak = float(curv.max())
    if peak == 0.0:
        return len(t) // 4
    flat = curv < 0.05 * peak
    i = len(flat)
    while i > 0 and flat[i - 1]:
        i -= 1
    start = i + 2
    if len(t) - start < 10:
        start = max(0, len(t) - max(10, len(t) // 4))
    return start


def mirror(att: AttenuationTrace) -> AttenuationTrace:
    """Mirror a one-sided record about t = 0 without any smoothing.

    chi is even, so the mirrored record is the natural input for central
    derivatives and the cosine transform even when no noise mitigation is
    wanted.
    """
    _require_uniform_from_zero(att)
    return _freeze(
        AttenuationTrace(
            t=np.concatenate([-att.t[:0:-1], att.t]),
            chi=np.concatenate([att.chi[:0:-1], att.chi]),
            source=np.concatenate([att.source[:0:-1], att.source]),
            dt=att.dt,
            tail_fit_slope=att.tail_fit_slope,
            tail_fit_intercept=att.tail_fit_intercept,
            tail_start_t=att.tail_start_t,
        )
    )


def mitigate(att: AttenuationTrace, config: MitigationConfig = MitigationConfig()) -> AttenuationTrace:
    """Mirror, smooth and tail-replace an attenuation record.

    The record is mirrored to negative times, low-pass filtered in the
    coherence domain (where the noise is additive), and its tail is replaced
    by a straight-line fit: beyond the fit window start every sample becomes
    a |t| + b. The fitted line is stored on the output so the derivative
    step can patch the slope at the replacement boundary, and the record can
    optionally be extended along that line.
    """
    _require_uniform_from_zero(att)
    t_pos = att.t
    n = len(t_pos)

    # Mirror about t = 0 and smooth the coherence, not the exponent.
    t_two = np.concatenate([-t_pos[:0:-1], t_pos])
    chi_two = np.concatenate([att.chi[:0:-1], att.chi])
    src_two = np.concatenate([att.source[:0:-1], att.source])
    c = np.exp(-chi_two)
    c = np.clip(lowpass(c, config.lowpass1_cutoff), 1e-12, 1.0)
    chi_two = -np.log(c)

    # Tail window on the positive side.
    chi_pos = chi_two[n - 1 :]
    t_max = float(t_pos[-1])
    if config.tail_window is not None:
        lo, hi = config.tail_window
        t_lo, t_hi = lo * t_max, hi * t_max
        win = (t_pos >= t_lo) & (t_pos <= t_hi)
        if int(win.sum()) < 10:
            raise ValueError("tail window shorter than 10 samples")
        i0 = int(np.argmax(win))
    else:
        i0 = _auto_tail_start(t_pos, chi_pos)
        win = np.zeros(n, dtype=bool)
        win[i0:] = True
        if int(win.sum()) < 10:
            raise ValueError("tail window shorter than 10 samples")
    slope, intercept = np.polyfit(t_pos[win], chi_pos[win], 1)
    t_start = float(t_pos[i0])

    rep = np.abs(t_two) >= t_start
    chi_two[rep] = slope * np.abs(t_two[rep]) + intercept
    src_two[rep] = Source.LINEAR_FIT

    if config.extend_to is not None and config.extend_to > t_max:
        n_ext = int(math.ceil((config.extend_to - t_max) / att.dt - 1e-9))
        ext = t_max + np.arange(1, n_ext + 1) * att.dt
        t_two = np.concatenate([-ext[::-1], t_two, ext])
        line = slope * ext + intercept
        chi_two = np.concatenate([line[::-1], chi_two, line])
        pad_src = np.full(n_ext, Source.LINEAR_FIT, dtype=np.int64)
        src_two = np.concatenate([pad_src, src_two, pad_src])

    return _freeze(
        AttenuationTrace(
            t=t_two,
            chi=chi_two,
            source=src_two,
            dt=att.dt,
            tail_fit_slope=float(slope),
            tail_fit_intercept=float(intercept),
            tail_start_t=t_start,
        )
    )
