"""Shared fixtures and independent oracles for the test suite.

The oracles here never call into the code paths they check: the filter
function is rebuilt from the switching-function segment integral, chi comes
from scipy quadrature against that filter, and peak matching scans raw local
maxima. Acceptance results are collected and echoed in the terminal summary
so the one-line verdicts survive pytest's output capture.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from ftns import SpectrumModel, pulse_times

# ---------------------------------------------------------------------------
# Acceptance verdict lines.
# ---------------------------------------------------------------------------


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def criterion(request):
    """Recorder for one acceptance verdict: criterion(n, ok) prints and stores."""

    def record(n: int, ok: bool, detail: str = "") -> bool:
        line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        print(line, flush=True)
        request.config._acceptance_lines.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    lines = getattr(terminalreporter.config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# Independent filter and attenuation oracles.
# ---------------------------------------------------------------------------


def filter_by_segments(sequence, omega: float, t: float) -> float:
    """|Integral_0^t s(t') e^{i omega t'} dt'|^2 from the switching segments.

    The switching function is +/-1, toggling at each pi pulse; every segment
    integrates in closed form. Shares nothing with the cosine-series code
    path beyond the pulse instants themselves.
    """
    bounds = np.concatenate([[0.0], pulse_times(sequence, t), [t]])
    total = 0.0 + 0.0j
    sign = 1.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        if abs(omega) * t < 1e-6:
            # series of Integral_a^b e^{i omega tau} d tau; the quotient form
            # loses all digits (or overflows) once omega underflows
            seg = (
                (b - a)
                + 1j * omega * (b * b - a * a) / 2.0
                - omega**2 * (b**3 - a**3) / 6.0
                - 1j * omega**3 * (b**4 - a**4) / 24.0
            )
        else:
            seg = (np.exp(1j * omega * b) - np.exp(1j * omega * a)) / (1j * omega)
        total += sign * seg
        sign = -sign
    return float(np.abs(total) ** 2)


def chi_by_quad(model: SpectrumModel, sequence, t: float, omega_hi: float) -> float:
    """(1/2 pi) Integral_0^omega_hi S(omega) F(omega, t) d omega by quadrature.

    Valid for even models (the full-line integral is twice the half line).
    The range is split into panels so the oscillatory filter never spans too
    many periods per quad call.
    """
    if t == 0.0:
        return 0.0

    def integrand(w):
        return model.evaluate(w) * filter_by_segments(sequence, w, t)

    period = 2.0 * math.pi / t
    edges = [0.0]
    while edges[-1] < omega_hi:
        edges.append(min(edges[-1] + 50.0 * period, omega_hi))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(integrand, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
        total += val
    return total / (2.0 * math.pi)


def echo_power_law_coefficient_by_quad(n: float, x_split: float = 60.0) -> float:
    """Independent spin-echo t^(n+1) prefactor for a unit 1/omega^n spectrum.

    chi(t) = (1/2 pi) Integral_0^inf [16 sin^4(x/4) / x^(n+2)] dx * t^(n+1)
    after substituting x = omega t. The head is ordinary quadrature (the
    sin^4 form is exact at small x, no cancellation); the tail expands
    16 sin^4(x/4) = 6 - 8 cos(x/2) + 2 cos(x) and uses the oscillatory-
    weight rule for the cosine pieces on [x_split, inf).
    """
    s = n + 2.0

    head, _ = quad(
        lambda x: 16.0 * np.sin(x / 4.0) ** 4 / x**s,
        0.0,
        x_split,
        limit=2000,
        epsabs=1e-14,
        epsrel=1e-12,
    )
    tail = 6.0 * x_split ** (1.0 - s) / (s - 1.0)
    for coef, freq in ((-8.0, 0.5), (2.0, 1.0)):
        osc, _ = quad(
            lambda x: x**-s,
            x_split,
            np.inf,
            weight="cos",
            wvar=freq,
            limit=400,
            epsabs=1e-14,
        )
        tail += coef * osc
    return (head + tail) / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# Peak matching.
# ---------------------------------------------------------------------------


def local_maxima(omega: np.ndarray, values: np.ndarray) -> list[tuple[float, float]]:
    """All local maxima of a sampled curve, edges included, no threshold.

    A peak centered at omega = 0 tops out at the first sample of a one-sided
    grid, so edges compare against -inf on the missing side.
    """
    out = []
    for i in range(len(values)):
        if not np.isfinite(values[i]):
            continue
        left = values[i - 1] if i > 0 else -np.inf
        right = values[i + 1] if i + 1 < len(values) else -np.inf
        if values[i] >= left and values[i] > right:
            out.append((float(omega[i]), float(values[i])))
    return out


def nearest_peak(
    omega: np.ndarray, values: np.ndarray, target: float, window: float
) -> tuple[float, float] | None:
    """Closest local maximum within |omega - target| < window, or None."""
    near = [p for p in local_maxima(omega, values) if abs(p[0] - target) < window]
    if not near:
        return None
    return min(near, key=lambda p: abs(p[0] - target))
