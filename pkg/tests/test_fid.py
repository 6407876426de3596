"""Free-decay inversion: derivatives, cosine transform, grid laws, files."""

from __future__ import annotations

import math

import numpy as np
import pytest

from ftns import (
    DerivativeTrace,
    FID,
    Gaussian,
    Lorentzian,
    MeasurementPlan,
    MitigationConfig,
    ReconstructedSpectrum,
    SpectrumModel,
    SpinEcho,
    fourier_to_spectrum,
    load_spectrum,
    mirror,
    reconstruct_fid,
    save_spectrum,
    second_derivative,
    simulate_trace,
    to_attenuation,
)
from ftns.traceprep import AttenuationTrace


def _record(t, chi):
    t = np.asarray(t, dtype=float)
    return AttenuationTrace(
        t=t, chi=np.asarray(chi, dtype=float),
        source=np.zeros(t.shape, dtype=np.int64), dt=float(t[1] - t[0]),
    )


# ---------------------------------------------------------------------------
# Second derivative.
# ---------------------------------------------------------------------------


def test_second_derivative_exact_on_quadratic():
    t = np.arange(101) * 0.1
    d2 = second_derivative(mirror(_record(t, 3.0 * t * t)))
    # the gradient end stencils are one sided; only the interior is exact
    np.testing.assert_allclose(d2.values[2:-2], 6.0, rtol=1e-10)


def test_second_derivative_needs_uniform_grid():
    t = np.array([0.0, 0.1, 0.2, 0.35, 0.5])
    with pytest.raises(ValueError):
        second_derivative(_record(t, t * t))
    with pytest.raises(ValueError):
        second_derivative(_record(np.arange(3) * 0.1, np.zeros(3)))


def test_derivative_slope_pinning_removes_the_replacement_spike():
    # A fitted tail line never passes exactly through the last measured
    # sample, so the replacement leaves a small vertical offset at the
    # boundary. The gradient stencil straddling it turns that offset into a
    # large second-derivative spike unless the first derivative is pinned to
    # the known line slope on the flanking samples.
    t = np.arange(-200, 201) * 0.05
    chi = np.where(np.abs(t) < 5.0, np.abs(t) ** 3 / 75.0 + 0.2 * np.abs(t), np.nan)
    line_slope = 3.0 * 25.0 / 75.0 + 0.2
    intercept = 5.0**3 / 75.0 + 0.2 * 5.0 - line_slope * 5.0 + 0.05
    chi = np.where(np.abs(t) >= 5.0, line_slope * np.abs(t) + intercept, chi)
    pinned = AttenuationTrace(
        t=t, chi=chi, source=np.zeros(t.shape, dtype=np.int64), dt=0.05,
        tail_fit_slope=line_slope, tail_fit_intercept=intercept, tail_start_t=5.0,
    )
    bare = AttenuationTrace(
        t=t, chi=chi.copy(), source=np.zeros(t.shape, dtype=np.int64), dt=0.05,
    )
    boundary = np.abs(np.abs(t) - 5.0) < 0.2
    spike_pinned = np.max(np.abs(second_derivative(pinned).values[boundary]))
    spike_bare = np.max(np.abs(second_derivative(bare).values[boundary]))
    assert spike_pinned < 0.5 * spike_bare
    assert spike_pinned < 1.0  # true curvature at the boundary is 0.4


def test_fold_rejects_asymmetric_records():
    t = np.arange(-50, 51) * 0.1
    values = np.cos(t)
    values[10] += 1e-6  # breaks evenness well above the tolerance
    deriv = DerivativeTrace(t=t, values=values, dt=0.1)
    with pytest.raises(ValueError):
        fourier_to_spectrum(deriv)


# ---------------------------------------------------------------------------
# Transform grid laws.
# ---------------------------------------------------------------------------


def test_transform_grid_bounds_and_spacing():
    dt = 0.02
    t = np.arange(-400, 401) * dt
    deriv = DerivativeTrace(t=t, values=np.exp(-(t * t)), dt=dt)
    spec = fourier_to_spectrum(deriv, pad_factor=8)
    assert spec.omega[-1] == math.pi / dt
    assert spec.omega_max == math.pi / dt
    assert spec.d_omega == 2.0 * math.pi / spec.t_tilde_max
    assert spec.t_tilde_max == pytest.approx(8 * 400 * dt, rel=1e-12)
    steps = np.diff(spec.omega)
    np.testing.assert_allclose(steps, spec.d_omega, rtol=1e-9)


def test_zero_padding_refines_without_reweighing():
    # Doubling the pad factor interleaves new bins; the shared bins must not
    # move (same trapezoid sum, same frequencies).
    dt = 0.05
    t = np.arange(-100, 101) * dt
    deriv = DerivativeTrace(t=t, values=1.0 / (1.0 + t * t), dt=dt)
    s8 = fourier_to_spectrum(deriv, pad_factor=8)
    s16 = fourier_to_spectrum(deriv, pad_factor=16)
    np.testing.assert_allclose(s16.omega[::2], s8.omega, rtol=0, atol=1e-12)
    assert np.max(np.abs(s16.S[::2] - s8.S)) <= 1e-13 * np.max(np.abs(s8.S))


def test_transform_of_known_pulse():
    # chi'' = exp(-t^2/2): its cosine transform is analytic, so the pipeline
    # tail (fold, trapezoid, padding) can be checked to quadrature accuracy.
    dt = 0.01
    t = np.arange(-1500, 1501) * dt
    deriv = DerivativeTrace(t=t, values=np.exp(-0.5 * t * t), dt=dt)
    spec = fourier_to_spectrum(deriv, pad_factor=4)
    band = spec.omega <= 5.0
    want = 2.0 * math.sqrt(math.pi / 2.0) * np.exp(-0.5 * spec.omega[band] ** 2)
    np.testing.assert_allclose(spec.S[band], want, rtol=1e-7, atol=1e-9)


# ---------------------------------------------------------------------------
# End-to-end reconstruction.
# ---------------------------------------------------------------------------


def test_reconstruct_fid_requires_free_decay():
    model = SpectrumModel((Gaussian(1.0, 1.0),))
    trace = simulate_trace(model, SpinEcho(), MeasurementPlan(dt=0.05, t_max=4.0,
                                                              coherence_floor=0.0))
    with pytest.raises(ValueError):
        reconstruct_fid(trace)


def test_reconstruct_lorentzian_round_trip():
    model = SpectrumModel((Lorentzian(2.0, 10.186, 0.0, "fig1"),))
    plan = MeasurementPlan(dt=0.01, t_max=8.0, coherence_floor=0.0)
    trace = simulate_trace(model, FID(), plan)
    spec = reconstruct_fid(trace, pad_factor=8)
    band = spec.omega <= 4.0
    truth = model.evaluate(spec.omega[band])
    err = np.abs(spec.S[band] - truth)
    assert np.max(err) < 5e-3
    assert spec.method == "fid_ftns"
    assert "trace_sha256" in spec.metadata


def test_reconstruct_with_dead_time_records_fit():
    model = SpectrumModel((Gaussian(1.0, 1.0),))
    plan = MeasurementPlan(dt=0.01, t_max=15.0, tau_min=0.15, coherence_floor=0.0)
    trace = simulate_trace(model, FID(), plan)
    spec = reconstruct_fid(trace)
    assert "early_fit" in spec.metadata
    band = spec.omega <= 2.5
    err = np.abs(spec.S[band] - model.evaluate(spec.omega[band]))
    assert np.max(err) < 5e-3


def test_noisy_trace_defaults_to_mitigation():
    model = SpectrumModel((Lorentzian(2.0, 10.186, 0.0, "fig1"),))
    plan = MeasurementPlan(dt=0.012, t_max=6.0, coherence_floor=0.0,
                           noise_sigma=0.001, seed=1)
    trace = simulate_trace(model, FID(), plan)
    spec = reconstruct_fid(trace)
    assert "tail_fit" in spec.metadata
    assert spec.metadata["tail_fit"]["slope"] == pytest.approx(1.0, rel=0.05)


def test_explicit_mitigation_config_is_used():
    model = SpectrumModel((Lorentzian(2.0, 10.186, 0.0, "fig1"),))
    plan = MeasurementPlan(dt=0.012, t_max=6.0, coherence_floor=0.0)
    trace = simulate_trace(model, FID(), plan)
    spec = reconstruct_fid(trace, mitigation=MitigationConfig(tail_window=(0.6, 0.95)))
    assert spec.metadata["tail_fit"]["start_t"] == pytest.approx(0.6 * 6.0, abs=0.012)


# ---------------------------------------------------------------------------
# Spectrum files.
# ---------------------------------------------------------------------------


def test_spectrum_round_trip(tmp_path):
    spec = ReconstructedSpectrum(
        omega=np.linspace(0.0, 10.0, 21), S=np.linspace(2.0, 0.0, 21),
        d_omega=0.5, omega_max=10.0, t_tilde_max=4.0 * math.pi,
        method="fid_ftns", metadata={"pad_factor": 8},
    )
    path = tmp_path / "spectrum.csv"
    save_spectrum(spec, path)
    back = load_spectrum(path)
    np.testing.assert_array_equal(back.omega, spec.omega)
    np.testing.assert_array_equal(back.S, spec.S)
    assert back.d_omega == spec.d_omega
    assert back.method == spec.method
    assert back.metadata == spec.metadata


def test_spectrum_load_without_sidecar(tmp_path):
    path = tmp_path / "spectrum.csv"
    path.write_text("omega,S\n0,1\n0.5,0.8\n1,0.5\n")
    spec = load_spectrum(path)
    assert spec.d_omega == pytest.approx(0.5)
    assert spec.method == "unknown"
    bad = tmp_path / "bad.csv"
    bad.write_text("frequency,value\n0,1\n")
    with pytest.raises(ValueError):
        load_spectrum(bad)
