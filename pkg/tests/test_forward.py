"""Filter functions, attenuation integrals and simulated measurements.

The filter series is validated against the switching-function segment
integral, and the quadrature attenuation against scipy quadrature of that
independent filter, so a sign or convention slip in the series cannot hide.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftns import (
    CPMG,
    Constant,
    DivergentIntegralError,
    FID,
    Gaussian,
    Lorentzian,
    Mask,
    MeasurementPlan,
    OneOverF,
    SpectrumModel,
    SpinEcho,
    attenuation,
    coherence,
    filter_value,
    load_trace,
    pulse_times,
    save_trace,
    simulate_trace,
    t2_from_trace,
    y_n_coefficient,
)
from ftns.forward import sequence_from_obj, sequence_to_obj
from ftns.spectra import gaussian_chi_fid, lorentzian_pair_chi_fid

from conftest import chi_by_quad, filter_by_segments


# ---------------------------------------------------------------------------
# Pulse timing and filter values.
# ---------------------------------------------------------------------------


def test_pulse_times():
    assert pulse_times(FID(), 3.0).size == 0
    np.testing.assert_allclose(pulse_times(SpinEcho(), 3.0), [1.5])
    np.testing.assert_allclose(pulse_times(CPMG(4), 8.0), [1.0, 3.0, 5.0, 7.0])
    with pytest.raises(ValueError):
        pulse_times(FID(), -1.0)
    with pytest.raises(ValueError):
        CPMG(0)


_sequences = st.one_of(
    st.just(FID()), st.just(SpinEcho()), st.builds(CPMG, st.integers(1, 8))
)


@settings(max_examples=120, deadline=None)
@given(_sequences, st.floats(-60.0, 60.0), st.floats(0.01, 12.0))
def test_filter_matches_segment_integral(sequence, omega, t):
    got = filter_value(sequence, omega, t)
    want = filter_by_segments(sequence, omega, t)
    assert got >= 0.0
    # abs floor: just above the series switchover the pulse-train cosine sum
    # cancels to ~1e-14 of its term size, i.e. a few 1e-10 t^2 in F
    assert got == pytest.approx(want, rel=1e-9, abs=3e-9 * t * t)


def test_filter_zero_frequency_limits():
    # Free decay keeps full weight at omega = 0; any refocused sequence is
    # fourth order there, so t^2 V(0) vanishes (to rounding of the moments).
    assert filter_value(FID(), 0.0, 2.0) == pytest.approx(4.0, rel=1e-12)
    assert filter_value(SpinEcho(), 0.0, 2.0) == pytest.approx(0.0, abs=1e-13)
    assert filter_value(CPMG(6), 0.0, 2.0) == pytest.approx(0.0, abs=1e-13)


def test_filter_small_argument_branch_is_smooth():
    # Both sides of the series-expansion switchover must sit on the segment
    # oracle; a step there would leak into every quadrature. The trig branch
    # of a pulse train cancels down to ~1e-14 of its term size this close to
    # x = 0, which is ~1e-4 of F itself, hence its looser relative gate.
    for sequence, rel in ((FID(), 1e-9), (SpinEcho(), 1e-9), (CPMG(3), 1e-3)):
        for omega in (0.99e-2, 1.01e-2):
            got = filter_value(sequence, omega, 1.0)
            want = filter_by_segments(sequence, omega, 1.0)
            assert got == pytest.approx(want, rel=rel, abs=1e-15)


def test_spin_echo_equals_single_pulse_train():
    omega = np.linspace(-20.0, 20.0, 241)
    np.testing.assert_allclose(
        filter_value(SpinEcho(), omega, 1.7), filter_value(CPMG(1), omega, 1.7), rtol=1e-13
    )
    model = SpectrumModel((Lorentzian(2.0, 1.0),))
    t = np.linspace(0.0, 4.0, 33)
    np.testing.assert_allclose(
        attenuation(model, SpinEcho(), t), attenuation(model, CPMG(1), t), rtol=1e-12
    )


# ---------------------------------------------------------------------------
# Attenuation: exact paths.
# ---------------------------------------------------------------------------


def test_flat_noise_attenuation_is_half_ct():
    model = SpectrumModel((Constant(0.8),))
    t = np.array([0.0, 0.5, 2.0, 7.0])
    for sequence in (FID(), SpinEcho(), CPMG(5)):
        np.testing.assert_allclose(attenuation(model, sequence, t), 0.4 * t, rtol=1e-14)


@pytest.mark.parametrize("n", [0.5, 1.0, 2.0, 2.5])
@pytest.mark.parametrize("sequence", [SpinEcho(), CPMG(2), CPMG(5)])
def test_power_law_attenuation_grows_as_t_to_n_plus_1(n, sequence):
    model = SpectrumModel((OneOverF(1.5, n),))
    t = np.array([0.5, 1.0, 2.0])
    chi = attenuation(model, sequence, t)
    # Pure scaling law: chi(2t)/chi(t) = 2^(n+1) exactly.
    np.testing.assert_allclose(chi[1:] / chi[:-1], 2.0 ** (n + 1.0), rtol=1e-12)
    # And the echo prefactor is the shared coefficient.
    if isinstance(sequence, SpinEcho):
        np.testing.assert_allclose(chi, y_n_coefficient(1.5, n) * t ** (n + 1.0), rtol=1e-12)


@pytest.mark.parametrize("n,sequence", [(0.7, CPMG(3)), (1.8, CPMG(4)), (2.3, CPMG(2))])
def test_power_law_attenuation_matches_quadrature(n, sequence):
    model = SpectrumModel((OneOverF(1.0, n),))
    t = 1.3
    # The half-line integral converges without regularization only for the
    # oracle's finite lower cutoff; push it low enough to be negligible.
    def integrand(w):
        return model.evaluate(w) * filter_by_segments(sequence, w, t)

    from scipy.integrate import quad

    total = 0.0
    edges = np.concatenate([[1e-6], np.geomspace(1e-4, 3000.0, 40)])
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(integrand, a, b, limit=800, epsabs=1e-13, epsrel=1e-10)
        total += val
    # Beyond the cutoff the filter averages to its total switching power
    # 4 m + 2 over the 1/omega^2 envelope (Parseval on the +/-1 waveform
    # with 2m + 2 jumps), so the truncated tail has a closed form. For
    # n = 0.7 it is ~1e-5 of the whole and cannot be ignored.
    omega_hi = edges[-1]
    total += (4.0 * sequence.n_pulses + 2.0) * omega_hi ** (-n - 1.0) / (n + 1.0)
    oracle = total / (2.0 * math.pi)
    assert attenuation(model, sequence, t) == pytest.approx(oracle, rel=1e-5)


def test_free_decay_power_law_diverges():
    model = SpectrumModel((OneOverF(1.0, 0.5),))
    with pytest.raises(DivergentIntegralError):
        attenuation(model, FID(), 1.0)
    with pytest.raises(DivergentIntegralError):
        attenuation(SpectrumModel((OneOverF(1.0, 2.5), Constant(1.0))), FID(), 1.0)


# ---------------------------------------------------------------------------
# Attenuation: quadrature path.
# ---------------------------------------------------------------------------


def test_gaussian_attenuation_matches_closed_form():
    model = SpectrumModel((Gaussian(1.0, 1.0),))
    t = np.linspace(0.0, 20.0, 101)
    np.testing.assert_allclose(
        attenuation(model, FID(), t), gaussian_chi_fid(1.0, 1.0, t), rtol=1e-7, atol=1e-12
    )


def test_lorentzian_attenuation_matches_closed_form():
    s0, w = 2.0, 10.186 / 8.0
    model = SpectrumModel((Lorentzian(s0, 10.186, 0.0, "fig1"),))
    t = np.linspace(0.0, 6.0, 101)
    chi = attenuation(model, FID(), t)
    want = lorentzian_pair_chi_fid(s0 / 2.0, w, 0.0, t)
    # The finite quadrature extent leaves a small constant offset on top of
    # the relative quadrature error.
    np.testing.assert_allclose(chi, want, rtol=1e-6, atol=2e-7 * s0 / w)


def test_side_peak_attenuation_matches_quadrature_under_echo():
    # The even model (line plus mirror) integrated over the half line is the
    # full overlap integral; the oracle sees the mirroring through evaluate.
    model = SpectrumModel((Lorentzian(1.5, 2.0, 3.0, "plain_hwhm"),), symmetrize=True)
    for t in (0.5, 2.0):
        oracle = chi_by_quad(model, SpinEcho(), t, omega_hi=3.0 + 1200.0 * 2.0)
        assert attenuation(model, SpinEcho(), t) == pytest.approx(oracle, rel=2e-5)


def test_long_ladder_lorentzian_uses_series_and_stays_consistent():
    # A long pulse-train time ladder trips the analytic series path; spot
    # values must agree with the quadrature the short ladder uses, up to the
    # quadrature's 400-half-width tail truncation. That truncation only ever
    # drops positive mass, bounded by (sum|c|)^2/(2 pi) * int_X S/w^2 dw
    # = 34^2 * 2 / (3 pi * 400^3) ~ 3.8e-6, so the series value sits within
    # that band above the quadrature one.
    model = SpectrumModel((Lorentzian(2.0, 1.0),))
    t_long = np.linspace(0.01, 400.0, 4000)
    chi_long = attenuation(model, CPMG(16), t_long)
    spot = np.array([t_long[10], t_long[500], t_long[2000]])
    chi_spot = attenuation(model, CPMG(16), spot)
    for ts, cs in zip(spot, chi_spot):
        i = int(np.argmin(np.abs(t_long - ts)))
        assert cs - 1e-8 * cs <= chi_long[i] <= cs + 1e-6 * cs + 3.8e-6


def test_attenuation_scales_linearly_with_amplitude():
    base = SpectrumModel((Lorentzian(1.0, 1.3, 0.7, "plain_hwhm"),), symmetrize=True)
    scaled = SpectrumModel((Lorentzian(3.0, 1.3, 0.7, "plain_hwhm"),), symmetrize=True)
    t = np.linspace(0.0, 5.0, 21)
    np.testing.assert_allclose(
        attenuation(scaled, SpinEcho(), t), 3.0 * attenuation(base, SpinEcho(), t), rtol=1e-12
    )


def test_attenuation_input_contract():
    model = SpectrumModel((Gaussian(1.0, 1.0),))
    with pytest.raises(ValueError):
        attenuation(model, FID(), -0.5)
    assert attenuation(model, FID(), 0.0) == 0.0
    assert np.isscalar(attenuation(model, FID(), 1.0))
    assert attenuation(model, FID(), np.array([1.0])).shape == (1,)


def test_coherence_is_exp_of_minus_chi():
    model = SpectrumModel((Constant(2.0),))
    t = np.array([0.0, 1.0, 3.0])
    np.testing.assert_allclose(coherence(model, FID(), t), np.exp(-t), rtol=1e-14)


# ---------------------------------------------------------------------------
# Measurement plans and traces.
# ---------------------------------------------------------------------------


def test_plan_validation_and_grid():
    plan = MeasurementPlan(dt=0.5, t_max=2.0)
    np.testing.assert_allclose(plan.time_grid(), [0.0, 0.5, 1.0, 1.5, 2.0])
    for bad in (
        dict(dt=0.0, t_max=1.0),
        dict(dt=0.5, t_max=0.2),
        dict(dt=0.1, t_max=1.0, tau_min=1.0),
        dict(dt=0.1, t_max=1.0, coherence_floor=1.0),
        dict(dt=0.1, t_max=1.0, noise_sigma=-0.1),
    ):
        with pytest.raises(ValueError):
            MeasurementPlan(**bad)


def test_simulated_trace_masks_and_values():
    model = SpectrumModel((Constant(2.0),))  # C = exp(-t)
    plan = MeasurementPlan(dt=0.25, t_max=3.0, tau_min=0.6, coherence_floor=0.1)
    trace = simulate_trace(model, FID(), plan)
    assert trace.C[0] == 1.0
    # Dead time: 0 < t < 0.6 withheld, the t = 0 anchor stays.
    assert list(np.nonzero(trace.mask == Mask.WITHHELD)[0]) == [1, 2]
    # Floor: C(t) = e^-t < 0.1 from t = 2.5 on; everything after the last
    # point above the floor is flagged.
    assert list(np.nonzero(trace.mask == Mask.TRUNCATED)[0]) == [10, 11, 12]
    sel = trace.mask == Mask.MEASURED
    np.testing.assert_allclose(trace.C[sel], np.exp(-trace.t[sel]), rtol=1e-12)


def test_noise_is_seeded_range_scaled_and_measured_only():
    model = SpectrumModel((Constant(2.0),))
    plan = MeasurementPlan(dt=0.1, t_max=2.0, coherence_floor=0.0, noise_sigma=0.01, seed=7)
    a = simulate_trace(model, FID(), plan)
    b = simulate_trace(model, FID(), plan)
    np.testing.assert_array_equal(a.C, b.C)
    c = simulate_trace(model, FID(), MeasurementPlan(
        dt=0.1, t_max=2.0, coherence_floor=0.0, noise_sigma=0.01, seed=8))
    assert np.any(a.C != c.C)
    ideal = np.exp(-a.t)
    resid = a.C - ideal
    span = ideal.max() - ideal.min()
    # Scale sanity: the sample std of the residuals sits near sigma * span.
    assert 0.5 * 0.01 * span < resid.std() < 2.0 * 0.01 * span
    assert np.all(a.C >= 1e-12) and np.all(a.C <= 1.0)


def test_floor_can_truncate_to_the_first_sample():
    # exp(-chi) crashes below the floor within one step; only t = 0 (which
    # is always above any legal floor) survives.
    model = SpectrumModel((Constant(200.0),))
    plan = MeasurementPlan(dt=0.5, t_max=2.0, coherence_floor=0.5)
    trace = simulate_trace(model, FID(), plan)
    assert trace.mask[0] == Mask.MEASURED
    assert np.all(trace.mask[1:] == Mask.TRUNCATED)


def test_t2_definitions():
    model = SpectrumModel((Constant(2.0),))  # chi = t, C = e^-t
    plan = MeasurementPlan(dt=0.01, t_max=3.0, coherence_floor=0.0)
    trace = simulate_trace(model, FID(), plan)
    assert t2_from_trace(trace, "e_folding") == pytest.approx(1.0, rel=1e-3)
    assert t2_from_trace(trace, "slope") == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(ValueError):
        t2_from_trace(trace, "nonsense")
    short = simulate_trace(model, FID(), MeasurementPlan(dt=0.05, t_max=0.5, coherence_floor=0.0))
    with pytest.raises(ValueError):
        t2_from_trace(short, "e_folding")


# ---------------------------------------------------------------------------
# Trace files.
# ---------------------------------------------------------------------------


def test_trace_round_trip_with_sidecar(tmp_path):
    model = SpectrumModel((Gaussian(1.0, 1.0),))
    plan = MeasurementPlan(dt=0.05, t_max=2.0, tau_min=0.2, noise_sigma=0.001, seed=3)
    trace = simulate_trace(model, FID(), plan)
    path = tmp_path / "trace.csv"
    save_trace(trace, path, model)
    back = load_trace(path)
    np.testing.assert_array_equal(back.t, trace.t)
    np.testing.assert_array_equal(back.C, trace.C)
    np.testing.assert_array_equal(back.mask, trace.mask)
    assert back.plan == trace.plan
    assert back.sequence == trace.sequence
    with pytest.raises(ValueError):
        load_trace(path, SpinEcho())  # sidecar disagrees with the request


def test_trace_load_without_sidecar(tmp_path):
    model = SpectrumModel((Gaussian(1.0, 1.0),))
    plan = MeasurementPlan(dt=0.05, t_max=2.0)
    trace = simulate_trace(model, FID(), plan)
    path = tmp_path / "trace.csv"
    save_trace(trace, path)
    path.with_suffix(".json").unlink()
    with pytest.raises(ValueError):
        load_trace(path)  # sequence unknown
    back = load_trace(path, FID())
    np.testing.assert_array_equal(back.C, trace.C)
    assert back.plan.dt == pytest.approx(plan.dt)


@pytest.mark.parametrize(
    "mangle",
    [
        lambda rows: ["x,y,z"] + rows[1:],
        lambda rows: rows + ["0.5,0.5"],
        lambda rows: rows + ["0.5,0.5,not_a_mask"],
        lambda rows: rows[:1] + ["0.0,1.0,measured", "0.3,0.9,measured", "0.4,0.8,measured"],
    ],
)
def test_trace_load_rejects_malformed_files(tmp_path, mangle):
    model = SpectrumModel((Gaussian(1.0, 1.0),))
    trace = simulate_trace(model, FID(), MeasurementPlan(dt=0.1, t_max=1.0))
    path = tmp_path / "trace.csv"
    save_trace(trace, path)
    path.with_suffix(".json").unlink()
    rows = path.read_text().strip().splitlines()
    path.write_text("\n".join(mangle(rows)) + "\n")
    with pytest.raises(ValueError):
        load_trace(path, FID())


def test_sequence_serialization_round_trip():
    for seq in (FID(), SpinEcho(), CPMG(12)):
        assert sequence_from_obj(sequence_to_obj(seq)) == seq
    with pytest.raises(ValueError):
        sequence_from_obj("ramsey")
