import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinburst import (
    FitFailureError,
    GridAlignmentError,
    Trajectory,
    ValidationError,
    assemble_power_map,
    detect_burst,
    emission_metric,
    fit_scaling,
    fit_tanh,
)

TAU = 0.2e-6
T_PEAK = 1.5e-6
T_OFF = 0.5e-6


def make_traj(times, intensity, drive_off=0.0, s_z=None, field=None):
    n = times.size
    return Trajectory(
        times=times,
        s_z=np.zeros(n) if s_z is None else s_z,
        spsm=np.zeros(n),
        photons=np.asarray(intensity) / 1e6,
        field=np.zeros(n, dtype=complex) if field is None else field,
        intensity=np.asarray(intensity, dtype=float),
        emitted=np.zeros(n),
        meta={"drive_off_time": drive_off} if drive_off else {},
    )


def burst_trace(scale=1.0, baseline=0.0):
    times = np.linspace(0.0, 4.0e-6, 801)
    intensity = scale / np.cosh((times - T_PEAK) / TAU) ** 2 + baseline
    return make_traj(times, intensity, drive_off=T_OFF)


def test_detect_burst_geometry():
    metrics = detect_burst(burst_trace())
    assert metrics is not None
    assert metrics.peak_time == pytest.approx(T_PEAK, abs=3e-9)
    assert metrics.delay == pytest.approx(T_PEAK - T_OFF, abs=3e-9)
    assert metrics.peak_intensity == pytest.approx(1.0, rel=1e-6)
    assert metrics.fwhm == pytest.approx(2.0 * math.acosh(math.sqrt(2.0)) * TAU, rel=1e-3)
    # integral of sech^2 is 2 tau (tails negligible on this span)
    assert metrics.emitted_photons == pytest.approx(2.0 * TAU, rel=1e-3)


@settings(max_examples=50)
@given(st.floats(1e-6, 1e6))
def test_detect_burst_rescale_invariance(scale):
    base = detect_burst(burst_trace())
    scaled = detect_burst(burst_trace(scale=scale))
    assert scaled is not None
    assert scaled.peak_time == base.peak_time
    assert scaled.delay == base.delay
    assert scaled.fwhm == base.fwhm
    assert scaled.peak_intensity == pytest.approx(scale * base.peak_intensity, rel=1e-12)
    assert scaled.emitted_photons == pytest.approx(scale * base.emitted_photons, rel=1e-12)


def test_detect_burst_rejects_monotone_decay():
    times = np.linspace(0.0, 4.0e-6, 401)
    decay = make_traj(times, np.exp(-times / 1e-6), drive_off=T_OFF)
    assert detect_burst(decay) is None


def test_detect_burst_rejects_buried_peak():
    # peak below the noise-floor multiple of the trailing baseline
    assert detect_burst(burst_trace(baseline=0.5)) is None
    # but it qualifies when the baseline criterion is relaxed
    assert detect_burst(burst_trace(baseline=0.5), noise_floor_factor=1.5) is not None


def test_detect_burst_rejects_flat_zero_trace():
    times = np.linspace(0.0, 1e-6, 101)
    assert detect_burst(make_traj(times, np.zeros(101))) is None


def test_detect_burst_window_and_args_validation():
    times = np.linspace(0.0, 1e-6, 101)
    traj = make_traj(times, np.ones(101), drive_off=0.999e-6)
    with pytest.raises(ValidationError):
        detect_burst(traj)
    with pytest.raises(ValidationError):
        detect_burst(burst_trace(), noise_floor_factor=0.0)


def test_detect_burst_uses_trajectory_drive_off():
    # explicit argument overrides the recorded drive-off time
    explicit = detect_burst(burst_trace(), drive_off_time=1.0e-6)
    assert explicit.delay == pytest.approx(T_PEAK - 1.0e-6, abs=3e-9)


def test_emission_metric_peak_and_integral():
    traj = burst_trace()
    assert emission_metric(traj) == pytest.approx(1.0, rel=1e-6)
    assert emission_metric(traj, integral=True) == pytest.approx(2.0 * TAU, rel=1e-3)
    # explicit window override: include the whole trace
    assert emission_metric(traj, drive_off_time=0.0) == emission_metric(traj)
    with pytest.raises(ValidationError):
        emission_metric(traj, drive_off_time=3.999e-6)


def test_fit_scaling_exact_laws():
    fit = fit_scaling([(4.0, 16.0), (8.0, 64.0), (16.0, 256.0)])
    assert fit.alpha == pytest.approx(2.0, abs=1e-12)
    assert fit.amplitude == pytest.approx(1.0, rel=1e-10)
    assert fit.max_residual < 1e-12
    lin = fit_scaling([(n, 3.0 * n) for n in (2.0, 5.0, 11.0)])
    assert lin.alpha == pytest.approx(1.0, abs=1e-12)
    assert lin.amplitude == pytest.approx(3.0, rel=1e-10)


@settings(max_examples=50)
@given(
    st.floats(1e-3, 1e3),
    st.floats(1e-3, 1e3),
    st.floats(0.5, 3.0),
    st.floats(1e-2, 1e2),
)
def test_fit_scaling_scale_invariance(c, d, alpha, amp):
    n = np.array([16.0, 64.0, 256.0, 1024.0])
    intensity = amp * n**alpha
    base = fit_scaling(np.column_stack([n, intensity]))
    moved = fit_scaling(np.column_stack([c * n, d * intensity]))
    assert base.alpha == pytest.approx(alpha, rel=1e-9)
    assert moved.alpha == pytest.approx(base.alpha, rel=1e-9, abs=1e-9)


def test_fit_scaling_validation():
    with pytest.raises(ValidationError):
        fit_scaling([(4.0, 16.0)])
    with pytest.raises(ValidationError):
        fit_scaling([(4.0, -16.0), (8.0, 64.0)])
    with pytest.raises(ValidationError):
        fit_scaling([(4.0, 16.0), (4.0, 64.0)])  # one distinct N
    with pytest.raises(ValidationError):
        fit_scaling(np.ones((3, 3)))


def test_fit_tanh_recovers_exact_parameters():
    times = np.linspace(0.0, 3.0e-6, 601)
    target = dict(t_delay=1.2e-6, tau=1.1e-7, amplitude=500.0, offset=0.0)
    s_z = target["offset"] - target["amplitude"] * np.tanh(
        (times - target["t_delay"]) / target["tau"]
    )
    fit = fit_tanh(times, s_z)
    assert fit.t_delay == pytest.approx(target["t_delay"], rel=1e-6)
    assert fit.tau == pytest.approx(target["tau"], rel=1e-6)
    assert fit.amplitude == pytest.approx(target["amplitude"], rel=1e-6)
    assert fit.offset == pytest.approx(target["offset"], abs=1e-3)
    assert fit.residual < 1e-6 * target["amplitude"]
    assert fit.max_slope == pytest.approx(target["amplitude"] / target["tau"], rel=1e-5)
    assert np.allclose(fit.evaluate(times), s_z, atol=1e-3)


def test_fit_tanh_on_noisy_trace():
    rng = np.random.default_rng(42)
    times = np.linspace(0.0, 3.0e-6, 601)
    clean = 250.0 - 250.0 * np.tanh((times - 1.0e-6) / 2.0e-7)
    noisy = clean + rng.normal(0.0, 5.0, times.size)
    fit = fit_tanh(times, noisy)
    assert fit.t_delay == pytest.approx(1.0e-6, rel=0.01)
    assert fit.tau == pytest.approx(2.0e-7, rel=0.05)
    assert fit.residual == pytest.approx(5.0, rel=0.15)
    # accepted-step costs must decrease strictly
    log = np.asarray(fit.iteration_log)
    assert np.all(np.diff(log) < 0.0)


def test_fit_tanh_failure_carries_initializer():
    times = np.linspace(0.0, 3.0e-6, 101)
    s_z = 1.0 - np.tanh((times - 1.5e-6) / 2.0e-7)
    with pytest.raises(FitFailureError) as err:
        fit_tanh(times, s_z, max_iterations=0)
    init = err.value.initializer
    assert init.tau > 0.0
    assert math.isnan(init.residual)


def test_fit_tanh_validation():
    with pytest.raises(ValidationError):
        fit_tanh(np.linspace(0, 1, 3), np.zeros(3))
    with pytest.raises(ValidationError):
        fit_tanh(np.linspace(0, 1, 10), np.full(10, np.nan))


def _sweep_traj(amplitude, times):
    # drive until 0.5 us, then a field hump whose height tracks the amplitude
    field = amplitude * np.exp(-((times - 1.0e-6) / 0.3e-6) ** 2) + 0j
    s_z = np.where(times < T_OFF, -1.0, amplitude - 2.0)
    return make_traj(times, np.abs(field) ** 2, drive_off=T_OFF, s_z=s_z, field=field)


def test_assemble_power_map_sorts_and_annotates():
    times = np.linspace(0.0, 2.0e-6, 201)
    amps = np.array([3.0, 1.0, 2.0])
    runs = [_sweep_traj(a, times) for a in amps]
    pmap = assemble_power_map(runs, amps)
    assert np.all(pmap.amplitudes == np.array([1.0, 2.0, 3.0]))
    assert pmap.intensity.shape == (201, 3)
    # columns follow the sorted amplitude order
    assert pmap.intensity[:, 2] == pytest.approx(9.0 * pmap.intensity[:, 0] / 1.0)
    # the inversion-maximising amplitude is the largest here
    assert pmap.threshold_amplitude == 3.0
    assert pmap.s_z_final == pytest.approx(np.array([-1.0, 0.0, 1.0]))


def test_assemble_power_map_rejects_mismatched_grids():
    times = np.linspace(0.0, 2.0e-6, 201)
    other = np.linspace(0.0, 2.1e-6, 201)
    runs = [_sweep_traj(1.0, times), _sweep_traj(2.0, other)]
    with pytest.raises(GridAlignmentError) as err:
        assemble_power_map(runs, [1.0, 2.0])
    assert err.value.offenders  # names the runs that disagree
    with pytest.raises(ValidationError):
        assemble_power_map([_sweep_traj(1.0, times)], [1.0, 2.0])
    with pytest.raises(ValidationError):
        assemble_power_map([], [])
