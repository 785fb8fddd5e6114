import math

import numpy as np
import pytest

from spinburst import (
    BlochBins,
    ClosureInstabilityError,
    PhysicalParams,
    PulseSequence,
    ValidationError,
    adiabatic_field,
    build_spectral_distribution,
    closure_correlation,
    delay_estimate,
    fit_tanh,
    integrate_mean_field,
    power_sweep,
    seed_tipping,
    single_spin_coupling,
)
from spinburst.units import TWO_PI

KAPPA = TWO_PI * 13.8e6
COLLECTIVE = TWO_PI * 3.1e6
N_SPINS = 10_000
G = single_spin_coupling(COLLECTIVE, N_SPINS)
PARAMS = PhysicalParams(g=G, kappa=KAPPA, n_spins=N_SPINS)
# collective decay rate 4 (g sqrt N)^2 / kappa and the ideal burst geometry
RATE = 4.0 * COLLECTIVE**2 / KAPPA
TAU = 2.0 / RATE
SINGLE_BIN = build_spectral_distribution("gaussian", 0.0, 1)


def make_bins(state="inverted", tipping=None, dist=SINGLE_BIN, n=N_SPINS):
    return BlochBins.from_distribution(dist, n, state=state, tipping=tipping)


def test_bins_validation():
    with pytest.raises(ValidationError):
        BlochBins(
            weights=np.array([0.5, 0.5]),
            detunings=np.zeros(3),
            x=np.zeros(2),
            y=np.zeros(2),
            z=np.zeros(2),
            n_spins=2,
        )
    with pytest.raises(ValidationError):
        BlochBins(
            weights=np.array([1.0]),
            detunings=np.zeros(1),
            x=np.array([0.9]),
            y=np.array([0.9]),
            z=np.array([0.9]),
            n_spins=1,
        )
    with pytest.raises(ValidationError):
        make_bins(state="ground", tipping=(0.1, 0.0))
    with pytest.raises(ValidationError):
        make_bins(state="sideways")


def test_closure_parts_on_reference_states():
    ground = make_bins(state="ground")
    parts = closure_correlation(ground)
    assert float(parts) == parts.total == pytest.approx(0.0, abs=1e-12)

    untipped = make_bins()
    parts = closure_correlation(untipped)
    assert parts.interference == 0.0
    assert parts.excitation == pytest.approx(N_SPINS)

    theta = 0.02
    tipped = make_bins(tipping=(theta, 0.0))
    parts = closure_correlation(tipped)
    assert parts.interference == pytest.approx((0.5 * N_SPINS * math.sin(theta)) ** 2)
    assert parts.excitation == pytest.approx(0.5 * N_SPINS * (1.0 + math.cos(theta)))


def test_adiabatic_field_components():
    assert adiabatic_field(make_bins(state="ground"), PARAMS) == 0.0
    eta = 1.0e7
    field = adiabatic_field(make_bins(state="ground"), PARAMS, eta=eta)
    assert field == pytest.approx(complex(2.0 * eta / KAPPA, 0.0))
    theta = 0.01
    field = adiabatic_field(make_bins(tipping=(theta, 0.0)), PARAMS)
    expected_a2 = (2.0 * G / KAPPA) * 0.5 * N_SPINS * math.sin(theta)
    assert field.imag == pytest.approx(expected_a2, rel=1e-12)


def test_seed_tipping_policies():
    theta, phi = seed_tipping(N_SPINS, "deterministic")
    assert theta == pytest.approx(2.0 / math.sqrt(N_SPINS))
    assert phi == 0.0
    assert seed_tipping(N_SPINS, "none") == (0.0, 0.0)
    with pytest.raises(ValidationError):
        seed_tipping(N_SPINS, "stochastic")
    rng = np.random.default_rng(7)
    a = seed_tipping(N_SPINS, "stochastic", rng=np.random.default_rng(7))
    b = seed_tipping(N_SPINS, "stochastic", rng=np.random.default_rng(7))
    assert a == b
    theta, phi = seed_tipping(N_SPINS, "stochastic", rng=rng)
    assert 0.0 < theta < 1.0
    assert 0.0 <= phi < 2.0 * math.pi
    with pytest.raises(ValidationError):
        seed_tipping(N_SPINS, "gaussian")


def test_untipped_inversion_never_self_starts():
    # zero transverse seed: no coherent field ever builds, and the inversion
    # drains only through the incoherent per-spin channel
    pulse = PulseSequence.constant(2.0e-6, 0.0)
    times = np.linspace(0.0, 2.0e-6, 201)
    traj = integrate_mean_field(make_bins(), PARAMS, pulse, times)
    assert np.max(np.abs(traj.field)) == 0.0
    z = -1.0 + 2.0 * np.exp(-PARAMS.purcell * times)
    assert traj.s_z == pytest.approx(0.5 * N_SPINS * z, rel=1e-7)
    # no interference: <S+S-> is the bare excitation number
    assert traj.spsm == pytest.approx(N_SPINS * np.exp(-PARAMS.purcell * times), rel=1e-7)


def test_free_burst_matches_ideal_geometry():
    # tipped inverted ensemble: delay, width and peak follow the sech^2 burst
    tip = seed_tipping(N_SPINS, "deterministic")
    pulse = PulseSequence.constant(2.0e-6, 0.0)
    times = np.linspace(0.0, 2.0e-6, 1601)
    traj = integrate_mean_field(make_bins(tipping=tip), PARAMS, pulse, times)

    i_pk = int(np.argmax(traj.intensity))
    assert times[i_pk] == pytest.approx(delay_estimate(N_SPINS, PARAMS.purcell), rel=0.05)
    # peak detected rate: purcell * max<S+S-> with max<S+S-> = N^2/4
    assert traj.intensity[i_pk] == pytest.approx(0.25 * RATE * N_SPINS, rel=0.01)
    half = traj.intensity >= 0.5 * traj.intensity[i_pk]
    fwhm = times[half][-1] - times[half][0]
    assert fwhm == pytest.approx(2.0 * math.acosh(math.sqrt(2.0)) * TAU, rel=0.02)
    # inversion collapse fits the hyperbolic tangent with the mean-field width
    fit = fit_tanh(traj.times, traj.s_z)
    assert fit.tau == pytest.approx(TAU, rel=0.02)
    assert fit.t_delay == pytest.approx(times[i_pk], rel=0.05)
    # all excitation ends up in the detector
    assert traj.emitted[-1] == pytest.approx(N_SPINS, rel=0.02)
    assert np.all(np.diff(traj.emitted) >= 0.0)


def test_transcribed_inversion_equation_free_decay():
    # numerical dS_z/dt must reproduce -purcell <S+S-> during free evolution
    tip = seed_tipping(N_SPINS, "deterministic")
    pulse = PulseSequence.constant(2.0e-6, 0.0)
    times = np.linspace(0.0, 2.0e-6, 1601)
    traj = integrate_mean_field(make_bins(tipping=tip), PARAMS, pulse, times)
    lhs = np.gradient(traj.s_z, traj.times, edge_order=2)
    rhs = -PARAMS.purcell * traj.spsm
    assert np.max(np.abs(lhs - rhs)) < 0.01 * np.max(np.abs(lhs))


def test_dephasing_suppresses_the_burst():
    tip = seed_tipping(N_SPINS, "deterministic")
    pulse = PulseSequence.constant(2.0e-6, 0.0)
    times = np.linspace(0.0, 2.0e-6, 801)
    clean = integrate_mean_field(make_bins(tipping=tip), PARAMS, pulse, times)
    damped_params = PhysicalParams(
        g=G, kappa=KAPPA, gamma_perp=3.0 / TAU, n_spins=N_SPINS
    )
    damped = integrate_mean_field(make_bins(tipping=tip), damped_params, pulse, times)
    assert damped.intensity.max() < 0.2 * clean.intensity.max()

    # inhomogeneous broadening on the same scale suppresses the peak too
    wide = build_spectral_distribution("gaussian", 6.0 * RATE, 31)
    spread = integrate_mean_field(
        make_bins(tipping=tip, dist=wide), PARAMS, pulse, times
    )
    assert spread.intensity.max() < 0.5 * clean.intensity.max()


def test_detuned_bin_precesses_at_its_detuning():
    # decoupled resonator (g=0): transverse components rotate at the detuning
    delta = TWO_PI * 1.0e6
    dist = build_spectral_distribution("gaussian", 0.0, 1)
    bins = BlochBins(
        weights=np.array([1.0]),
        detunings=np.array([delta]),
        x=np.array([0.6]),
        y=np.array([0.0]),
        z=np.array([0.8]),
        n_spins=4,
    )
    params = PhysicalParams(g=0.0, kappa=KAPPA, n_spins=4)
    t_end = 2.3e-6
    pulse = PulseSequence.constant(t_end, 0.0)
    traj = integrate_mean_field(bins, params, pulse, np.linspace(0.0, t_end, 201), tolerance=1e-11)
    final = traj.meta["_final_bins"]
    assert final.x[0] == pytest.approx(0.6 * math.cos(delta * t_end), abs=1e-7)
    assert final.y[0] == pytest.approx(0.6 * math.sin(delta * t_end), abs=1e-7)
    assert final.z[0] == pytest.approx(0.8, abs=1e-9)
    # interference part of <S+S-> is invariant under pure precession
    parts = closure_correlation(final)
    assert parts.interference == pytest.approx((0.5 * 4 * 0.6) ** 2, rel=1e-9)


def test_integrate_input_validation():
    bins = make_bins()
    pulse = PulseSequence.constant(1.0e-6, 0.0)
    with pytest.raises(ValidationError):
        integrate_mean_field(bins, PARAMS, pulse, np.linspace(0.0, 2e-6, 11))
    with pytest.raises(ValidationError):
        integrate_mean_field(bins, PARAMS, pulse, np.linspace(1e-7, 1e-6, 11))
    detuned = PhysicalParams(g=G, kappa=KAPPA, delta_c=1.0, n_spins=N_SPINS)
    with pytest.raises(ValidationError):
        integrate_mean_field(bins, detuned, pulse, np.linspace(0.0, 1e-6, 11))
    small = PhysicalParams(g=G, kappa=KAPPA, n_spins=3)
    with pytest.raises(ValidationError):
        integrate_mean_field(bins, small, pulse, np.linspace(0.0, 1e-6, 11))


def test_drive_rotates_ground_state_up():
    # Rabi rate 4 g eta / kappa: pick eta for a pi/2 rotation over the
    # segment, fast enough that the ensemble's own radiated field (the
    # g S_y backaction) stays small against the external drive
    t_drive = 5.0e-9
    omega = 0.5 * np.pi / t_drive
    pulse = PulseSequence.constant(t_drive, omega * KAPPA / (4.0 * G))
    times = np.linspace(0.0, t_drive, 51)
    traj = integrate_mean_field(make_bins(state="ground"), PARAMS, pulse, times, tolerance=1e-11)
    assert traj.s_z[0] == pytest.approx(-0.5 * N_SPINS)
    assert abs(traj.s_z[-1]) < 0.05 * N_SPINS  # near the equator after pi/2


def test_power_sweep_orders_amplitudes_and_finds_threshold():
    n = 1000
    g = single_spin_coupling(COLLECTIVE, n)
    params = PhysicalParams(g=g, kappa=KAPPA, n_spins=n)
    bins = BlochBins.from_distribution(SINGLE_BIN, n, state="ground")
    omega_pi = np.pi / 50e-9
    eta_pi = omega_pi * KAPPA / (4.0 * g)
    amplitudes = np.array([0.25, 1.0, 0.5]) * eta_pi  # deliberately unsorted
    pmap = power_sweep(bins, params, 50e-9, 1.0e-6, amplitudes, n_samples=201)
    assert np.all(np.diff(pmap.amplitudes) > 0.0)
    assert pmap.intensity.shape == (pmap.times.size, 3)
    # the pi pulse maximises the inversion left behind
    assert pmap.threshold_amplitude == pytest.approx(eta_pi)
    assert np.argmax(pmap.s_z_final) == 2
    # input bins must not have been mutated by the sweep
    assert np.all(bins.z == -1.0)
    with pytest.raises(ValidationError):
        power_sweep(bins, params, 50e-9, 1e-6, [1.0, 1.0])
