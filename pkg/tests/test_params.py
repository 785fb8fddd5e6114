import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinburst import (
    PhysicalParams,
    PulseSequence,
    ValidationError,
    purcell_rate,
    single_spin_coupling,
    validate_fast_cavity,
)
from spinburst.units import TWO_PI, angular, ordinary


def test_angular_roundtrip():
    assert angular(1.0) == TWO_PI
    assert ordinary(angular(13.8e6)) == pytest.approx(13.8e6, rel=1e-15)


def test_purcell_reference_value():
    # 72 mHz coupling into a 13.8 MHz resonator: enhanced rate of 1.5e-9 Hz
    rate = purcell_rate(angular(72e-3), angular(13.8e6))
    assert ordinary(rate) == pytest.approx(1.5026086956521737e-9, rel=1e-12)


def test_purcell_rejects_zero_kappa():
    with pytest.raises(ValidationError):
        purcell_rate(1.0, 0.0)


@given(
    g=st.floats(1e-3, 1e9),
    kappa=st.floats(1e-3, 1e12),
    scale=st.floats(1e-6, 1e6),
)
def test_purcell_homogeneity(g, kappa, scale):
    # quadratic in g, inverse in kappa
    base = purcell_rate(g, kappa)
    assert purcell_rate(scale * g, kappa) == pytest.approx(scale**2 * base, rel=1e-12)
    assert purcell_rate(g, scale * kappa) == pytest.approx(base / scale, rel=1e-12)


def test_params_validation():
    with pytest.raises(ValidationError):
        PhysicalParams(g=1.0, kappa=0.0)
    with pytest.raises(ValidationError):
        PhysicalParams(g=1.0, kappa=1.0, kappa_out=1.5)
    with pytest.raises(ValidationError):
        PhysicalParams(g=1.0, kappa=1.0, gamma_perp=-1.0)
    with pytest.raises(ValidationError):
        PhysicalParams(g=1.0, kappa=1.0, n_spins=0)
    with pytest.raises(ValidationError):
        PhysicalParams(g=math.inf, kappa=1.0)


def test_collective_coupling_and_rescale():
    p = PhysicalParams(g=2.0, kappa=100.0, n_spins=25)
    assert p.collective_coupling == pytest.approx(10.0)
    assert single_spin_coupling(10.0, 25) == pytest.approx(2.0)
    assert p.purcell == pytest.approx(4 * 4.0 / 100.0)


def test_fast_cavity_margins():
    p = PhysicalParams(
        g=1.0, kappa=angular(13.8e6), gamma_perp=angular(1.35e6), n_spins=4
    )
    report = validate_fast_cavity(p, collective_coupling=angular(6.2e6))
    assert report.passed
    # tightest competitor is the collective coupling: 13.8/6.2
    assert report.smallest_margin == pytest.approx(13.8 / 6.2, rel=1e-12)


def test_fast_cavity_flags_violation():
    p = PhysicalParams(g=1.0, kappa=10.0, n_spins=1)
    report = validate_fast_cavity(p, rabi_rate=50.0)
    assert not report.passed
    assert report.smallest_margin == pytest.approx(10.0 / 50.0)


def test_fast_cavity_zero_rates_have_infinite_margin():
    p = PhysicalParams(g=1.0, kappa=10.0, n_spins=1)
    report = validate_fast_cavity(p)
    assert report.passed
    assert math.isinf(report.margins["gamma_par"])


def test_pulse_sequence_accounting():
    pulse = PulseSequence.drive_then_free(50e-9, 1e7, 2e-6)
    assert pulse.total_duration == pytest.approx(2.05e-6)
    assert pulse.boundaries() == (50e-9, pytest.approx(2.05e-6))
    assert pulse.drive_off_time() == pytest.approx(50e-9)
    assert pulse.peak_amplitude() == 1e7
    assert PulseSequence.constant(1.0, 0.0).drive_off_time() == 0.0


def test_pulse_sequence_rejects_bad_segments():
    with pytest.raises(ValidationError):
        PulseSequence(((0.0, 1.0),))
    with pytest.raises(ValidationError):
        PulseSequence(((1.0, math.nan),))
