import math

import numpy as np
import pytest
import yaml

from spinburst import (
    PRESETS,
    Scenario,
    ValidationError,
    dump_scenario,
    get_preset,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from spinburst.units import TWO_PI


def base_kwargs(**overrides):
    kwargs = dict(
        engine="semiclassical",
        collective_g_hz=3.1e6,
        kappa_hz=13.8e6,
        n_spins=1_000_000,
        pulse_segments=((50e-9, 2.0e9), (1.5e-6, 0.0)),
    )
    kwargs.update(overrides)
    return kwargs


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_yaml_round_trip(name):
    scenario = get_preset(name).scenario
    text = dump_scenario(scenario)
    assert scenario_from_dict(yaml.safe_load(text)) == scenario


def test_round_trip_keeps_lab_units():
    scenario = Scenario(**base_kwargs(gamma_perp_fwhm_hz=2.7e6, seed=7))
    data = scenario_to_dict(scenario)
    assert data["params"]["gamma_perp_fwhm_hz"] == 2.7e6
    assert data["params"]["collective_g_hz"] == 3.1e6
    assert data["seed"] == 7
    assert "spectrum" not in data  # defaults are dropped
    assert scenario_from_dict(data) == scenario


def test_unknown_keys_rejected():
    good = scenario_to_dict(Scenario(**base_kwargs()))
    for spoil in (
        {"what": 1},
        {"params": {**good["params"], "coupling": 1.0}},
        {"pulse": {"segments": [[1e-6, 0.0]], "shape": "square"}},
        {"solver": {"rtol": 1e-8}},
    ):
        with pytest.raises(ValidationError):
            scenario_from_dict({**good, **spoil})
    with pytest.raises(ValidationError):
        scenario_from_dict([1, 2, 3])


def test_coupling_must_be_given_exactly_once():
    with pytest.raises(ValidationError):
        Scenario(**base_kwargs(g_hz=3.1e3))
    kwargs = base_kwargs()
    kwargs.pop("collective_g_hz")
    with pytest.raises(ValidationError):
        Scenario(**kwargs)


@pytest.mark.parametrize(
    "overrides",
    [
        dict(engine="mps"),
        dict(initial_state="tilted"),
        dict(tipping_policy="gaussian"),
        dict(tipping_policy="stochastic"),  # no seed
        dict(engine="dicke", pulse_segments=((50e-9, 1.0e9),)),
        dict(engine="dicke", pulse_segments=(), t_end_s=1e-6,
             sweep_amplitudes_hz=(1.0e9,)),
        dict(engine="exact", tipping_policy="deterministic", initial_state="inverted"),
        dict(engine="dicke", delta_c_hz=1.0e6, pulse_segments=(), t_end_s=1e-6),
        dict(sweep_amplitudes_hz=(1.0e9,), sweep_multiplicities=(1, 2)),
        dict(pulse_segments=((1e-6, 0.0),), sweep_amplitudes_hz=(1.0e9,)),
        dict(sweep_multiplicities=(1, 2.5)),
        dict(sweep_multiplicities=(0, 1)),
        dict(misalignment_hz=1.0e6),
        dict(n_samples=1),
        dict(tolerance=0.5),
        dict(tolerance=0.0),
        dict(method="LSODA"),
        dict(kappa_hz=-1.0),
        dict(gamma_par_hz=math.inf),
        dict(pulse_segments=(), t_end_s=None),
    ],
)
def test_scenario_validation_rejects(overrides):
    with pytest.raises(ValidationError):
        Scenario(**base_kwargs(**overrides))


def test_to_params_converts_to_angular_units():
    scenario = Scenario(**base_kwargs(gamma_perp_fwhm_hz=2.7e6, gamma_par_hz=10.0))
    params = scenario.to_params()
    assert params.g == pytest.approx(TWO_PI * 3.1e3)  # collective / sqrt(N)
    assert params.kappa == pytest.approx(TWO_PI * 13.8e6)
    # line FWHM maps to the coherence decay rate, half the angular FWHM
    assert params.gamma_perp == pytest.approx(0.5 * TWO_PI * 2.7e6)
    assert params.gamma_par == pytest.approx(TWO_PI * 10.0)
    assert params.n_spins == 1_000_000
    assert scenario.to_params(multiplicity=3).n_spins == 3_000_000
    # collective coupling is invariant under the stacking because g is per spin
    assert scenario.to_params(3).collective_coupling == pytest.approx(
        math.sqrt(3.0) * params.collective_coupling
    )


def test_to_pulse_override_touches_only_driven_segments():
    scenario = Scenario(**base_kwargs())
    pulse = scenario.to_pulse()
    assert pulse.segments == ((50e-9, TWO_PI * 2.0e9), (1.5e-6, 0.0))
    swept = scenario.to_pulse(eta_hz=5.0e8)
    assert swept.segments == ((50e-9, TWO_PI * 5.0e8), (1.5e-6, 0.0))
    assert swept.drive_off_time() == pulse.drive_off_time() == 50e-9


def test_pulse_free_evolution_from_grid_end():
    scenario = Scenario(**base_kwargs(pulse_segments=(), t_end_s=2.0e-6))
    pulse = scenario.to_pulse()
    assert pulse.total_duration == 2.0e-6
    assert pulse.peak_amplitude() == 0.0


def test_to_distribution_defaults_to_single_bin():
    dist = Scenario(**base_kwargs()).to_distribution()
    assert dist.detunings == pytest.approx([0.0])
    assert dist.weights == pytest.approx([1.0])


def test_to_distribution_stacks_misaligned_ensembles():
    scenario = Scenario(
        **base_kwargs(
            pulse_segments=(),
            t_end_s=1e-6,
            initial_state="inverted",
            sweep_multiplicities=(1, 3),
            misalignment_hz=2.0e6,
        )
    )
    single = scenario.to_distribution(1)
    assert single.detunings == pytest.approx([0.0])
    triple = scenario.to_distribution(3)
    spacing = TWO_PI * 2.0e6
    assert triple.detunings == pytest.approx([-spacing, 0.0, spacing])
    assert triple.weights == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    assert triple.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_to_distribution_offsets_every_bin_of_a_line():
    scenario = Scenario(
        **base_kwargs(
            pulse_segments=(),
            t_end_s=1e-6,
            initial_state="inverted",
            spectrum_shape="gaussian",
            spectrum_fwhm_hz=1.0e6,
            spectrum_n_bins=11,
            sweep_multiplicities=(2,),
            misalignment_hz=5.0e6,
        )
    )
    base = scenario.to_distribution(1)
    stacked = scenario.to_distribution(2)
    assert stacked.detunings.size == 22
    assert stacked.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(stacked.detunings) >= 0.0)
    half = TWO_PI * 5.0e6 / 2.0
    expected = np.sort(np.concatenate([base.detunings - half, base.detunings + half]))
    assert stacked.detunings == pytest.approx(expected)


def test_time_grid():
    scenario = Scenario(**base_kwargs(n_samples=101))
    grid = scenario.time_grid()
    assert grid.size == 101
    assert grid[0] == 0.0
    assert grid[-1] == pytest.approx(50e-9 + 1.5e-6)
    capped = Scenario(**base_kwargs(t_end_s=1.0e-6)).time_grid()
    assert capped[-1] == 1.0e-6


def test_load_scenario_from_file(tmp_path):
    path = tmp_path / "scenario.yaml"
    scenario = get_preset("fig3").scenario
    path.write_text(dump_scenario(scenario))
    assert load_scenario(path) == scenario
    path.write_text("engine: [unclosed")
    with pytest.raises(ValidationError):
        load_scenario(path)


def test_preset_catalogue():
    assert {"fig2", "fig3", "fig4"} <= set(PRESETS)
    for preset in PRESETS.values():
        assert preset.description
    with pytest.raises(KeyError, match="fig999"):
        get_preset("fig999")
