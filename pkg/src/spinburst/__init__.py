"""spinburst: cavity-mediated superradiance at desk scale.

Three engines for the same physics at different fidelity/size trade-offs —
an exact Lindblad solver for a handful of spins, a collective-ladder rate
model for thousands, and a binned mean-field model for millions — plus the
analysis, scenario and artifact plumbing to compare them.
"""

from .analysis import (
    BurstMetrics,
    ScalingFit,
    TanhFit,
    assemble_power_map,
    detect_burst,
    emission_metric,
    fit_scaling,
    fit_tanh,
)
from .config import Scenario, dump_scenario, load_scenario, scenario_from_dict, scenario_to_dict
from .dicke import CollectiveGenerator, LadderState, build_generator, delay_estimate, evolve_ladder, peak_correlation
from .errors import (
    CapacityError,
    ClosureInstabilityError,
    FitFailureError,
    GridAlignmentError,
    NoResonanceError,
    SimulationError,
    StiffnessError,
    ValidationError,
)
from .exact import (
    HilbertSpec,
    Liouvillian,
    build_liouvillian,
    drive_then_release,
    evolve,
    ground_state,
    inverted_state,
    spin_product_state,
    suggested_n_fock,
    validate_density,
)
from .nv import NVLevelModel, resonance_fields, thermal_ground_population, zeeman_projections
from .params import (
    FastCavityReport,
    PhysicalParams,
    PulseSequence,
    purcell_rate,
    single_spin_coupling,
    validate_fast_cavity,
)
from .presets import PRESETS, Preset, get_preset, preset_names
from .runner import RunResult, run_scenario
from .semiclassical import (
    BlochBins,
    ClosureParts,
    adiabatic_field,
    closure_correlation,
    integrate_mean_field,
    power_sweep,
    seed_tipping,
)
from .spectrum import SpectralDistribution, build_spectral_distribution
from .trajectory import (
    PowerMap,
    Trajectory,
    common_time_grid,
    read_power_map,
    read_trajectory,
    write_power_map,
    write_trajectory,
)
from .units import TWO_PI, angular, ordinary

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # configuration and orchestration
    "Scenario", "load_scenario", "dump_scenario", "scenario_from_dict", "scenario_to_dict",
    "Preset", "PRESETS", "get_preset", "preset_names",
    "RunResult", "run_scenario",
    # physics containers
    "PhysicalParams", "PulseSequence", "purcell_rate", "single_spin_coupling",
    "FastCavityReport", "validate_fast_cavity",
    "SpectralDistribution", "build_spectral_distribution",
    "NVLevelModel", "zeeman_projections", "resonance_fields", "thermal_ground_population",
    # engines
    "HilbertSpec", "Liouvillian", "build_liouvillian", "suggested_n_fock",
    "spin_product_state", "ground_state", "inverted_state", "validate_density",
    "evolve", "drive_then_release",
    "LadderState", "CollectiveGenerator", "build_generator", "evolve_ladder",
    "peak_correlation", "delay_estimate",
    "BlochBins", "ClosureParts", "closure_correlation", "adiabatic_field",
    "seed_tipping", "integrate_mean_field", "power_sweep",
    # traces and analysis
    "Trajectory", "PowerMap", "read_trajectory", "write_trajectory",
    "read_power_map", "write_power_map", "common_time_grid",
    "BurstMetrics", "detect_burst", "emission_metric", "ScalingFit", "fit_scaling",
    "TanhFit", "fit_tanh", "assemble_power_map",
    # errors and units
    "SimulationError", "ValidationError", "CapacityError", "StiffnessError",
    "ClosureInstabilityError", "NoResonanceError", "GridAlignmentError", "FitFailureError",
    "TWO_PI", "angular", "ordinary",
]
