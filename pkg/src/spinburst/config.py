"""Scenario schema: YAML configs in lab units, engines in angular units.

A scenario stores exactly what the config file says (Hz, seconds, kelvin);
the 2*pi conversions happen in the ``to_*`` builders.  This keeps the
emit -> parse round trip bit-exact.

Schema (all frequencies in Hz, durations in seconds)::

    engine: exact | dicke | semiclassical
    seed: 1234                  # required for stochastic tipping
    output: runs/my-scenario    # optional default output directory
    params:
      collective_g_hz: 3.1e6    # sqrt(N)*g of one base ensemble, or
      g_hz: 72e-3               #   the per-spin coupling (exactly one of the two)
      kappa_hz: 13.8e6          # resonator FWHM (energy decay rate)
      kappa_out: 1.0            # detected fraction of the resonator decay
      gamma_perp_fwhm_hz: 0.0   # spin line FWHM; coherence rate is half of it
      gamma_par_hz: 0.0
      delta_c_hz: 0.0
      n_spins: 1000000
      temperature_k: null
    pulse:
      segments: [[50.0e-9, 2.0e7], [1.5e-6, 0.0]]   # [duration_s, eta_hz]
    spectrum:
      shape: gaussian | lorentzian | hyperfine | none
      fwhm_hz: 2.7e6
      n_bins: 101
      hyperfine_splitting_hz: 2.3e6
    initial:
      state: ground | inverted
      tipping: none | deterministic | stochastic
    sweep:
      amplitudes_hz: [...]      # drive-power sweep (semiclassical / exact)
      multiplicities: [1, 2, 3, 4]   # ensemble-size sweep: N -> m * n_spins
      misalignment_hz: 0.0      # detuning spread between stacked sub-ensembles
    grid:
      t_end_s: null             # defaults to the pulse duration
      n_samples: 801
    solver:
      tolerance: 1.0e-9
      method: auto              # auto | RK45 | BDF (auto lets each engine pick)
    exact:
      n_fock: null              # defaults to the driven coherent estimate
      max_dim: 4096
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from .errors import ValidationError
from .params import PhysicalParams, PulseSequence, single_spin_coupling
from .spectrum import SpectralDistribution, build_spectral_distribution
from .units import TWO_PI

__all__ = ["Scenario", "load_scenario", "dump_scenario", "scenario_from_dict", "scenario_to_dict"]

ENGINES = ("exact", "dicke", "semiclassical")


@dataclass(frozen=True)
class Scenario:
    """One validated run request, in config (lab) units."""

    engine: str
    kappa_hz: float
    n_spins: int
    g_hz: float | None = None
    collective_g_hz: float | None = None
    kappa_out: float = 1.0
    gamma_perp_fwhm_hz: float = 0.0
    gamma_par_hz: float = 0.0
    delta_c_hz: float = 0.0
    temperature_k: float | None = None
    pulse_segments: tuple[tuple[float, float], ...] = ()
    spectrum_shape: str = "none"
    spectrum_fwhm_hz: float = 0.0
    spectrum_n_bins: int = 101
    hyperfine_splitting_hz: float = 2.3e6
    initial_state: str = "ground"
    tipping_policy: str = "none"
    sweep_amplitudes_hz: tuple[float, ...] = ()
    sweep_multiplicities: tuple[int, ...] = ()
    misalignment_hz: float = 0.0
    t_end_s: float | None = None
    n_samples: int = 801
    tolerance: float = 1e-9
    method: str = "auto"
    n_fock: int | None = None
    max_dim: int = 4096
    seed: int | None = None
    output: str | None = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValidationError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if (self.g_hz is None) == (self.collective_g_hz is None):
            raise ValidationError(
                "exactly one of params.g_hz and params.collective_g_hz must be given"
            )
        if self.initial_state not in ("ground", "inverted"):
            raise ValidationError(f"initial.state must be ground or inverted, got {self.initial_state!r}")
        if self.tipping_policy not in ("none", "deterministic", "stochastic"):
            raise ValidationError(f"unknown tipping policy {self.tipping_policy!r}")
        if self.tipping_policy == "stochastic" and self.seed is None:
            raise ValidationError("stochastic tipping requires an explicit seed")
        if self.engine == "dicke":
            if any(eta != 0.0 for _, eta in self.pulse_segments):
                raise ValidationError(
                    "the ladder engine has no drive term; dicke scenarios must not pulse"
                )
            if self.sweep_amplitudes_hz:
                raise ValidationError("the ladder engine cannot sweep drive amplitudes")
        if self.engine != "exact" and self.delta_c_hz != 0.0:
            raise ValidationError("delta_c is only meaningful for the exact engine")
        if self.sweep_amplitudes_hz and self.sweep_multiplicities:
            raise ValidationError("sweep either amplitudes or multiplicities, not both")
        if self.sweep_amplitudes_hz and not any(eta != 0.0 for _, eta in self.pulse_segments):
            raise ValidationError("an amplitude sweep needs a driven pulse segment to scale")
        if any(int(m) != m or m < 1 for m in self.sweep_multiplicities):
            raise ValidationError("multiplicities must be integers >= 1")
        if self.misalignment_hz and not self.sweep_multiplicities:
            raise ValidationError("misalignment_hz only applies to multiplicity sweeps")
        if self.engine != "semiclassical" and self.tipping_policy != "none":
            raise ValidationError("tipping seeds only apply to the semiclassical engine")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ValidationError(f"n_samples must be an integer >= 2, got {self.n_samples!r}")
        if not (0.0 < self.tolerance < 1e-2):
            raise ValidationError(f"tolerance must lie in (0, 1e-2), got {self.tolerance!r}")
        if self.method not in ("auto", "RK45", "BDF"):
            raise ValidationError(f"solver.method must be auto, RK45 or BDF, got {self.method!r}")
        for name in ("kappa_hz", "gamma_perp_fwhm_hz", "gamma_par_hz", "spectrum_fwhm_hz",
                     "misalignment_hz"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
        # delegate the remaining range checks
        self.to_params()
        self.to_pulse()

    # -- builders (lab units -> angular) ---------------------------------

    def base_g_hz(self) -> float:
        if self.g_hz is not None:
            return self.g_hz
        return single_spin_coupling(self.collective_g_hz, self.n_spins)

    def to_params(self, multiplicity: int = 1) -> PhysicalParams:
        """Angular-unit parameters for ``multiplicity`` copies of the ensemble."""
        return PhysicalParams(
            g=TWO_PI * self.base_g_hz(),
            kappa=TWO_PI * self.kappa_hz,
            kappa_out=self.kappa_out,
            gamma_perp=0.5 * TWO_PI * self.gamma_perp_fwhm_hz,  # FWHM -> coherence rate
            gamma_par=TWO_PI * self.gamma_par_hz,
            delta_c=TWO_PI * self.delta_c_hz,
            n_spins=int(self.n_spins * multiplicity),
            temperature=self.temperature_k,
        )

    def to_pulse(self, eta_hz: float | None = None) -> PulseSequence:
        """Pulse in angular units; optionally rescale the driven segments.

        ``eta_hz`` replaces the amplitude of every non-zero segment — this is
        how sweep amplitudes are applied.
        """
        if not self.pulse_segments:
            if self.t_end_s is None:
                raise ValidationError("scenario needs either pulse segments or grid.t_end_s")
            return PulseSequence.constant(self.t_end_s, 0.0)
        segments = []
        for duration, amp_hz in self.pulse_segments:
            if eta_hz is not None and amp_hz != 0.0:
                amp_hz = eta_hz
            segments.append((duration, TWO_PI * amp_hz))
        return PulseSequence(tuple(segments))

    def to_distribution(self, multiplicity: int = 1) -> SpectralDistribution:
        """Spin-detuning distribution for ``multiplicity`` stacked ensembles.

        Each additional ensemble is the same line offset by the misalignment
        spacing, with the offsets centred so the aggregate stays symmetric.
        """
        if self.spectrum_shape == "none" or self.spectrum_fwhm_hz == 0.0:
            base = SpectralDistribution(np.zeros(1), np.ones(1), shape="none", fwhm=0.0)
        else:
            base = build_spectral_distribution(
                self.spectrum_shape,
                TWO_PI * self.spectrum_fwhm_hz,
                self.spectrum_n_bins,
                hyperfine_splitting=TWO_PI * self.hyperfine_splitting_hz,
            )
        if multiplicity == 1 or self.misalignment_hz == 0.0:
            return base
        spacing = TWO_PI * self.misalignment_hz
        offsets = (np.arange(multiplicity) - (multiplicity - 1) / 2.0) * spacing
        detunings = np.concatenate([base.detunings + off for off in offsets])
        weights = np.tile(base.weights / multiplicity, multiplicity)
        order = np.argsort(detunings, kind="stable")
        return SpectralDistribution(
            detunings[order], weights[order], shape=base.shape, fwhm=base.fwhm
        )

    def time_grid(self) -> np.ndarray:
        end = self.t_end_s if self.t_end_s is not None else self.to_pulse().total_duration
        if not (math.isfinite(end) and end > 0.0):
            raise ValidationError(f"grid end must be finite and > 0, got {end!r}")
        return np.linspace(0.0, end, int(self.n_samples))


# ---------------------------------------------------------------------------
# dict / YAML forms
# ---------------------------------------------------------------------------

_SECTIONS = {
    "params": {
        "g_hz": "g_hz",
        "collective_g_hz": "collective_g_hz",
        "kappa_hz": "kappa_hz",
        "kappa_out": "kappa_out",
        "gamma_perp_fwhm_hz": "gamma_perp_fwhm_hz",
        "gamma_par_hz": "gamma_par_hz",
        "delta_c_hz": "delta_c_hz",
        "n_spins": "n_spins",
        "temperature_k": "temperature_k",
    },
    "spectrum": {
        "shape": "spectrum_shape",
        "fwhm_hz": "spectrum_fwhm_hz",
        "n_bins": "spectrum_n_bins",
        "hyperfine_splitting_hz": "hyperfine_splitting_hz",
    },
    "initial": {"state": "initial_state", "tipping": "tipping_policy"},
    "sweep": {
        "amplitudes_hz": "sweep_amplitudes_hz",
        "multiplicities": "sweep_multiplicities",
        "misalignment_hz": "misalignment_hz",
    },
    "grid": {"t_end_s": "t_end_s", "n_samples": "n_samples"},
    "solver": {"tolerance": "tolerance", "method": "method"},
    "exact": {"n_fock": "n_fock", "max_dim": "max_dim"},
}
_TOP_LEVEL = ("engine", "seed", "output")


def scenario_from_dict(data: dict) -> Scenario:
    """Build and validate a scenario, rejecting unknown keys loudly."""
    if not isinstance(data, dict):
        raise ValidationError(f"config root must be a mapping, got {type(data).__name__}")
    kwargs = {}
    seen = set()
    for key in _TOP_LEVEL:
        if key in data:
            kwargs[key] = data[key]
            seen.add(key)
    for section, mapping in _SECTIONS.items():
        if section not in data:
            continue
        seen.add(section)
        block = data[section]
        if block is None:
            continue
        if not isinstance(block, dict):
            raise ValidationError(f"section {section!r} must be a mapping")
        for key, value in block.items():
            if key not in mapping:
                raise ValidationError(f"unknown key {section}.{key!r} in config")
            kwargs[mapping[key]] = value
    if "pulse" in data:
        seen.add("pulse")
        block = data["pulse"] or {}
        unknown = set(block) - {"segments"}
        if unknown:
            raise ValidationError(f"unknown key pulse.{unknown.pop()!r} in config")
        segments = block.get("segments") or []
        try:
            kwargs["pulse_segments"] = tuple((float(d), float(a)) for d, a in segments)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"pulse.segments must be [duration_s, eta_hz] pairs: {exc}")
    unknown = set(data) - seen
    if unknown:
        raise ValidationError(f"unknown top-level config keys: {sorted(unknown)}")

    for name in ("sweep_amplitudes_hz",):
        if name in kwargs and kwargs[name] is not None:
            kwargs[name] = tuple(float(v) for v in kwargs[name])
    for name in ("sweep_multiplicities",):
        if name in kwargs and kwargs[name] is not None:
            kwargs[name] = tuple(int(v) for v in kwargs[name])
    try:
        return Scenario(**{k: v for k, v in kwargs.items() if v is not None})
    except TypeError as exc:
        raise ValidationError(f"invalid config: {exc}") from exc


def scenario_to_dict(scenario: Scenario) -> dict:
    """Inverse of :func:`scenario_from_dict`; drops defaults, keeps lab units."""
    defaults = {f.name: f.default for f in fields(Scenario)}
    out: dict = {"engine": scenario.engine}
    if scenario.seed is not None:
        out["seed"] = scenario.seed
    if scenario.output is not None:
        out["output"] = scenario.output
    for section, mapping in _SECTIONS.items():
        block = {}
        for key, attr in mapping.items():
            value = getattr(scenario, attr)
            if value is None or value == defaults[attr]:
                continue
            if isinstance(value, tuple):
                value = list(value)
            block[key] = value
        if block:
            out[section] = block
    if scenario.pulse_segments:
        out["pulse"] = {"segments": [[d, a] for d, a in scenario.pulse_segments]}
    return out


def load_scenario(path: str | Path) -> Scenario:
    with open(path) as handle:
        try:
            data = yaml.safe_load(handle)
        except yaml.YAMLError as exc:
            raise ValidationError(f"config {path} is not valid YAML: {exc}") from exc
    return scenario_from_dict(data)


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(scenario), sort_keys=True, default_flow_style=False)
