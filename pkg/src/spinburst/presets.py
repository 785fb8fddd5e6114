"""Built-in scenarios.

The three fig* presets are desk-scale versions of the headline experiments
(power staircase, inversion collapse, multiplicity scaling); the remaining
ones are small reference runs used to cross-check the engines against each
other.  Names are part of the CLI contract and stay stable.

All of them share the resonator numbers of the target hardware
(kappa/2pi = 13.8 MHz, collective coupling 3.1 MHz per stacked ensemble)
scaled down to a million spins so a run takes seconds, not hours.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import Scenario

__all__ = ["Preset", "PRESETS", "get_preset", "preset_names"]


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    scenario: Scenario


_BASE_N = 1_000_000
_KAPPA_HZ = 13.8e6
_COLLECTIVE_HZ = 3.1e6
_DRIVE_NS = 50e-9
# amplitude rotating the collective vector by pi in one 50 ns segment:
# the drive tips spins at 4*g*eta/kappa, so eta = kappa/(8*g*t) in Hz units
_ETA_PI_HZ = _KAPPA_HZ / (8.0 * (_COLLECTIVE_HZ / 1000.0) * _DRIVE_NS)

_FIG2 = Scenario(
    engine="semiclassical",
    collective_g_hz=_COLLECTIVE_HZ,
    kappa_hz=_KAPPA_HZ,
    n_spins=_BASE_N,
    pulse_segments=((_DRIVE_NS, 5.6e9), (2.45e-6, 0.0)),
    sweep_amplitudes_hz=tuple(8.0e8 + 6.0e8 * k for k in range(27)),
    n_samples=601,
)

_FIG3 = Scenario(
    engine="semiclassical",
    collective_g_hz=_COLLECTIVE_HZ,
    kappa_hz=_KAPPA_HZ,
    n_spins=_BASE_N,
    pulse_segments=((_DRIVE_NS, 0.95 * _ETA_PI_HZ), (3.0e-6, 0.0)),
    n_samples=1221,
)

_FIG4 = Scenario(
    engine="semiclassical",
    collective_g_hz=_COLLECTIVE_HZ,
    kappa_hz=_KAPPA_HZ,
    n_spins=_BASE_N,
    spectrum_shape="gaussian",
    spectrum_fwhm_hz=2.7e6,
    spectrum_n_bins=45,
    initial_state="inverted",
    tipping_policy="deterministic",
    sweep_multiplicities=(1, 2, 3, 4),
    misalignment_hz=3.6e6,
    t_end_s=4.0e-6,
    n_samples=1601,
)

_LADDER_SCALING = Scenario(
    engine="dicke",
    g_hz=1.0e3,
    kappa_hz=1.0e6,
    n_spins=64,
    initial_state="inverted",
    sweep_multiplicities=(1, 2, 4, 8),
    t_end_s=6.0e-3,
    n_samples=2401,
    tolerance=1.0e-10,
)

_ORACLE_N3 = Scenario(
    engine="exact",
    g_hz=1.0e4,
    kappa_hz=1.0e6,
    n_spins=3,
    initial_state="inverted",
    t_end_s=3.0e-3,
    n_samples=301,
    n_fock=4,
)

_PURCELL_SINGLE = Scenario(
    engine="exact",
    g_hz=1.0e3,
    kappa_hz=1.0e6,
    n_spins=1,
    initial_state="inverted",
    t_end_s=2.0e-2,
    n_samples=201,
    n_fock=3,
    tolerance=1.0e-10,
)

PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset(
            "fig2",
            "Power staircase: 50 ns drive at swept amplitude, then release; "
            "intensity map with emission threshold and delay ridge.",
            _FIG2,
        ),
        Preset(
            "fig3",
            "Near-complete inversion by a 50 ns pulse followed by a delayed "
            "emission burst; hyperbolic-tangent fit of the inversion collapse.",
            _FIG3,
        ),
        Preset(
            "fig4",
            "Peak emitted intensity vs number of stacked sub-ensembles (1-4) "
            "with inhomogeneous broadening and mutual misalignment; scaling fit.",
            _FIG4,
        ),
        Preset(
            "ladder-scaling",
            "Collective-ladder decay for N = 64..512 without dephasing; "
            "peak-intensity scaling fit against the quadratic ideal.",
            _LADDER_SCALING,
        ),
        Preset(
            "oracle-n3",
            "Full quantum reference: three spins in a fast resonator from an "
            "inverted start; cross-check target for the ladder engine.",
            _ORACLE_N3,
        ),
        Preset(
            "purcell-single",
            "Single spin decaying at the resonator-enhanced rate; reference "
            "for the 4g^2/kappa limit.",
            _PURCELL_SINGLE,
        ),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; available: {known}") from None


def preset_names() -> tuple[str, ...]:
    return tuple(PRESETS)
