"""Core parameter types: ensemble/resonator rates and drive pulses.

Everything here is in angular units (rad/s); see :mod:`spinburst.units`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError

__all__ = [
    "PhysicalParams",
    "PulseSequence",
    "FastCavityReport",
    "purcell_rate",
    "validate_fast_cavity",
    "single_spin_coupling",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Rates describing one spin ensemble coupled to one lossy resonator.

    Attributes
    ----------
    g : float
        Single-spin coupling rate (rad/s).
    kappa : float
        Resonator energy decay rate = FWHM of the resonator line (rad/s).
        The photon lifetime is ``1/kappa``.
    kappa_out : float
        Fraction of the resonator decay routed to the detection port,
        dimensionless in [0, 1].
    gamma_perp : float
        Transverse (coherence) decay rate of a single spin (rad/s).  For a
        spin line of FWHM ``w`` this is ``w/2``.
    gamma_par : float
        Longitudinal relaxation coefficient (rad/s), in the convention where
        the excited-state population decays at twice this rate.
    delta_c : float
        Resonator-drive detuning (rad/s).
    n_spins : int
        Number of spins represented by the ensemble (>= 1).
    temperature : float | None
        Bath temperature in kelvin, used only for thermal book-keeping.
    """

    g: float
    kappa: float
    kappa_out: float = 1.0
    gamma_perp: float = 0.0
    gamma_par: float = 0.0
    delta_c: float = 0.0
    n_spins: int = 1
    temperature: float | None = None

    def __post_init__(self):
        for name in ("g", "kappa", "gamma_perp", "gamma_par"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
        if self.kappa <= 0.0:
            raise ValidationError(f"kappa must be > 0, got {self.kappa!r}")
        if not 0.0 <= self.kappa_out <= 1.0:
            raise ValidationError(f"kappa_out must lie in [0, 1], got {self.kappa_out!r}")
        if not math.isfinite(self.delta_c):
            raise ValidationError(f"delta_c must be finite, got {self.delta_c!r}")
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValidationError(f"n_spins must be an integer >= 1, got {self.n_spins!r}")

    @property
    def collective_coupling(self) -> float:
        """Collective coupling sqrt(N) * g (rad/s)."""
        return math.sqrt(self.n_spins) * self.g

    @property
    def purcell(self) -> float:
        """Single-spin cavity-mediated decay rate 4 g^2 / kappa (rad/s)."""
        return purcell_rate(self.g, self.kappa)


def purcell_rate(g: float, kappa: float) -> float:
    """Cavity-mediated single-spin decay rate ``4 g**2 / kappa``.

    ``kappa`` follows the FWHM (energy decay) convention.  With the linewidth
    convention fixed this way, g/2pi = 72 mHz and kappa/2pi = 13.8 MHz give
    1.50e-9 Hz; quoting the same quantity with a half-width convention for
    kappa would halve it.
    """
    if kappa == 0.0:
        raise ValidationError("purcell_rate is singular at kappa = 0")
    if kappa < 0.0 or g < 0.0:
        raise ValidationError(f"rates must be >= 0, got g={g!r}, kappa={kappa!r}")
    return 4.0 * g * g / kappa


def single_spin_coupling(collective: float, n_spins: int) -> float:
    """Derive the per-spin coupling from a collective coupling sqrt(N)*g.

    This is the desk-scale rescaling convention: simulations state the spin
    number N and the collective coupling; the per-spin g follows.  Both
    sqrt(N)*g and N * (4 g^2 / kappa) are preserved when trading N against g.
    """
    if n_spins < 1:
        raise ValidationError(f"n_spins must be >= 1, got {n_spins!r}")
    if collective < 0.0 or not math.isfinite(collective):
        raise ValidationError(f"collective coupling must be finite and >= 0, got {collective!r}")
    return collective / math.sqrt(n_spins)


@dataclass(frozen=True)
class FastCavityReport:
    """Result of the timescale-hierarchy check kappa >> everything else.

    ``margins`` maps each competing rate to kappa / rate (inf for zero
    rates); ``passed`` is true iff every margin exceeds one.
    """

    margins: dict[str, float]
    passed: bool

    @property
    def smallest_margin(self) -> float:
        return min(self.margins.values())

    def __str__(self) -> str:  # human-readable one-liner per rate
        rows = ", ".join(f"{k}: {v:.3g}" for k, v in self.margins.items())
        verdict = "pass" if self.passed else "FAIL"
        return f"fast-cavity check [{verdict}] ({rows})"


def validate_fast_cavity(
    params: PhysicalParams,
    collective_coupling: float | None = None,
    rabi_rate: float = 0.0,
) -> FastCavityReport:
    """Check the separation of timescales that justifies eliminating the field.

    The resonator must decay faster than every spin rate: the collective
    coupling sqrt(N)*g, the drive-induced rotation rate, and both decoherence
    rates.  Returns a report, never raises for a failed hierarchy; raises
    only for non-finite inputs.
    """
    if collective_coupling is None:
        collective_coupling = params.collective_coupling
    for name, value in (("collective_coupling", collective_coupling), ("rabi_rate", rabi_rate)):
        if not math.isfinite(value) or value < 0.0:
            raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")

    competitors = {
        "collective_coupling": collective_coupling,
        "rabi_rate": rabi_rate,
        "gamma_perp": params.gamma_perp,
        "gamma_par": params.gamma_par,
    }
    margins = {
        name: (math.inf if rate == 0.0 else params.kappa / rate)
        for name, rate in competitors.items()
    }
    return FastCavityReport(margins=margins, passed=all(m > 1.0 for m in margins.values()))


@dataclass(frozen=True)
class PulseSequence:
    """Ordered piecewise-constant drive segments ``(duration, eta)``.

    ``eta`` is the resonator drive amplitude (rad/s); durations are seconds
    and strictly positive.
    """

    segments: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        cleaned = []
        for i, seg in enumerate(self.segments):
            try:
                duration, eta = seg
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"segment {i} must be a (duration, eta) pair: {seg!r}") from exc
            duration = float(duration)
            eta = float(eta)
            if not math.isfinite(duration) or duration <= 0.0:
                raise ValidationError(f"segment {i} duration must be > 0, got {duration!r}")
            if not math.isfinite(eta):
                raise ValidationError(f"segment {i} amplitude must be finite, got {eta!r}")
            cleaned.append((duration, eta))
        object.__setattr__(self, "segments", tuple(cleaned))

    @classmethod
    def constant(cls, duration: float, eta: float) -> "PulseSequence":
        return cls(((duration, eta),))

    @classmethod
    def drive_then_free(cls, t_drive: float, eta: float, t_free: float) -> "PulseSequence":
        """A rectangular drive followed by free evolution."""
        return cls(((t_drive, eta), (t_free, 0.0)))

    @property
    def total_duration(self) -> float:
        return sum(d for d, _ in self.segments)

    def boundaries(self) -> tuple[float, ...]:
        """Cumulative segment end times, starting after the first segment."""
        times = []
        t = 0.0
        for duration, _ in self.segments:
            t += duration
            times.append(t)
        return tuple(times)

    def drive_off_time(self) -> float:
        """End of the last segment with non-zero amplitude (0.0 if none)."""
        t = 0.0
        t_off = 0.0
        for duration, eta in self.segments:
            t += duration
            if eta != 0.0:
                t_off = t
        return t_off

    def peak_amplitude(self) -> float:
        return max((abs(eta) for _, eta in self.segments), default=0.0)
