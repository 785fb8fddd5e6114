"""Mean-field dynamics of a binned, inhomogeneously broadened ensemble.

After eliminating the fast resonator (adot = 0, resonant drive) each spin
sees the adiabatic field

    A = (2 / kappa) * (eta + g * sum_k N w_k <sigma_->_k),

and a bin with detuning Delta_k follows Bloch equations driven by the two
field quadratures A1 = (2/kappa)(eta + g Y) and A2 = (2 g / kappa) X, where
X = <S_x>, Y = <S_y>:

    dx_k = -Delta_k y_k + 2 g A2 z_k - gt x_k
    dy_k = +Delta_k x_k + 2 g A1 z_k - gt y_k
    dz_k = -2 g (A1 y_k + A2 x_k) - purcell (1 + z_k) - gamma_par (z_k + 2)

with gt = gamma_perp + gamma_par + purcell / 2.  The Bloch components are
stored in the frame of the drive, so summing the bins reproduces exactly

    d<S_z>/dt = -(4 g eta / kappa) <S_y> - gamma_par (<S_z> + N)
                - purcell * closure,
    closure   = |sum_k N w_k <sigma_->_k|^2 + sum_k N w_k (1 + <z>_k) / 2,

i.e. the collective inversion equation with the first-order correlation
closure: an interference term of order N^2 plus an incoherent excitation
term of order N (the diagonal resonator-mediated decay of each spin).  In
this frame the complex field amplitude is reported as A1 + i A2.

With zero transverse component the coherent field vanishes identically, so
an untipped inverted ensemble never self-starts a burst -- it only leaks
through the incoherent per-spin channel, z(t) = -1 + 2 exp(-purcell t).
Bursts must be seeded with a tipping angle (default theta = 2 / sqrt(N),
the size of the quantum uncertainty cone).  Costs scale with the bin count,
not N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ClosureInstabilityError, StiffnessError, ValidationError
from .params import PhysicalParams, PulseSequence
from .spectrum import SpectralDistribution
from .trajectory import PowerMap, Trajectory

__all__ = [
    "BlochBins",
    "integrate_mean_field",
    "closure_correlation",
    "ClosureParts",
    "adiabatic_field",
    "seed_tipping",
    "power_sweep",
]

NORM_TOL = 1e-9  # construction-time norm slack
NORM_BLOWUP = 1e-6  # integration-time instability threshold


@dataclass
class BlochBins:
    """Per-bin Bloch vectors (x, y, z) with weights and detunings.

    ``n_spins`` is the physical spin number represented by the whole set;
    each bin stands for ``n_spins * weight`` identical spins.
    """

    weights: np.ndarray
    detunings: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    n_spins: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        for name in ("detunings", "x", "y", "z"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != w.shape:
                raise ValidationError(f"{name} must match weights, got {arr.shape} vs {w.shape}")
            setattr(self, name, arr)
        if w.ndim != 1 or w.size == 0 or np.any(w <= 0.0):
            raise ValidationError("weights must be a non-empty 1-d array of positive values")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights must sum to 1 within 1e-12, got {w.sum()!r}")
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValidationError(f"n_spins must be an integer >= 1, got {self.n_spins!r}")
        self.weights = w
        norms = self.norms()
        if np.any(norms > 1.0 + NORM_TOL):
            raise ValidationError(f"Bloch norms must stay <= 1, largest is {norms.max()!r}")

    def norms(self) -> np.ndarray:
        return np.sqrt(self.x**2 + self.y**2 + self.z**2)

    @property
    def n_bins(self) -> int:
        return self.weights.size

    @classmethod
    def from_distribution(
        cls,
        dist: SpectralDistribution,
        n_spins: int,
        state: str = "ground",
        tipping: tuple[float, float] | None = None,
    ) -> "BlochBins":
        """All bins in a common product state: ground, or inverted (optionally
        tipped by (theta, phi) towards the transverse plane)."""
        k = dist.n_bins
        if state == "ground":
            x = np.zeros(k)
            y = np.zeros(k)
            z = -np.ones(k)
            if tipping is not None:
                raise ValidationError("tipping only applies to the inverted state")
        elif state == "inverted":
            theta, phi = tipping if tipping is not None else (0.0, 0.0)
            x = np.full(k, math.sin(theta) * math.cos(phi))
            y = np.full(k, math.sin(theta) * math.sin(phi))
            z = np.full(k, math.cos(theta))
        else:
            raise ValidationError(f"unknown initial state {state!r}")
        return cls(
            weights=dist.weights.copy(),
            detunings=dist.detunings.copy(),
            x=x,
            y=y,
            z=z,
            n_spins=n_spins,
        )


@dataclass(frozen=True)
class ClosureParts:
    """<S+S-> under the first-order closure, split into its two scales."""

    total: float
    interference: float  # |sum N w <sigma_->|^2, up to N^2/4
    excitation: float  # sum N w (1+z)/2, up to N

    def __float__(self) -> float:
        return self.total


def _collective_xyz(bins: BlochBins) -> tuple[float, float, float]:
    half_n = 0.5 * bins.n_spins
    return (
        half_n * float(bins.weights @ bins.x),
        half_n * float(bins.weights @ bins.y),
        half_n * float(bins.weights @ bins.z),
    )


def closure_correlation(bins: BlochBins) -> ClosureParts:
    """Evaluate the closed <S+S-> for the current bin state."""
    sx, sy, sz = _collective_xyz(bins)
    interference = sx * sx + sy * sy
    excitation = 0.5 * bins.n_spins + sz
    return ClosureParts(
        total=interference + excitation, interference=interference, excitation=excitation
    )


def adiabatic_field(bins: BlochBins, params: PhysicalParams, eta: float = 0.0) -> complex:
    """Eliminated-resonator amplitude for the current spin state (drive frame)."""
    sx, sy, _ = _collective_xyz(bins)
    a1 = (2.0 / params.kappa) * (eta + params.g * sy)
    a2 = (2.0 * params.g / params.kappa) * sx
    return complex(a1, a2)


def seed_tipping(
    n_spins: int,
    policy: str = "deterministic",
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Initial tipping angle (theta, phi) seeding a burst from inversion.

    ``deterministic`` returns the quantum-cone width theta = 2/sqrt(N) at
    phi = 0.  ``stochastic`` samples theta from the vacuum-fluctuation
    distribution P(theta) ~ theta exp(-N theta^2 / 4) with uniform phase and
    requires a seeded generator.
    """
    if int(n_spins) != n_spins or n_spins < 1:
        raise ValidationError(f"n_spins must be an integer >= 1, got {n_spins!r}")
    if policy == "deterministic":
        return 2.0 / math.sqrt(n_spins), 0.0
    if policy == "stochastic":
        if rng is None:
            raise ValidationError("stochastic tipping requires a seeded random generator")
        theta = math.sqrt(-4.0 * math.log(1.0 - rng.random()) / n_spins)
        phi = 2.0 * math.pi * rng.random()
        return theta, phi
    if policy == "none":
        return 0.0, 0.0
    raise ValidationError(f"unknown tipping policy {policy!r}")


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def _segment_rhs(params: PhysicalParams, detunings: np.ndarray, weights: np.ndarray,
                 n_spins: int, eta: float):
    g = params.g
    kappa = params.kappa
    purcell = params.purcell
    gamma_t = params.gamma_perp + params.gamma_par + 0.5 * purcell
    gamma_par = params.gamma_par
    half_n = 0.5 * n_spins
    k_out = params.kappa_out
    k = weights.size

    def rhs(_t, state):
        x = state[:k]
        y = state[k : 2 * k]
        z = state[2 * k : 3 * k]
        sx = half_n * (weights @ x)
        sy = half_n * (weights @ y)
        a1 = (2.0 / kappa) * (eta + g * sy)
        a2 = (2.0 * g / kappa) * sx
        dx = -detunings * y + 2.0 * g * a2 * z - gamma_t * x
        dy = detunings * x + 2.0 * g * a1 * z - gamma_t * y
        dz = (
            -2.0 * g * (a1 * y + a2 * x)
            - purcell * (1.0 + z)
            - gamma_par * (z + 2.0)
        )
        # detected rate: coherent output + diagonal resonator-mediated channel
        n_exc = half_n * (weights @ (1.0 + z))
        demitted = k_out * (kappa * (a1 * a1 + a2 * a2) + purcell * n_exc)
        return np.concatenate([dx, dy, dz, [demitted]])

    return rhs


def integrate_mean_field(
    bins: BlochBins,
    params: PhysicalParams,
    pulse: PulseSequence,
    times: np.ndarray,
    tolerance: float = 1e-9,
    method: str = "RK45",
) -> Trajectory:
    """Integrate the binned Bloch equations through a drive sequence.

    Samples fall on the supplied grid with segment boundaries inserted.  The
    trajectory reports <S_z>, the closed <S+S->, the adiabatic photon number
    |A|^2 + purcell * n_exc / kappa, the complex field A and the detected
    intensity.  Aborts with a closure-instability error if any Bloch norm
    exceeds 1 + 1e-6 (the first-order closure has then left its domain).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0.0):
        raise ValidationError("times must be a strictly increasing 1-d grid")
    if abs(times[0]) > 0.0:
        raise ValidationError("drive sequences start at t = 0")
    if times[-1] > pulse.total_duration * (1.0 + 1e-12):
        raise ValidationError(
            f"grid extends to {times[-1]!r} s beyond the pulse total {pulse.total_duration!r} s"
        )
    if bins.n_spins != params.n_spins:
        raise ValidationError(
            f"bins represent {bins.n_spins} spins but params declare {params.n_spins}"
        )
    if params.delta_c != 0.0:
        raise ValidationError(
            "the adiabatic elimination here assumes a resonant drive (delta_c = 0); "
            "use the exact engine for detuned resonators"
        )

    k = bins.n_bins
    state = np.concatenate([bins.x, bins.y, bins.z, [0.0]])
    t_start = 0.0
    all_t: list[np.ndarray] = []
    all_y: list[np.ndarray] = []
    etas: list[np.ndarray] = []
    for (duration, eta), t_end in zip(pulse.segments, pulse.boundaries()):
        rhs = _segment_rhs(params, bins.detunings, bins.weights, bins.n_spins, eta)
        inside = times[(times > t_start + 1e-18) & (times < t_end - 1e-18)]
        seg_times = np.unique(np.concatenate([[t_start], inside, [t_end]]))
        sol = integrate.solve_ivp(
            rhs,
            (t_start, t_end),
            state,
            t_eval=seg_times,
            method=method,
            rtol=tolerance,
            atol=tolerance * 1e-3,
        )
        if not sol.success:
            t_reached = float(sol.t[-1]) if sol.t.size else t_start
            raise StiffnessError(
                f"mean-field integration ({method}) failed at t = {t_reached:.6e} s "
                f"({sol.message})",
                t_reached=t_reached,
                min_step=float(np.spacing(t_reached)),
            )
        state = sol.y[:, -1].copy()
        offset = 0 if not all_t else 1  # drop duplicated boundary sample
        all_t.append(sol.t[offset:])
        all_y.append(sol.y[:, offset:])
        etas.append(np.full(sol.t.size - offset, eta))
        t_start = t_end

    t = np.concatenate(all_t)
    y = np.concatenate(all_y, axis=1)
    eta_t = np.concatenate(etas)

    x = y[:k]
    yy = y[k : 2 * k]
    z = y[2 * k : 3 * k]
    norms = np.sqrt(x**2 + yy**2 + z**2)
    worst = float(norms.max())
    if worst > 1.0 + NORM_BLOWUP:
        first_bad = int(np.argmax((norms > 1.0 + NORM_BLOWUP).any(axis=0)))
        raise ClosureInstabilityError(
            f"Bloch norm reached {worst:.9f} at t = {t[first_bad]:.6e} s; the "
            "mean-field closure is no longer trustworthy for these parameters",
            t_reached=float(t[first_bad]),
            max_norm=worst,
        )

    w = bins.weights
    half_n = 0.5 * bins.n_spins
    sx = half_n * (w @ x)
    sy = half_n * (w @ yy)
    sz = half_n * (w @ z)
    a1 = (2.0 / params.kappa) * (eta_t + params.g * sy)
    a2 = (2.0 * params.g / params.kappa) * sx
    n_exc = half_n + sz
    interference = sx**2 + sy**2
    photons = a1**2 + a2**2 + params.purcell * n_exc / params.kappa
    final_bins = BlochBins(
        weights=bins.weights.copy(),
        detunings=bins.detunings.copy(),
        x=x[:, -1].copy(),
        y=yy[:, -1].copy(),
        z=z[:, -1].copy(),
        n_spins=bins.n_spins,
    )
    return Trajectory(
        times=t,
        s_z=sz,
        spsm=interference + n_exc,
        photons=photons,
        field=a1 + 1j * a2,
        intensity=params.kappa_out * params.kappa * photons,
        emitted=y[3 * k],
        segment_boundaries=pulse.boundaries(),
        meta={
            "engine": "semiclassical",
            "solver": {"method": method, "tolerance": tolerance},
            "n_bins": k,
            "n_spins": bins.n_spins,
            "drive_off_time": pulse.drive_off_time(),
            "max_bloch_norm": worst,
            "_final_bins": final_bins,
        },
    )


def power_sweep(
    bins: BlochBins,
    params: PhysicalParams,
    t_drive: float,
    t_free: float,
    amplitudes,
    n_samples: int = 601,
    tolerance: float = 1e-9,
    method: str = "RK45",
) -> PowerMap:
    """Drive-then-release runs over a grid of drive amplitudes.

    Every amplitude reuses the same initial bins and time grid; the map
    stores |A|^2(t) per column, the post-pulse inversion per amplitude, and
    the amplitude that maximises it (the inversion threshold).  Amplitudes
    are reported in native drive units (rad/s); solver errors are re-raised
    annotated with the failing amplitude.
    """
    amplitudes = np.sort(np.asarray(amplitudes, dtype=float))
    if amplitudes.size < 1 or np.any(~np.isfinite(amplitudes)) or np.any(amplitudes < 0.0):
        raise ValidationError("amplitudes must be finite and >= 0")
    if np.any(np.diff(amplitudes) == 0.0):
        raise ValidationError("amplitudes must be distinct")
    times = np.linspace(0.0, t_drive + t_free, n_samples)

    columns = []
    s_z_final = []
    trajectories = []
    for eta in amplitudes:
        pulse = PulseSequence.drive_then_free(t_drive, eta, t_free)
        try:
            traj = integrate_mean_field(
                bins, params, pulse, times, tolerance=tolerance, method=method
            )
        except Exception as exc:
            note = f"power sweep failed at amplitude eta = {eta!r} rad/s"
            exc.args = (f"{note}: {exc.args[0]}",) + exc.args[1:] if exc.args else (note,)
            raise
        columns.append(np.abs(traj.field) ** 2)
        idx_off = int(np.searchsorted(traj.times, t_drive))
        s_z_final.append(traj.s_z[idx_off])
        trajectories.append(traj)

    s_z_final = np.asarray(s_z_final)
    threshold = float(amplitudes[int(np.argmax(s_z_final))])
    pmap = PowerMap(
        times=trajectories[0].times,
        amplitudes=amplitudes,
        intensity=np.column_stack(columns),
        s_z_final=s_z_final,
        threshold_amplitude=threshold,
        meta={
            "engine": "semiclassical",
            "drive_duration": t_drive,
            "free_duration": t_free,
            "n_spins": bins.n_spins,
            "n_bins": bins.n_bins,
        },
    )
    pmap.meta["_trajectories"] = trajectories  # in-memory handle, never serialized
    return pmap
