"""Burst detection, scaling fits and inversion-decay fits.

Everything here is deterministic: no randomness, fixed initialisers, and a
fit iteration log so monotone convergence can be asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitFailureError, ValidationError
from .trajectory import PowerMap, Trajectory, common_time_grid

__all__ = [
    "BurstMetrics",
    "ScalingFit",
    "TanhFit",
    "detect_burst",
    "emission_metric",
    "fit_scaling",
    "fit_tanh",
    "assemble_power_map",
]


@dataclass(frozen=True)
class BurstMetrics:
    """Shape summary of one emission burst.

    ``delay`` is measured from the end of the drive to the intensity peak —
    the experimentally robust reference point.  ``fwhm`` comes from linear
    interpolation at half peak and is NaN when a flank never crosses it.
    ``emitted_photons`` integrates the intensity over the post-drive window.
    """

    peak_intensity: float
    peak_time: float
    delay: float
    fwhm: float
    emitted_photons: float


def _half_crossing(times: np.ndarray, values: np.ndarray, i_peak: int, half: float,
                   direction: int) -> float:
    """Interpolated time where ``values`` crosses ``half`` walking away from the peak."""
    i = i_peak
    while 0 <= i + direction < values.size:
        j = i + direction
        if values[j] <= half:
            # linear interpolation between samples i and j
            t0, t1 = times[i], times[j]
            v0, v1 = values[i], values[j]
            if v1 == v0:
                return float(t1)
            return float(t0 + (half - v0) * (t1 - t0) / (v1 - v0))
        i = j
    return math.nan


def detect_burst(
    trajectory: Trajectory,
    drive_off_time: float | None = None,
    noise_floor_factor: float = 5.0,
    baseline_fraction: float = 0.1,
) -> BurstMetrics | None:
    """Locate a delayed emission maximum after the drive stops.

    A burst must (a) peak strictly inside the post-drive window — a trace
    that only decays from the moment the drive stops has no burst — and
    (b) exceed ``noise_floor_factor`` times the post-burst baseline (median
    of the trailing ``baseline_fraction`` of the window).  Returns ``None``
    when no burst qualifies; ties resolve to the earliest maximum.  All
    metrics are invariant under rescaling the intensity axis.
    """
    if noise_floor_factor <= 0.0:
        raise ValidationError(f"noise_floor_factor must be > 0, got {noise_floor_factor!r}")
    if drive_off_time is None:
        drive_off_time = trajectory.drive_off_time()
    times = trajectory.times
    # strictly after: the boundary sample still carries the driven field
    window = times > drive_off_time if drive_off_time > 0.0 else times >= times[0]
    if window.sum() < 4:
        raise ValidationError("fewer than four samples after the drive; nothing to analyse")
    t = times[window]
    intensity = trajectory.intensity[window]

    i_peak = int(np.argmax(intensity))  # argmax takes the earliest tie
    peak = float(intensity[i_peak])
    n_tail = max(2, int(math.ceil(baseline_fraction * t.size)))
    baseline = float(np.median(intensity[-n_tail:]))
    if peak <= 0.0 or peak <= noise_floor_factor * baseline:
        return None
    if i_peak == 0 or i_peak == t.size - 1:
        # maximum sits on the window edge: monotone decay or truncated run
        return None

    half = 0.5 * peak
    t_left = _half_crossing(t, intensity, i_peak, half, -1)
    t_right = _half_crossing(t, intensity, i_peak, half, +1)
    fwhm = t_right - t_left if math.isfinite(t_left) and math.isfinite(t_right) else math.nan
    return BurstMetrics(
        peak_intensity=peak,
        peak_time=float(t[i_peak]),
        delay=float(t[i_peak] - drive_off_time),
        fwhm=fwhm,
        emitted_photons=float(np.trapezoid(intensity, t)),
    )


def emission_metric(
    trajectory: Trajectory,
    drive_off_time: float | None = None,
    integral: bool = False,
) -> float:
    """Burst size fed into scaling fits.

    Default is the peak detected intensity after the drive stops; with
    ``integral=True`` it is the time-integrated detected photon count over
    the same window, kept as a sensitivity check on the peak-based metric.
    """
    if drive_off_time is None:
        drive_off_time = trajectory.drive_off_time()
    times = trajectory.times
    window = times > drive_off_time if drive_off_time > 0.0 else times >= times[0]
    if window.sum() < 2:
        raise ValidationError("fewer than two samples after the drive")
    intensity = trajectory.intensity[window]
    if integral:
        return float(np.trapezoid(intensity, times[window]))
    return float(np.max(intensity))


@dataclass(frozen=True)
class ScalingFit:
    """Power law I = amplitude * N^alpha fitted in log-log space."""

    alpha: float
    amplitude: float
    residuals: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


def fit_scaling(points) -> ScalingFit:
    """Least-squares power-law exponent through (N, peak-intensity) points.

    Both coordinates must be positive; at least two points are required.
    The fit is scale-invariant: (c N, d I) leaves alpha unchanged.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError(f"points must be an (n, 2) array, got shape {pts.shape}")
    if pts.shape[0] < 2:
        raise ValidationError("need at least two points for a scaling fit")
    if np.any(pts <= 0.0) or not np.all(np.isfinite(pts)):
        raise ValidationError("scaling points must be finite and strictly positive")
    log_n = np.log(pts[:, 0])
    log_i = np.log(pts[:, 1])
    if np.unique(log_n).size < 2:
        raise ValidationError("need at least two distinct N values")
    alpha, intercept = np.polyfit(log_n, log_i, 1)
    residuals = log_i - (alpha * log_n + intercept)
    return ScalingFit(alpha=float(alpha), amplitude=float(math.exp(intercept)),
                      residuals=residuals)


@dataclass(frozen=True)
class TanhFit:
    """Parameters of S_z(t) = offset - amplitude * tanh((t - t_delay) / tau).

    ``residual`` is the root-mean-square misfit; ``iteration_log`` holds the
    cost after every accepted optimizer step (strictly decreasing).
    """

    t_delay: float
    tau: float
    amplitude: float
    offset: float
    residual: float
    iteration_log: tuple[float, ...] = field(default=(), repr=False)

    def evaluate(self, times: np.ndarray) -> np.ndarray:
        return self.offset - self.amplitude * np.tanh((times - self.t_delay) / self.tau)

    @property
    def max_slope(self) -> float:
        """Largest |dS_z/dt| of the fitted curve, amplitude / tau."""
        return abs(self.amplitude) / self.tau


def _tanh_initializer(times: np.ndarray, s_z: np.ndarray) -> TanhFit:
    """Deterministic starting guess from the trace geometry."""
    hi = float(s_z.max())
    lo = float(s_z.min())
    amplitude = 0.5 * (hi - lo)
    offset = 0.5 * (hi + lo)
    grad = np.gradient(s_z, times)
    t_delay = float(times[int(np.argmin(grad))])  # steepest descent
    # tau ~ quarter of the 10-90% transition span
    span = hi - lo
    below = s_z <= hi - 0.1 * span
    above = s_z <= hi - 0.9 * span
    t10 = float(times[np.argmax(below)]) if below.any() else float(times[0])
    t90 = float(times[np.argmax(above)]) if above.any() else float(times[-1])
    tau = max(0.25 * abs(t90 - t10), float(times[1] - times[0]))
    return TanhFit(t_delay=t_delay, tau=tau, amplitude=amplitude, offset=offset,
                   residual=math.nan)


def _tanh_residual_jac(p: np.ndarray, times: np.ndarray, s_z: np.ndarray):
    t_delay, tau, amplitude, offset = p
    u = (times - t_delay) / tau
    th = np.tanh(u)
    sech2 = 1.0 - th * th
    model = offset - amplitude * th
    r = model - s_z
    jac = np.empty((times.size, 4))
    jac[:, 0] = amplitude * sech2 / tau  # d/dt_delay
    jac[:, 1] = amplitude * sech2 * u / tau  # d/dtau
    jac[:, 2] = -th  # d/damplitude
    jac[:, 3] = 1.0  # d/doffset
    return r, jac


def fit_tanh(
    times: np.ndarray,
    s_z: np.ndarray,
    max_iterations: int = 200,
    cost_tol: float = 1e-14,
) -> TanhFit:
    """Fit the collective-decay step with a damped Gauss-Newton loop.

    A hand-rolled Levenberg-Marquardt keeps the procedure deterministic and
    exposes the accepted-step cost log, which library fitters hide.  Raises
    :class:`FitFailureError` carrying the initializer when the loop exhausts
    its budget without an accepted converged step.
    """
    times = np.asarray(times, dtype=float)
    s_z = np.asarray(s_z, dtype=float)
    if times.shape != s_z.shape or times.ndim != 1 or times.size < 5:
        raise ValidationError("need matching 1-d arrays with at least five samples")
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(s_z))):
        raise ValidationError("times and s_z must be finite")

    init = _tanh_initializer(times, s_z)
    p = np.array([init.t_delay, init.tau, init.amplitude, init.offset])
    r, jac = _tanh_residual_jac(p, times, s_z)
    cost = float(r @ r)
    log = [cost]
    lam = 1e-3
    converged = False
    # below this the residual is double-precision noise on the data scale and
    # further relative drops are meaningless
    cost_floor = (1e-12 * max(1.0, float(np.max(np.abs(s_z))))) ** 2 * times.size
    for _ in range(max_iterations):
        jtj = jac.T @ jac
        jtr = jac.T @ r
        accepted = False
        for _attempt in range(25):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj)) + 1e-300 * np.eye(4),
                                       -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p + step
            if trial[1] <= 0.0:  # tau must stay positive
                lam *= 10.0
                continue
            r_trial, jac_trial = _tanh_residual_jac(trial, times, s_z)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial < cost:
                rel_drop = (cost - cost_trial) / max(cost, 1e-300)
                p, r, jac, cost = trial, r_trial, jac_trial, cost_trial
                log.append(cost)
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if rel_drop < cost_tol or cost <= cost_floor:
                    converged = True
                break
            lam *= 10.0
        if converged:
            break
        if not accepted:
            # no downhill step found at any damping: flat to machine precision
            converged = True
            break

    if not converged:
        raise FitFailureError(
            f"tanh fit did not converge within {max_iterations} iterations "
            f"(last cost {cost:.6e})",
            initializer=init,
        )
    rms = math.sqrt(cost / times.size)
    return TanhFit(t_delay=float(p[0]), tau=float(p[1]), amplitude=float(p[2]),
                   offset=float(p[3]), residual=rms, iteration_log=tuple(log))


def assemble_power_map(runs, amplitudes, grid_tol: float = 1e-9) -> PowerMap:
    """Merge per-amplitude trajectories into one rectangular sweep map.

    ``runs`` are trajectories sharing one time grid (checked within
    ``grid_tol`` of the span; offenders are reported).  Columns are sorted
    by amplitude, the map holds |A|^2, and the inversion-maximising
    amplitude is annotated from the post-drive inversion of each run.
    """
    runs = list(runs)
    amplitudes = np.asarray(amplitudes, dtype=float)
    if len(runs) != amplitudes.size:
        raise ValidationError(
            f"{len(runs)} runs but {amplitudes.size} amplitudes"
        )
    if len(runs) == 0:
        raise ValidationError("nothing to assemble")
    times = common_time_grid(runs, rel_tol=grid_tol)
    order = np.argsort(amplitudes)
    amplitudes = amplitudes[order]
    runs = [runs[i] for i in order]

    columns = []
    s_z_final = []
    for traj in runs:
        columns.append(np.abs(traj.field) ** 2)
        t_off = traj.drive_off_time()
        idx = int(np.searchsorted(traj.times, t_off))
        idx = min(idx, traj.times.size - 1)
        s_z_final.append(traj.s_z[idx])
    s_z_final = np.asarray(s_z_final)
    return PowerMap(
        times=times,
        amplitudes=amplitudes,
        intensity=np.column_stack(columns),
        s_z_final=s_z_final,
        threshold_amplitude=float(amplitudes[int(np.argmax(s_z_final))]),
        meta={"n_runs": len(runs)},
    )
