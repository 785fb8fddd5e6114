"""Scenario orchestration: engines in, artifact files out.

One scenario produces one output directory containing delimited data files
(TSV with YAML metadata sidecars), derived fit reports, a validation report
and a manifest.  Sweeps fan out over processes; all file writes happen in
the parent, in a fixed order, so reruns with the same config and seed are
byte-identical.

Artifact layout::

    validation.yaml        fast-cavity margins, bin-doubling convergence
    manifest.yaml          scenario echo + file list + headline metrics
    trajectory.tsv         single runs
    burst.yaml, tanh_fit.yaml
    amplitudes/amp_###.tsv + power_map.tsv      amplitude sweeps
    multiplicity/traj_m#.tsv + scaling_fit.yaml multiplicity sweeps
    *.svg                  optional plots, rendered from the files above
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis, dicke, exact, semiclassical
from .config import Scenario, scenario_to_dict
from .errors import FitFailureError, ValidationError
from .params import validate_fast_cavity
from .spectrum import build_spectral_distribution
from .trajectory import (
    Trajectory,
    sanitize_meta,
    write_atomic_text,
    write_metadata,
    write_power_map,
    write_trajectory,
)
from .units import TWO_PI

__all__ = ["RunResult", "run_scenario"]


@dataclass
class RunResult:
    outdir: Path
    files: tuple[str, ...]
    validation: dict
    metrics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# single-entry execution (also the process-pool worker)
# ---------------------------------------------------------------------------

def _solver_method(scenario: Scenario) -> str:
    # the ladder engine picks its own integrator when left on auto
    if scenario.engine == "dicke":
        return scenario.method
    if scenario.method != "auto":
        return scenario.method
    if scenario.engine == "exact":
        # explicit stepping is held to the resonator rate; go implicit when
        # the window spans many resonator lifetimes
        stiffness = TWO_PI * scenario.kappa_hz * scenario.time_grid()[-1]
        return "BDF" if stiffness > 5e3 else "RK45"
    return "RK45"


def _exact_detunings(scenario: Scenario, n_spins: int):
    if scenario.spectrum_shape == "none" or scenario.spectrum_fwhm_hz == 0.0:
        return 0.0
    # one detuning per spin: quantile sample of the configured line
    dist = build_spectral_distribution(
        scenario.spectrum_shape,
        TWO_PI * scenario.spectrum_fwhm_hz,
        n_spins,
        hyperfine_splitting=TWO_PI * scenario.hyperfine_splitting_hz,
    )
    return dist.detunings


def _run_entry(task: tuple) -> Trajectory:
    """Run one (multiplicity, amplitude) cell of a scenario.

    Module-level so sweep entries can cross a process boundary.
    """
    scenario, multiplicity, eta_hz, seed_seq = task
    params = scenario.to_params(multiplicity)
    times = scenario.time_grid()
    pulse = scenario.to_pulse(eta_hz)
    method = _solver_method(scenario)

    if scenario.engine == "exact":
        n_fock = scenario.n_fock
        if n_fock is None:
            n_fock = exact.suggested_n_fock(pulse.peak_amplitude(), params.kappa)
        spec = exact.HilbertSpec(params.n_spins, n_fock, max_dim=scenario.max_dim)
        rho0 = (
            exact.inverted_state(spec)
            if scenario.initial_state == "inverted"
            else exact.ground_state(spec)
        )
        traj = exact.drive_then_release(
            rho0,
            params,
            spec,
            pulse,
            times,
            detunings=_exact_detunings(scenario, params.n_spins),
            tolerance=scenario.tolerance,
            method=method,
        )
    elif scenario.engine == "dicke":
        state = (
            dicke.LadderState.inverted(params.n_spins)
            if scenario.initial_state == "inverted"
            else dicke.LadderState.ground(params.n_spins)
        )
        generator = dicke.build_generator(params)
        traj = dicke.evolve_ladder(
            state, generator, times, tolerance=scenario.tolerance, method=scenario.method
        )
    else:
        tipping = None
        if scenario.tipping_policy != "none":
            rng = np.random.default_rng(seed_seq) if seed_seq is not None else None
            tipping = semiclassical.seed_tipping(
                params.n_spins, scenario.tipping_policy, rng=rng
            )
        bins = semiclassical.BlochBins.from_distribution(
            scenario.to_distribution(multiplicity),
            params.n_spins,
            state=scenario.initial_state,
            tipping=tipping,
        )
        traj = semiclassical.integrate_mean_field(
            bins, params, pulse, times, tolerance=scenario.tolerance, method=method
        )
    traj.meta["multiplicity"] = multiplicity
    traj.meta["n_spins"] = params.n_spins
    if eta_hz is not None:
        traj.meta["amplitude_hz"] = eta_hz
    return traj


def _run_entries(scenario: Scenario, tasks: list[tuple], jobs: int | None) -> list[Trajectory]:
    if jobs is None:
        jobs = min(len(tasks), os.cpu_count() or 1)
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_entry(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_run_entry, tasks))


def _entry_seeds(scenario: Scenario, seed: int | None, n: int) -> list:
    """Independent child seeds per sweep entry, stable under parallelism."""
    if scenario.tipping_policy != "stochastic":
        return [None] * n
    base = seed if seed is not None else scenario.seed
    return list(np.random.SeedSequence(base).spawn(n))


# ---------------------------------------------------------------------------
# validation report
# ---------------------------------------------------------------------------

def _fast_cavity_report(scenario: Scenario) -> dict:
    mult = max(scenario.sweep_multiplicities, default=1)
    params = scenario.to_params(mult)
    amps_hz = list(scenario.sweep_amplitudes_hz) or [
        a for _, a in scenario.pulse_segments if a != 0.0
    ]
    eta_max = TWO_PI * max(amps_hz, default=0.0)
    rabi = 4.0 * params.g * eta_max / params.kappa
    report = validate_fast_cavity(
        params, collective_coupling=params.collective_coupling, rabi_rate=rabi
    )
    return {
        "passed": report.passed,
        "smallest_margin": report.smallest_margin,
        "margins": {k: float(v) for k, v in report.margins.items()},
    }


def _bin_doubling_check(scenario: Scenario, reference: Trajectory) -> dict | None:
    """Peak-intensity shift when the spectral binning is doubled.

    Cheap convergence evidence for the binned engine; recorded, not enforced.
    """
    if scenario.engine != "semiclassical" or scenario.spectrum_n_bins < 2:
        return None
    if scenario.spectrum_shape == "none" or scenario.spectrum_fwhm_hz == 0.0:
        return None
    doubled = replace(scenario, spectrum_n_bins=2 * scenario.spectrum_n_bins)
    mult = scenario.sweep_multiplicities[0] if scenario.sweep_multiplicities else 1
    eta = scenario.sweep_amplitudes_hz[0] if scenario.sweep_amplitudes_hz else None
    seed = _entry_seeds(scenario, scenario.seed, 1)[0]
    check = _run_entry((doubled, mult, eta, seed))
    peak_ref = float(np.max(reference.intensity))
    peak_chk = float(np.max(check.intensity))
    scale = max(abs(peak_ref), abs(peak_chk))
    return {
        "n_bins": scenario.spectrum_n_bins,
        "n_bins_doubled": doubled.spectrum_n_bins,
        "peak_rel_diff": abs(peak_chk - peak_ref) / scale if scale > 0.0 else 0.0,
    }


# ---------------------------------------------------------------------------
# artifact assembly
# ---------------------------------------------------------------------------

def _burst_report(traj: Trajectory) -> dict:
    burst = analysis.detect_burst(traj)
    if burst is None:
        return {"detected": False}
    return {
        "detected": True,
        "peak_intensity": burst.peak_intensity,
        "peak_time_s": burst.peak_time,
        "delay_s": burst.delay,
        "fwhm_s": None if np.isnan(burst.fwhm) else burst.fwhm,
        "emitted_photons": burst.emitted_photons,
    }


def _tanh_report(traj: Trajectory) -> dict:
    """Fit the inversion collapse on the post-drive window."""
    t_off = traj.drive_off_time()
    window = traj.times >= t_off
    try:
        fit = analysis.fit_tanh(traj.times[window], traj.s_z[window])
    except FitFailureError as exc:
        return {"converged": False, "error": str(exc)}
    return {
        "converged": True,
        "t_delay_s": fit.t_delay,
        "tau_s": fit.tau,
        "amplitude": fit.amplitude,
        "offset": fit.offset,
        "residual_rms": fit.residual,
        "iterations": len(fit.iteration_log),
    }


def run_scenario(
    scenario: Scenario,
    outdir: str | Path,
    seed: int | None = None,
    jobs: int | None = 1,
    plot: bool = False,
) -> RunResult:
    """Execute a scenario and write its artifact set under ``outdir``.

    ``seed`` overrides the scenario's own seed; ``jobs`` bounds sweep
    parallelism (1 = run in-process).  Plots are rendered only from the
    data files written beforehand.
    """
    if scenario.tipping_policy == "stochastic" and seed is None and scenario.seed is None:
        raise ValidationError("stochastic tipping requires a seed")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    validation = {"engine": scenario.engine, "fast_cavity": _fast_cavity_report(scenario)}
    files: list[str] = []
    metrics: dict = {}

    if scenario.sweep_amplitudes_hz:
        amps_hz = sorted(set(scenario.sweep_amplitudes_hz))
        seeds = _entry_seeds(scenario, seed, len(amps_hz))
        tasks = [(scenario, 1, a, s) for a, s in zip(amps_hz, seeds)]
        runs = _run_entries(scenario, tasks, jobs)

        (outdir / "amplitudes").mkdir(exist_ok=True)
        delays = []
        for i, (eta_hz, traj) in enumerate(zip(amps_hz, runs)):
            rel = f"amplitudes/amp_{i:03d}.tsv"
            write_trajectory(traj, outdir / rel)
            files.append(rel)
            burst = analysis.detect_burst(traj)
            delays.append(None if burst is None else burst.delay)

        pmap = analysis.assemble_power_map(runs, [TWO_PI * a for a in amps_hz])
        pmap.meta["amplitudes_hz"] = list(amps_hz)
        pmap.meta["burst_delays_s"] = delays
        pmap.meta["drive_off_time"] = runs[0].drive_off_time()
        write_power_map(pmap, outdir / "power_map.tsv")
        files.append("power_map.tsv")

        known = [d for d in delays if d is not None]
        metrics = {
            "threshold_amplitude_rad_s": pmap.threshold_amplitude,
            "threshold_amplitude_hz": pmap.threshold_amplitude / TWO_PI,
            "max_delay_s": max(known) if known else None,
        }
        validation["bin_doubling"] = _bin_doubling_check(scenario, runs[0])
        plot_jobs = [("power_map", outdir / "power_map.tsv", outdir / "power_map.svg")]

    elif scenario.sweep_multiplicities:
        mults = sorted(set(scenario.sweep_multiplicities))
        seeds = _entry_seeds(scenario, seed, len(mults))
        tasks = [(scenario, m, None, s) for m, s in zip(mults, seeds)]
        runs = _run_entries(scenario, tasks, jobs)

        (outdir / "multiplicity").mkdir(exist_ok=True)
        points = []
        points_integral = []
        for m, traj in zip(mults, runs):
            rel = f"multiplicity/traj_m{m}.tsv"
            write_trajectory(traj, outdir / rel)
            files.append(rel)
            n = m * scenario.n_spins
            points.append((n, analysis.emission_metric(traj)))
            points_integral.append((n, analysis.emission_metric(traj, integral=True)))

        fit = analysis.fit_scaling(points)
        report = {
            "alpha": fit.alpha,
            "amplitude": fit.amplitude,
            "max_residual": fit.max_residual,
            "points": [[float(n), float(p)] for n, p in points],
            # integral-metric exponent, recorded as a sensitivity check
            "alpha_integral": analysis.fit_scaling(points_integral).alpha,
        }
        write_atomic_text(outdir / "scaling_fit.yaml", _yaml(report))
        files.append("scaling_fit.yaml")
        metrics = {"alpha": fit.alpha, "peaks": [p for _, p in points]}
        validation["bin_doubling"] = _bin_doubling_check(scenario, runs[0])
        plot_jobs = [("scaling", outdir / "scaling_fit.yaml", outdir / "scaling.svg")]

    else:
        seeds = _entry_seeds(scenario, seed, 1)
        traj = _run_entry((scenario, 1, None, seeds[0]))
        write_trajectory(traj, outdir / "trajectory.tsv")
        files.append("trajectory.tsv")

        burst = _burst_report(traj)
        write_atomic_text(outdir / "burst.yaml", _yaml(burst))
        files.append("burst.yaml")
        metrics = {k: v for k, v in burst.items() if k != "detected"}
        metrics["burst_detected"] = burst["detected"]

        if burst["detected"]:
            tanh = _tanh_report(traj)
            write_atomic_text(outdir / "tanh_fit.yaml", _yaml(tanh))
            files.append("tanh_fit.yaml")
            if tanh["converged"]:
                metrics["tanh_tau_s"] = tanh["tau_s"]
                metrics["tanh_t_delay_s"] = tanh["t_delay_s"]
        validation["bin_doubling"] = _bin_doubling_check(scenario, traj)
        if scenario.engine == "exact":
            validation["fock_truncation_ok"] = bool(traj.meta.get("fock_truncation_ok", True))
            validation["top_fock_population"] = float(traj.meta.get("top_fock_population", 0.0))
        plot_jobs = [("trajectory", outdir / "trajectory.tsv", outdir / "trajectory.svg")]

    write_atomic_text(outdir / "validation.yaml", _yaml(sanitize_meta(validation)))
    files.append("validation.yaml")

    if plot:
        from . import plots  # matplotlib import deferred until needed

        renderers = {
            "trajectory": plots.plot_trajectory,
            "power_map": plots.plot_power_map,
            "scaling": plots.plot_scaling,
        }
        for kind, src, dst in plot_jobs:
            renderers[kind](src, dst)
            files.append(dst.name)

    manifest = {
        "scenario": scenario_to_dict(scenario),
        "seed": seed if seed is not None else scenario.seed,
        "files": list(files) + ["manifest.yaml"],
        "metrics": metrics,
    }
    write_metadata(outdir / "manifest.yaml", manifest)
    files.append("manifest.yaml")

    return RunResult(
        outdir=outdir, files=tuple(files), validation=validation, metrics=metrics
    )


def _yaml(data: dict) -> str:
    import yaml

    return yaml.safe_dump(sanitize_meta(data), sort_keys=True, default_flow_style=False)
