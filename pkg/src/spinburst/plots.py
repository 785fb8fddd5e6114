"""Static figures rendered from written artifact files.

Every function takes a data-file path, never an in-memory result: the files
are the contract, the figures are derived views.  SVG output is made
reproducible by pinning the hash salt and dropping the date metadata.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import yaml  # noqa: E402
from matplotlib.colors import LogNorm  # noqa: E402

from .trajectory import read_power_map, read_trajectory

__all__ = ["plot_trajectory", "plot_power_map", "plot_scaling"]

plt.rcParams["svg.hashsalt"] = "spinburst"
_SAVE_OPTS = {"metadata": {"Date": None}, "bbox_inches": "tight"}


def _time_axis(times: np.ndarray) -> tuple[float, str]:
    """Divisor and label turning seconds into a readable axis unit."""
    span = times[-1] - times[0]
    for ceiling, divisor, label in (
        (1e-6, 1e-9, "ns"),
        (1e-3, 1e-6, "µs"),
        (1.0, 1e-3, "ms"),
    ):
        if span < ceiling:
            return divisor, label
    return 1.0, "s"


def plot_trajectory(data_path: str | Path, out_path: str | Path) -> Path:
    """Two panels: detected intensity and inversion against time."""
    traj = read_trajectory(data_path)
    divisor, unit = _time_axis(traj.times)
    t = traj.times / divisor

    fig, (ax_i, ax_z) = plt.subplots(2, 1, sharex=True, figsize=(7.0, 5.0))
    ax_i.plot(t, traj.intensity, color="crimson", lw=1.2)
    ax_i.set_ylabel("detected intensity (photons/s)")
    ax_z.plot(t, traj.s_z, color="royalblue", lw=1.2)
    ax_z.set_ylabel(r"$\langle S_z \rangle$")
    ax_z.set_xlabel(f"time ({unit})")

    t_off = traj.drive_off_time()
    if t_off > 0.0:
        for ax in (ax_i, ax_z):
            ax.axvline(t_off / divisor, color="grey", ls="--", lw=0.8)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, **_SAVE_OPTS)
    plt.close(fig)
    return out_path


def plot_power_map(data_path: str | Path, out_path: str | Path) -> Path:
    """Emitted |A|^2 over (time, drive amplitude), threshold line marked."""
    pmap = read_power_map(data_path)
    divisor, unit = _time_axis(pmap.times)
    t = pmap.times / divisor
    amps_ghz = pmap.amplitudes / (2.0 * np.pi * 1e9)

    intensity = pmap.intensity.T  # rows = amplitudes for pcolormesh
    floor = intensity.max() * 1e-8
    clipped = np.maximum(intensity, floor) if intensity.max() > 0 else intensity + 1.0

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    mesh = ax.pcolormesh(
        t, amps_ghz, clipped, norm=LogNorm(), cmap="inferno", shading="auto"
    )
    ax.axhline(
        pmap.threshold_amplitude / (2.0 * np.pi * 1e9),
        color="white",
        ls="--",
        lw=1.0,
        label="inversion-maximising amplitude",
    )
    ax.set_xlabel(f"time ({unit})")
    ax.set_ylabel(r"drive amplitude $\eta/2\pi$ (GHz)")
    ax.legend(loc="upper right", fontsize=8)
    fig.colorbar(mesh, ax=ax, label=r"$|A|^2$")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, **_SAVE_OPTS)
    plt.close(fig)
    return out_path


def plot_scaling(fit_path: str | Path, out_path: str | Path) -> Path:
    """Log-log peak intensity vs ensemble size with N and N^2 guides."""
    with open(fit_path) as handle:
        report = yaml.safe_load(handle)
    points = np.asarray(report["points"], dtype=float)
    n, peak = points[:, 0], points[:, 1]
    alpha = float(report["alpha"])
    amplitude = float(report["amplitude"])

    grid = np.geomspace(n.min(), n.max(), 64)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    ax.loglog(n, peak, "o", color="black", label="peak intensity")
    ax.loglog(grid, amplitude * grid**alpha, "-", color="crimson",
              label=rf"fit $\propto N^{{{alpha:.2f}}}$")
    # guide lines through the first point
    ax.loglog(grid, peak[0] * grid / n[0], "--", color="grey", lw=0.8, label=r"$\propto N$")
    ax.loglog(grid, peak[0] * (grid / n[0]) ** 2, ":", color="grey", lw=0.8,
              label=r"$\propto N^2$")
    ax.set_xlabel("ensemble size N")
    ax.set_ylabel("peak intensity (photons/s)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, **_SAVE_OPTS)
    plt.close(fig)
    return out_path
