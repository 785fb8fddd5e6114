"""Time-series containers shared by all engines, plus their file formats.

Data files are tab-separated text with a fixed, documented column order and
17-significant-digit floats, so identical runs produce byte-identical files.
Run metadata (parameters, solver settings, seed, timestamps) lives in a YAML
sidecar next to each data file; timestamps never enter the data files.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import GridAlignmentError, ValidationError

__all__ = [
    "Trajectory",
    "PowerMap",
    "write_trajectory",
    "read_trajectory",
    "write_power_map",
    "read_power_map",
    "write_atomic_text",
    "write_metadata",
    "read_metadata",
]

# column order of trajectory files; field is split into real/imaginary parts
TRAJECTORY_COLUMNS = (
    "time",
    "s_z",
    "spsm",
    "photons",
    "field_re",
    "field_im",
    "intensity",
    "emitted",
)

_FLOAT_FMT = "%.17g"


@dataclass
class Trajectory:
    """Sampled observables of one run.

    Attributes
    ----------
    times : array
        Sample times in seconds, strictly increasing.
    s_z : array
        Collective inversion <S_z> in the convention S_z = (1/2) sum sigma_z,
        so it ranges over [-N/2, +N/2].
    spsm : array
        Collective correlation <S+S-> (the emitter of the burst).
    photons : array
        Intra-resonator photon number <a+a> (adiabatic estimate for the
        reduced engines).
    field : complex array
        Resonator field amplitude <a>.
    intensity : array
        Detected photon rate, kappa_out * kappa * <a+a>, in photons/s.
    emitted : array
        Cumulative detected photons up to each sample.
    segment_boundaries : tuple of float
        Drive-segment end times marked inside the time span.
    meta : dict
        Free-form run metadata (engine, parameters, solver report, ...).
    """

    times: np.ndarray
    s_z: np.ndarray
    spsm: np.ndarray
    photons: np.ndarray
    field: np.ndarray
    intensity: np.ndarray
    emitted: np.ndarray
    segment_boundaries: tuple[float, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValidationError("times must be a 1-d array with at least two samples")
        if not np.all(np.diff(self.times) > 0.0):
            raise ValidationError("times must be strictly increasing")
        n = self.times.size
        for name in ("s_z", "spsm", "photons", "intensity", "emitted"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValidationError(f"{name} must match times, got shape {arr.shape}")
            setattr(self, name, arr)
        fld = np.asarray(self.field, dtype=complex)
        if fld.shape != (n,):
            raise ValidationError(f"field must match times, got shape {fld.shape}")
        self.field = fld

    def drive_off_time(self) -> float:
        return float(self.meta.get("drive_off_time", 0.0))


@dataclass
class PowerMap:
    """Rectangular sweep product: rows = time samples, columns = amplitudes.

    ``intensity`` holds |A|^2 of the coherent resonator field.  ``s_z_final``
    is the inversion at the end of the drive segment for each amplitude, and
    ``threshold_amplitude`` the amplitude maximising it.
    """

    times: np.ndarray
    amplitudes: np.ndarray
    intensity: np.ndarray
    s_z_final: np.ndarray
    threshold_amplitude: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        self.s_z_final = np.asarray(self.s_z_final, dtype=float)
        if self.intensity.shape != (self.times.size, self.amplitudes.size):
            raise ValidationError(
                f"intensity grid {self.intensity.shape} does not match "
                f"{self.times.size} times x {self.amplitudes.size} amplitudes"
            )
        if self.s_z_final.shape != (self.amplitudes.size,):
            raise ValidationError("s_z_final must carry one value per amplitude")
        if np.any(np.diff(self.amplitudes) <= 0.0):
            raise ValidationError("amplitudes must be strictly increasing")


def write_atomic_text(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` atomically (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_rows(matrix: np.ndarray) -> str:
    return "\n".join("\t".join(_FLOAT_FMT % v for v in row) for row in matrix)


def sanitize_meta(meta: dict) -> dict:
    """Make a metadata dict YAML-safe.

    Keys starting with an underscore are in-memory handles (final states,
    bin objects) and are dropped; numpy scalars and small arrays are coerced
    to plain Python values.
    """

    def coerce(value):
        if isinstance(value, dict):
            return {k: coerce(v) for k, v in value.items() if not str(k).startswith("_")}
        if isinstance(value, (list, tuple)):
            return [coerce(v) for v in value]
        if isinstance(value, np.ndarray):
            return coerce(value.tolist())
        if isinstance(value, (np.bool_,)):
            return bool(value)
        if isinstance(value, np.integer):
            return int(value)
        if isinstance(value, np.floating):
            return float(value)
        if value is None or isinstance(value, (bool, int, float, str)):
            return value
        return repr(value)

    return coerce(meta)


def write_metadata(path: str | Path, meta: dict) -> None:
    write_atomic_text(
        path, yaml.safe_dump(sanitize_meta(meta), sort_keys=True, default_flow_style=False)
    )


def read_metadata(path: str | Path) -> dict:
    with open(path) as handle:
        return yaml.safe_load(handle) or {}


def _sidecar(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".meta.yaml")


def write_trajectory(traj: Trajectory, path: str | Path) -> Path:
    """Write a trajectory as TSV plus a YAML metadata sidecar."""
    path = Path(path)
    matrix = np.column_stack(
        [
            traj.times,
            traj.s_z,
            traj.spsm,
            traj.photons,
            traj.field.real,
            traj.field.imag,
            traj.intensity,
            traj.emitted,
        ]
    )
    header = "# columns: " + "\t".join(TRAJECTORY_COLUMNS)
    if traj.segment_boundaries:
        header += "\n# segment_boundaries: " + "\t".join(
            _FLOAT_FMT % b for b in traj.segment_boundaries
        )
    write_atomic_text(path, header + "\n" + _format_rows(matrix) + "\n")
    write_metadata(_sidecar(path), {"columns": list(TRAJECTORY_COLUMNS), **traj.meta})
    return path


def read_trajectory(path: str | Path) -> Trajectory:
    path = Path(path)
    boundaries: tuple[float, ...] = ()
    with open(path) as handle:
        for line in handle:
            if line.startswith("# segment_boundaries:"):
                boundaries = tuple(float(v) for v in line.split(":", 1)[1].split())
            elif not line.startswith("#"):
                break
    matrix = np.loadtxt(path, comments="#")
    matrix = np.atleast_2d(matrix)
    meta = {}
    side = _sidecar(path)
    if side.exists():
        meta = read_metadata(side)
    return Trajectory(
        times=matrix[:, 0],
        s_z=matrix[:, 1],
        spsm=matrix[:, 2],
        photons=matrix[:, 3],
        field=matrix[:, 4] + 1j * matrix[:, 5],
        intensity=matrix[:, 6],
        emitted=matrix[:, 7],
        segment_boundaries=boundaries,
        meta=meta,
    )


def write_power_map(pmap: PowerMap, path: str | Path) -> Path:
    """Write a sweep map: first column time, one column per amplitude."""
    path = Path(path)
    header_lines = [
        "# rows: time samples (s); columns: time then |A|^2 per drive amplitude",
        "# amplitudes_rad_s: " + "\t".join(_FLOAT_FMT % a for a in pmap.amplitudes),
        "# s_z_final: " + "\t".join(_FLOAT_FMT % v for v in pmap.s_z_final),
        "# threshold_amplitude_rad_s: " + (_FLOAT_FMT % pmap.threshold_amplitude),
    ]
    matrix = np.column_stack([pmap.times, pmap.intensity])
    write_atomic_text(path, "\n".join(header_lines) + "\n" + _format_rows(matrix) + "\n")
    write_metadata(_sidecar(path), dict(pmap.meta))
    return path


def read_power_map(path: str | Path) -> PowerMap:
    path = Path(path)
    amplitudes = s_z_final = None
    threshold = None
    with open(path) as handle:
        for line in handle:
            if line.startswith("# amplitudes_rad_s:"):
                amplitudes = np.array([float(v) for v in line.split(":", 1)[1].split()])
            elif line.startswith("# s_z_final:"):
                s_z_final = np.array([float(v) for v in line.split(":", 1)[1].split()])
            elif line.startswith("# threshold_amplitude_rad_s:"):
                threshold = float(line.split(":", 1)[1])
            elif not line.startswith("#"):
                break
    if amplitudes is None or s_z_final is None or threshold is None:
        raise ValidationError(f"{path} is missing power-map header lines")
    matrix = np.atleast_2d(np.loadtxt(path, comments="#"))
    meta = {}
    side = _sidecar(path)
    if side.exists():
        meta = read_metadata(side)
    return PowerMap(
        times=matrix[:, 0],
        amplitudes=amplitudes,
        intensity=matrix[:, 1:],
        s_z_final=s_z_final,
        threshold_amplitude=threshold,
        meta=meta,
    )


def common_time_grid(trajectories, rel_tol: float = 1e-9) -> np.ndarray:
    """Return the shared time grid of several trajectories.

    Raises :class:`GridAlignmentError` naming the runs whose grids deviate
    from the first one beyond ``rel_tol`` (relative to the grid span).
    """
    if not trajectories:
        raise ValidationError("no trajectories given")
    reference = trajectories[0].times
    span = reference[-1] - reference[0]
    offenders = []
    for idx, traj in enumerate(trajectories[1:], start=1):
        if traj.times.shape != reference.shape or np.any(
            np.abs(traj.times - reference) > rel_tol * span
        ):
            offenders.append(idx)
    if offenders:
        raise GridAlignmentError(
            f"trajectories {offenders} do not share the reference time grid",
            offenders=tuple(offenders),
        )
    return reference
