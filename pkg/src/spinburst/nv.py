"""Ground-state level structure of negatively charged NV centres.

Handles the geometric part of the problem: the four <111> defect axes, the
projection of an applied magnetic field onto each axis, and the field
magnitudes that tune the upper spin transition of each sub-ensemble to a
target frequency.  Spin dynamics live elsewhere; this module is pure
level-structure arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .errors import NoResonanceError, ValidationError
from .units import TWO_PI

__all__ = [
    "NVLevelModel",
    "zeeman_projections",
    "resonance_fields",
    "thermal_ground_population",
]

_SQRT3 = math.sqrt(3.0)

# The four crystallographic <111> unit vectors of the diamond lattice.
_AXES = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]
) / _SQRT3


@dataclass(frozen=True)
class NVLevelModel:
    """Zero-field splitting, gyromagnetic ratio and defect axes.

    ``d_zfs`` is the zero-field splitting (rad/s), ``mu`` the gyromagnetic
    ratio (rad/s per tesla).  Defaults: D/2pi = 2.878 GHz and
    mu/2pi = 28 MHz/mT.
    """

    d_zfs: float = TWO_PI * 2.878e9
    mu: float = TWO_PI * 2.8e10
    axes: np.ndarray = field(default_factory=lambda: _AXES.copy())

    def __post_init__(self):
        if not (math.isfinite(self.d_zfs) and self.d_zfs > 0.0):
            raise ValidationError(f"d_zfs must be finite and > 0, got {self.d_zfs!r}")
        if not (math.isfinite(self.mu) and self.mu > 0.0):
            raise ValidationError(f"mu must be finite and > 0, got {self.mu!r}")
        axes = np.asarray(self.axes, dtype=float)
        if axes.shape != (4, 3):
            raise ValidationError(f"axes must have shape (4, 3), got {axes.shape}")
        norms = np.linalg.norm(axes, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-12):
            raise ValidationError("axes must be unit vectors")
        object.__setattr__(self, "axes", axes)


def _unit_direction(direction) -> np.ndarray:
    vec = np.asarray(direction, dtype=float)
    if vec.shape != (3,):
        raise ValidationError(f"field direction must be a 3-vector, got shape {vec.shape}")
    norm = np.linalg.norm(vec)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValidationError("field direction must be a non-zero finite vector")
    return vec / norm


def zeeman_projections(direction, model: NVLevelModel | None = None) -> np.ndarray:
    """Signed projections of a unit field direction onto the four defect axes.

    Returns the four values ``b_hat . n_i`` in the fixed axis order of the
    model.  The input direction is normalised first; a zero vector is
    rejected.
    """
    if model is None:
        model = NVLevelModel()
    b_hat = _unit_direction(direction)
    return model.axes @ b_hat


def resonance_fields(
    direction,
    target_freq: float,
    model: NVLevelModel | None = None,
) -> tuple[tuple[float, int], ...]:
    """Field magnitudes (tesla) that tune sub-ensembles to ``target_freq``.

    For each distinct non-zero absolute axis projection ``|p|`` the upper
    transition reaches the target angular frequency at
    ``B = (target - d_zfs) / (mu * |p|)``.  Returns ``(field, multiplicity)``
    pairs sorted by field magnitude; the multiplicity counts the axes sharing
    that projection.  Raises if the target lies below the zero-field
    splitting or if no axis has a non-zero projection.
    """
    if model is None:
        model = NVLevelModel()
    if not math.isfinite(target_freq):
        raise ValidationError(f"target_freq must be finite, got {target_freq!r}")
    if target_freq <= model.d_zfs:
        raise ValidationError(
            "target frequency must exceed the zero-field splitting "
            f"(got {target_freq!r} <= {model.d_zfs!r}); only the upper branch tunes upward"
        )
    projections = np.abs(zeeman_projections(direction, model))
    nonzero = projections[projections > 1e-12]
    if nonzero.size == 0:
        raise NoResonanceError(
            "field direction is orthogonal to every defect axis; nothing can be tuned"
        )
    # group equal projections; rounding tolerance well below any geometric gap
    values, counts = np.unique(np.round(nonzero, decimals=12), return_counts=True)
    out = [
        ((target_freq - model.d_zfs) / (model.mu * p), int(c))
        for p, c in zip(values, counts)
    ]
    return tuple(sorted(out, key=lambda pair: pair[0]))


def thermal_ground_population(temperature: float, d_zfs: float) -> float:
    """Boltzmann population of the spin ground state, 1 / (1 + 2 exp(-hbar D / kT)).

    The two upper levels are degenerate at zero field, hence the factor 2.
    Monotone decreasing in temperature with range (1/3, 1].
    """
    if not (math.isfinite(temperature) and temperature > 0.0):
        raise ValidationError(f"temperature must be finite and > 0, got {temperature!r}")
    if not (math.isfinite(d_zfs) and d_zfs > 0.0):
        raise ValidationError(f"d_zfs must be finite and > 0, got {d_zfs!r}")
    ratio = constants.hbar * d_zfs / (constants.k * temperature)
    return 1.0 / (1.0 + 2.0 * math.exp(-ratio))
