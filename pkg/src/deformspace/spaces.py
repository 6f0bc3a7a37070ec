"""Linear deformation spaces: dictionaries, latent codes, and the action.

A shape's dictionary is a 3n x k matrix with unit-norm columns; applying a
latent delta v moves the flattened cloud by matrix @ v. Latent deltas are
plain differences of codes, so the affine laws (identity, anticommutativity,
transitivity, parallelogram) hold in latent space by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .geometry import PointCloud


@dataclass(frozen=True)
class Dictionary:
    """Shape-specific linear deformation space (3n x k, point-major rows).

    `unnormalized_columns` counts columns whose norm fell below the
    normalization epsilon and were passed through as-is.
    """

    matrix: np.ndarray
    unnormalized_columns: int = 0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] % 3 != 0:
            raise ShapeError(f"dictionary must be (3n, k), got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ShapeError("dictionary has non-finite entries")
        object.__setattr__(self, "matrix", m)

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 3


@dataclass(frozen=True)
class LatentCode:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ShapeError("latent code must be a finite 1-d vector")
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LatentDelta:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ShapeError("latent delta must be a finite 1-d vector")
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.shape[0]


def latent_delta(ex: LatentCode, ey: LatentCode) -> LatentDelta:
    """Deformation vector from the shape encoded as ex to the one encoded as ey."""
    if ex.k != ey.k:
        raise ShapeError(f"latent dims differ: {ex.k} vs {ey.k}")
    return LatentDelta(ey.values - ex.values)


def apply(x: PointCloud, dictionary: Dictionary, v: LatentDelta) -> PointCloud:
    """Act on x: per-point offsets dictionary @ v added to the flattened cloud."""
    if dictionary.n != x.n:
        raise ShapeError(f"dictionary rows ({dictionary.n} points) != cloud ({x.n})")
    if v.k != dictionary.k:
        raise ShapeError(f"delta length {v.k} != dictionary k {dictionary.k}")
    return PointCloud.from_flat(x.flat + dictionary.matrix @ v.values)


def normalize_columns(matrix: np.ndarray, eps: float = 1e-8):
    """Scale each column to unit norm; columns below eps pass through.

    Returns (normalized matrix, count of passed-through columns).
    """
    norms = np.sqrt(np.square(matrix).sum(axis=0))
    keep = norms < eps
    safe = np.where(keep, 1.0, norms)
    return matrix / safe, int(keep.sum())


def dictionary_to_json_dict(d: Dictionary) -> dict:
    """Export as {n, k, columns: [[3n floats] ...]} for tooling and the UI."""
    return {
        "n": d.n,
        "k": d.k,
        "columns": [d.matrix[:, j].tolist() for j in range(d.k)],
    }
