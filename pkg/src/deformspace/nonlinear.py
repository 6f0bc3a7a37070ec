"""Circular-trajectory deformation: per-point rotation dictionaries.

Each dictionary element j stores, for every point i, a rotation vector
R_ij (axis * angle-rate) and a center C_ij. The latent coordinate v_j scales
the rotation angle, so points travel on circles instead of straight lines.
Free action still holds at v = 0; additivity does not and is only measured.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .geometry import PointCloud
from .spaces import LatentDelta


@dataclass(frozen=True)
class CircularDictionary:
    """rot_vectors and centers are (n, k, 3) arrays."""

    rot_vectors: np.ndarray
    centers: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        rv = np.asarray(self.rot_vectors, dtype=np.float64)
        cv = np.asarray(self.centers, dtype=np.float64)
        if rv.ndim != 3 or rv.shape[2] != 3 or cv.shape != rv.shape:
            raise ShapeError(f"circular dictionary needs matching (n, k, 3) fields, got {rv.shape} / {cv.shape}")
        if not (np.all(np.isfinite(rv)) and np.all(np.isfinite(cv))):
            raise ShapeError("circular dictionary has non-finite entries")
        object.__setattr__(self, "rot_vectors", rv)
        object.__setattr__(self, "centers", cv)

    @property
    def n(self) -> int:
        return self.rot_vectors.shape[0]

    @property
    def k(self) -> int:
        return self.rot_vectors.shape[1]


def rotation_matrix(rv: np.ndarray) -> np.ndarray:
    """Rodrigues closed form of exp([rv]x) for a single rotation vector."""
    rv = np.asarray(rv, dtype=np.float64).reshape(3)
    angle = np.linalg.norm(rv)
    if angle < 1e-300:
        return np.eye(3)
    axis = rv / angle
    kx = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + np.sin(angle) * kx + (1.0 - np.cos(angle)) * (kx @ kx)


def circular_offset(rv, center, t: float, p) -> np.ndarray:
    """(exp([t rv]x) - I)(p - center) via the Rodrigues closed form."""
    rv = np.asarray(rv, dtype=np.float64).reshape(3)
    center = np.asarray(center, dtype=np.float64).reshape(3)
    p = np.asarray(p, dtype=np.float64).reshape(3)
    u = p - center
    return (rotation_matrix(t * rv) - np.eye(3)) @ u


def deform_circular(x: PointCloud, cdict: CircularDictionary, v: LatentDelta) -> PointCloud:
    """d_i = sum_j circular_offset(R_ij, C_ij, v_j, x_i) + x_i, vectorized."""
    if cdict.n != x.n:
        raise ShapeError(f"circular dictionary covers {cdict.n} points, cloud has {x.n}")
    if v.k != cdict.k:
        raise ShapeError(f"delta length {v.k} != dictionary k {cdict.k}")
    rv = cdict.rot_vectors  # (n, k, 3)
    u = x.points[:, None, :] - cdict.centers  # (n, k, 3)
    rnorm = np.sqrt(np.square(rv).sum(axis=2, keepdims=True))
    rhat = rv / np.where(rnorm < 1e-12, 1.0, rnorm)
    theta = v.values[None, :, None] * rnorm  # (n, k, 1)
    k1 = np.cross(rhat, u)
    k2 = np.cross(rhat, k1)
    offsets = np.sin(theta) * k1 + (1.0 - np.cos(theta)) * k2
    return PointCloud(x.points + offsets.sum(axis=1))


def element_animation(
    x: PointCloud, cdict: CircularDictionary, element: int, max_angle: float, steps: int
) -> list[PointCloud]:
    """Clouds along one element's trajectory, t in [-max_angle, max_angle]."""
    frames = []
    for t in np.linspace(-max_angle, max_angle, steps):
        v = np.zeros(cdict.k)
        v[element] = t
        frames.append(deform_circular(x, cdict, LatentDelta(v)))
    return frames
