"""Point-cloud type, Chamfer distance with gradients, box-face sampling.

Clouds are ordered lists of 3-d points in meters; shapes live inside the
[-0.5, 0.5]^3 cube. Flattening is point-major: (x1 y1 z1 x2 y2 z2 ...),
and every 3n-row matrix in the package follows that row order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ShapeError

AXIS_NAMES = ("x", "y", "z")


@dataclass(frozen=True)
class PointCloud:
    """Ordered n x 3 array of points. Immutable by convention."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ShapeError(f"point cloud must be (n, 3) with n >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ShapeError("point cloud has non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def flat(self) -> np.ndarray:
        """Point-major 3n-vector view used by dictionaries and handle bases."""
        return self.points.reshape(-1)

    @staticmethod
    def from_flat(v: np.ndarray) -> "PointCloud":
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.size % 3 != 0:
            raise ShapeError(f"flat cloud must have length divisible by 3, got {v.shape}")
        return PointCloud(v.reshape(-1, 3))


@dataclass(frozen=True)
class ChamferResult:
    value: float
    nn_ab: np.ndarray  # for each point of a, index of nearest point in b
    nn_ba: np.ndarray


def pairwise_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distance table via the expanded form (GEMM-backed).

    Only used to pick nearest neighbors; reported distances are always
    recomputed exactly from the selected point differences.
    """
    aa = np.square(a).sum(axis=-1)
    bb = np.square(b).sum(axis=-1)
    d2 = aa[..., :, None] + bb[..., None, :] - 2.0 * np.matmul(a, np.swapaxes(b, -1, -2))
    return d2


def _nearest(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # argmin ties break to the lowest index: deterministic.
    return np.argmin(pairwise_sq(a, b), axis=1)


def chamfer(a: PointCloud, b: PointCloud) -> ChamferResult:
    """Symmetric mean-reduced squared Chamfer distance.

    CD(a,b) = (1/|a|) sum_i min_j ||a_i - b_j||^2
            + (1/|b|) sum_j min_i ||b_j - a_i||^2
    """
    pa, pb = a.points, b.points
    nn_ab = _nearest(pa, pb)
    nn_ba = _nearest(pb, pa)
    v = (
        np.square(pa - pb[nn_ab]).sum(axis=1).mean()
        + np.square(pb - pa[nn_ba]).sum(axis=1).mean()
    )
    return ChamferResult(float(v), nn_ab, nn_ba)


def chamfer_grad(a: PointCloud, b: PointCloud) -> np.ndarray:
    """Gradient of chamfer(a, b) with respect to a's points.

    Nearest-neighbor assignments are held fixed (the standard subgradient):
    d/da_i = (2/|a|)(a_i - b_nn(i)) + (2/|b|) sum_{j: nn(j)=i} (a_i - b_j).
    """
    pa, pb = a.points, b.points
    res = chamfer(a, b)
    g = (2.0 / a.n) * (pa - pb[res.nn_ab])
    back = 2.0 / b.n * (pa[res.nn_ba] - pb)
    np.add.at(g, res.nn_ba, back)
    return g


def mirror(pc: PointCloud, axis: int) -> PointCloud:
    """Reflect across the coordinate plane through the origin normal to `axis`."""
    if axis not in (0, 1, 2):
        raise InputError(f"mirror axis must be 0, 1 or 2, got {axis}")
    pts = pc.points.copy()
    pts[:, axis] = -pts[:, axis]
    return PointCloud(pts)


@dataclass(frozen=True)
class PartBox:
    """Oriented box: rows of `axes` are the local orthonormal directions.

    Extents are half-lengths. A single zero extent degenerates the box to a
    rectangle (allowed for sampling); all-zero extents are rejected.
    """

    center: np.ndarray
    axes: np.ndarray
    extents: np.ndarray
    point_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(3)
        ax = np.asarray(self.axes, dtype=np.float64).reshape(3, 3)
        e = np.asarray(self.extents, dtype=np.float64).reshape(3)
        if np.abs(ax @ ax.T - np.eye(3)).max() > 1e-8:
            raise InputError("part box axes must be orthonormal")
        if np.any(e < 0) or not np.any(e > 0):
            raise InputError("part box extents must be nonnegative with at least one positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "axes", ax)
        object.__setattr__(self, "extents", e)
        object.__setattr__(self, "point_ids", np.asarray(self.point_ids, dtype=np.int64))


# The six faces of a box: (fixed axis, sign). Order is part of the sampling
# determinism contract.
_FACES = [(0, -1.0), (0, 1.0), (1, -1.0), (1, 1.0), (2, -1.0), (2, 1.0)]


def _face_areas(extents: np.ndarray) -> np.ndarray:
    full = 2.0 * extents
    areas = []
    for axis, _sign in _FACES:
        u, v = [i for i in range(3) if i != axis]
        areas.append(full[u] * full[v])
    return np.array(areas)


def _allocate_counts(weights: np.ndarray, n: int) -> np.ndarray:
    """Largest-remainder proportional allocation; deterministic and exact."""
    total = weights.sum()
    if total <= 0:
        raise InputError("cannot sample: total face area is zero")
    raw = weights / total * n
    counts = np.floor(raw).astype(np.int64)
    rem = n - counts.sum()
    if rem > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:rem]] += 1
    return counts


def sample_boxes_detailed(parts, n: int, seed: int):
    """Area-weighted surface sampling returning canonical face coordinates.

    Returns (points (n,3), part_ids (n,), face_ids (n,), local (n,3)) where
    `local` holds in-box coordinates in [-1, 1]^3 with the face's fixed axis
    at +-1. The canonical coordinates let callers re-pose the same sampling
    pattern onto transformed instances of the boxes.
    """
    if n < len(parts):
        raise InputError(f"need at least one point per part ({len(parts)}), got n={n}")
    degenerate = [i for i, p in enumerate(parts) if not np.any(p.extents > 0)]
    if degenerate:
        raise InputError(f"degenerate box (all extents zero) at parts {degenerate}")

    areas = np.concatenate([_face_areas(p.extents) for p in parts])
    # Guarantee at least one point per part before area allocation.
    part_area = areas.reshape(len(parts), 6).sum(axis=1)
    base = np.zeros(len(parts), dtype=np.int64)
    base[:] = 1
    remaining = n - base.sum()
    extra = _allocate_counts(part_area, remaining) if remaining > 0 else np.zeros_like(base)
    rng = np.random.Generator(np.random.PCG64(seed))

    pts, pids, fids, locs = [], [], [], []
    for pi, part in enumerate(parts):
        n_part = int(base[pi] + extra[pi])
        fa = _face_areas(part.extents)
        if fa.sum() == 0:
            raise InputError(f"part {pi} has zero surface area")
        counts = _allocate_counts(fa, n_part)
        for fi, (axis, sign) in enumerate(_FACES):
            c = int(counts[fi])
            if c == 0:
                continue
            uv = rng.uniform(-1.0, 1.0, size=(c, 2))
            loc = np.zeros((c, 3))
            loc[:, axis] = sign
            u, v = [i for i in range(3) if i != axis]
            loc[:, u] = uv[:, 0]
            loc[:, v] = uv[:, 1]
            world = part.center + (loc * part.extents) @ part.axes
            pts.append(world)
            locs.append(loc)
            pids.append(np.full(c, pi, dtype=np.int64))
            fids.append(np.full(c, fi, dtype=np.int64))
    points = np.concatenate(pts, axis=0)
    return (
        points,
        np.concatenate(pids),
        np.concatenate(fids),
        np.concatenate(locs, axis=0),
    )


def sample_boxes(parts, n: int, seed: int) -> tuple[PointCloud, np.ndarray]:
    """Sample `n` points area-uniformly over the union of box faces."""
    points, pids, _, _ = sample_boxes_detailed(parts, n, seed)
    return PointCloud(points), pids


def save_xyz(path, pc: PointCloud) -> None:
    """Write one "x y z" ASCII-decimal triple per line, LF endings."""
    with open(path, "w", newline="\n") as f:
        for p in pc.points:
            f.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")


def load_xyz(path) -> PointCloud:
    rows = []
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InputError(f"{path}:{line_no}: expected 3 values, got {len(parts)}")
            rows.append([float(v) for v in parts])
    if not rows:
        raise InputError(f"{path}: empty cloud")
    return PointCloud(np.array(rows))
