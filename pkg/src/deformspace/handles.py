"""Part-box deformation handles and constrained edit projection.

Every part box contributes six handles: translation along each local axis
(value = center coordinate on that axis, so the defaults reproduce the rest
shape) and anisotropic scale about the box center along each local axis
(default 1, lower bound 0). The basis B maps handle values to the flattened
cloud: B @ defaults == rest shape.

Edits fix a subset of handle values; the remaining handles are chosen so the
edited shape stays as close as possible to the span of the learned dictionary,
solving the constrained least-squares problem in offset coordinates relative
to the defaults (so untouched handles prefer their rest values).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import InputError, ShapeError
from .geometry import PartBox, PointCloud
from .spaces import Dictionary

KIND_TRANSLATION = "translation"
KIND_SCALE = "scale"

# Above this row count the complement projector I - A A^+ is applied as two
# matvecs instead of being materialized.
EXPLICIT_PROJECTOR_MAX_DIM = 4096


@dataclass(frozen=True)
class Handle:
    part: int
    kind: str
    axis: int

    def __post_init__(self):
        if self.kind not in (KIND_TRANSLATION, KIND_SCALE):
            raise InputError(f"unknown handle kind {self.kind!r}")
        if self.axis not in (0, 1, 2):
            raise InputError(f"handle axis must be 0, 1 or 2, got {self.axis}")


@dataclass(frozen=True)
class HandleSpace:
    basis: np.ndarray  # (3n, m)
    defaults: np.ndarray  # (m,)
    handles: tuple[Handle, ...]
    lower_bounds: tuple  # per handle: None or float

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.float64)
        z0 = np.asarray(self.defaults, dtype=np.float64)
        m = len(self.handles)
        if b.ndim != 2 or b.shape[1] != m or z0.shape != (m,) or len(self.lower_bounds) != m:
            raise ShapeError("handle space fields disagree on the handle count")
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "defaults", z0)
        object.__setattr__(self, "handles", tuple(self.handles))
        object.__setattr__(self, "lower_bounds", tuple(self.lower_bounds))

    @property
    def m(self) -> int:
        return len(self.handles)

    @property
    def n(self) -> int:
        return self.basis.shape[0] // 3

    def rest_cloud(self) -> PointCloud:
        return PointCloud.from_flat(self.basis @ self.defaults)

    def pinv(self) -> np.ndarray:
        """Pseudoinverse of the basis, computed once per instance."""
        cached = getattr(self, "_pinv_cache", None)
        if cached is None:
            cached = linalg.pinv(self.basis)
            object.__setattr__(self, "_pinv_cache", cached)
        return cached


@dataclass(frozen=True)
class EditRequest:
    selected: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        sel = tuple(int(i) for i in self.selected)
        vals = tuple(float(v) for v in self.values)
        if len(sel) != len(set(sel)):
            raise InputError("selected handle indices must be distinct")
        if len(sel) != len(vals):
            raise InputError("one prescribed value per selected handle")
        object.__setattr__(self, "selected", sel)
        object.__setattr__(self, "values", vals)


def build_handle_space(parts: list[PartBox], pc: PointCloud) -> HandleSpace:
    """Construct B, defaults and bounds from part boxes owning all points."""
    n = pc.n
    owner = np.full(n, -1, dtype=np.int64)
    for pi, part in enumerate(parts):
        ids = part.point_ids
        if ids.size and (ids.min() < 0 or ids.max() >= n):
            raise InputError(f"part {pi} references point ids outside the cloud")
        if np.any(owner[ids] >= 0):
            raise InputError(f"part {pi} overlaps another part's points")
        owner[ids] = pi
    if np.any(owner < 0):
        raise InputError(f"parts do not cover {int((owner < 0).sum())} points")

    m = 6 * len(parts)
    basis = np.zeros((3 * n, m))
    defaults = np.zeros(m)
    handles: list[Handle] = []
    lower: list = []
    col = 0
    for pi, part in enumerate(parts):
        ids = part.point_ids
        rows = (3 * ids[:, None] + np.arange(3)).reshape(-1)
        local = (pc.points[ids] - part.center) @ part.axes.T  # (n_p, 3)
        for axis in range(3):
            u = part.axes[axis]
            basis[rows, col] = np.tile(u, ids.size)
            defaults[col] = float(part.center @ u)
            handles.append(Handle(pi, KIND_TRANSLATION, axis))
            lower.append(None)
            col += 1
        for axis in range(3):
            u = part.axes[axis]
            basis[rows, col] = (local[:, axis : axis + 1] * u).reshape(-1)
            defaults[col] = 1.0
            handles.append(Handle(pi, KIND_SCALE, axis))
            lower.append(0.0)
            col += 1
    hs = HandleSpace(basis, defaults, tuple(handles), tuple(lower))
    rest = hs.rest_cloud().points
    if np.abs(rest - pc.points).max() > 1e-10:
        raise InputError("handle basis does not reproduce the rest shape")
    return hs


def project_to_handles(hs: HandleSpace, pc: PointCloud) -> PointCloud:
    """Orthogonal projection of a cloud onto the handle space: B B^+ x."""
    flat = pc.flat
    if flat.shape[0] != hs.basis.shape[0]:
        raise ShapeError(f"cloud size {pc.n} does not match handle space ({hs.n})")
    return PointCloud.from_flat(hs.basis @ (hs.pinv() @ flat))


@dataclass(frozen=True)
class EditOperators:
    """Precomputed pieces for projecting edits with a fixed selected set."""

    selected: tuple[int, ...]
    unselected: np.ndarray
    b_selected: np.ndarray
    p_mat: np.ndarray
    p_pinv: np.ndarray
    lower_delta: tuple
    complement: object  # callable y -> (I - A A^+) y
    m: int

    def apply_complement(self, y: np.ndarray) -> np.ndarray:
        return self.complement(y)


def _complement_projector(dictionary: Dictionary, rcond: float = linalg.DEFAULT_RCOND):
    """Returns y -> (I - A A^+) y, materialized only for small dimensions."""
    a = dictionary.matrix
    u, s, _ = linalg.svd(a)
    if s.size and s[0] > 0:
        rank = int((s > rcond * s[0]).sum())
    else:
        rank = 0
    ur = u[:, :rank]
    dim = a.shape[0]
    if dim <= EXPLICIT_PROJECTOR_MAX_DIM:
        m = np.eye(dim) - ur @ ur.T
        return lambda y: m @ y
    return lambda y: y - ur @ (ur.T @ y)


def precompute_edit_operators(
    hs: HandleSpace, dictionary: Dictionary, selected
) -> EditOperators:
    """Cacheable operators for one selected-handle set (e.g. per slider)."""
    sel = tuple(int(i) for i in selected)
    for i in sel:
        if not 0 <= i < hs.m:
            raise InputError(f"handle index {i} out of range (m={hs.m})")
    if len(sel) != len(set(sel)):
        raise InputError("selected handle indices must be distinct")
    if dictionary.matrix.shape[0] != hs.basis.shape[0]:
        raise ShapeError("dictionary and handle space disagree on 3n")
    unsel = np.array([i for i in range(hs.m) if i not in set(sel)], dtype=np.int64)
    complement = _complement_projector(dictionary)
    b_prime = hs.basis[:, unsel] if unsel.size else np.zeros((hs.basis.shape[0], 0))
    if unsel.size:
        # Singular values of P below the scale of B' are projection round-off
        # (the handle direction lies inside the learned space); truncating
        # them keeps those coefficients at their defaults instead of fitting
        # numerical noise.
        u, s, vt = linalg.svd(complement(b_prime))
        cutoff = linalg.DEFAULT_RCOND * max(1.0, float(np.linalg.norm(b_prime)))
        s_clean = np.where(s > cutoff, s, 0.0)
        p_mat = (u * s_clean) @ vt
        inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
        p_pinv = (vt.T * inv_s) @ u.T
    else:
        p_mat = b_prime
        p_pinv = np.zeros((0, hs.basis.shape[0]))
    lower_delta = tuple(
        None if hs.lower_bounds[i] is None else hs.lower_bounds[i] - hs.defaults[i]
        for i in unsel
    )
    return EditOperators(
        selected=sel,
        unselected=unsel,
        b_selected=hs.basis[:, list(sel)] if sel else np.zeros((hs.basis.shape[0], 0)),
        p_mat=p_mat,
        p_pinv=p_pinv,
        lower_delta=lower_delta,
        complement=complement,
        m=hs.m,
    )


def project_edit(
    hs: HandleSpace,
    dictionary: Dictionary,
    x: PointCloud,
    edit: EditRequest,
    ops: EditOperators | None = None,
) -> tuple[np.ndarray, PointCloud]:
    """Fix the selected handles and snap the rest into the learned space.

    Solves, in offsets relative to the defaults,
        min_{z', v} || (B' z' + c) - A v ||^2   with c = B_S (z_in - z0_S),
    subject to scale handles staying >= 0. Selected entries of the returned
    vector equal the prescribed values bit-exactly; with nothing to optimize
    (rank-0 residual operator) the remaining handles keep their defaults.
    """
    if x.n != hs.n:
        raise ShapeError(f"cloud has {x.n} points, handle space expects {hs.n}")
    if ops is None:
        ops = precompute_edit_operators(hs, dictionary, edit.selected)
    elif tuple(ops.selected) != tuple(edit.selected):
        raise InputError("edit operators were precomputed for a different selection")

    zhat = hs.defaults.copy()
    sel = np.array(edit.selected, dtype=np.int64)
    values = np.array(edit.values, dtype=np.float64)

    if ops.unselected.size == 0:
        if sel.size:
            zhat[sel] = values
        return zhat, PointCloud.from_flat(hs.basis @ zhat)

    delta_sel = values - hs.defaults[sel] if sel.size else np.zeros(0)
    c = ops.b_selected @ delta_sel if sel.size else np.zeros(hs.basis.shape[0])
    q = -ops.apply_complement(c)
    if any(lo is not None for lo in ops.lower_delta):
        delta_unsel = linalg.lstsq_bounded(ops.p_mat, q, ops.lower_delta)
    else:
        delta_unsel = ops.p_pinv @ q
    zhat[ops.unselected] = hs.defaults[ops.unselected] + delta_unsel
    if sel.size:
        zhat[sel] = values
    return zhat, PointCloud.from_flat(hs.basis @ zhat)
