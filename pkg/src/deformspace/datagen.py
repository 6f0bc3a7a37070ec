"""Procedural shape families with exact correspondences and handle spaces.

Three families, all inside the unit cube [-0.5, 0.5]^3 with z up:

* table: rectangular top on four corner legs (5 boxes, 5 free parameters).
* chair: seat, back, four legs, optional two arms (6 or 8 boxes), so handle
  counts vary across shapes.
* hinge: a carton base with four lid flaps rotating about the top edges;
  only the four angles vary, giving known per-point circular trajectories.

Correspondences: each family samples its canonical (default-parameter) shape
once and re-poses those samples through every instance's box transforms, so
point i of any two same-structure shapes sits on the same face at the same
face coordinates.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .errors import InputError
from .geometry import PartBox, PointCloud, sample_boxes_detailed, save_xyz
from .handles import HandleSpace, build_handle_space

FAMILIES = ("table", "chair", "hinge")

TABLE_RANGES = {
    "top_width": (0.4, 1.0),
    "top_depth": (0.4, 1.0),
    "top_thickness": (0.02, 0.08),
    "leg_height": (0.2, 0.5),
    "leg_side": (0.02, 0.08),
}
TABLE_BASE_Z = -0.25

# limbs are kept chunky so no handle column degenerates (mirrors the
# merge-small-components preprocessing of part-box datasets)
CHAIR_RANGES = {
    "seat_width": (0.4, 0.9),
    "seat_depth": (0.35, 0.7),
    "seat_thickness": (0.04, 0.08),
    "leg_height": (0.15, 0.3),
    "leg_side": (0.04, 0.1),
    "back_height": (0.25, 0.42),
    "back_thickness": (0.03, 0.07),
    "arm_height": (0.08, 0.2),
    "arm_width": (0.03, 0.06),
}
CHAIR_BASE_Z = -0.35

HINGE_ANGLE_RANGE = (0.0, np.pi / 2)
# long flaps make the rotation arcs pronounced relative to sampling noise
HINGE_BASE = {"width": 0.38, "depth": 0.38, "height": 0.12, "flap_length": 0.3, "flap_thickness": 0.015}
HINGE_BASE_Z = -0.25


@dataclass
class ProcShape:
    id: str
    family: str
    params: dict
    parts: list[PartBox]
    labels: list[str]
    cloud: PointCloud
    part_ids: np.ndarray
    handle_space: HandleSpace
    split: str = "train"


def default_params(family: str) -> dict:
    if family == "table":
        return {k: (lo + hi) / 2 for k, (lo, hi) in TABLE_RANGES.items()}
    if family == "chair":
        p = {k: (lo + hi) / 2 for k, (lo, hi) in CHAIR_RANGES.items()}
        p["with_arms"] = True
        return p
    if family == "hinge":
        return {f"angle_{i}": np.pi / 4 for i in range(4)}
    raise InputError(f"unknown family {family!r}")


def _check_ranges(params: dict, ranges: dict) -> None:
    for key, (lo, hi) in ranges.items():
        if key not in params:
            raise InputError(f"missing parameter {key!r}")
        v = params[key]
        if not (lo <= v <= hi):
            raise InputError(f"parameter {key}={v} outside [{lo}, {hi}]")


def _table_parts(params: dict) -> tuple[list[PartBox], list[str]]:
    _check_ranges(params, TABLE_RANGES)
    w, d = params["top_width"], params["top_depth"]
    th, h, side = params["top_thickness"], params["leg_height"], params["leg_side"]
    z0 = TABLE_BASE_Z
    eye = np.eye(3)
    parts = [PartBox([0.0, 0.0, z0 + h + th / 2], eye, [w / 2, d / 2, th / 2])]
    labels = ["top"]
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            parts.append(
                PartBox(
                    [sx * (w / 2 - side / 2), sy * (d / 2 - side / 2), z0 + h / 2],
                    eye,
                    [side / 2, side / 2, h / 2],
                )
            )
            labels.append(f"leg_{'p' if sx > 0 else 'm'}{'p' if sy > 0 else 'm'}")
    return parts, labels


def _chair_parts(params: dict) -> tuple[list[PartBox], list[str]]:
    _check_ranges(params, CHAIR_RANGES)
    if "with_arms" not in params:
        raise InputError("chair parameters need a with_arms flag")
    sw, sd = params["seat_width"], params["seat_depth"]
    st, lh, ls = params["seat_thickness"], params["leg_height"], params["leg_side"]
    bh, bt = params["back_height"], params["back_thickness"]
    ah, aw = params["arm_height"], params["arm_width"]
    z0 = CHAIR_BASE_Z
    eye = np.eye(3)
    seat_top = z0 + lh + st
    parts = [
        PartBox([0.0, 0.0, z0 + lh + st / 2], eye, [sw / 2, sd / 2, st / 2]),
        PartBox([0.0, sd / 2 - bt / 2, seat_top + bh / 2], eye, [sw / 2, bt / 2, bh / 2]),
    ]
    labels = ["seat", "back"]
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            parts.append(
                PartBox(
                    [sx * (sw / 2 - ls / 2), sy * (sd / 2 - ls / 2), z0 + lh / 2],
                    eye,
                    [ls / 2, ls / 2, lh / 2],
                )
            )
            labels.append(f"leg_{'p' if sx > 0 else 'm'}{'p' if sy > 0 else 'm'}")
    if params["with_arms"]:
        for sx in (-1.0, 1.0):
            parts.append(
                PartBox(
                    [sx * (sw / 2 - aw / 2), 0.0, seat_top + ah / 2],
                    eye,
                    [aw / 2, 0.4 * sd, ah / 2],
                )
            )
            labels.append("arm_m" if sx < 0 else "arm_p")
    return parts, labels


def _rot_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    kx = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + np.sin(angle) * kx + (1.0 - np.cos(angle)) * (kx @ kx)


# Flap layout: (outward sign on x or y, hinge rotation axis). Rotating by a
# positive angle lifts the flap's inboard edge.
_HINGE_FLAPS = [
    ("x", 1.0, np.array([0.0, 1.0, 0.0])),
    ("x", -1.0, np.array([0.0, -1.0, 0.0])),
    ("y", 1.0, np.array([-1.0, 0.0, 0.0])),
    ("y", -1.0, np.array([1.0, 0.0, 0.0])),
]


def _hinge_parts(params: dict) -> tuple[list[PartBox], list[str]]:
    for i in range(4):
        key = f"angle_{i}"
        if key not in params:
            raise InputError(f"missing parameter {key!r}")
        if not (HINGE_ANGLE_RANGE[0] <= params[key] <= HINGE_ANGLE_RANGE[1]):
            raise InputError(f"{key}={params[key]} outside [0, pi/2]")
    bw, bd, bh = HINGE_BASE["width"], HINGE_BASE["depth"], HINGE_BASE["height"]
    fl, ft = HINGE_BASE["flap_length"], HINGE_BASE["flap_thickness"]
    z0 = HINGE_BASE_Z
    hinge_z = z0 + bh
    eye = np.eye(3)
    parts = [PartBox([0.0, 0.0, z0 + bh / 2], eye, [bw / 2, bd / 2, bh / 2])]
    labels = ["base"]
    for i, (side, sign, axis) in enumerate(_HINGE_FLAPS):
        angle = params[f"angle_{i}"]
        if side == "x":
            hinge_pt = np.array([sign * bw / 2, 0.0, hinge_z])
            flat_center = np.array([sign * (bw / 2 - fl / 2), 0.0, hinge_z + ft / 2])
            extents = np.array([fl / 2, bd / 2, ft / 2])
        else:
            hinge_pt = np.array([0.0, sign * bd / 2, hinge_z])
            flat_center = np.array([0.0, sign * (bd / 2 - fl / 2), hinge_z + ft / 2])
            extents = np.array([bw / 2, fl / 2, ft / 2])
        rot = _rot_about_axis(axis, angle)
        center = hinge_pt + rot @ (flat_center - hinge_pt)
        # axes rows are the world directions of the local axes: R @ e_u
        parts.append(PartBox(center, rot.T, extents))
        labels.append(f"flap_{side}{'p' if sign > 0 else 'm'}")
    return parts, labels


_PART_BUILDERS = {"table": _table_parts, "chair": _chair_parts, "hinge": _hinge_parts}


def _structure_key(family: str, params: dict):
    if family == "chair":
        return bool(params["with_arms"])
    return None


def _canonical_params(family: str, params: dict) -> dict:
    canon = default_params(family)
    if family == "chair":
        canon["with_arms"] = bool(params["with_arms"])
    return canon


def _generate(family: str, params: dict, n: int, seed: int, shape_id: str) -> ProcShape:
    canon_parts, labels = _PART_BUILDERS[family](_canonical_params(family, params))
    _, pids, _, locs = sample_boxes_detailed(canon_parts, n, seed)
    parts, _ = _PART_BUILDERS[family](params)
    points = np.empty((n, 3))
    boxed = []
    for pi, part in enumerate(parts):
        mask = pids == pi
        points[mask] = part.center + (locs[mask] * part.extents) @ part.axes
        boxed.append(
            PartBox(part.center, part.axes, part.extents, np.nonzero(mask)[0].astype(np.int64))
        )
    cloud = PointCloud(points)
    if np.abs(points).max() > 0.5 + 1e-9:
        raise InputError(f"{shape_id}: shape leaves the unit cube")
    return ProcShape(
        id=shape_id,
        family=family,
        params=dict(params),
        parts=boxed,
        labels=labels,
        cloud=cloud,
        part_ids=pids,
        handle_space=build_handle_space(boxed, cloud),
    )


def gen_table(params: dict, n: int, seed: int, shape_id: str = "table-0") -> ProcShape:
    return _generate("table", params, n, seed, shape_id)


def gen_chair(params: dict, n: int, seed: int, shape_id: str = "chair-0") -> ProcShape:
    return _generate("chair", params, n, seed, shape_id)


def gen_hinge(params: dict, n: int, seed: int, shape_id: str = "hinge-0") -> ProcShape:
    return _generate("hinge", params, n, seed, shape_id)


_M64 = (1 << 64) - 1


def _splitmix64(i: int) -> int:
    z = (i + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return (z ^ (z >> 31)) & _M64


def split_indices(count: int) -> list[str]:
    """85/5/10 split, deterministic by index hash, exact counts."""
    order = sorted(range(count), key=_splitmix64)
    n_train = count * 85 // 100
    n_val = count * 5 // 100
    names = [""] * count
    for rank, idx in enumerate(order):
        if rank < n_train:
            names[idx] = "train"
        elif rank < n_train + n_val:
            names[idx] = "val"
        else:
            names[idx] = "test"
    return names


def _draw_params(family: str, rng: np.random.Generator) -> dict:
    if family == "table":
        return {k: float(rng.uniform(lo, hi)) for k, (lo, hi) in TABLE_RANGES.items()}
    if family == "chair":
        p = {k: float(rng.uniform(lo, hi)) for k, (lo, hi) in CHAIR_RANGES.items()}
        p["with_arms"] = bool(rng.uniform() < 0.5)
        return p
    if family == "hinge":
        return {f"angle_{i}": float(rng.uniform(*HINGE_ANGLE_RANGE)) for i in range(4)}
    raise InputError(f"unknown family {family!r}")


def gen_dataset(family: str, count: int, n: int, seed: int) -> tuple[list[ProcShape], dict]:
    """Draw `count` i.i.d. shapes; every shape shares one sampling pattern."""
    if family not in FAMILIES:
        raise InputError(f"unknown family {family!r}")
    if count < 2:
        raise InputError("dataset needs at least 2 shapes")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 1))))
    splits = split_indices(count)
    shapes = []
    for i in range(count):
        params = _draw_params(family, rng)
        shape = _generate(family, params, n, seed, f"{family}-{i:05d}")
        shape.split = splits[i]
        shapes.append(shape)
    manifest = {
        "family": family,
        "count": count,
        "n": n,
        "seed": seed,
        "shapes": [{"id": s.id, "params": s.params, "split": s.split} for s in shapes],
    }
    return shapes, manifest


def shape_to_json_dict(shape: ProcShape) -> dict:
    return {
        "id": shape.id,
        "points": shape.cloud.points.tolist(),
        "parts": [
            {
                "center": p.center.tolist(),
                "axes": p.axes.tolist(),
                "extents": p.extents.tolist(),
                "point_ids": p.point_ids.tolist(),
            }
            for p in shape.parts
        ],
        "handles": [
            {"part": h.part, "kind": h.kind, "axis": h.axis}
            for h in shape.handle_space.handles
        ],
    }


def save_dataset(out_dir, shapes: list[ProcShape], manifest: dict) -> None:
    os.makedirs(os.path.join(out_dir, "shapes"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "clouds"), exist_ok=True)
    jsonio.dump_path(manifest, os.path.join(out_dir, "manifest.json"))
    for shape in shapes:
        jsonio.dump_path(
            shape_to_json_dict(shape), os.path.join(out_dir, "shapes", f"{shape.id}.json")
        )
        save_xyz(os.path.join(out_dir, "clouds", f"{shape.id}.xyz"), shape.cloud)


def load_dataset(data_dir) -> tuple[list[ProcShape], dict]:
    manifest_path = os.path.join(data_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise InputError(f"{data_dir}: no manifest.json")
    manifest = jsonio.load_path(manifest_path)
    shapes = []
    for entry in manifest["shapes"]:
        d = jsonio.load_path(os.path.join(data_dir, "shapes", f"{entry['id']}.json"))
        cloud = PointCloud(np.array(d["points"]))
        parts = []
        pids = np.full(cloud.n, -1, dtype=np.int64)
        for pi, p in enumerate(d["parts"]):
            part = PartBox(
                np.array(p["center"]),
                np.array(p["axes"]),
                np.array(p["extents"]),
                np.array(p["point_ids"], dtype=np.int64),
            )
            pids[part.point_ids] = pi
            parts.append(part)
        shape = ProcShape(
            id=d["id"],
            family=manifest["family"],
            params=entry["params"],
            parts=parts,
            labels=[],
            cloud=cloud,
            part_ids=pids,
            handle_space=build_handle_space(parts, cloud),
            split=entry["split"],
        )
        shapes.append(shape)
    return shapes, manifest
