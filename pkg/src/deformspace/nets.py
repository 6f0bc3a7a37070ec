"""Point-cloud networks: global encoder and per-point dictionary predictor.

Both are small PointNet-style MLP stacks: shared per-point layers, a global
max-pool, and task heads. Parameters are stored as float32; every forward
pass runs in float64 through the autodiff graph so gradient checks are clean.
ReLU everywhere except the final layer of each head; no normalization layers,
so identical inputs always produce bit-identical outputs.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import InputError, ShapeError, UsageError
from .geometry import PointCloud, chamfer
from .nonlinear import CircularDictionary, deform_circular
from .spaces import Dictionary, LatentCode, LatentDelta, apply, latent_delta

CHECKPOINT_MAGIC = b"DSNC"
CHECKPOINT_VERSION = 1
COLUMN_NORM_EPS = 1e-8

VARIANTS = ("standard", "concat", "circular")


@dataclass(frozen=True)
class NetWidths:
    """Hidden-layer widths; the latent dimension k is appended by the heads."""

    enc_point: tuple[int, ...] = (64, 64, 128)
    enc_head: tuple[int, ...] = (128,)
    dict_point: tuple[int, ...] = (64, 128)
    dict_mix: tuple[int, ...] = (128,)

    def to_dict(self) -> dict:
        return {
            "enc_point": list(self.enc_point),
            "enc_head": list(self.enc_head),
            "dict_point": list(self.dict_point),
            "dict_mix": list(self.dict_mix),
        }

    @staticmethod
    def from_dict(d: dict) -> "NetWidths":
        return NetWidths(
            tuple(d["enc_point"]),
            tuple(d["enc_head"]),
            tuple(d["dict_point"]),
            tuple(d["dict_mix"]),
        )


@dataclass
class MLPParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class EncoderParams:
    point_mlp: MLPParams
    head_mlp: MLPParams


@dataclass
class DictPredictorParams:
    point_mlp: MLPParams
    mix_mlp: MLPParams


@dataclass
class ConcatHeadParams:
    head_mlp: MLPParams


@dataclass
class TrainedModel:
    encoder: EncoderParams
    dict_predictor: DictPredictorParams
    n: int
    k: int
    variant: str = "standard"
    widths: NetWidths = field(default_factory=NetWidths)
    concat_head: ConcatHeadParams | None = None
    normalize_rotations: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise UsageError(f"unknown variant {self.variant!r}")
        if (self.variant == "concat") != (self.concat_head is not None):
            raise UsageError("concat head parameters must be present exactly for the concat variant")


def _mlp_shapes(dims: list[int]) -> list[tuple[int, int]]:
    return list(zip(dims[:-1], dims[1:]))


def _layer_dims(model_or: tuple[NetWidths, int], variant: str) -> dict[str, list[int]]:
    widths, k = model_or
    dims = {
        "encoder.point": [3, *widths.enc_point],
        "encoder.head": [widths.enc_point[-1], *widths.enc_head, k],
        "dict.point": [3, *widths.dict_point],
        "dict.mix": [
            widths.dict_point[0] + widths.dict_point[-1],
            *widths.dict_mix,
            (6 * k if variant == "circular" else 3 * k),
        ],
    }
    if variant == "concat":
        dims["concat.head"] = [2 * widths.enc_point[-1], *widths.enc_head, k]
    return dims


def init_model(
    n: int,
    k: int,
    variant: str = "standard",
    widths: NetWidths | None = None,
    seed: int = 0,
    normalize_rotations: bool = True,
) -> TrainedModel:
    """Seed-controlled Glorot-uniform initialization; biases start at zero."""
    if variant not in VARIANTS:
        raise UsageError(f"unknown variant {variant!r}")
    widths = widths or NetWidths()
    rng = np.random.Generator(np.random.PCG64(seed))
    dims = _layer_dims((widths, k), variant)

    def make_mlp(dim_list):
        ws, bs = [], []
        for fan_in, fan_out in _mlp_shapes(dim_list):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            ws.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(np.float32))
            bs.append(np.zeros(fan_out, dtype=np.float32))
        return MLPParams(ws, bs)

    encoder = EncoderParams(make_mlp(dims["encoder.point"]), make_mlp(dims["encoder.head"]))
    predictor = DictPredictorParams(make_mlp(dims["dict.point"]), make_mlp(dims["dict.mix"]))
    concat_head = ConcatHeadParams(make_mlp(dims["concat.head"])) if variant == "concat" else None
    return TrainedModel(
        encoder=encoder,
        dict_predictor=predictor,
        n=n,
        k=k,
        variant=variant,
        widths=widths,
        concat_head=concat_head,
        normalize_rotations=normalize_rotations,
    )


def _mlp_groups(model: TrainedModel) -> list[tuple[str, MLPParams]]:
    groups = [
        ("encoder.point", model.encoder.point_mlp),
        ("encoder.head", model.encoder.head_mlp),
        ("dict.point", model.dict_predictor.point_mlp),
        ("dict.mix", model.dict_predictor.mix_mlp),
    ]
    if model.concat_head is not None:
        groups.append(("concat.head", model.concat_head.head_mlp))
    return groups


def named_arrays(model: TrainedModel) -> list[tuple[str, np.ndarray]]:
    """Canonical (name, float32 array) ordering used by checkpoints and Adam."""
    out = []
    for prefix, mlp in _mlp_groups(model):
        for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
            out.append((f"{prefix}.{i}.w", w))
            out.append((f"{prefix}.{i}.b", b))
    return out


def params64(model: TrainedModel) -> dict[str, ad.Var]:
    """Float64 graph leaves for every parameter array."""
    return {name: ad.Var(arr.astype(np.float64)) for name, arr in named_arrays(model)}


def collect_gradients(loss: ad.Var, params: dict[str, ad.Var]) -> dict[str, np.ndarray]:
    """Run reverse-mode on `loss` and read one gradient per parameter.

    Parameters the loss never touched get exact zeros.
    """
    if not isinstance(loss, ad.Var):
        raise UsageError("no recorded forward pass: loss must be an autodiff Var")
    ad.backward(loss)
    return {
        name: (p.grad if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }


# -- graph builders (batched; pts is a Var of shape (B, n, 3)) --------------


def _g_mlp(p: dict[str, ad.Var], prefix: str, x: ad.Var, relu_last: bool) -> ad.Var:
    i = 0
    while f"{prefix}.{i}.w" in p:
        x = ad.add(ad.matmul(x, p[f"{prefix}.{i}.w"]), p[f"{prefix}.{i}.b"])
        is_last = f"{prefix}.{i + 1}.w" not in p
        if relu_last or not is_last:
            x = ad.relu(x)
        i += 1
    return x


def g_pooled_features(p: dict[str, ad.Var], pts: ad.Var) -> ad.Var:
    h = _g_mlp(p, "encoder.point", pts, relu_last=True)
    return ad.vmax(h, axis=1)


def g_encode(p: dict[str, ad.Var], pts: ad.Var) -> ad.Var:
    return _g_mlp(p, "encoder.head", g_pooled_features(p, pts), relu_last=False)


def g_concat_delta(p: dict[str, ad.Var], pts_src: ad.Var, pts_tgt: ad.Var) -> ad.Var:
    both = ad.concat([g_pooled_features(p, pts_src), g_pooled_features(p, pts_tgt)], axis=1)
    return _g_mlp(p, "concat.head", both, relu_last=False)


def _g_dict_pointwise(p: dict[str, ad.Var], pts: ad.Var) -> ad.Var:
    b, n, _ = pts.data.shape
    h1 = ad.relu(ad.add(ad.matmul(pts, p["dict.point.0.w"]), p["dict.point.0.b"]))
    h = h1
    i = 1
    while f"dict.point.{i}.w" in p:
        h = ad.relu(ad.add(ad.matmul(h, p[f"dict.point.{i}.w"]), p[f"dict.point.{i}.b"]))
        i += 1
    pooled = ad.vmax(h, axis=1)  # (B, F)
    tiled = ad.add(ad.reshape(pooled, (b, 1, pooled.data.shape[1])), np.zeros((b, n, 1)))
    mix_in = ad.concat([h1, tiled], axis=2)
    return _g_mlp(p, "dict.mix", mix_in, relu_last=False)  # (B, n, out)


def g_dictionary(p: dict[str, ad.Var], pts: ad.Var, k: int) -> tuple[ad.Var, int]:
    """Assemble the (B, 3n, k) dictionary, point-major rows, unit columns.

    Per-point outputs are laid out as k consecutive (x, y, z) offset triples.
    Returns the matrix and the count of columns too small to normalize.
    """
    out = _g_dict_pointwise(p, pts)
    b, n = pts.data.shape[0], pts.data.shape[1]
    a = ad.reshape(out, (b, n, k, 3))
    a = ad.transpose(a, (0, 1, 3, 2))
    a = ad.reshape(a, (b, 3 * n, k))
    norms = ad.sqrt(ad.vsum(ad.mul(a, a), axis=1, keepdims=True))  # (B, 1, k)
    tiny = norms.data < COLUMN_NORM_EPS
    denom = ad.select(tiny, np.ones_like(norms.data), norms)
    return ad.div(a, denom), int(tiny.sum())


def g_circular_fields(
    p: dict[str, ad.Var], pts: ad.Var, k: int, normalize: bool
) -> tuple[ad.Var, ad.Var]:
    """Per-point rotation vectors and centers, each (B, n, k, 3)."""
    out = _g_dict_pointwise(p, pts)
    b, n = pts.data.shape[0], pts.data.shape[1]
    o = ad.reshape(out, (b, n, k, 6))
    rv = ad.slice_axis(o, 3, 0, 3)
    cv = ad.slice_axis(o, 3, 3, 6)
    if normalize:
        norms = ad.sqrt(ad.vsum(ad.mul(rv, rv), axis=3, keepdims=True))
        tiny = norms.data < COLUMN_NORM_EPS
        rv = ad.div(rv, ad.select(tiny, np.ones_like(norms.data), norms))
    return rv, cv


def g_deform_linear(a: ad.Var, v: ad.Var, pts: ad.Var) -> ad.Var:
    """pts + reshape(A @ v): a (B,3n,k), v (B,k), pts (B,n,3)."""
    b, n, _ = pts.data.shape
    offs = ad.matmul(a, ad.reshape(v, (b, v.data.shape[1], 1)))
    return ad.add(pts, ad.reshape(offs, (b, n, 3)))


def g_deform_circular(rv: ad.Var, cv: ad.Var, v: ad.Var, pts: ad.Var) -> ad.Var:
    """Sum of per-element rotations about per-point centers, then add pts.

    offset_ij = sin(t)(rhat x u) + (1 - cos(t))(rhat x (rhat x u)) with
    u = x_i - C_ij and t = v_j * |R_ij|; the Rodrigues closed form of
    (exp([v_j R_ij]x) - I)(x_i - C_ij).
    """
    b, n, _ = pts.data.shape
    k = rv.data.shape[2]
    u = ad.sub(ad.reshape(pts, (b, n, 1, 3)), cv)  # (B,n,k,3)
    rnorm = ad.sqrt(ad.vsum(ad.mul(rv, rv), axis=3, keepdims=True))  # (B,n,k,1)
    tiny = rnorm.data < 1e-12
    rhat = ad.div(rv, ad.select(tiny, np.ones_like(rnorm.data), rnorm))
    theta = ad.mul(ad.reshape(v, (b, 1, k, 1)), rnorm)
    k1 = ad.cross(rhat, u)
    k2 = ad.cross(rhat, k1)
    off = ad.add(ad.mul(ad.sin(theta), k1), ad.mul(ad.sub(1.0, ad.cos(theta)), k2))
    return ad.add(pts, ad.vsum(off, axis=2))


def g_latent_delta(p: dict[str, ad.Var], model: TrainedModel, src: ad.Var, tgt: ad.Var) -> ad.Var:
    if model.variant == "concat":
        return g_concat_delta(p, src, tgt)
    return ad.sub(g_encode(p, tgt), g_encode(p, src))


def g_deform(p: dict[str, ad.Var], model: TrainedModel, src: ad.Var, tgt: ad.Var) -> ad.Var:
    v = g_latent_delta(p, model, src, tgt)
    if model.variant == "circular":
        rv, cv = g_circular_fields(p, src, model.k, model.normalize_rotations)
        return g_deform_circular(rv, cv, v, src)
    a, _ = g_dictionary(p, src, model.k)
    return g_deform_linear(a, v, src)


# -- public single-cloud API -------------------------------------------------


def _check_n(model: TrainedModel, pc: PointCloud) -> None:
    if pc.n != model.n:
        raise ShapeError(f"cloud has {pc.n} points but the model expects {model.n}")


def _batch1(pc: PointCloud) -> ad.Var:
    return ad.Var(pc.points[None, :, :])


def encode(model: TrainedModel, pc: PointCloud) -> LatentCode:
    """Global latent code; permutation-invariant through the max-pool."""
    _check_n(model, pc)
    return LatentCode(g_encode(params64(model), _batch1(pc)).data[0])


def predict_dictionary(model: TrainedModel, pc: PointCloud) -> Dictionary:
    """Column-normalized 3n x k deformation dictionary for `pc`."""
    if model.variant == "circular":
        raise UsageError("circular variant predicts rotation fields, not a linear dictionary")
    _check_n(model, pc)
    a, skipped = g_dictionary(params64(model), _batch1(pc), model.k)
    return Dictionary(a.data[0], unnormalized_columns=skipped)


def latent_delta_concat(model: TrainedModel, src: PointCloud, tgt: PointCloud) -> LatentDelta:
    """Ablation head: learned function of concatenated pooled features."""
    if model.variant != "concat":
        raise UsageError("latent_delta_concat requires the concat variant")
    _check_n(model, src)
    _check_n(model, tgt)
    p = params64(model)
    return LatentDelta(g_concat_delta(p, _batch1(src), _batch1(tgt)).data[0])


def predict_circular(model: TrainedModel, pc: PointCloud) -> CircularDictionary:
    if model.variant != "circular":
        raise UsageError("predict_circular requires the circular variant")
    _check_n(model, pc)
    rv, cv = g_circular_fields(params64(model), _batch1(pc), model.k, model.normalize_rotations)
    return CircularDictionary(rv.data[0], cv.data[0], normalized=model.normalize_rotations)


def model_delta(model: TrainedModel, src: PointCloud, tgt: PointCloud) -> LatentDelta:
    """Latent deformation vector from src to tgt under the model's variant."""
    if model.variant == "concat":
        return latent_delta_concat(model, src, tgt)
    return latent_delta(encode(model, src), encode(model, tgt))


def deform_by_delta(model: TrainedModel, base: PointCloud, v: LatentDelta) -> PointCloud:
    """Act on `base` with a latent delta through base's own predicted fields."""
    _check_n(model, base)
    if model.variant == "circular":
        return deform_circular(base, predict_circular(model, base), v)
    return apply(base, predict_dictionary(model, base), v)


def deform(model: TrainedModel, src: PointCloud, tgt: PointCloud) -> PointCloud:
    """Target-driven deformation of src toward tgt."""
    return deform_by_delta(model, src, model_delta(model, src, tgt))


def transfer(
    model: TrainedModel, src: PointCloud, tgt: PointCloud, dst: PointCloud
) -> PointCloud:
    """Carry the src->tgt deformation over to dst via dst's own dictionary."""
    return deform_by_delta(model, dst, model_delta(model, src, tgt))


def parallelogram_gap(
    model: TrainedModel, x: PointCloud, y: PointCloud, z: PointCloud
) -> float:
    """Chamfer distance between the two deformation pathways of a triple."""
    via_z = deform_by_delta(model, z, model_delta(model, x, y))
    via_y = deform_by_delta(model, y, model_delta(model, x, z))
    return chamfer(via_z, via_y).value


def two_way_error(model: TrainedModel, x: PointCloud, y: PointCloud) -> float:
    """Mean squared sum of forward and backward per-point offsets.

    Requires x and y to be index-aligned (ground-truth correspondences).
    """
    if x.n != y.n:
        raise ShapeError("two-way error needs index-aligned clouds of equal size")
    fwd = deform(model, x, y).points - x.points
    bwd = deform(model, y, x).points - y.points
    return float(np.square(fwd + bwd).sum(axis=1).mean())


# -- checkpoint I/O -----------------------------------------------------------


def save_checkpoint(model: TrainedModel, path) -> None:
    """Binary container: magic, version, JSON header, float32 LE blobs.

    Written atomically (temp file + rename).
    """
    arrays = named_arrays(model)
    table = []
    offset = 0
    for name, arr in arrays:
        table.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size * 4
    header = {
        "n": model.n,
        "k": model.k,
        "variant": model.variant,
        "widths": model.widths.to_dict(),
        "normalize_rotations": model.normalize_rotations,
        "tensors": table,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    dirname = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=dirname, prefix=".ckpt-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(CHECKPOINT_MAGIC)
            f.write(np.uint32(CHECKPOINT_VERSION).tobytes())
            f.write(np.uint64(len(header_bytes)).tobytes())
            f.write(header_bytes)
            for _, arr in arrays:
                f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> TrainedModel:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise InputError(f"{path}: not a checkpoint (bad magic)")
    version = int(np.frombuffer(blob, "<u4", count=1, offset=4)[0])
    if version != CHECKPOINT_VERSION:
        raise InputError(f"{path}: unsupported checkpoint version {version}")
    header_len = int(np.frombuffer(blob, "<u8", count=1, offset=8)[0])
    header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    base = 16 + header_len
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, "<f4", count=count, offset=base + entry["offset"]).reshape(shape)
        tensors[entry["name"]] = arr.copy()

    model = init_model(
        n=header["n"],
        k=header["k"],
        variant=header["variant"],
        widths=NetWidths.from_dict(header["widths"]),
        seed=0,
        normalize_rotations=header.get("normalize_rotations", True),
    )
    for name, arr in named_arrays(model):
        if name not in tensors:
            raise InputError(f"{path}: missing tensor {name}")
        if tensors[name].shape != arr.shape:
            raise InputError(f"{path}: tensor {name} has shape {tensors[name].shape}, expected {arr.shape}")
        arr[...] = tensors[name]
    return model
