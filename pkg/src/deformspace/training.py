"""Loss suite, pair sampling, Adam, and the training loop.

Total objective: fitting Chamfer + reflection-symmetry Chamfer + weighted
column-wise l2,1 sparsity of the handle-projected dictionary. The entrywise
l1 sparsity is computed for reporting only. All gradients flow through the
autodiff graph; parameters are float32 at rest and float64 in flight.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import nets
from .errors import InputError, NumericalError, ShapeError, UsageError
from .geometry import PointCloud
from .handles import HandleSpace
from .nets import NetWidths, TrainedModel

SPARSITY_NORM_EPS2 = 1e-24


@dataclass
class TrainConfig:
    k: int = 32
    n: int = 512
    w_sparsity: float = 10.0
    use_reflection: bool = True
    reflection_axis: int = 0
    project_in_training: bool = False
    lr: float = 1e-3
    epochs: int = 20
    batch_pairs: int = 8
    seed: int = 0
    variant: str = "standard"
    self_pair_prob: float = 0.05
    checkpoint_every: int = 0
    normalize_rotations: bool = True
    widths: NetWidths = field(default_factory=NetWidths)

    def __post_init__(self):
        if self.w_sparsity < 0:
            raise InputError("w_sparsity must be nonnegative")
        for name in ("k", "n", "epochs", "batch_pairs"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")


_CONFIG_FILE_SKIP = {"widths"}


def parse_config_file(path) -> dict:
    """Flat "key = value" pairs; unknown keys are rejected."""
    fields = {f.name: f.type for f in dataclasses.fields(TrainConfig) if f.name not in _CONFIG_FILE_SKIP}
    out = {}
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InputError(f"{path}:{line_no}: expected key = value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in fields:
                raise InputError(f"{path}:{line_no}: unknown config key {key!r}")
            out[key] = _coerce(key, value, fields[key], path, line_no)
    return out


def _coerce(key, value, ftype, path, line_no):
    ftype = str(ftype)
    try:
        if "bool" in ftype:
            low = value.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if "int" in ftype:
            return int(value)
        if "float" in ftype:
            return float(value)
        return value
    except ValueError as exc:
        raise InputError(f"{path}:{line_no}: bad value for {key}: {value!r}") from exc


@dataclass(frozen=True)
class LossBreakdown:
    fitting: float
    reflection: float
    sparsity_l1: float
    sparsity_l21: float
    total: float

    def __post_init__(self):
        for name in ("fitting", "reflection", "sparsity_l1", "sparsity_l21", "total"):
            if getattr(self, name) < 0:
                raise NumericalError(f"negative loss component {name}")


# -- graph pieces -------------------------------------------------------------


def g_chamfer(a: ad.Var, b: ad.Var) -> ad.Var:
    """Batched symmetric squared Chamfer, shape (B,). Assignments fixed."""
    from .geometry import pairwise_sq

    d2 = pairwise_sq(a.data, b.data)
    nn_ab = d2.argmin(axis=2)
    nn_ba = d2.argmin(axis=1)
    da = ad.sub(a, ad.gather_points(b, nn_ab))
    db = ad.sub(b, ad.gather_points(a, nn_ba))
    return ad.add(
        ad.vmean(ad.vsum(ad.mul(da, da), axis=2), axis=1),
        ad.vmean(ad.vsum(ad.mul(db, db), axis=2), axis=1),
    )


def g_mirror(d: ad.Var, axis: int) -> ad.Var:
    flip = np.ones(3)
    flip[axis] = -1.0
    return ad.mul(d, flip)


def g_project_cloud(d: ad.Var, hs_list: list[HandleSpace]) -> ad.Var:
    """Per-shape orthogonal projection B B^+ of each deformed batch entry."""
    b, n, _ = d.data.shape
    outs = []
    for i, hs in enumerate(hs_list):
        flat = ad.reshape(ad.slice_axis(d, 0, i, i + 1), (3 * n, 1))
        proj = ad.matmul(hs.basis, ad.matmul(hs.pinv(), flat))
        outs.append(ad.reshape(proj, (1, n, 3)))
    return ad.concat(outs, axis=0)


def _projected_dictionary(a: ad.Var, i: int, hs: HandleSpace) -> ad.Var:
    """(B_x^+ A_x) for batch entry i: shape (m, k)."""
    rows = a.data.shape[1]
    ai = ad.reshape(ad.slice_axis(a, 0, i, i + 1), (rows, a.data.shape[2]))
    return ad.matmul(hs.pinv(), ai)


def g_sparsity_l21(a: ad.Var, hs_list: list[HandleSpace], k: int) -> ad.Var:
    """Mean over batch of (1/k) * sum of column norms of B^+ A.

    Zero columns contribute zero with zero subgradient.
    """
    terms = []
    for i, hs in enumerate(hs_list):
        proj = _projected_dictionary(a, i, hs)
        sq = ad.vsum(ad.mul(proj, proj), axis=0)  # (k,)
        tiny = sq.data < SPARSITY_NORM_EPS2
        norms = ad.select(tiny, np.zeros_like(sq.data), ad.sqrt(ad.select(tiny, np.ones_like(sq.data), sq)))
        terms.append(ad.mul(ad.vsum(norms), 1.0 / k))
    total = terms[0]
    for t in terms[1:]:
        total = ad.add(total, t)
    return ad.mul(total, 1.0 / len(terms))


def g_sparsity_l1(a: ad.Var, hs_list: list[HandleSpace], k: int) -> ad.Var:
    terms = []
    for i, hs in enumerate(hs_list):
        proj = _projected_dictionary(a, i, hs)
        mask = proj.data >= 0
        absval = ad.select(mask, proj, ad.mul(proj, -1.0))
        terms.append(ad.mul(ad.vsum(absval), 1.0 / k))
    total = terms[0]
    for t in terms[1:]:
        total = ad.add(total, t)
    return ad.mul(total, 1.0 / len(terms))


def _deformed_batch(
    p64, model: TrainedModel, src: ad.Var, tgt: ad.Var, cfg: TrainConfig, hs_list
) -> ad.Var:
    d = nets.g_deform(p64, model, src, tgt)
    if cfg.project_in_training:
        if hs_list is None:
            raise UsageError("project_in_training requires handle spaces for the sources")
        d = g_project_cloud(d, hs_list)
    return d


# -- public per-pair losses ---------------------------------------------------


def _pair_vars(model, src: PointCloud, tgt: PointCloud):
    if src.n != model.n or tgt.n != model.n:
        raise ShapeError(f"loss inputs must have {model.n} points")
    return ad.Var(src.points[None]), ad.Var(tgt.points[None])


def loss_fitting(
    model: TrainedModel,
    src: PointCloud,
    tgt: PointCloud,
    cfg: TrainConfig,
    handle_space: HandleSpace | None = None,
) -> tuple[float, dict]:
    """Chamfer between the deformed source and the target, with gradients."""
    p64 = nets.params64(model)
    s, t = _pair_vars(model, src, tgt)
    hs_list = [handle_space] if handle_space is not None else None
    d = _deformed_batch(p64, model, s, t, cfg, hs_list)
    loss = ad.vmean(g_chamfer(d, t))
    return float(loss.data), nets.collect_gradients(loss, p64)


def loss_reflection(
    model: TrainedModel, src: PointCloud, tgt: PointCloud, cfg: TrainConfig
) -> tuple[float, dict]:
    """Chamfer between the deformed source and its own mirror image."""
    p64 = nets.params64(model)
    s, t = _pair_vars(model, src, tgt)
    d = nets.g_deform(p64, model, s, t)
    loss = ad.vmean(g_chamfer(d, g_mirror(d, cfg.reflection_axis)))
    return float(loss.data), nets.collect_gradients(loss, p64)


def loss_sparsity_l1(
    model: TrainedModel, src: PointCloud, hs: HandleSpace
) -> tuple[float, dict]:
    """(1/k) entrywise absolute sum of the handle-projected dictionary."""
    p64 = nets.params64(model)
    s = ad.Var(src.points[None])
    a, _ = nets.g_dictionary(p64, s, model.k)
    loss = g_sparsity_l1(a, [hs], model.k)
    return float(loss.data), nets.collect_gradients(loss, p64)


def loss_sparsity_l21(
    model: TrainedModel, src: PointCloud, hs: HandleSpace
) -> tuple[float, dict]:
    """(1/k) sum of column norms of the handle-projected dictionary."""
    p64 = nets.params64(model)
    s = ad.Var(src.points[None])
    a, _ = nets.g_dictionary(p64, s, model.k)
    loss = g_sparsity_l21(a, [hs], model.k)
    return float(loss.data), nets.collect_gradients(loss, p64)


# -- optimizer ----------------------------------------------------------------


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, arrays: list[tuple[str, np.ndarray]], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, arr in arrays:
            g = grads[name]
            m = self.m.setdefault(name, np.zeros(arr.shape))
            v = self.v.setdefault(name, np.zeros(arr.shape))
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1**self.t)
            vhat = v / (1 - b2**self.t)
            upd = arr.astype(np.float64) - self.lr * mhat / (np.sqrt(vhat) + self.eps)
            arr[...] = upd.astype(np.float32)


# -- pair sampling ------------------------------------------------------------


def sample_pair_indices(rng: np.random.Generator, n_shapes: int, count: int, self_prob: float):
    """Uniform ordered pairs i != j, with a small chance of identity pairs."""
    pairs = np.empty((count, 2), dtype=np.int64)
    for row in range(count):
        if n_shapes > 1 and rng.uniform() >= self_prob:
            i = int(rng.integers(n_shapes))
            j = int(rng.integers(n_shapes - 1))
            if j >= i:
                j += 1
        else:
            i = j = int(rng.integers(n_shapes))
        pairs[row] = (i, j)
    return pairs


# -- training loop ------------------------------------------------------------


class TrainingDiverged(NumericalError):
    def __init__(self, message, checkpoint_path=None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path


def train(
    shapes,
    cfg: TrainConfig,
    out_path=None,
    epoch_callback=None,
) -> tuple[TrainedModel, list[LossBreakdown]]:
    """Train on the dataset's train split with uniformly sampled ordered pairs.

    Deterministic for a fixed config. Saves `out_path` at the end (and
    periodically when cfg.checkpoint_every > 0); on divergence the last good
    parameters are saved next to it and TrainingDiverged is raised.
    """
    train_shapes = [s for s in shapes if getattr(s, "split", "train") == "train"]
    if len(train_shapes) < 2:
        raise InputError("training needs at least 2 shapes in the train split")
    for s in train_shapes:
        if s.cloud.n != cfg.n:
            raise ShapeError(f"shape {s.id} has {s.cloud.n} points, config says {cfg.n}")

    model = nets.init_model(
        n=cfg.n,
        k=cfg.k,
        variant=cfg.variant,
        widths=cfg.widths,
        seed=cfg.seed,
        normalize_rotations=cfg.normalize_rotations,
    )
    arrays = nets.named_arrays(model)
    opt = Adam(lr=cfg.lr)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((cfg.seed, 2))))
    clouds = np.stack([s.cloud.points for s in train_shapes])
    spaces = [s.handle_space for s in train_shapes]
    use_sparsity = cfg.w_sparsity > 0 and cfg.variant != "circular"
    report_sparsity = cfg.variant != "circular"

    history: list[LossBreakdown] = []
    steps_per_epoch = max(1, len(train_shapes) // cfg.batch_pairs)
    for epoch in range(cfg.epochs):
        for _ in range(steps_per_epoch):
            pairs = sample_pair_indices(rng, len(train_shapes), cfg.batch_pairs, cfg.self_pair_prob)
            src_idx, tgt_idx = pairs[:, 0], pairs[:, 1]
            p64 = nets.params64(model)
            src = ad.Var(clouds[src_idx])
            tgt = ad.Var(clouds[tgt_idx])
            src_hs = [spaces[i] for i in src_idx]

            v = nets.g_latent_delta(p64, model, src, tgt)
            if model.variant == "circular":
                rv, cv = nets.g_circular_fields(p64, src, model.k, model.normalize_rotations)
                deformed = nets.g_deform_circular(rv, cv, v, src)
                a = None
            else:
                a, _ = nets.g_dictionary(p64, src, model.k)
                deformed = nets.g_deform_linear(a, v, src)
            fitted = deformed
            if cfg.project_in_training:
                # only the fitting term sees the handle-space projection
                fitted = g_project_cloud(deformed, src_hs)

            fit = ad.vmean(g_chamfer(fitted, tgt))
            total = fit
            refl_val = 0.0
            if cfg.use_reflection:
                refl = ad.vmean(g_chamfer(deformed, g_mirror(deformed, cfg.reflection_axis)))
                total = ad.add(total, refl)
                refl_val = float(refl.data)
            l21_val = l1_val = 0.0
            if report_sparsity:
                l21 = g_sparsity_l21(a, src_hs, model.k)
                l1_val = float(g_sparsity_l1(a, src_hs, model.k).data)
                l21_val = float(l21.data)
                if use_sparsity:
                    total = ad.add(total, ad.mul(l21, cfg.w_sparsity))

            total_val = float(total.data)
            breakdown = LossBreakdown(
                fitting=float(fit.data),
                reflection=refl_val,
                sparsity_l1=l1_val,
                sparsity_l21=l21_val,
                total=float(fit.data) + refl_val + cfg.w_sparsity * l21_val,
            )
            if not np.isfinite(total_val):
                path = None
                if out_path is not None:
                    path = str(out_path) + ".last_good"
                    nets.save_checkpoint(model, path)
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}", checkpoint_path=path
                )
            grads = nets.collect_gradients(total, p64)
            opt.step(arrays, grads)
            history.append(breakdown)
        if epoch_callback is not None:
            epoch_callback(model, epoch)
        if out_path is not None and cfg.checkpoint_every > 0 and (epoch + 1) % cfg.checkpoint_every == 0:
            nets.save_checkpoint(model, out_path)
    if out_path is not None:
        nets.save_checkpoint(model, out_path)
    return model, history
