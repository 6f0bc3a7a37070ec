"""Evaluation protocol: fitting, distribution metrics, consistency, structure.

All metrics are deterministic given the model, the shape list and the seeds.
Counts are desk-scale defaults and live in EvalConfig.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import datagen, nets
from .errors import InputError
from .geometry import PointCloud, chamfer
from .handles import EditRequest, precompute_edit_operators, project_edit
from .nets import TrainedModel


@dataclass(frozen=True)
class EvalConfig:
    fitting_pairs: int = 200
    parallelogram_triples: int = 100
    symmetry_trials: int = 500
    two_way_pairs: int = 200
    two_way_worst: int = 20
    mmd_pairs: int = 20
    mmd_targets: int = 5
    mmd_reference: int = 64
    seed: int = 0


@dataclass(frozen=True)
class MetricsReport:
    fitting_cd: float
    mmd_cd: float
    cov_cd: float
    parallelogram_cd: float
    two_way: float
    symmetry_ratios: tuple | None
    symmetry_ratios_unprojected: tuple | None
    config: dict
    seeds: dict

    def to_json_dict(self) -> dict:
        return {
            "fitting_cd": self.fitting_cd,
            "mmd_cd": self.mmd_cd,
            "cov_cd": self.cov_cd,
            "parallelogram_cd": self.parallelogram_cd,
            "two_way": self.two_way,
            "symmetry_ratios": list(self.symmetry_ratios) if self.symmetry_ratios else None,
            "symmetry_ratios_unprojected": (
                list(self.symmetry_ratios_unprojected)
                if self.symmetry_ratios_unprojected
                else None
            ),
            "config": self.config,
            "seeds": self.seeds,
        }


def eval_fitting(model: TrainedModel, pairs) -> float:
    """Mean Chamfer between deformed sources and their targets."""
    if not pairs:
        raise InputError("eval_fitting needs at least one pair")
    total = 0.0
    for src, tgt in pairs:
        total += chamfer(nets.deform(model, src, tgt), tgt).value
    return total / len(pairs)


def eval_mmd_cov(generated, reference) -> tuple[float, float]:
    """Minimal matching distance and coverage of the reference set.

    mmd: mean over generated clouds of the Chamfer distance to the closest
    reference cloud. cov: fraction of reference clouds that are the argmin
    (ties to the lowest index) for at least one generated cloud.
    """
    if not generated or not reference:
        raise InputError("eval_mmd_cov needs nonempty cloud sets")
    hit = np.zeros(len(reference), dtype=bool)
    total = 0.0
    for g in generated:
        dists = np.array([chamfer(g, r).value for r in reference])
        j = int(np.argmin(dists))
        hit[j] = True
        total += float(dists[j])
    return total / len(generated), float(hit.sum()) / len(reference)


def eval_parallelogram(model: TrainedModel, triples) -> float:
    """Mean Chamfer gap between the two deformation pathways of each triple."""
    if not triples:
        raise InputError("eval_parallelogram needs at least one triple")
    return float(
        np.mean([nets.parallelogram_gap(model, x, y, z) for x, y, z in triples])
    )


def eval_two_way(model: TrainedModel, shapes, n_pairs: int, worst: int, seed: int) -> float:
    """Mean two-way consistency error over the worst-Chamfer random pairs."""
    if len(shapes) < 2:
        raise InputError("two-way evaluation needs at least two shapes")
    rng = np.random.Generator(np.random.PCG64(seed))
    pairs = []
    for _ in range(n_pairs):
        i = int(rng.integers(len(shapes)))
        j = int(rng.integers(len(shapes) - 1))
        if j >= i:
            j += 1
        pairs.append((i, j))
    cds = np.array(
        [chamfer(shapes[i].cloud, shapes[j].cloud).value for i, j in pairs]
    )
    order = np.argsort(-cds, kind="stable")[: max(1, worst)]
    errs = [
        nets.two_way_error(model, shapes[pairs[t][0]].cloud, shapes[pairs[t][1]].cloud)
        for t in order
    ]
    return float(np.mean(errs))


# -- structure discovery on tables --------------------------------------------

_AXES = (0, 1, 2)


def _table_layout(base: datagen.ProcShape):
    if "top" not in base.labels:
        raise InputError("structure discovery expects a generated table with labels")
    top = base.labels.index("top")
    legs = [i for i, name in enumerate(base.labels) if name.startswith("leg_")]
    if len(legs) != 4:
        raise InputError("structure discovery expects four legs")
    return top, legs


def _table_extents(base: datagen.ProcShape) -> np.ndarray:
    pts = base.cloud.points
    return pts.max(axis=0) - pts.min(axis=0)


def _scale_handle(part: int, axis: int) -> int:
    return 6 * part + 3 + axis


def _translation_handle(part: int, axis: int) -> int:
    return 6 * part + axis


def table_structure_ratios(base: datagen.ProcShape, z: np.ndarray) -> np.ndarray:
    """Four structure-violation ratios of a handle-parameter vector.

    Per axis, the mean pairwise difference of the four legs' scaled extents,
    normalized by the default shape's full extent on that axis; plus the mean
    vertical gap between the top's underside and the leg tops, normalized by
    the shape height. The default parameters give exactly (0, 0, 0, 0).
    """
    top, legs = _table_layout(base)
    full = _table_extents(base)
    ratios = np.zeros(4)
    for axis in _AXES:
        exts = np.array(
            [2.0 * base.parts[p].extents[axis] * z[_scale_handle(p, axis)] for p in legs]
        )
        diffs = [abs(exts[i] - exts[j]) for i in range(4) for j in range(i + 1, 4)]
        ratios[axis] = np.mean(diffs) / full[axis]
    top_part = base.parts[top]
    underside = z[_translation_handle(top, 2)] - top_part.extents[2] * z[_scale_handle(top, 2)]
    gaps = [
        abs(
            underside
            - (
                z[_translation_handle(p, 2)]
                + base.parts[p].extents[2] * z[_scale_handle(p, 2)]
            )
        )
        for p in legs
    ]
    ratios[3] = np.mean(gaps) / full[2]
    return ratios


def eval_symmetry_discovery(
    model: TrainedModel, base: datagen.ProcShape, trials: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Perturb one random handle per trial, project, measure structure ratios.

    Translations are drawn from [default - 0.5, default + 0.5], scales from
    [0.5, 1.5] x default. Returns (projected means, unprojected means), each
    the four table_structure_ratios averaged over trials.
    """
    hs = base.handle_space
    dictionary = nets.predict_dictionary(model, base.cloud)
    ops = {h: precompute_edit_operators(hs, dictionary, (h,)) for h in range(hs.m)}
    rng = np.random.Generator(np.random.PCG64(seed))
    proj_sum = np.zeros(4)
    raw_sum = np.zeros(4)
    for _ in range(trials):
        h = int(rng.integers(hs.m))
        default = hs.defaults[h]
        if hs.lower_bounds[h] is None:
            value = float(default + rng.uniform(-0.5, 0.5))
        else:
            value = float(default * rng.uniform(0.5, 1.5))
        edit = EditRequest((h,), (value,))
        zhat, _ = project_edit(hs, dictionary, base.cloud, edit, ops=ops[h])
        z_raw = hs.defaults.copy()
        z_raw[h] = value
        proj_sum += table_structure_ratios(base, zhat)
        raw_sum += table_structure_ratios(base, z_raw)
    return proj_sum / trials, raw_sum / trials


# -- full protocol -------------------------------------------------------------


def _split(shapes, name):
    return [s for s in shapes if s.split == name]


def _sample_pairs(rng, pool, count):
    pairs = []
    for _ in range(count):
        i = int(rng.integers(len(pool)))
        j = int(rng.integers(len(pool) - 1))
        if j >= i:
            j += 1
        pairs.append((pool[i], pool[j]))
    return pairs


def evaluate(
    model: TrainedModel,
    shapes,
    family: str,
    cfg: EvalConfig,
    dataset_seed: int = 0,
) -> MetricsReport:
    """Run the full metric suite on a dataset's splits."""
    test = _split(shapes, "test") or shapes
    train = _split(shapes, "train") or shapes
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((cfg.seed, 10))))

    pairs = [
        (a.cloud, b.cloud) for a, b in _sample_pairs(rng, test, cfg.fitting_pairs)
    ]
    fitting = eval_fitting(model, pairs)

    triples = []
    for _ in range(cfg.parallelogram_triples):
        picks = rng.choice(len(test), size=3, replace=len(test) < 3)
        triples.append(tuple(test[int(i)].cloud for i in picks))
    para = eval_parallelogram(model, triples)

    ref_pool = train[: cfg.mmd_reference]
    targets = [test[int(i)].cloud for i in rng.choice(len(test), size=min(cfg.mmd_targets, len(test)), replace=False)]
    transfer_pairs = _sample_pairs(rng, test, cfg.mmd_pairs)
    mmds, covs = [], []
    for tgt in targets:
        generated = [
            nets.transfer(model, src.cloud, tgt, dst.cloud) for src, dst in transfer_pairs
        ]
        m, c = eval_mmd_cov(generated, [r.cloud for r in ref_pool])
        mmds.append(m)
        covs.append(c)
    mmd, cov = float(np.mean(mmds)), float(np.mean(covs))

    two_way = eval_two_way(model, test, cfg.two_way_pairs, cfg.two_way_worst, cfg.seed + 77)

    sym = sym_raw = None
    if family == "table":
        base = datagen.gen_table(datagen.default_params("table"), model.n, dataset_seed)
        proj, raw = eval_symmetry_discovery(model, base, cfg.symmetry_trials, cfg.seed + 99)
        sym, sym_raw = tuple(proj.tolist()), tuple(raw.tolist())

    return MetricsReport(
        fitting_cd=fitting,
        mmd_cd=mmd,
        cov_cd=cov,
        parallelogram_cd=para,
        two_way=two_way,
        symmetry_ratios=sym,
        symmetry_ratios_unprojected=sym_raw,
        config=asdict(cfg),
        seeds={"eval": cfg.seed, "dataset": dataset_seed},
    )
