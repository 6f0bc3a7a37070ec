"""Command-line entry point: datagen, train, deform, transfer, project,
eval, export-dict, serve.

Every command prints a single JSON summary line on success and uses exit
codes 0 (ok), 1 (usage), 2 (data), 3 (numerical). Randomness comes from
--seed, the DSN_SEED environment variable, a config file, or the default,
in that order of precedence.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import datagen, jsonio, metrics, nets, nonlinear, training
from .errors import InputError, NumericalError, ShapeError, UsageError
from .geometry import PointCloud, chamfer, load_xyz, save_xyz
from .handles import EditRequest, project_edit
from .spaces import LatentDelta, apply as apply_delta


def _resolve_seed(flag_value, file_value=None, default=0) -> int:
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get("DSN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"DSN_SEED is not an integer: {env!r}") from exc
    if file_value is not None:
        return int(file_value)
    return default


def _emit(summary: dict) -> None:
    print(jsonio.dumps(summary))


def _load_dataset(path):
    shapes, manifest = datagen.load_dataset(path)
    return shapes, manifest


def _cmd_datagen(args) -> int:
    seed = _resolve_seed(args.seed)
    shapes, manifest = datagen.gen_dataset(args.family, args.count, args.n, seed)
    datagen.save_dataset(args.out, shapes, manifest)
    _emit(
        {
            "command": "datagen",
            "family": args.family,
            "count": len(shapes),
            "n": args.n,
            "seed": seed,
            "out": args.out,
        }
    )
    return 0


def _cmd_train(args) -> int:
    file_cfg = training.parse_config_file(args.config) if args.config else {}
    shapes, manifest = _load_dataset(args.data)
    values = dict(file_cfg)
    values["seed"] = _resolve_seed(args.seed, file_cfg.get("seed"), 0)
    for name in (
        "k",
        "w_sparsity",
        "epochs",
        "batch_pairs",
        "lr",
        "variant",
        "self_pair_prob",
        "checkpoint_every",
    ):
        flag = getattr(args, name)
        if flag is not None:
            values[name] = flag
    for name in ("use_reflection", "project_in_training", "normalize_rotations"):
        flag = getattr(args, name)
        if flag is not None:
            values[name] = flag
    values.setdefault("n", manifest["n"])
    if values["n"] != manifest["n"]:
        raise InputError(f"config n={values['n']} but dataset has n={manifest['n']}")
    cfg = training.TrainConfig(**values)
    model, history = training.train(shapes, cfg, out_path=args.out)
    jsonio.dump_path(
        [dataclasses.asdict(h) for h in history], str(args.out) + ".history.json"
    )
    _emit(
        {
            "command": "train",
            "out": args.out,
            "steps": len(history),
            "final": dataclasses.asdict(history[-1]),
            "seed": cfg.seed,
        }
    )
    return 0


def _cmd_deform(args) -> int:
    model = nets.load_checkpoint(args.model)
    src, tgt = load_xyz(args.src), load_xyz(args.tgt)
    out = nets.deform(model, src, tgt)
    save_xyz(args.out, out)
    _emit(
        {
            "command": "deform",
            "out": args.out,
            "chamfer_to_target": chamfer(out, tgt).value,
        }
    )
    return 0


def _cmd_transfer(args) -> int:
    model = nets.load_checkpoint(args.model)
    src, tgt, dst = load_xyz(args.src), load_xyz(args.tgt), load_xyz(args.dst)
    out = nets.transfer(model, src, tgt, dst)
    save_xyz(args.out, out)
    _emit({"command": "transfer", "out": args.out, "n": out.n})
    return 0


def _parse_edits(pairs) -> EditRequest:
    selected, values = [], []
    for spec in pairs or []:
        if "=" not in spec:
            raise UsageError(f"--edit expects INDEX=VALUE, got {spec!r}")
        idx, _, val = spec.partition("=")
        try:
            selected.append(int(idx))
            values.append(float(val))
        except ValueError as exc:
            raise UsageError(f"bad --edit {spec!r}") from exc
    return EditRequest(tuple(selected), tuple(values))


def project_payload(
    model, shape: datagen.ProcShape, edit: EditRequest, dictionary=None, ops=None
) -> dict:
    """Shared by the CLI and the HTTP service so both emit identical numbers.

    Callers may pass a precomputed dictionary and edit operators (the service
    caches them per shape/handle); results are bit-identical either way.
    """
    if dictionary is None:
        dictionary = nets.predict_dictionary(model, shape.cloud)
    zhat, projected = project_edit(shape.handle_space, dictionary, shape.cloud, edit, ops=ops)
    return {"z_hat": zhat.tolist(), "points": projected.points.tolist()}


def transfer_payload(model, src: datagen.ProcShape, zhat, dst: datagen.ProcShape) -> dict:
    """Edited source = basis @ z_hat; its deformation is carried onto dst."""
    zhat = np.asarray(zhat, dtype=np.float64)
    if zhat.shape != (src.handle_space.m,):
        raise InputError(
            f"z_hat has length {zhat.shape}, expected {src.handle_space.m}"
        )
    edited = PointCloud.from_flat(src.handle_space.basis @ zhat)
    out = nets.transfer(model, src.cloud, edited, dst.cloud)
    return {"points": out.points.tolist()}


def _find_shape(shapes, shape_id):
    for s in shapes:
        if s.id == shape_id:
            return s
    raise InputError(f"shape {shape_id!r} not in dataset")


def _cmd_project(args) -> int:
    model = nets.load_checkpoint(args.model)
    shapes, _ = _load_dataset(args.data)
    shape = _find_shape(shapes, args.shape)
    payload = project_payload(model, shape, _parse_edits(args.edit))
    jsonio.dump_path(payload, args.out)
    _emit({"command": "project", "out": args.out, "shape": args.shape})
    return 0


def _cmd_eval(args) -> int:
    model = nets.load_checkpoint(args.model)
    shapes, manifest = _load_dataset(args.data)
    cfg = metrics.EvalConfig(
        fitting_pairs=args.fitting_pairs,
        parallelogram_triples=args.parallelogram_triples,
        symmetry_trials=args.symmetry_trials,
        two_way_pairs=args.two_way_pairs,
        two_way_worst=args.two_way_worst,
        mmd_pairs=args.mmd_pairs,
        mmd_targets=args.mmd_targets,
        mmd_reference=args.mmd_reference,
        seed=_resolve_seed(args.seed),
    )
    report = metrics.evaluate(
        model, shapes, manifest["family"], cfg, dataset_seed=manifest["seed"]
    )
    jsonio.dump_path(report.to_json_dict(), args.out)
    _emit(
        {
            "command": "eval",
            "out": args.out,
            "fitting_cd": report.fitting_cd,
            "parallelogram_cd": report.parallelogram_cd,
            "two_way": report.two_way,
        }
    )
    return 0


def _cmd_export_dict(args) -> int:
    model = nets.load_checkpoint(args.model)
    shapes, _ = _load_dataset(args.data)
    shape = _find_shape(shapes, args.shape)
    os.makedirs(args.out, exist_ok=True)
    alphas = np.linspace(-args.scale, args.scale, args.steps)
    frames = 0
    if model.variant == "circular":
        cdict = nets.predict_circular(model, shape.cloud)
        for j in range(model.k):
            for si, t in enumerate(alphas):
                v = np.zeros(model.k)
                v[j] = t
                cloud = nonlinear.deform_circular(shape.cloud, cdict, LatentDelta(v))
                save_xyz(os.path.join(args.out, f"elem_{j:03d}_{si:03d}.xyz"), cloud)
                frames += 1
    else:
        from .spaces import dictionary_to_json_dict

        dictionary = nets.predict_dictionary(model, shape.cloud)
        jsonio.dump_path(
            dictionary_to_json_dict(dictionary), os.path.join(args.out, "dictionary.json")
        )
        for j in range(model.k):
            for si, t in enumerate(alphas):
                v = np.zeros(model.k)
                v[j] = t
                cloud = apply_delta(shape.cloud, dictionary, LatentDelta(v))
                save_xyz(os.path.join(args.out, f"elem_{j:03d}_{si:03d}.xyz"), cloud)
                frames += 1
    _emit({"command": "export-dict", "out": args.out, "frames": frames})
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    app = build_app(args.model, args.data, ui_dir=args.ui)
    _emit({"command": "serve", "host": args.host, "port": args.port})
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deformspace")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="generate a procedural dataset")
    p.add_argument("--family", choices=datagen.FAMILIES, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_datagen)

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--k", type=int)
    p.add_argument("--w-sparsity", dest="w_sparsity", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-pairs", dest="batch_pairs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--variant", choices=nets.VARIANTS)
    p.add_argument("--self-pair-prob", dest="self_pair_prob", type=float)
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--reflection", dest="use_reflection", action=argparse.BooleanOptionalAction
    )
    p.add_argument(
        "--project-in-training",
        dest="project_in_training",
        action=argparse.BooleanOptionalAction,
    )
    p.add_argument(
        "--normalize-rotations",
        dest="normalize_rotations",
        action=argparse.BooleanOptionalAction,
    )
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("deform", help="fit a source cloud to a target")
    for flag in ("--model", "--src", "--tgt", "--out"):
        p.add_argument(flag, required=True)
    p.set_defaults(func=_cmd_deform)

    p = sub.add_parser("transfer", help="carry a source->target edit onto another cloud")
    for flag in ("--model", "--src", "--tgt", "--dst", "--out"):
        p.add_argument(flag, required=True)
    p.set_defaults(func=_cmd_transfer)

    p = sub.add_parser("project", help="project handle edits into the learned space")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--shape", required=True)
    p.add_argument("--edit", action="append", metavar="INDEX=VALUE")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("eval", help="run the metric suite")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--fitting-pairs", type=int, default=200)
    p.add_argument("--parallelogram-triples", type=int, default=100)
    p.add_argument("--symmetry-trials", type=int, default=500)
    p.add_argument("--two-way-pairs", type=int, default=200)
    p.add_argument("--two-way-worst", type=int, default=20)
    p.add_argument("--mmd-pairs", type=int, default=20)
    p.add_argument("--mmd-targets", type=int, default=5)
    p.add_argument("--mmd-reference", type=int, default=64)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("export-dict", help="write per-element deformation sweeps")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--shape", required=True)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--scale", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_dict)

    p = sub.add_parser("serve", help="serve the co-editing HTTP API and UI")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--ui")
    p.set_defaults(func=_cmd_serve)
    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputError, ShapeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
