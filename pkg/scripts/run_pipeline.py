#!/usr/bin/env python3
"""End-to-end demo: generate tables, train, evaluate, export artifacts.

Writes everything under an output directory (default ./runs/pipeline) and
prints the CLI summary lines. Sized to finish in a few minutes on a laptop.
"""
import argparse
import pathlib
import sys

from deformspace.cli import run


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/pipeline")
    ap.add_argument("--family", default="table")
    ap.add_argument("--count", type=int, default=128)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--epochs", type=int, default=15)
    ap.add_argument("--k", type=int, default=32)
    ap.add_argument("--w-sparsity", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = out / "data"
    model = out / "model.dsnc"
    steps = [
        ["datagen", "--family", args.family, "--count", str(args.count), "--n", str(args.n),
         "--out", str(data), "--seed", str(args.seed)],
        ["train", "--data", str(data), "--out", str(model), "--k", str(args.k),
         "--w-sparsity", str(args.w_sparsity), "--epochs", str(args.epochs), "--seed", str(args.seed)],
        ["eval", "--model", str(model), "--data", str(data), "--out", str(out / "report.json"),
         "--seed", str(args.seed), "--fitting-pairs", "50", "--parallelogram-triples", "30",
         "--symmetry-trials", "100", "--two-way-pairs", "50", "--two-way-worst", "10",
         "--mmd-pairs", "10", "--mmd-targets", "3", "--mmd-reference", "32"],
    ]
    for argv in steps:
        code = run(argv)
        if code != 0:
            return code
    print(f"artifacts in {out}/ (serve with: deformspace serve --model {model} --data {data}"
          f" --ui frontend/static)", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
