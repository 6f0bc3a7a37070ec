#!/usr/bin/env python3
"""Sweep the sparsity weight and report fitting error vs dictionary support.

Prints one JSON line per weight: fitting CD on held-out pairs, the fraction
of handle-projected dictionary columns above a norm threshold, and the mean
entrywise l1 of the projected dictionaries.
"""
import argparse

import numpy as np

from deformspace import datagen, jsonio, metrics, nets, training


def column_stats(model, shapes, thresh):
    big = total = 0
    l1 = []
    for s in shapes:
        d = nets.predict_dictionary(model, s.cloud)
        proj = s.handle_space.pinv() @ d.matrix
        norms = np.linalg.norm(proj, axis=0)
        big += int((norms > thresh).sum())
        total += norms.size
        l1.append(np.abs(proj).sum() / d.k)
    return big / total, float(np.mean(l1))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--family", default="chair")
    ap.add_argument("--count", type=int, default=192)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--weights", type=float, nargs="+", default=[0.0, 0.1, 1.0, 10.0])
    ap.add_argument("--threshold", type=float, default=1e-2)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    shapes, _ = datagen.gen_dataset(args.family, args.count, args.n, args.seed)
    test = [s for s in shapes if s.split == "test"]
    rng = np.random.default_rng(0)
    pairs = []
    for _ in range(40):
        i, j = rng.choice(len(test), 2, replace=False)
        pairs.append((test[i].cloud, test[j].cloud))

    for w in args.weights:
        cfg = training.TrainConfig(
            k=32, n=args.n, w_sparsity=w, epochs=args.epochs, batch_pairs=8,
            seed=args.seed, lr=2e-3,
        )
        model, _ = training.train(shapes, cfg)
        frac, l1 = column_stats(model, test, args.threshold)
        print(
            jsonio.dumps(
                {
                    "w_sparsity": w,
                    "fitting_cd": metrics.eval_fitting(model, pairs),
                    "column_fraction": frac,
                    "projected_l1": l1,
                }
            ),
            flush=True,
        )


if __name__ == "__main__":
    main()
