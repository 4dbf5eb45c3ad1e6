"""Badly-scaled logistic regression: SPS and baselines vs preconditioned Polyak steps.

Writes one trace CSV per (dataset, method, preconditioner) plus a summary
table of median final losses.  Without ``--dataset`` a synthetic one-hot set
with the shape of mushrooms (8124 rows, 22 categorical groups) is used.
Baselines (sgd/adam/adagrad) are swept over the default learning-rate grid
and the best median is kept, unless ``--lr`` pins one value.

    python scripts/run_benchmarks.py --out results/ --scale-k 6
    python scripts/run_benchmarks.py --dataset data/mushrooms --epochs 50
"""

import argparse
import time
from pathlib import Path

import numpy as np

from psps.harness import BASELINES, DEFAULT_LR_GRID, RunConfig, run_experiment, write_csv
from psps.synthetic import categorical_onehot

SETTINGS = [
    ("sps", "identity"),
    ("psps", "hutchinson"),
    ("psps", "adagrad"),
    ("psps", "adam"),
    ("pspsl1", "hutchinson"),
    ("pspsl2", "hutchinson"),
    ("sgd", "identity"),
    ("adam", "identity"),
    ("adagrad", "identity"),
]


def median_final(records):
    last = {}
    for r in records:
        last[r.seed] = r
    vals = [r.full_loss for r in last.values() if not r.diverged]
    return float(np.median(vals)) if vals else float("inf"), len(last) - len(vals)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dataset", default=None, help="LIBSVM file (synthetic stand-in if omitted)")
    p.add_argument("--loss", choices=["logreg", "nllsq"], default="logreg")
    p.add_argument("--scale-k", type=float, default=6.0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--lr", type=float, default=None, help="fixed baseline learning rate (default: sweep the grid)")
    p.add_argument("--workers", type=int, default=5)
    p.add_argument("--out", type=Path, default=Path("results"))
    args = p.parse_args(argv)

    seeds = tuple(int(s) for s in args.seeds.split(","))
    if args.dataset:
        data, tag = None, Path(args.dataset).name.split(".")[0]
    else:
        data, tag = categorical_onehot(n=8124, n_groups=22, levels=5, noise=0.05, seed=0), "synthetic-onehot"
    args.out.mkdir(parents=True, exist_ok=True)

    rows = ["dataset,loss,method,precond,lr,scale_k,median_final_loss,diverged_seeds,seconds"]
    for method, precond in SETTINGS:
        if method in BASELINES:
            lrs = (args.lr,) if args.lr is not None else DEFAULT_LR_GRID
        else:
            lrs = (None,)
        best = None
        for lr in lrs:
            cfg = RunConfig(
                dataset=args.dataset, loss=args.loss, method=method, precond=precond,
                epochs=args.epochs, batch_size=args.batch_size, seeds=seeds,
                scale_k=args.scale_k, workers=args.workers,
            )
            if lr is not None:
                cfg.lr = lr
            t0 = time.perf_counter()
            records = run_experiment(cfg, data)
            secs = time.perf_counter() - t0
            med, div = median_final(records)
            if best is None or med < best[0]:
                best = (med, div, secs, lr, records)
        med, div, secs, lr, records = best
        lr_tag = "" if lr is None else f"_lr{lr:g}"
        write_csv(records, args.out / f"{tag}_{args.loss}_{method}_{precond}{lr_tag}_k{args.scale_k:g}.csv")
        lr_txt = "" if lr is None else f"{lr:g}"
        print(f"{method:8s} {precond:11s} lr={lr_txt or '-':6s} median final={med:.4g} diverged={div} ({secs:.1f}s)")
        rows.append(f"{tag},{args.loss},{method},{precond},{lr_txt},{args.scale_k:g},{med:.17g},{div},{secs:.2f}")
    summary = args.out / f"{tag}_{args.loss}_k{args.scale_k:g}_summary.csv"
    summary.write_text("\n".join(rows) + "\n")
    print(f"summary -> {summary}")


if __name__ == "__main__":
    main()
