"""Command line entry point: ``psps run ...`` and ``psps summarize ...``.

Exit codes: 0 success, 2 config error, 3 data error, 4 every seed diverged.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import precond as pc
from . import steppers as st
from .dataio import LibsvmParseError
from .harness import METHODS, ConfigError, RunConfig, csv_text, read_csv, run_experiment, summarize, summary_csv_text

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="psps", description="Preconditioned stochastic Polyak step benchmarks")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a seeded experiment and write a CSV trace")
    r.add_argument("--dataset", required=True, help="LIBSVM file")
    r.add_argument("--loss", choices=["logreg", "nllsq"], default="logreg")
    r.add_argument("--method", choices=METHODS, default="psps")
    r.add_argument("--precond", choices=[k.value for k in pc.Kind], default="identity")
    r.add_argument("--epochs", type=int, default=50)
    r.add_argument("--batch-size", type=int, default=32)
    r.add_argument("--scale-k", type=float, default=0.0)
    r.add_argument("--scale-seed", type=int, default=0)
    grp = r.add_mutually_exclusive_group()
    grp.add_argument("--fixed-scale-seed", dest="fixed_scale_seed", action="store_true", default=True,
                     help="same column scaling for every seed (default)")
    grp.add_argument("--per-seed-scale", dest="fixed_scale_seed", action="store_false",
                     help="derive the scaling seed from each run seed")
    r.add_argument("--seeds", type=_seeds, default=(0, 1, 2, 3, 4))
    r.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    r.add_argument("--lr", type=float, default=0.01, help="baseline learning rate")
    r.add_argument("--gamma-b", type=float, default=1.0)
    r.add_argument("--f-star", type=float, default=0.0)
    r.add_argument("--slack-lambda", "--slack.lambda", dest="slack_lambda", type=float, default=0.01)
    r.add_argument("--slack-mu", "--slack.mu", dest="slack_mu", type=float, default=0.1)
    r.add_argument("--slack-s0", "--slack.s0", dest="slack_s0", type=float, default=0.0)
    r.add_argument("--hutch-beta", "--hutch.beta", dest="hutch_beta", type=float, default=0.999)
    r.add_argument("--hutch-alpha", "--hutch.alpha", dest="hutch_alpha", type=float, default=1e-4)
    r.add_argument("--hutch-probe", "--hutch.probe", dest="hutch_probe", choices=[pc.RADEMACHER, pc.NORMAL],
                   default=pc.RADEMACHER)
    r.add_argument("--hutch-init-batches", "--hutch.init-batches", dest="hutch_init_batches", type=int, default=10)
    r.add_argument("--adam-beta1", "--adam.beta1", dest="adam_beta1", type=float, default=0.9)
    r.add_argument("--adam-beta2", "--adam.beta2", dest="adam_beta2", type=float, default=0.999)
    r.add_argument("--eps", type=float, default=pc.DEFAULT_EPS)
    r.add_argument("--n-features", type=int, default=None, help="override inferred dimension")
    r.add_argument("--no-timing", action="store_true", help="write 0 in the wallclock column")
    r.add_argument("--workers", type=int, default=1, help="threads across seeds")

    s = sub.add_parser("summarize", help="per-epoch statistics of a CSV trace")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", default=None)
    return p


def config_from_args(a) -> RunConfig:
    return RunConfig(
        dataset=a.dataset,
        loss=a.loss,
        method=a.method,
        precond=a.precond,
        epochs=a.epochs,
        batch_size=a.batch_size,
        seeds=a.seeds,
        scale_k=a.scale_k,
        scale_seed=a.scale_seed,
        fixed_scale_seed=a.fixed_scale_seed,
        lr=a.lr,
        gamma_b=a.gamma_b,
        f_star=a.f_star,
        slack=st.SlackConfig(a.slack_lambda, a.slack_mu, a.slack_s0),
        hutch=pc.HutchinsonConfig(a.hutch_beta, a.hutch_alpha, a.hutch_probe, a.hutch_init_batches),
        adam=pc.AdamConfig(a.adam_beta1, a.adam_beta2, a.eps),
        eps=a.eps,
        n_features=a.n_features,
        timing=not a.no_timing,
        workers=a.workers,
    )


def _emit(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "summarize":
        try:
            records = read_csv(args.inp)
            text = summary_csv_text(summarize(records))
        except (OSError, ValueError) as exc:
            print(f"psps: {exc}", file=sys.stderr)
            return EXIT_DATA
        _emit(text, args.out)
        return EXIT_OK

    try:
        cfg = config_from_args(args)
        cfg.validate()
    except (ConfigError, ValueError) as exc:
        print(f"psps: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        records = run_experiment(cfg)
    except ConfigError as exc:
        print(f"psps: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, LibsvmParseError, ValueError) as exc:
        print(f"psps: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    _emit(csv_text(records), args.out)
    if summarize(records).diverged == len(cfg.seeds):
        print("psps: every seed diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
