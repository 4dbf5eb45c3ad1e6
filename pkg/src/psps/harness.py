"""Seeded experiment runner emitting per-epoch convergence traces as CSV."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import precond as pc
from . import steppers as st
from .dataio import BatchPlan, SparseDataset, load_libsvm, remap_labels, scale_columns
from .losses import LABEL_CONVENTION, FAMILIES, LossOracle

METHODS = ("sgd", "adam", "adagrad", "sps", "spsmax", "psps", "pspsl1", "pspsl2")
PRECONDITIONED = ("psps", "pspsl1", "pspsl2")
BASELINES = ("sgd", "adam", "adagrad")
DEFAULT_LR_GRID = (1e-3, 1e-2, 1e-1, 1.0)

CSV_HEADER = ["seed", "epoch", "full_loss", "grad_norm", "mean_step_size", "wallclock_ms"]

SCALE_SEED_XOR = 0x5EED
_HUTCH_STREAM = 1  # rng stream ids, combined with the run seed
_INIT_STREAM = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: str | Path | None = None
    loss: str = "logreg"
    method: str = "psps"
    precond: str = "identity"
    epochs: int = 50
    batch_size: int = 32
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    scale_k: float = 0.0
    scale_seed: int = 0
    fixed_scale_seed: bool = True
    lr: float = 0.01
    gamma_b: float = 1.0
    f_star: float = 0.0
    slack: st.SlackConfig = field(default_factory=st.SlackConfig)
    hutch: pc.HutchinsonConfig = field(default_factory=pc.HutchinsonConfig)
    adam: pc.AdamConfig = field(default_factory=pc.AdamConfig)
    eps: float = pc.DEFAULT_EPS
    n_features: int | None = None
    timing: bool = True
    workers: int = 1
    out: str | Path | None = None

    def validate(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.loss not in FAMILIES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.precond not in {k.value for k in pc.Kind}:
            raise ConfigError(f"unknown preconditioner {self.precond!r}")
        if self.precond != "identity" and self.method not in PRECONDITIONED:
            raise ConfigError(f"method {self.method} does not take a preconditioner")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.scale_k < 0:
            raise ConfigError("scale_k must be >= 0")
        if self.method in BASELINES and self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")


@dataclass(frozen=True)
class TraceRecord:
    seed: int
    epoch: int
    full_loss: float
    grad_norm: float
    mean_step_size: float
    wallclock_ms: float = 0.0

    @property
    def diverged(self) -> bool:
        return not math.isfinite(self.full_loss)

    def same_values(self, other: "TraceRecord") -> bool:
        """Equality ignoring wallclock (nan == nan)."""
        a = (self.seed, self.epoch, self.full_loss, self.grad_norm, self.mean_step_size)
        b = (other.seed, other.epoch, other.full_loss, other.grad_norm, other.mean_step_size)
        return all(x == y or (x != x and y != y) for x, y in zip(a, b))


class _Run:
    """Mutable per-seed optimiser state: iterate, preconditioner, slack, counters."""

    def __init__(self, cfg: RunConfig, oracle: LossOracle, seed: int):
        self.cfg = cfg
        self.oracle = oracle
        d = oracle.d
        self.w = np.zeros(d)
        self.s = cfg.slack.s0
        self.t = 0
        self.rng = np.random.default_rng([seed, _HUTCH_STREAM])
        kind = cfg.precond
        if cfg.method == "adam":
            self.state = pc.adam_state(d, cfg.adam)
        elif cfg.method == "adagrad":
            self.state = pc.adagrad_state(d, cfg.eps)
        elif kind == "hutchinson":
            n = oracle.dataset.n
            bs = min(cfg.batch_size, n)
            init_rng = np.random.default_rng([seed, _INIT_STREAM])
            batches = [init_rng.choice(n, bs, replace=False) for _ in range(cfg.hutch.init_batches)]
            self.state = pc.hutchinson_init(oracle, self.w, batches, cfg.hutch, self.rng)
        elif kind == "adagrad":
            self.state = pc.adagrad_state(d, cfg.eps)
        elif kind == "adam":
            self.state = pc.adam_state(d, pc.AdamConfig(cfg.adam.beta1, cfg.adam.beta2, cfg.eps))
        else:
            self.state = pc.identity_state(d)

    def step(self, batch) -> float:
        cfg, m = self.cfg, self.cfg.method
        f_val, g = self.oracle.value_and_grad(self.w, batch)
        self.t += 1
        if m == "sgd":
            res = st.sgd_step(self.w, g, cfg.lr)
        elif m == "adam":
            self.state = pc.adam_update(self.state, g)
            res = st.adam_step(self.w, self.state, cfg.lr, self.t)
        elif m == "adagrad":
            self.state = pc.adagrad_update(self.state, g)
            res = st.adagrad_step(self.w, g, self.state, cfg.lr)
        elif m == "sps":
            res = st.sps_step(self.w, f_val, g, cfg.f_star)
        elif m == "spsmax":
            res = st.sps_step(self.w, f_val, g, cfg.f_star, cfg.gamma_b)
        else:
            self._update_precond(batch, g)
            if m == "psps":
                res = st.psps_step(self.w, f_val, g, self.state, cfg.f_star)
            elif m == "pspsl1":
                res = st.pspsl1_step(self.w, f_val, g, self.s, cfg.slack, self.state)
            else:
                res = st.pspsl2_step(self.w, f_val, g, self.s, cfg.slack, self.state)
            if res.slack_next is not None:
                self.s = res.slack_next
        self.w = res.w_next
        return res.step_size

    def _update_precond(self, batch, g):
        kind = self.state.kind
        if kind is pc.Kind.HUTCHINSON:
            self.state = pc.hutchinson_update(self.state, self.oracle, self.w, batch, self.cfg.hutch, self.rng)
        elif kind is pc.Kind.ADAGRAD:
            self.state = pc.adagrad_update(self.state, g)
        elif kind is pc.Kind.ADAM:
            self.state = pc.adam_update(self.state, g)


def scale_seed_for(cfg: RunConfig, seed: int) -> int:
    return cfg.scale_seed if cfg.fixed_scale_seed else seed ^ SCALE_SEED_XOR


def prepare_dataset(cfg: RunConfig, dataset: SparseDataset | None = None) -> SparseDataset:
    if dataset is None:
        if cfg.dataset is None:
            raise ConfigError("no dataset given")
        dataset = load_libsvm(cfg.dataset, LABEL_CONVENTION[cfg.loss], cfg.n_features)
    return remap_labels(dataset, LABEL_CONVENTION[cfg.loss])


def run_seed(cfg: RunConfig, dataset: SparseDataset, seed: int) -> list[TraceRecord]:
    """One seeded run on the (unscaled, label-remapped) ``dataset``."""
    scaled, _ = scale_columns(dataset, cfg.scale_k, scale_seed_for(cfg, seed))
    oracle = LossOracle(scaled, cfg.loss, cfg.f_star)
    if cfg.batch_size > scaled.n:
        raise ConfigError(f"batch_size {cfg.batch_size} exceeds n={scaled.n}")
    t0 = time.perf_counter()
    clock = (lambda: (time.perf_counter() - t0) * 1e3) if cfg.timing else (lambda: 0.0)

    run = _Run(cfg, oracle, seed)
    plan = BatchPlan(scaled.n, cfg.batch_size, seed)

    def record(epoch, steps):
        loss, g = oracle.value_and_grad(run.w)
        mean_step = float(np.sum(np.asarray(steps) / len(steps))) if steps else 0.0
        return TraceRecord(seed, epoch, loss, float(np.linalg.norm(g)), mean_step, clock())

    records = [record(0, [])]
    for epoch in range(1, cfg.epochs + 1):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            steps = [run.step(batch) for batch in plan.batches(epoch - 1)]
            rec = record(epoch, steps)
        records.append(rec)
        if rec.diverged or not np.all(np.isfinite(run.w)):
            if not rec.diverged:
                records[-1] = TraceRecord(seed, epoch, math.inf, rec.grad_norm, rec.mean_step_size, rec.wallclock_ms)
            break
    return records


def run_experiment(cfg: RunConfig, dataset: SparseDataset | None = None) -> list[TraceRecord]:
    """Run every seed; records come back ordered by (seed, epoch)."""
    cfg.validate()
    data = prepare_dataset(cfg, dataset)
    seeds = sorted(cfg.seeds)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            per_seed = list(ex.map(lambda s: run_seed(cfg, data, s), seeds))
    else:
        per_seed = [run_seed(cfg, data, s) for s in seeds]
    records = [r for rs in per_seed for r in rs]
    if cfg.out is not None:
        write_csv(records, cfg.out)
    return records


def _fmt(x: float) -> str:
    return format(x, ".17g")


def csv_text(records) -> str:
    lines = [",".join(CSV_HEADER)]
    for r in records:
        lines.append(
            ",".join(
                [str(r.seed), str(r.epoch), _fmt(r.full_loss), _fmt(r.grad_norm), _fmt(r.mean_step_size), _fmt(r.wallclock_ms)]
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(records, path) -> None:
    Path(path).write_text(csv_text(records))


def read_csv(path) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        return [
            TraceRecord(int(row[0]), int(row[1]), float(row[2]), float(row[3]), float(row[4]), float(row[5]))
            for row in reader
            if row
        ]


@dataclass(frozen=True)
class EpochSummary:
    epoch: int
    n_seeds: int
    median: float
    q25: float
    q75: float
    min: float
    max: float


@dataclass(frozen=True)
class Summary:
    epochs: list[EpochSummary]
    final_median: float
    diverged: int
    n_seeds: int


def summarize(records) -> Summary:
    """Per-epoch median / quartiles / range of full loss over non-diverged seeds."""
    by_seed: dict[int, dict[int, TraceRecord]] = {}
    for r in records:
        epochs = by_seed.setdefault(r.seed, {})
        if r.epoch in epochs:
            raise ValueError(f"duplicate (seed={r.seed}, epoch={r.epoch}): traces from mixed configs")
        epochs[r.epoch] = r
    if not by_seed:
        raise ValueError("no records to summarize")
    diverged = {s for s, eps in by_seed.items() if any(r.diverged for r in eps.values())}
    good = [eps for s, eps in sorted(by_seed.items()) if s not in diverged]
    all_epochs = sorted({e for eps in good for e in eps})
    rows = []
    for e in all_epochs:
        vals = np.array([eps[e].full_loss for eps in good if e in eps])
        q25, med, q75 = np.percentile(vals, [25, 50, 75])
        rows.append(EpochSummary(e, len(vals), float(med), float(q25), float(q75), float(vals.min()), float(vals.max())))
    finals = [eps[max(eps)].full_loss for eps in good]
    final_median = float(np.median(finals)) if finals else math.nan
    return Summary(rows, final_median, len(diverged), len(by_seed))


def summary_csv_text(summary: Summary) -> str:
    lines = ["epoch,n_seeds,median,q25,q75,min,max"]
    for r in summary.epochs:
        lines.append(",".join([str(r.epoch), str(r.n_seeds)] + [_fmt(x) for x in (r.median, r.q25, r.q75, r.min, r.max)]))
    lines.append(f"# final_median={_fmt(summary.final_median)} diverged={summary.diverged} seeds={summary.n_seeds}")
    return "\n".join(lines) + "\n"
