"""Diagonal preconditioners B_t: identity, Hutchinson EMA, AdaGrad, Adam.

Every update returns a new :class:`PreconditionerState`; inputs are never
mutated.  ``diag`` always holds the effective (positive) diagonal of B_t.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class Kind(str, Enum):
    IDENTITY = "identity"
    HUTCHINSON = "hutchinson"
    ADAGRAD = "adagrad"
    ADAM = "adam"


RADEMACHER = "rademacher"
NORMAL = "normal"

DEFAULT_EPS = 1e-8


class PreconditionerError(ValueError):
    pass


@dataclass(frozen=True)
class HutchinsonConfig:
    beta: float = 0.999
    alpha: float = 1e-4
    probe: str = RADEMACHER
    init_batches: int = 10

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("hutchinson beta must lie in (0, 1)")
        if self.alpha <= 0.0:
            raise ValueError("hutchinson alpha must be positive")
        if self.probe not in (RADEMACHER, NORMAL):
            raise ValueError(f"unknown probe {self.probe!r}")
        if self.init_batches < 1:
            raise ValueError("init_batches must be >= 1")


@dataclass(frozen=True)
class AdamConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("adam betas must lie in (0, 1)")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class PreconditionerState:
    """Diagonal of B_t plus kind-specific accumulators.

    ``raw`` is the signed Hutchinson EMA D_t, ``accum`` the AdaGrad sum of
    squared gradients, ``m``/``v`` the (uncorrected) Adam moment buffers and
    ``t`` the Adam step counter.
    """

    kind: Kind
    diag: np.ndarray
    raw: np.ndarray | None = field(default=None, repr=False)
    accum: np.ndarray | None = field(default=None, repr=False)
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)
    t: int = 0
    eps: float = DEFAULT_EPS
    beta1: float = field(default=0.9, repr=False)
    beta2: float = field(default=0.999, repr=False)

    @property
    def d(self) -> int:
        return self.diag.shape[0]

    @property
    def m_hat(self) -> np.ndarray:
        """Bias-corrected first moment (Adam only)."""
        self._require(Kind.ADAM)
        if self.t == 0:
            return np.zeros_like(self.m)
        return self.m / (1.0 - self.beta1**self.t)

    @property
    def v_hat(self) -> np.ndarray:
        self._require(Kind.ADAM)
        if self.t == 0:
            return np.zeros_like(self.v)
        return self.v / (1.0 - self.beta2**self.t)

    def _require(self, kind: Kind):
        if self.kind is not kind:
            raise PreconditionerError(f"expected a {kind.value} state, got {self.kind.value}")


def identity_state(d: int) -> PreconditionerState:
    return PreconditionerState(Kind.IDENTITY, np.ones(d))


def adagrad_state(d: int, eps: float = DEFAULT_EPS) -> PreconditionerState:
    return PreconditionerState(Kind.ADAGRAD, np.full(d, eps), accum=np.zeros(d), eps=eps)


def adam_state(d: int, config: AdamConfig = AdamConfig()) -> PreconditionerState:
    return PreconditionerState(
        Kind.ADAM,
        np.full(d, config.eps),
        m=np.zeros(d),
        v=np.zeros(d),
        eps=config.eps,
        beta1=config.beta1,
        beta2=config.beta2,
    )


def hutchinson_probe(rng: np.random.Generator, d: int, kind: str = RADEMACHER) -> np.ndarray:
    if kind == RADEMACHER:
        return rng.integers(0, 2, size=d).astype(float) * 2.0 - 1.0
    if kind == NORMAL:
        return rng.standard_normal(d)
    raise ValueError(f"unknown probe {kind!r}")


def hutchinson_sample(oracle, w, batch, z) -> np.ndarray:
    return z * oracle.hvp(w, batch, z)


def truncate(raw: np.ndarray, alpha: float) -> np.ndarray:
    return np.maximum(alpha, np.abs(raw))


def hutchinson_init(oracle, w0, batches, config: HutchinsonConfig, rng) -> PreconditionerState:
    """D_0 = mean over batches of z_i * H_i z_i at ``w0``, one probe per batch."""
    batches = list(batches)
    if not batches:
        raise ValueError("hutchinson_init needs at least one batch")
    w0 = np.asarray(w0, dtype=float)
    acc = np.zeros_like(w0)
    for batch in batches:
        z = hutchinson_probe(rng, w0.size, config.probe)
        acc += hutchinson_sample(oracle, w0, batch, z)
    raw = acc / len(batches)
    return PreconditionerState(Kind.HUTCHINSON, truncate(raw, config.alpha), raw=raw)


def hutchinson_update(state, oracle, w, batch, config: HutchinsonConfig, rng) -> PreconditionerState:
    state._require(Kind.HUTCHINSON)
    z = hutchinson_probe(rng, state.d, config.probe)
    return hutchinson_ema(state, hutchinson_sample(oracle, w, batch, z), config)


def hutchinson_ema(state, sample, config: HutchinsonConfig) -> PreconditionerState:
    """One EMA step on the signed estimate; truncation only touches ``diag``."""
    state._require(Kind.HUTCHINSON)
    raw = config.beta * state.raw + (1.0 - config.beta) * sample
    return replace(state, raw=raw, diag=truncate(raw, config.alpha))


def adagrad_update(state, g) -> PreconditionerState:
    state._require(Kind.ADAGRAD)
    accum = state.accum + g * g
    return replace(state, accum=accum, diag=np.sqrt(accum) + state.eps)


def adam_update(state, g, config: AdamConfig | None = None) -> PreconditionerState:
    state._require(Kind.ADAM)
    b1 = config.beta1 if config else state.beta1
    b2 = config.beta2 if config else state.beta2
    eps = config.eps if config else state.eps
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * g * g
    v_hat = v / (1.0 - b2**t)
    return replace(state, m=m, v=v, t=t, diag=np.sqrt(v_hat) + eps, eps=eps, beta1=b1, beta2=b2)


def _checked_diag(state) -> np.ndarray:
    diag = state.diag
    if not np.all(diag > 0.0):
        raise PreconditionerError("preconditioner diagonal must be strictly positive")
    return diag


def apply_inverse(state, g) -> np.ndarray:
    """B^{-1} g for diagonal B."""
    return g / _checked_diag(state)


def weighted_norm_sq(g, state) -> float:
    """||g||^2 in the B^{-1} norm."""
    g = np.asarray(g, dtype=float)
    if g.shape != state.diag.shape:
        raise ValueError("dimension mismatch between g and preconditioner")
    return float(g @ apply_inverse(state, g))
