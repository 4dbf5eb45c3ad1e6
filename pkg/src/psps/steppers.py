"""Update rules: SGD / Adam / AdaGrad baselines and the Polyak family.

All functions are pure: they take the current iterate plus explicit state and
return a :class:`StepResult`.  Polyak-type rules share one convention for a
vanishing gradient: when ``||g||^2_{B^-1}`` drops below ``degenerate_tol(g)``
the step size is zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .precond import PreconditionerState, apply_inverse, weighted_norm_sq

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlackConfig:
    lam: float = 0.01
    mu: float = 0.1
    s0: float = 0.0

    def __post_init__(self):
        if self.lam <= 0.0 or self.mu <= 0.0:
            raise ValueError("slack parameters lambda and mu must be positive")


@dataclass
class SlackState:
    s: float = 0.0


@dataclass(frozen=True)
class StepResult:
    w_next: np.ndarray
    step_size: float
    slack_next: float | None = None
    loss: float = float("nan")
    grad_norm: float = float("nan")
    weighted_grad_norm: float = float("nan")


class StaleStateError(RuntimeError):
    pass


def degenerate_tol(g) -> float:
    return 1e-12 * (1.0 + float(np.max(np.abs(g), initial=0.0)) ** 2)


def _slack(slack) -> float:
    return float(slack.s if isinstance(slack, SlackState) else slack)


def sgd_step(w, g, lr: float) -> StepResult:
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    return StepResult(w - lr * g, lr, grad_norm=float(np.linalg.norm(g)))


def adagrad_step(w, g, state: PreconditionerState, lr: float) -> StepResult:
    """w - lr * g / (sqrt(sum g_i^2) + eps); ``state`` must already include ``g``."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    if np.any(state.accum < g * g):
        raise StaleStateError("adagrad state was not updated with the current gradient")
    return StepResult(w - lr * g / state.diag, lr, grad_norm=float(np.linalg.norm(g)))


def adam_step(w, state: PreconditionerState, lr: float, step: int | None = None) -> StepResult:
    """w - lr * m_hat / (sqrt(v_hat) + eps).

    ``step`` is the caller's count of gradients fed to the state; a mismatch
    with ``state.t`` means the state is stale.
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    if state.t == 0 or (step is not None and step != state.t):
        raise StaleStateError(f"adam state at t={state.t}, caller expected {step}")
    return StepResult(w - lr * state.m_hat / state.diag, lr)


def sps_step(w, f_val: float, g, f_star: float = 0.0, gamma_b: float | None = None) -> StepResult:
    """Stochastic Polyak step; ``gamma_b`` caps the step (SPS_max)."""
    gg = float(g @ g)
    gamma = 0.0
    if gg >= degenerate_tol(g):
        gamma = max(f_val - f_star, 0.0) / gg
        if gamma_b is not None:
            gamma = min(gamma, gamma_b)
    norm = float(np.sqrt(gg))
    return StepResult(w - gamma * g, gamma, loss=f_val, grad_norm=norm, weighted_grad_norm=norm)


def psps_step(w, f_val: float, g, state: PreconditionerState, f_star: float = 0.0) -> StepResult:
    """Preconditioned Polyak step: project onto the linearised level set in the B-norm."""
    q = weighted_norm_sq(g, state)
    gamma = 0.0
    if q >= degenerate_tol(g):
        gamma = max(f_val - f_star, 0.0) / q
    return StepResult(
        w - gamma * apply_inverse(state, g),
        gamma,
        loss=f_val,
        grad_norm=float(np.sqrt(g @ g)),
        weighted_grad_norm=float(np.sqrt(q)),
    )


def pspsl1_step(w, f_val: float, g, slack, config: SlackConfig, state: PreconditionerState) -> StepResult:
    """Preconditioned Polyak step with an L1-penalised, nonnegative slack.

    Solves  min 1/2||w - w_t||_B^2 + mu (s - s_t)^2 + lam s
            s.t. f + <g, w - w_t> <= s,  s >= 0
    in closed form.  The slack update uses ``s_t - (lam - gamma_l1) / (2 mu)``;
    the opposite sign on ``gamma_l1`` does not satisfy the optimality
    conditions of this program.
    """
    s_t = _slack(slack)
    lam, mu = config.lam, config.mu
    q = weighted_norm_sq(g, state)
    shift = lam / (2.0 * mu)
    s_shift = s_t - shift
    diag = dict(loss=f_val, grad_norm=float(np.sqrt(g @ g)), weighted_grad_norm=float(np.sqrt(q)))

    if f_val <= s_shift or q < degenerate_tol(g):
        # already feasible (or no usable direction): only the slack moves
        return StepResult(np.array(w, dtype=float, copy=True), 0.0, max(s_shift, 0.0), **diag)

    gamma_l1 = (f_val - s_t + shift) / (1.0 / (2.0 * mu) + q)
    gamma = min(gamma_l1, max(f_val, 0.0) / q)
    s_next = max(s_t - (lam - gamma_l1) / (2.0 * mu), 0.0)
    return StepResult(w - gamma * apply_inverse(state, g), gamma, s_next, **diag)


def pspsl2_step(w, f_val: float, g, slack, config: SlackConfig, state: PreconditionerState) -> StepResult:
    """Preconditioned Polyak step with a squared slack penalty.

    Solves  min ||w - w_t||_B^2 + mu (s - s_t)^2 + lam s^2
            s.t. f + <g, w - w_t> <= s
    in closed form, with lam_hat = 1 / (mu + lam).
    """
    s_t = _slack(slack)
    lam, mu = config.lam, config.mu
    lam_hat = 1.0 / (mu + lam)
    q = weighted_norm_sq(g, state)
    nu = max(f_val - mu * lam_hat * s_t, 0.0)
    gamma = nu / (lam_hat + q)
    s_next = lam_hat * (mu * s_t + gamma)
    if s_next < 0.0:
        log.warning("pspsl2 slack went negative (s=%g)", s_next)
    return StepResult(
        w - gamma * apply_inverse(state, g),
        gamma,
        s_next,
        loss=f_val,
        grad_norm=float(np.sqrt(g @ g)),
        weighted_grad_norm=float(np.sqrt(q)),
    )


def halfspace_project(w0, s0: float, a, c: float, delta: float, state: PreconditionerState):
    """Project (w0, s0) onto {a'(w - w0) + c <= s} under ||.||_B^2 + delta (.)^2.

    Returns ``(w', s')``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    w0 = np.asarray(w0, dtype=float)
    if c <= s0:
        return w0.copy(), float(s0)
    r = (c - s0) / (1.0 + delta * weighted_norm_sq(a, state))
    return w0 - delta * r * apply_inverse(state, a), float(s0 + r)
