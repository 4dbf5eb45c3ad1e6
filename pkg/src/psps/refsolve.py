"""Reference solver for the small projection programs behind the Polyak steps.

Each program is rewritten as a separable convex QP in ``x = (w, s)``::

    min 1/2 x'Qx + p'x   s.t.  A_eq x = b_eq,  A_in x <= b_in

with diagonal ``Q``.  With at most two inequalities, every active set is
enumerated, the KKT system of each is solved as a dense linear system, and
the feasible, dual-feasible candidate with least objective wins.  Nothing
here reuses the closed forms in :mod:`psps.steppers`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import nnls

MAX_DIM = 50


class ProblemKind(str, Enum):
    LINEARIZED_EQ = "linearized_eq"
    SLACK_L1 = "slack_l1"
    SLACK_L2 = "slack_l2"
    HALFSPACE = "halfspace"


class InfeasibleError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProjectionProblem:
    """Anchor ``(w_t, s_t)``, linearisation ``c + a'(w - w_t)``, diagonal of B.

    LINEARIZED_EQ:  min 1/2||w - w_t||_B^2                       s.t. c + a'(w-w_t) = f_star
    SLACK_L1:       min 1/2||w - w_t||_B^2 + mu(s-s_t)^2 + lam s  s.t. c + a'(w-w_t) <= s, s >= 0
    SLACK_L2:       min ||w - w_t||_B^2 + mu(s-s_t)^2 + lam s^2   s.t. c + a'(w-w_t) <= s
    HALFSPACE:      min ||w - w_t||_B^2 + delta(s-s_t)^2          s.t. c + a'(w-w_t) <= s
    """

    kind: ProblemKind
    w_t: np.ndarray
    a: np.ndarray
    c: float
    diag: np.ndarray
    s_t: float = 0.0
    lam: float = 0.0
    mu: float = 0.0
    delta: float = 0.0
    f_star: float = 0.0

    def __post_init__(self):
        if not np.all(np.asarray(self.diag) > 0):
            raise ValueError("B must have a positive diagonal")
        if len(self.w_t) > MAX_DIM:
            raise ValueError(f"reference solver is limited to d <= {MAX_DIM}")


@dataclass(frozen=True)
class Solution:
    w: np.ndarray
    s: float | None
    objective: float
    kkt_residual: float


def objective(problem: ProjectionProblem, w, s=None) -> float:
    p = problem
    dw = np.asarray(w, dtype=float) - p.w_t
    wq = float(dw @ (p.diag * dw))
    if p.kind is ProblemKind.LINEARIZED_EQ:
        return 0.5 * wq
    if p.kind is ProblemKind.SLACK_L1:
        return 0.5 * wq + p.mu * (s - p.s_t) ** 2 + p.lam * s
    if p.kind is ProblemKind.SLACK_L2:
        return wq + p.mu * (s - p.s_t) ** 2 + p.lam * s**2
    return wq + p.delta * (s - p.s_t) ** 2


def _qp(problem: ProjectionProblem):
    """Return (Q diag, p, A_eq, b_eq, A_in, b_in) in the stacked variable."""
    pr = problem
    B = np.asarray(pr.diag, dtype=float)
    a = np.asarray(pr.a, dtype=float)
    w_t = np.asarray(pr.w_t, dtype=float)
    d = w_t.size
    # linearisation constant: c + a'(w - w_t) = a'w + (c - a'w_t)
    k = pr.c - float(a @ w_t)
    if pr.kind is ProblemKind.LINEARIZED_EQ:
        return B, -B * w_t, a[None, :], np.array([pr.f_star - k]), np.zeros((0, d)), np.zeros(0)

    if pr.kind is ProblemKind.SLACK_L1:
        Qw, Qs = B, 2.0 * pr.mu
        ps = -2.0 * pr.mu * pr.s_t + pr.lam
    elif pr.kind is ProblemKind.SLACK_L2:
        Qw, Qs = 2.0 * B, 2.0 * (pr.mu + pr.lam)
        ps = -2.0 * pr.mu * pr.s_t
    else:
        Qw, Qs = 2.0 * B, 2.0 * pr.delta
        ps = -2.0 * pr.delta * pr.s_t
    Q = np.append(Qw, Qs)
    p = np.append(-Qw * w_t, ps)
    rows = [np.append(a, -1.0)]
    rhs = [-k]
    if pr.kind is ProblemKind.SLACK_L1:
        rows.append(np.append(np.zeros(d), -1.0))
        rhs.append(0.0)
    return Q, p, np.zeros((0, d + 1)), np.zeros(0), np.array(rows), np.array(rhs)


def _split(problem, x):
    if problem.kind is ProblemKind.LINEARIZED_EQ:
        return x, None
    return x[:-1], float(x[-1])


def _stack(problem, w, s):
    w = np.asarray(w, dtype=float)
    if problem.kind is ProblemKind.LINEARIZED_EQ:
        return w
    return np.append(w, s)


def kkt_residual(problem: ProjectionProblem, w, s=None, active_tol: float = 1e-8) -> float:
    """Max violation of stationarity, primal feasibility and dual sign at (w, s).

    Multipliers are fitted by (nonnegative) least squares over the
    constraints that are active to within ``active_tol``.
    """
    Q, p, A_eq, b_eq, A_in, b_in = _qp(problem)
    x = _stack(problem, w, s)
    grad = Q * x + p
    viol = 0.0
    if len(b_eq):
        viol = max(viol, float(np.max(np.abs(A_eq @ x - b_eq))))
    slack = A_in @ x - b_in if len(b_in) else np.zeros(0)
    if len(slack):
        viol = max(viol, float(np.max(slack, initial=0.0)))
    active = np.abs(slack) <= active_tol * (1.0 + np.abs(b_in))
    A_act = A_in[active]
    # equality multipliers are free in sign: split into +/- columns for nnls
    M = np.vstack([A_eq, -A_eq, A_act]).T
    r = grad
    if M.shape[1]:
        r = grad + M @ nnls(M, -grad)[0]
    return max(viol, float(np.max(np.abs(r))))


def solve_numeric(problem: ProjectionProblem, tol: float = 1e-9) -> Solution:
    Q, p, A_eq, b_eq, A_in, b_in = _qp(problem)
    n = Q.size
    best = None
    for r in range(len(b_in) + 1):
        for act in itertools.combinations(range(len(b_in)), r):
            A = np.vstack([A_eq, A_in[list(act)]])
            b = np.concatenate([b_eq, b_in[list(act)]])
            m = len(b)
            K = np.zeros((n + m, n + m))
            K[:n, :n] = np.diag(Q)
            K[:n, n:] = A.T
            K[n:, :n] = A
            sol = np.linalg.lstsq(K, np.concatenate([-p, b]), rcond=None)[0]
            x, lam = sol[:n], sol[n:]
            if len(b_in) and np.any(A_in @ x - b_in > tol * (1.0 + np.abs(b_in))):
                continue
            if np.any(lam[len(b_eq):] < -tol):
                continue
            # lstsq may return a non-solution when the active rows are dependent
            if np.max(np.abs(K @ sol - np.concatenate([-p, b])), initial=0.0) > 1e3 * tol * (1 + np.max(np.abs(p))):
                continue
            w, s = _split(problem, x)
            obj = objective(problem, w, s)
            if best is None or obj < best[0] - 1e-15:
                best = (obj, w, s)
    if best is None:
        raise InfeasibleError("no feasible active set; the problem data are inconsistent")
    obj, w, s = best
    return Solution(w, s, obj, kkt_residual(problem, w, s))
