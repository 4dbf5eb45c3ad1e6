"""Analytic value / gradient / Hessian-vector oracles for linear binary models.

LOGREG:  f(w) = mean log(1 + exp(-y x.w)),            y in {-1, +1}
NLLSQ:   f(w) = mean (y - sigmoid(x.w))**2,            y in {0, 1}
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .dataio import SparseDataset

LOGREG = "logreg"
NLLSQ = "nllsq"
FAMILIES = (LOGREG, NLLSQ)
LABEL_CONVENTION = {LOGREG: "pm1", NLLSQ: "zo"}


def log1pexp_neg(t):
    """Stable log(1 + exp(-t))."""
    return np.log1p(np.exp(-np.abs(t))) + np.maximum(0.0, -t)


class LossOracle:
    """Mini-batch loss oracle over a fixed dataset.

    ``batch`` arguments are integer index arrays into the dataset; ``None``
    means the full dataset.
    """

    def __init__(self, dataset: SparseDataset, family: str = LOGREG, f_star: float = 0.0):
        if family not in FAMILIES:
            raise ValueError(f"unknown loss family {family!r}")
        allowed = {LOGREG: (-1.0, 1.0), NLLSQ: (0.0, 1.0)}[family]
        if not np.isin(dataset.y, allowed).all():
            raise ValueError(f"{family} needs labels in {set(allowed)}")
        self.dataset = dataset
        self.family = family
        self.f_star = float(f_star)
        self._X = dataset.dense
        self._y = dataset.y

    @property
    def d(self) -> int:
        return self._X.shape[1]

    def _take(self, w, batch):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.d,):
            raise ValueError(f"expected w of shape ({self.d},), got {w.shape}")
        if batch is None:
            return self._X, self._y, w
        X = self._X[batch]
        if X.shape[0] == 0:
            raise ValueError("empty batch")
        return X, self._y[batch], w

    def value(self, w, batch=None) -> float:
        X, y, w = self._take(w, batch)
        t = X @ w
        if self.family == LOGREG:
            return float(np.mean(log1pexp_neg(y * t)))
        return float(np.mean((y - expit(t)) ** 2))

    def gradient(self, w, batch=None) -> np.ndarray:
        return self.value_and_grad(w, batch)[1]

    def value_and_grad(self, w, batch=None) -> tuple[float, np.ndarray]:
        X, y, w = self._take(w, batch)
        t = X @ w
        m = X.shape[0]
        if self.family == LOGREG:
            yt = y * t
            val = float(np.mean(log1pexp_neg(yt)))
            coef = -y * expit(-yt)
        else:
            p = expit(t)
            r = p - y
            val = float(np.mean(r * r))
            coef = 2.0 * r * p * (1.0 - p)
        return val, X.T @ coef / m

    def hvp(self, w, batch, z) -> np.ndarray:
        """Hessian-vector product on ``batch`` along ``z``."""
        X, y, w = self._take(w, batch)
        z = np.asarray(z, dtype=float)
        if z.shape != w.shape:
            raise ValueError("z and w dimensions differ")
        t = X @ w
        if self.family == LOGREG:
            s = expit(y * t)
            curv = s * (1.0 - s)
        else:
            p = expit(t)
            dp = p * (1.0 - p)
            d2p = dp * (1.0 - 2.0 * p)
            curv = 2.0 * dp * dp - 2.0 * (y - p) * d2p
        return X.T @ (curv * (X @ z)) / X.shape[0]

    def hessian_vector_product(self, w, batch, z) -> np.ndarray:
        return self.hvp(w, batch, z)


class QuadraticOracle:
    """f(w) = 0.5 w'Hw with a fixed symmetric H on every batch (for tests)."""

    def __init__(self, H):
        self.H = np.asarray(H, dtype=float)
        self.f_star = 0.0

    @property
    def d(self) -> int:
        return self.H.shape[0]

    def value(self, w, batch=None) -> float:
        return 0.5 * float(w @ self.H @ w)

    def value_and_grad(self, w, batch=None):
        g = self.H @ w
        return 0.5 * float(w @ g), g

    def gradient(self, w, batch=None):
        return self.H @ w

    def hvp(self, w, batch, z):
        return self.H @ z


def fd_gradient(oracle, w, batch=None, rel_step: float = 1e-6) -> np.ndarray:
    """Central differences of ``oracle.value``; step h_j = rel_step * (1 + |w_j|)."""
    w = np.asarray(w, dtype=float)
    g = np.empty_like(w)
    for j in range(w.size):
        h = rel_step * (1.0 + abs(w[j]))
        e = np.zeros_like(w)
        e[j] = h
        g[j] = (oracle.value(w + e, batch) - oracle.value(w - e, batch)) / (2.0 * h)
    return g


def fd_hvp(oracle, w, batch, z, h: float = 1e-5) -> np.ndarray:
    """Central difference of the analytic gradient along ``z``."""
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    return (oracle.gradient(w + h * z, batch) - oracle.gradient(w - h * z, batch)) / (2.0 * h)


def rel_error(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / scale)
