"""Small synthetic datasets used by tests, acceptance checks and scripts."""

from __future__ import annotations

import numpy as np

from .dataio import SparseDataset


def separable(n: int = 200, d: int = 10, margin: float = 0.5, seed: int = 0) -> SparseDataset:
    """Gaussian features pushed ``margin`` away from a random hyperplane through 0.

    Labels are in {-1, +1}; ``w_true`` separates every point with margin.
    """
    rng = np.random.default_rng(seed)
    w_true = rng.standard_normal(d)
    w_true /= np.linalg.norm(w_true)
    X = rng.standard_normal((n, d))
    y = np.where(X @ w_true >= 0, 1.0, -1.0)
    X += margin * y[:, None] * w_true[None, :]
    return SparseDataset.from_dense(X, y)


def categorical_onehot(n: int = 2000, n_groups: int = 20, levels: int = 5, noise: float = 0.05, seed: int = 0) -> SparseDataset:
    """One-hot encoded categorical features with a noisy linear label rule.

    Mimics the structure of binary one-hot LIBSVM sets (every row has exactly
    ``n_groups`` ones).  ``noise`` is the label-flip probability.
    """
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, levels, size=(n, n_groups))
    d = n_groups * levels
    X = np.zeros((n, d))
    X[np.arange(n)[:, None], codes + levels * np.arange(n_groups)] = 1.0
    w_true = rng.standard_normal(d)
    y = np.where(X @ w_true - np.median(X @ w_true) >= 0, 1.0, -1.0)
    flip = rng.random(n) < noise
    y[flip] = -y[flip]
    return SparseDataset.from_dense(X, y)
