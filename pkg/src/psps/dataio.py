"""LIBSVM datasets, column scaling and seeded mini-batching.

Random streams use numpy's ``Generator`` backed by PCG64 and seeded through
``SeedSequence``.  Both are specified bit-for-bit by numpy, so a given seed
produces the same permutation / scaling vector on every platform.
"""

from __future__ import annotations

import bz2
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, TextIO

import numpy as np
import scipy.sparse as sp

PM1 = "pm1"  # labels in {-1, +1}
ZO = "zo"  # labels in {0, 1}
_TARGETS = {PM1: (-1.0, 1.0), ZO: (0.0, 1.0)}


class LibsvmParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class SparseDataset:
    """Row-sparse design matrix ``X`` (n x d, CSR) and label vector ``y``."""

    X: sp.csr_matrix
    y: np.ndarray

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y disagree on the number of samples")
        if self.X.shape[0] == 0:
            raise ValueError("dataset is empty")
        if not self.X.has_sorted_indices:
            raise ValueError("row indices must be sorted")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def labels(self) -> np.ndarray:
        return self.y

    @property
    def rows(self) -> list[dict[int, float]]:
        X = self.X
        return [
            dict(zip(X.indices[a:b].tolist(), X.data[a:b].tolist()))
            for a, b in zip(X.indptr[:-1], X.indptr[1:])
        ]

    @cached_property
    def dense(self) -> np.ndarray:
        return self.X.toarray()

    def equals(self, other: "SparseDataset") -> bool:
        """Exact structural equality (stored indices, values and labels)."""
        a, b = self.X, other.X
        return (
            a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
            and np.array_equal(self.y, other.y)
        )

    @classmethod
    def from_dense(cls, X, y) -> "SparseDataset":
        X = sp.csr_matrix(np.asarray(X, dtype=float))
        X.sort_indices()
        return cls(X, np.asarray(y, dtype=float))


def _parse_lines(lines: Iterable[str]):
    labels, indptr, indices, data = [], [0], [], []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise LibsvmParseError(lineno, f"bad label {tokens[0]!r}") from None
        prev = 0
        for tok in tokens[1:]:
            idx, sep, val = tok.partition(":")
            if not sep:
                raise LibsvmParseError(lineno, f"expected idx:value, got {tok!r}")
            try:
                j = int(idx)
                v = float(val)
            except ValueError:
                raise LibsvmParseError(lineno, f"non-numeric token {tok!r}") from None
            if j <= 0:
                raise LibsvmParseError(lineno, f"index must be positive, got {j}")
            if j <= prev:
                raise LibsvmParseError(lineno, "indices not strictly increasing")
            prev = j
            indices.append(j - 1)
            data.append(v)
        indptr.append(len(indices))
    return labels, indptr, indices, data


def parse_libsvm(
    stream: TextIO | str,
    convention: str = PM1,
    n_features: int | None = None,
) -> SparseDataset:
    """Read LIBSVM text (``<label> <idx>:<val> ...``, 1-based indices).

    ``n_features`` overrides the inferred dimension (max index) for files
    whose trailing columns are all zero.  Labels are remapped to
    ``convention`` with :func:`remap_labels`.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels, indptr, indices, data = _parse_lines(stream)
    if not labels:
        raise ValueError("empty LIBSVM input")
    d = max(indices) + 1 if indices else 0
    if n_features is not None:
        if n_features < d:
            raise ValueError(f"n_features={n_features} but file has index {d}")
        d = n_features
    if d == 0:
        raise ValueError("no features in LIBSVM input")
    X = sp.csr_matrix(
        (np.asarray(data, float), np.asarray(indices, np.int32), np.asarray(indptr, np.int64)),
        shape=(len(labels), d),
    )
    X.has_sorted_indices = True
    ds = SparseDataset(X, np.asarray(labels, dtype=float))
    return remap_labels(ds, convention)


def load_libsvm(path, convention: str = PM1, n_features: int | None = None) -> SparseDataset:
    opener = bz2.open if str(path).endswith(".bz2") else open
    with opener(path, "rt") as fh:
        return parse_libsvm(fh, convention, n_features)


def write_libsvm(dataset: SparseDataset, stream: TextIO) -> None:
    X = dataset.X
    for i in range(dataset.n):
        a, b = X.indptr[i], X.indptr[i + 1]
        feats = " ".join(
            f"{j + 1}:{v!r}" for j, v in zip(X.indices[a:b].tolist(), X.data[a:b].tolist())
        )
        label = dataset.y[i]
        lab = str(int(label)) if float(label).is_integer() else repr(float(label))
        stream.write(f"{lab} {feats}".rstrip() + "\n")


def to_libsvm_text(dataset: SparseDataset) -> str:
    buf = io.StringIO()
    write_libsvm(dataset, buf)
    return buf.getvalue()


def remap_labels(dataset: SparseDataset, convention: str) -> SparseDataset:
    """Order-preserving map of a two-valued label set onto {-1,+1} or {0,1}.

    A single-valued label set is accepted only if it already lies in the
    target set (there is no order to preserve).
    """
    lo_t, hi_t = _TARGETS[convention]
    values = np.unique(dataset.y)
    if len(values) > 2:
        raise ValueError(f"expected a binary label set, found {len(values)} classes")
    if len(values) == 1:
        if values[0] not in (lo_t, hi_t):
            raise ValueError(f"single label {values[0]} is not in {{{lo_t}, {hi_t}}}")
        return dataset
    y = np.where(dataset.y == values[0], lo_t, hi_t)
    return SparseDataset(dataset.X, y)


@dataclass(frozen=True)
class ScalingSpec:
    k: float
    seed: int
    e: np.ndarray = field(repr=False)


def scaling_vector(d: int, k: float, seed: int) -> np.ndarray:
    if k < 0:
        raise ValueError("scale factor k must be nonnegative")
    rng = np.random.default_rng(seed)
    return np.exp(rng.uniform(-k, k, size=d))


def scale_columns(dataset: SparseDataset, k: float, seed: int) -> tuple[SparseDataset, ScalingSpec]:
    """Multiply column j by e_j = exp(u_j), u_j ~ U[-k, k]."""
    e = scaling_vector(dataset.d, k, seed)
    X = dataset.X.copy()
    X.data = X.data * e[X.indices]
    return SparseDataset(X, dataset.y.copy()), ScalingSpec(float(k), int(seed), e)


class BatchPlan:
    """Epoch-wise sampling without replacement.

    The permutation for ``epoch`` is a pure function of ``(seed, epoch)``.
    """

    def __init__(self, n: int, batch_size: int, seed: int):
        if batch_size <= 0 or batch_size > n:
            raise ValueError(f"batch_size must be in [1, {n}], got {batch_size}")
        self.n = n
        self.batch_size = batch_size
        self.seed = seed
        self.epoch = 0
        self._pos = 0
        self._order = self.order(0)

    def order(self, epoch: int) -> np.ndarray:
        return np.random.default_rng([self.seed, epoch]).permutation(self.n)

    def batches(self, epoch: int) -> Iterator[np.ndarray]:
        order = self.order(epoch)
        for a in range(0, self.n, self.batch_size):
            yield order[a : a + self.batch_size]

    def next_batch(self) -> np.ndarray:
        if self._pos >= self.n:
            self.epoch += 1
            self._pos = 0
            self._order = self.order(self.epoch)
        batch = self._order[self._pos : self._pos + self.batch_size]
        self._pos += len(batch)
        return batch

    def __len__(self) -> int:
        return -(-self.n // self.batch_size)


def next_batch(plan: BatchPlan, dataset: SparseDataset | None = None) -> np.ndarray:
    if dataset is not None and dataset.n != plan.n:
        raise ValueError("plan was built for a different dataset size")
    return plan.next_batch()
