"""Data points, the transformation-function registry, and sequence application.

A transformation function (TF) is any callable ``fn(X, rng) -> X'`` acting on a
batch of points ``X`` of shape ``(B, dim)``. A single data point is a batch of
one. TFs may be stochastic but must draw all randomness from ``rng``.

TF ids are 1-based (``1..K``), in registration order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

TfFn = Callable[[np.ndarray, np.random.Generator], np.ndarray]


class RegistryError(ValueError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def split_rng(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Independent, reproducible child streams."""
    return rng.spawn(n)


def as_point(values, dim: Optional[int] = None) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"a data point must be a non-empty 1-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("data point has non-finite entries")
    if dim is not None and x.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {x.size}")
    return x


@dataclass(frozen=True)
class TransformationFunction:
    id: int
    name: str
    fn: TfFn

    def __call__(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        out = np.asarray(self.fn(X, rng), dtype=float)
        if out.shape != X.shape:
            raise RegistryError(f"TF {self.name!r} changed shape {X.shape} -> {out.shape}")
        return out


class TfRegistry:
    """Ordered set of K TFs over points of a fixed dimension."""

    def __init__(self, dim: Optional[int] = None):
        self.dim = dim
        self._tfs: list[TransformationFunction] = []
        self._by_name: dict[str, int] = {}
        # Free-form description of how the registry was built, for checkpoints.
        self.source: dict = {}

    def register(self, name: str, fn: TfFn) -> int:
        if name in self._by_name:
            raise RegistryError(f"duplicate TF name {name!r}")
        tf_id = len(self._tfs) + 1
        self._tfs.append(TransformationFunction(tf_id, name, fn))
        self._by_name[name] = tf_id
        return tf_id

    def __len__(self) -> int:
        return len(self._tfs)

    @property
    def K(self) -> int:
        return len(self._tfs)

    @property
    def names(self) -> list[str]:
        return [tf.name for tf in self._tfs]

    def __getitem__(self, tf_id: int) -> TransformationFunction:
        if not isinstance(tf_id, (int, np.integer)) or not 1 <= tf_id <= len(self._tfs):
            raise RegistryError(f"unknown TF id {tf_id!r} (K={len(self._tfs)})")
        return self._tfs[int(tf_id) - 1]

    def id_of(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise RegistryError(f"unknown TF name {name!r}") from None

    def check_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"expected a (B, dim) batch, got shape {X.shape}")
        if self.dim is not None and X.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: registry dim {self.dim}, data dim {X.shape[1]}")
        return X

    def check_ids(self, ids) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.size and (not np.issubdtype(ids.dtype, np.integer) or ids.min() < 1 or ids.max() > self.K):
            raise RegistryError(f"TF ids must be integers in [1, {self.K}]")
        return ids.astype(np.int64)


def register_tf(registry: TfRegistry, name: str, fn: TfFn) -> int:
    return registry.register(name, fn)


def apply_tf(registry: TfRegistry, tf_id: int, x, rng: np.random.Generator) -> np.ndarray:
    x = as_point(x, registry.dim)
    return registry[tf_id](x[None, :], rng)[0]


@dataclass
class Trajectory:
    origin: np.ndarray
    intermediates: np.ndarray  # (L, dim)
    sequence: np.ndarray  # (L,) TF ids
    losses: Optional[np.ndarray] = None  # (L + 1,)
    rewards: Optional[np.ndarray] = None  # (L,)

    @property
    def final(self) -> np.ndarray:
        return self.intermediates[-1]

    @property
    def L(self) -> int:
        return len(self.sequence)


def apply_sequence(registry: TfRegistry, seq, x, rng: np.random.Generator) -> Trajectory:
    x = as_point(x, registry.dim)
    seq = registry.check_ids(np.atleast_1d(seq))
    if seq.ndim != 1 or seq.size == 0:
        raise RegistryError("a TF sequence must be a non-empty 1-D array of ids")
    steps = []
    cur = x
    for tf_id in seq:
        cur = registry[int(tf_id)](cur[None, :], rng)[0]
        steps.append(cur)
    return Trajectory(origin=x, intermediates=np.stack(steps), sequence=seq)


def rollout(registry: TfRegistry, seqs, X, rng: np.random.Generator) -> np.ndarray:
    """Apply one TF sequence to each row of ``X``.

    ``seqs`` has shape ``(N, L)`` and ``X`` shape ``(N, dim)``; returns the
    intermediates with shape ``(N, L, dim)``. Rows sharing a TF at a step are
    transformed together in one call.
    """
    X = registry.check_batch(X)
    seqs = registry.check_ids(seqs)
    if seqs.ndim != 2 or seqs.shape[0] != X.shape[0]:
        raise ValueError(f"sequence batch {seqs.shape} does not match data batch {X.shape}")
    N, L = seqs.shape
    out = np.empty((N, L, X.shape[1]))
    cur = X.copy()
    for t in range(L):
        col = seqs[:, t]
        nxt = np.empty_like(cur)
        for tf_id in np.unique(col):
            rows = np.flatnonzero(col == tf_id)
            nxt[rows] = registry[int(tf_id)](cur[rows], rng)
        cur = nxt
        out[:, t] = cur
    return out

