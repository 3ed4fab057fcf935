"""Diversity statistics over sampled TF sequences."""
from __future__ import annotations

import numpy as np


def _counts(seqs, K: int) -> np.ndarray:
    seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
    out = np.zeros((seqs.shape[0], K))
    np.add.at(out, (np.repeat(np.arange(seqs.shape[0]), seqs.shape[1]), seqs.reshape(-1) - 1), 1.0)
    return out


def generalized_jaccard(a, b) -> float:
    """1 - sum_k min(c_a, c_b) / sum_k max(c_a, c_b) over TF-id multiset counts."""
    a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    if a.size == 0 and b.size == 0:
        return 0.0
    K = int(max(a.max(initial=0), b.max(initial=0)))
    ca, cb = _counts(a[None], K)[0], _counts(b[None], K)[0]
    return 1.0 - np.minimum(ca, cb).sum() / np.maximum(ca, cb).sum()


def mean_pairwise_jaccard(seqs, K: int) -> float:
    """Average generalized Jaccard distance over all unordered pairs."""
    c = _counts(seqs, K)
    n = c.shape[0]
    if n < 2:
        raise ValueError("need at least two sequences for pairwise distances")
    total = 0.0
    for i in range(n - 1):
        mn = np.minimum(c[i], c[i + 1:]).sum(axis=1)
        mx = np.maximum(c[i], c[i + 1:]).sum(axis=1)
        total += (1.0 - mn / mx).sum()
    return total / (n * (n - 1) / 2)


def ngram_uniqueness(seqs, n: int, K: int) -> float:
    """Distinct contiguous n-grams observed / min(K**n, number of n-gram slots)."""
    seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
    L = seqs.shape[1]
    if not 1 <= n <= L:
        raise ValueError(f"n-gram order {n} must lie in [1, L={L}]")
    grams = np.lib.stride_tricks.sliding_window_view(seqs, n, axis=1).reshape(-1, n)
    distinct = len(np.unique(grams, axis=0))
    return distinct / min(K ** n, grams.shape[0])
