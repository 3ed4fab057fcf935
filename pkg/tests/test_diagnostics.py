import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augseq.diagnostics import generalized_jaccard, mean_pairwise_jaccard, ngram_uniqueness

seqs_st = st.lists(st.integers(1, 5), min_size=1, max_size=8)


def test_jaccard_examples():
    assert generalized_jaccard((1, 2, 3), (1, 2, 3)) == 0.0
    assert generalized_jaccard((1, 1), (2, 3)) == 1.0
    assert generalized_jaccard((1, 1, 2), (1, 2, 2)) == 0.5


def test_jaccard_ignores_order():
    assert generalized_jaccard((3, 1, 2), (2, 3, 1)) == 0.0


@settings(max_examples=100, deadline=None)
@given(seqs_st, seqs_st, seqs_st)
def test_jaccard_pseudometric(a, b, c):
    dab = generalized_jaccard(a, b)
    assert 0.0 <= dab <= 1.0
    assert dab == generalized_jaccard(b, a)
    assert generalized_jaccard(a, a) == 0.0
    assert generalized_jaccard(a, c) <= dab + generalized_jaccard(b, c) + 1e-12


def test_mean_pairwise_matches_loop():
    rng = np.random.default_rng(0)
    s = rng.integers(1, 5, size=(12, 6))
    brute = np.mean([generalized_jaccard(s[i], s[j]) for i in range(12) for j in range(i + 1, 12)])
    assert mean_pairwise_jaccard(s, 4) == pytest.approx(brute, abs=1e-12)
    with pytest.raises(ValueError):
        mean_pairwise_jaccard(s[:1], 4)


def test_ngram_examples():
    assert ngram_uniqueness([[1, 1, 1]], 2, 2) == 0.5
    assert ngram_uniqueness([[1, 2, 3, 4]], 2, 4) == 1.0
    many = np.full((500, 10), 3)
    assert ngram_uniqueness(many, 2, 5) == 1 / 25
    with pytest.raises(ValueError):
        ngram_uniqueness([[1, 2]], 3, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31))
def test_ngram_ratio_in_unit_interval(n, extra, K, seed):
    L = n + extra - 1
    s = np.random.default_rng(seed).integers(1, K + 1, size=(7, L))
    r = ngram_uniqueness(s, n, K)
    assert 0.0 < r <= 1.0
