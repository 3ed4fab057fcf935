import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augseq.generator import (LSTMGenerator, MeanFieldGenerator, SGDMomentum, generator_from_dict, mf_policy,
                              sample_sequence, softmax)

from conftest import central_diff, rel_err


def test_softmax_examples():
    assert np.allclose(softmax([0, 0, 0, 0]), 0.25)
    assert np.allclose(softmax([np.log(3.0), 0.0]), [0.75, 0.25], atol=1e-15)
    p = softmax([1000.0, 0.0])
    assert np.all(np.isfinite(p)) and p[0] == pytest.approx(1.0) and p[1] < 1e-300 + 1e-400


def test_softmax_rejects_non_finite():
    with pytest.raises(ValueError):
        softmax([np.inf, 0.0])
    with pytest.raises(ValueError):
        softmax([np.nan, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12), st.floats(-100, 100))
def test_softmax_sums_to_one_and_shift_invariant(v, c):
    p = softmax(v)
    assert abs(p.sum() - 1.0) <= 1e-12 and np.all(p >= 0)
    assert np.allclose(softmax(np.asarray(v) + c), p, atol=1e-12)


def test_mf_policy_examples():
    assert np.allclose(mf_policy(MeanFieldGenerator(7)), 1 / 7)
    g = MeanFieldGenerator(5, [10.0, 0, 0, 0, 0])
    assert mf_policy(g)[0] > 0.999


def test_mf_degenerate_sequence():
    g = MeanFieldGenerator(4, [-1e3, -1e3, 0.0, -1e3])
    s = sample_sequence(g, 6, np.random.default_rng(0))
    assert s.seqs.tolist() == [[3] * 6]


def test_mf_uniform_binomial():
    s = MeanFieldGenerator(2).sample(np.random.default_rng(1), 1, 100_000)
    frac = np.mean(s.seqs == 1)
    assert abs(frac - 0.5) <= 3 * np.sqrt(0.25 / 100_000)


def test_step_log_probs_match_policy_and_joint():
    g = MeanFieldGenerator(3, [0.2, -0.5, 1.0])
    s = g.sample(np.random.default_rng(2), 5, 50)
    p = g.policy()
    assert np.allclose(s.step_log_probs, np.log(p[s.seqs - 1]))
    joint = np.prod(p[s.seqs - 1], axis=1)
    assert np.allclose(s.log_probs, np.log(joint))


def test_mf_gradient_example():
    g = MeanFieldGenerator(2)
    s = g.sample(np.random.default_rng(0), 1, 1)
    s.seqs[:] = 1
    assert np.allclose(g.grad_log_policy(s, np.ones((1, 1))), [0.5, -0.5])
    assert np.array_equal(g.grad_log_policy(s, np.zeros((1, 1))), [0.0, 0.0])


def test_mf_score_identity_monte_carlo():
    g = MeanFieldGenerator(4, [0.3, -0.2, 0.5, 0.0])
    s = g.sample(np.random.default_rng(3), 3, 20_000)
    p = g.policy()
    # per-sequence score vectors
    per = np.stack([np.bincount(row - 1, minlength=4) - 3 * p for row in s.seqs])
    mean, se = per.mean(axis=0), per.std(axis=0, ddof=1) / np.sqrt(len(per))
    assert np.all(np.abs(mean) <= 3 * se)


def _check_grad(gen, sampled_fn, rng):
    sampled = sampled_fn()
    w = rng.normal(size=sampled.seqs.shape)
    seqs = sampled.seqs.copy()
    analytic = gen.grad_log_policy(sampled, w)
    f = lambda: float(np.sum(w * gen.sequence_log_probs(seqs)))
    return rel_err(analytic, central_diff(f, gen.theta))


def test_mf_grad_matches_finite_differences():
    rng = np.random.default_rng(10)
    for _ in range(20):
        K, L = int(rng.integers(2, 6)), int(rng.integers(1, 5))
        g = MeanFieldGenerator(K, rng.normal(size=K))
        assert _check_grad(g, lambda: g.sample(rng, L, 4), rng) <= 1e-4


def test_lstm_grad_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(20):
        K, L, H = int(rng.integers(2, 6)), int(rng.integers(1, 5)), int(rng.integers(1, 9))
        g = LSTMGenerator(K, H, r=2.0, rng=rng, init_scale=0.8)
        assert _check_grad(g, lambda: g.sample(rng, L, 3), rng) <= 1e-4


def test_lstm_zero_weights_uniform():
    g = LSTMGenerator(5, 4)
    h, c, logits, _ = g.step(np.eye(5)[:1], np.zeros((1, 4)), np.zeros((1, 4)))
    assert np.array_equal(logits, np.zeros((1, 5)))
    assert np.allclose(softmax(logits), 0.2)


def test_lstm_logits_bounded_and_deterministic():
    rng = np.random.default_rng(4)
    g = LSTMGenerator(6, 5, r=2.0, theta=rng.normal(scale=20.0, size=LSTMGenerator(6, 5).theta.size))
    inp, h, c = np.eye(6)[:3], rng.normal(size=(3, 5)), rng.normal(size=(3, 5))
    a = g.step(inp, h, c)
    b = g.step(inp, h, c)
    assert np.all(np.abs(a[2]) <= 2.0)
    assert np.array_equal(a[2], b[2]) and np.array_equal(a[0], b[0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 5.0), st.floats(0.1, 100.0))
def test_lstm_logits_bounded_property(seed, r, scale):
    rng = np.random.default_rng(seed)
    size = LSTMGenerator(3, 4).theta.size
    g = LSTMGenerator(3, 4, r=r, theta=rng.normal(scale=scale, size=size))
    s = g.sample(rng, 4, 5)
    logits = np.log(s.probs)  # log-softmax: the spread of the logits is at most 2r
    assert np.all(logits.max(axis=2) - logits.min(axis=2) <= 2 * r + 1e-9)


def test_lstm_step_dimension_mismatch():
    g = LSTMGenerator(3, 2)
    with pytest.raises(ValueError):
        g.step(np.zeros((1, 4)), np.zeros((1, 2)), np.zeros((1, 2)))


def test_lstm_first_input_is_x0():
    g = LSTMGenerator(3, 4, rng=np.random.default_rng(0))
    s = g.sample(np.random.default_rng(1), 1, 2)
    _, _, logits, _ = g.step(g.params["x0"][None], np.zeros((1, 4)), np.zeros((1, 4)))
    assert np.allclose(s.probs[0, 0], softmax(logits[0]))


def test_lstm_evaluate_matches_sample():
    g = LSTMGenerator(4, 6, rng=np.random.default_rng(0))
    s = g.sample(np.random.default_rng(1), 5, 7)
    e = g.evaluate(s.seqs)
    assert np.allclose(s.step_log_probs, e.step_log_probs)


def test_grad_needs_cache():
    g = LSTMGenerator(3, 2)
    s = MeanFieldGenerator(3).sample(np.random.default_rng(0), 2, 2)
    with pytest.raises(ValueError):
        g.grad_log_policy(s, np.ones((2, 2)))


def test_sgd_momentum_examples():
    theta = np.array([1.0, -2.0])
    SGDMomentum(2, 0.1).step(theta, np.zeros(2))
    assert np.array_equal(theta, [1.0, -2.0])
    theta = np.array([1.0, -2.0])
    SGDMomentum(2, 0.1, momentum=0.0).step(theta, np.array([1.0, 1.0]))
    assert np.allclose(theta, [0.9, -2.1])
    theta = np.zeros(2)
    g = np.array([1.0, -3.0])
    opt = SGDMomentum(2, 1.0, 0.9)
    opt.step(theta, g)
    opt.step(theta, g)
    assert np.allclose(theta, -g * (1.0 + 1.9))
    with pytest.raises(ValueError):
        opt.step(theta, np.zeros(3))


@pytest.mark.parametrize("gen", [MeanFieldGenerator(4, [0.1, 0.2, -0.3, 1e-17]),
                                 LSTMGenerator(3, 5, rng=np.random.default_rng(0))])
def test_generator_dict_round_trip_bit_exact(gen):
    import json
    back = generator_from_dict(json.loads(json.dumps(gen.to_dict())))
    assert type(back) is type(gen)
    assert back.theta.tobytes() == gen.theta.tobytes()
