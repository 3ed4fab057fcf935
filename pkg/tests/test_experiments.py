import numpy as np
import pytest

from augseq.checkpoint import dumps
from augseq.config import TrainingConfig
from augseq.experiments import misspecified_tf_experiment, run_figureB1_experiment, sequence_length_sweep


def test_report_contents_and_byte_reproducible():
    cfg = TrainingConfig(epochs=2)
    a, scatter = run_figureB1_experiment("goodbad_mf", cfg, count=200, eval_trials=2000, scatter_points=50)
    b, _ = run_figureB1_experiment("goodbad_mf", cfg, count=200, eval_trials=2000, scatter_points=50)
    assert dumps(a) == dumps(b)
    for key in ("config", "tf_set", "marginals", "null_rate", "uniform_null_rate", "metrics", "scatter",
                "sequence_stats"):
        assert key in a
    assert a["tf_set"]["params"]["mu_bad"] == 1.5 and a["data"]["count"] == 200
    assert len(scatter) == 100 and len(a["metrics"]) == 3
    assert {t for _, _, t in scatter} == {"original", "transformed"}


def test_unknown_variant():
    with pytest.raises(ValueError):
        run_figureB1_experiment("goodbad_lstm")


@pytest.mark.parametrize("variant", ["goodbad_mf", "lossy_mf"])
def test_zero_epochs_mf_is_uniform(variant):
    r, _ = run_figureB1_experiment(variant, TrainingConfig(epochs=0), count=200, eval_trials=4000)
    assert r["null_rate"] == r["uniform_null_rate"]


def test_zero_epochs_lstm_close_to_uniform():
    trials = 10_000
    r, _ = run_figureB1_experiment("lossy_lstm", TrainingConfig(epochs=0, gen_lr=0.05), count=500,
                                   eval_trials=trials)
    p = r["uniform_null_rate"]
    assert abs(r["null_rate"] - p) <= 3 * np.sqrt(2 * p * (1 - p) / trials)
    assert "marginals" not in r and len(r["sequence_stats"]["empirical_marginals"]) == 8


def test_misspecified_trajectory():
    out = misspecified_tf_experiment(TrainingConfig(epochs=15), count=1000)
    K = len(out["tf_names"])
    assert np.allclose(out["marginals_by_epoch"][0], 1.0 / K)
    assert len(out["marginals_by_epoch"]) == 16
    bad = [out["tf_names"].index(n) for n in out["misspecified"]]
    assert all(out["final_marginals"][i] < 1.0 / K for i in bad)
    good = sum(v for i, v in enumerate(out["final_marginals"]) if i not in bad)
    assert good > 0.8


def test_sweep_rows():
    cfg = TrainingConfig(epochs=2)
    rows = sequence_length_sweep(cfg, [10], n_unlabeled=100, n_test=200, eval_trials=500)
    assert len(rows) == 1 and rows[0]["L"] == 10
    rows = sequence_length_sweep(cfg, [5, 1, 5], n_unlabeled=100, n_test=200, eval_trials=500)
    assert [r["L"] for r in rows] == [1, 5]
    for r in rows:
        assert 0 <= r["null_rate"] <= 1 and 0 <= r["accuracy_learned"] <= 1
    with pytest.raises(ValueError):
        sequence_length_sweep(cfg, [])
