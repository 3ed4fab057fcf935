"""Packaged synthetic experiments: unit-ball TF sets, misspecified TFs,
sequence-length sweeps."""
from __future__ import annotations

from collections import Counter
from typing import Optional

import numpy as np

from .catalog import build_tf_set
from .config import TrainingConfig
from .core import rollout, split_rng
from .diagnostics import mean_pairwise_jaccard, ngram_uniqueness
from .discriminator import OracleDiscriminator
from .endmodel import EndModelConfig, evaluate, train_classifier
from .generator import MeanFieldGenerator, make_generator
from .synthetic import NullPredicate, sample_unit_ball, two_blob_task
from .training import adversarial_train, null_rate

VARIANTS = {
    "goodbad_mf": ("goodbad", "mf"),
    "lossy_mf": ("lossy", "mf"),
    "lossy_lstm": ("lossy", "lstm"),
}

# Per-model generator step sizes used by the packaged experiments.
GEN_LR = {"mf": 0.01, "lstm": 0.05}


def derived_rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), tag])))


def sequence_stats(seqs, K: int, names, top: int = 5) -> dict:
    seqs = np.asarray(seqs)
    bigrams = Counter(zip(seqs[:, :-1].reshape(-1).tolist(), seqs[:, 1:].reshape(-1).tolist()))
    return {
        "empirical_marginals": (np.bincount(seqs.reshape(-1) - 1, minlength=K) / seqs.size).tolist(),
        "top_bigrams": [{"tfs": [names[a - 1], names[b - 1]], "count": c}
                        for (a, b), c in sorted(bigrams.items(), key=lambda kv: (-kv[1], kv[0]))[:top]],
        "mean_pairwise_jaccard": mean_pairwise_jaccard(seqs, K),
        "bigram_uniqueness": ngram_uniqueness(seqs, 2, K) if seqs.shape[1] >= 2 else None,
    }


def run_report(gen, registry, data, cfg: TrainingConfig, result, predicate=None, eval_trials: int = 10_000,
               scatter_points: int = 200) -> tuple[dict, list]:
    """Summarize a finished training run.

    Null rates need a predicate; scatter rows ``(x, y, tag)`` with tag
    ``original`` or ``transformed`` are produced for 2-D data only.
    """
    report = {
        "config": cfg.to_dict(),
        "tf_set": registry.source,
        "tf_names": registry.names,
        "metrics": [dict(zip(r.header(registry.names), r.values())) for r in result.metrics],
    }
    if predicate is not None:
        e_rng = derived_rng(cfg.seed, 12)
        report["null_rate"] = null_rate(gen, registry, predicate, data, eval_trials, cfg.L, e_rng)
        report["uniform_null_rate"] = null_rate(MeanFieldGenerator(registry.K), registry, predicate, data,
                                                eval_trials, cfg.L, derived_rng(cfg.seed, 12))
        report["eval_trials"] = eval_trials
    s_rng, d_rng, p_rng = split_rng(derived_rng(cfg.seed, 13), 3)
    if gen.kind == "mf":
        report["marginals"] = gen.marginals().tolist()
    report["sequence_stats"] = sequence_stats(gen.sample(s_rng, cfg.L, 500).seqs, registry.K, registry.names)
    scatter = []
    if data.shape[1] == 2:
        pts = data[np.sort(p_rng.choice(len(data), min(scatter_points, len(data)), replace=False))]
        finals = rollout(registry, gen.sample(d_rng, cfg.L, len(pts)).seqs, pts, d_rng)[:, -1]
        scatter = [(float(x), float(y), "original") for x, y in pts] + \
                  [(float(x), float(y), "transformed") for x, y in finals]
        report["scatter"] = [list(r) for r in scatter]
    return report, scatter


def ball_data(seed: int, count: int) -> np.ndarray:
    """The unlabeled unit-ball dataset used by the packaged experiments."""
    return sample_unit_ball(count, derived_rng(seed, 10))


def init_generator(model: str, K: int, cfg: TrainingConfig):
    return make_generator(model, K, derived_rng(cfg.seed, 11), cfg.hidden_size, cfg.r)


def run_figureB1_experiment(variant: str, cfg: Optional[TrainingConfig] = None, count: int = 1000,
                            eval_trials: int = 10_000, scatter_points: int = 200, tf_params: Optional[dict] = None):
    """Train one generator on a unit-ball TF set with the oracle discriminator.

    Returns ``(report, scatter_rows)``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
    tf_set, model = VARIANTS[variant]
    if cfg is None:
        cfg = TrainingConfig(gen_lr=GEN_LR[model])
    cfg = cfg.replace(model=model, discriminator="oracle", tf_set=tf_set)
    reg = build_tf_set(tf_set, cfg.seed, **(tf_params or {}))
    data = ball_data(cfg.seed, count)
    gen = init_generator(model, reg.K, cfg)
    pred = NullPredicate()
    res = adversarial_train(gen, OracleDiscriminator(), reg, data, cfg, null_predicate=pred)
    report, scatter = run_report(gen, reg, data, cfg, res, pred, eval_trials, scatter_points)
    report = {"variant": variant, "data": {"world": "ball", "count": count, "radius": 1.0}, **report}
    return report, scatter


def misspecified_tf_experiment(cfg: Optional[TrainingConfig] = None, count: int = 1000, tf_params=None) -> dict:
    """Mean field on good TFs plus TFs that always leave the ball; returns
    the per-epoch marginal trajectory (row 0 is the untrained policy)."""
    cfg = (cfg or TrainingConfig()).replace(model="mf", discriminator="oracle", tf_set="misspecified")
    reg = build_tf_set("misspecified", cfg.seed, **(tf_params or {}))
    data = ball_data(cfg.seed, count)
    gen = MeanFieldGenerator(reg.K)
    res = adversarial_train(gen, OracleDiscriminator(), reg, data, cfg, null_predicate=NullPredicate())
    traj = [r.marginals.tolist() for r in res.metrics]
    bad = [i for i, n in enumerate(reg.names) if n.startswith("misspecified")]
    return {
        "tf_names": reg.names,
        "misspecified": [reg.names[i] for i in bad],
        "marginals_by_epoch": traj,
        "final_marginals": traj[-1],
        "final_misspecified_mass": float(sum(traj[-1][i] for i in bad)),
        "tf_set": reg.source,
    }


def sequence_length_sweep(cfg: TrainingConfig, lengths, tf_set: str = "lossy", end_cfg: Optional[EndModelConfig] = None,
                          n_labeled: int = 20, n_test: int = 2000, n_unlabeled: int = 500, eval_trials: int = 5000):
    """Train one generator per sequence length, everything else fixed.

    Each row reports the learned and uniform-policy null rates and the end
    model accuracy on the two-blob task with learned versus uniformly random
    (heuristic) augmentation. Rows are sorted by L.
    """
    lengths = sorted({int(v) for v in lengths})
    if not lengths or lengths[0] < 1:
        raise ValueError("need at least one sequence length >= 1")
    rng = derived_rng(cfg.seed, 20)
    l_rng, t_rng, u_rng = split_rng(rng, 3)
    X, y = two_blob_task(l_rng, n_labeled)
    Xt, yt = two_blob_task(t_rng, n_test)
    U, _ = two_blob_task(u_rng, n_unlabeled)
    reg = build_tf_set(tf_set, cfg.seed)
    pred = NullPredicate()
    base_end = end_cfg or EndModelConfig(seed=cfg.seed)
    rows = []
    for L in lengths:
        c = cfg.replace(L=L)
        gen = init_generator(c.model, reg.K, c)
        adversarial_train(gen, OracleDiscriminator(), reg, U, c, null_predicate=pred)
        uni = MeanFieldGenerator(reg.K)
        e = EndModelConfig(**{**base_end.to_dict(), "L": L})
        learned_clf, _ = train_classifier(X, y, U, gen, reg, e, 2)
        heur_clf, _ = train_classifier(X, y, U, uni, reg, e, 2)
        rows.append({
            "L": L,
            "null_rate": null_rate(gen, reg, pred, U, eval_trials, L, derived_rng(c.seed, 12)),
            "uniform_null_rate": null_rate(uni, reg, pred, U, eval_trials, L, derived_rng(c.seed, 12)),
            "accuracy_learned": evaluate(learned_clf, Xt, yt),
            "accuracy_heuristic": evaluate(heur_clf, Xt, yt),
        })
    return rows


def end_model_comparison(seed: int, n_labeled: int = 20, n_test: int = 2000, n_unlabeled: int = 500,
                         sep: float = 0.5, std: float = 0.1, end_cfg: Optional[EndModelConfig] = None,
                         gen_cfg: Optional[TrainingConfig] = None) -> dict:
    """No augmentation vs. learned good/bad mean field augmentation on the
    two-blob task."""
    rng = derived_rng(seed, 30)
    l_rng, t_rng, u_rng = split_rng(rng, 3)
    X, y = two_blob_task(l_rng, n_labeled, sep, std)
    Xt, yt = two_blob_task(t_rng, n_test, sep, std)
    U, _ = two_blob_task(u_rng, n_unlabeled, sep, std)
    reg = build_tf_set("goodbad", seed)
    gen = MeanFieldGenerator(reg.K)
    adversarial_train(gen, OracleDiscriminator(), reg, U, gen_cfg or TrainingConfig(seed=seed),
                      null_predicate=NullPredicate())
    e = end_cfg or EndModelConfig(seed=seed)
    none_clf, none_series = train_classifier(X, y, None, None, None, e, 2, test=(Xt, yt))
    aug_clf, aug_series = train_classifier(X, y, U, gen, reg, e, 2, test=(Xt, yt))
    return {
        "seed": seed,
        "accuracy_none": evaluate(none_clf, Xt, yt),
        "accuracy_learned": evaluate(aug_clf, Xt, yt),
        "series_none": none_series,
        "series_learned": aug_series,
    }


__all__ = ["run_figureB1_experiment", "misspecified_tf_experiment", "sequence_length_sweep",
           "end_model_comparison", "run_report", "ball_data", "derived_rng", "init_generator", "VARIANTS", "GEN_LR"]
