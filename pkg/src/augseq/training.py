"""Adversarial policy-gradient training of a TF sequence generator.

Sign convention: rewards are increments of the generator's loss
log(1 - D(x_t)), which the generator minimizes. ``policy_gradient_estimate``
returns the gradient of that loss, so callers descend along it. A positive
advantage means a sequence pushed points toward the null class, and descent
lowers its probability.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .checkpoint import make_checkpoint, save_checkpoint
from .config import TrainingConfig, validate_config
from .core import TfRegistry, Trajectory, rollout, split_rng
from .diagnostics import mean_pairwise_jaccard, ngram_uniqueness
from .discriminator import discriminator_update
from .generator import SampledSequences, SGDMomentum

log = logging.getLogger(__name__)

EPS_DIV = 1e-6


# --- reward algebra ---------------------------------------------------------

def cumulative_losses(traj, disc, eps: float = 1e-6) -> np.ndarray:
    """l_t = log(1 - D(x_t)) for t = 0..L, with x_0 the original point.

    Accepts a Trajectory (returns shape (L+1,)) or a pair
    ``(origins (N, dim), intermediates (N, L, dim))`` (returns (N, L+1)).
    """
    if isinstance(traj, Trajectory):
        pts = np.vstack([traj.origin[None], traj.intermediates])
        return np.log1p(-disc.predict(pts, eps).prob)
    X0, inter = traj
    N, L, dim = inter.shape
    pts = np.concatenate([X0[:, None, :], inter], axis=1).reshape(N * (L + 1), dim)
    return np.log1p(-disc.predict(pts, eps).prob).reshape(N, L + 1)


def incremental_rewards(losses) -> np.ndarray:
    losses = np.asarray(losses, dtype=float)
    if losses.shape[-1] < 2:
        raise ValueError("need at least l_0 and l_1")
    return np.diff(losses, axis=-1)


def rewards_to_go(R, gamma: float) -> np.ndarray:
    """to_go[t] = sum_{t' >= t} gamma**(t' - t) * R[t'] along the last axis."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    R = np.asarray(R, dtype=float)
    out = np.empty_like(R)
    acc = np.zeros(R.shape[:-1])
    for t in reversed(range(R.shape[-1])):
        acc = R[..., t] + gamma * acc
        out[..., t] = acc
    return out


def batch_baseline(to_go) -> np.ndarray:
    to_go = np.asarray(to_go, dtype=float)
    if to_go.ndim != 2 or to_go.shape[0] == 0:
        raise ValueError("baseline needs a non-empty (N, L) batch of rewards-to-go")
    return to_go.mean(axis=0)


def advantages(R, gamma: float):
    """Returns (to_go, baseline, advantage) for an (N, L) reward batch."""
    to_go = rewards_to_go(R, gamma)
    b = batch_baseline(to_go)
    return to_go, b, to_go - b


# --- estimator --------------------------------------------------------------

@dataclass
class Rollout:
    origins: np.ndarray  # (N, dim), point i repeated m times consecutively
    sampled: SampledSequences
    intermediates: np.ndarray  # (N, L, dim)
    losses: Optional[np.ndarray] = None  # (N, L + 1)
    rewards: Optional[np.ndarray] = None
    to_go: Optional[np.ndarray] = None
    baseline: Optional[np.ndarray] = None
    advantages: Optional[np.ndarray] = None

    @property
    def finals(self) -> np.ndarray:
        return self.intermediates[:, -1]

    @property
    def N(self) -> int:
        return self.origins.shape[0]


@dataclass
class BatchStats:
    baselines: np.ndarray
    gen_loss: float
    diversity: float
    null_rate: float
    disc_loss: float = float("nan")


def sample_rollout(gen, registry: TfRegistry, X, m: int, L: int, rng: np.random.Generator) -> Rollout:
    """Sample m sequences for each of the n points in X and apply them."""
    X = registry.check_batch(X)
    origins = np.repeat(X, m, axis=0)
    s_rng, t_rng = split_rng(rng, 2)
    sampled = gen.sample(s_rng, L, origins.shape[0])
    inter = rollout(registry, sampled.seqs, origins, t_rng)
    return Rollout(origins, sampled, inter)


def score_rollout(ro: Rollout, disc, gamma: float, eps: float) -> Rollout:
    ro.losses = cumulative_losses((ro.origins, ro.intermediates), disc, eps)
    ro.rewards = incremental_rewards(ro.losses)
    ro.to_go, ro.baseline, ro.advantages = advantages(ro.rewards, gamma)
    return ro


def policy_gradient_from_rewards(gen, sampled: SampledSequences, R, gamma: float) -> np.ndarray:
    """(1/N) sum_i sum_t grad log pi(tau_it) * (to_go_it - b_t)."""
    N = sampled.N
    if N < 2:
        raise ValueError("the batch baseline needs at least two sequences (n * m >= 2)")
    _, _, adv = advantages(R, gamma)
    return gen.grad_log_policy(sampled, adv / N)


def policy_gradient_estimate(gen, disc, registry: TfRegistry, X, m: int, gamma: float,
                             rng: np.random.Generator, L: int, eps: float = 1e-6,
                             null_predicate: Optional[Callable] = None):
    """n x m score-function estimate of the gradient of E[l_L] in theta.

    Returns ``(grad, stats, rollout)``.
    """
    if len(X) * m < 2:
        raise ValueError("the batch baseline needs at least two sequences (n * m >= 2)")
    ro = score_rollout(sample_rollout(gen, registry, X, m, L, rng), disc, gamma, eps)
    grad = gen.grad_log_policy(ro.sampled, ro.advantages / ro.N)
    stats = BatchStats(ro.baseline, float(ro.losses[:, -1].mean()), float("nan"),
                       _null_fraction(ro.finals, disc, eps, null_predicate))
    return grad, stats, ro


def _null_fraction(finals, disc, eps, predicate) -> float:
    if predicate is None:
        return float(np.mean(disc.predict(finals, eps).prob < 0.5))
    return float(np.mean(predicate(finals)))


# --- diversity --------------------------------------------------------------

def diversity_distance(x, final, metric: str = "raw_input", disc=None, eps: float = 1e-6):
    """Euclidean distance between points and their transformed images.

    With ``discriminator_feature`` the distance is taken between the
    discriminator's penultimate features. The oracle's features are the raw
    inputs, so for it both metrics agree.
    """
    x, final = np.asarray(x, dtype=float), np.asarray(final, dtype=float)
    single = x.ndim == 1
    x, final = np.atleast_2d(x), np.atleast_2d(final)
    if metric == "raw_input":
        a, b = x, final
    elif metric == "discriminator_feature":
        if disc is None:
            raise ValueError("feature distance needs a discriminator")
        a, b = disc.predict(x, eps).features, disc.predict(final, eps).features
    else:
        raise ValueError(f"unknown distance metric {metric!r}")
    d = np.linalg.norm(a - b, axis=1)
    return float(d[0]) if single else d


def combined_step_weights(ro: Rollout, alpha: float, distances) -> tuple[np.ndarray, float]:
    """Per-step score weights for the gradient of E[l_L] + alpha / J_d.

    J_d is the batch mean distance; its gradient is a second score-function
    estimate with the distances as terminal rewards and their batch mean as
    baseline, scaled by -alpha / max(J_d**2, EPS_DIV).
    """
    N = ro.N
    w = ro.advantages / N
    jd = float(np.mean(distances))
    if alpha > 0:
        coef = -alpha / max(jd * jd, EPS_DIV)
        w = w + (coef * (distances - jd) / N)[:, None]
    return w, jd


def generator_step(gen, optimizer: SGDMomentum, disc, registry: TfRegistry, X, cfg: TrainingConfig,
                   rng: np.random.Generator, null_predicate=None, ro: Optional[Rollout] = None):
    """One momentum update of the generator on J = E[l_L] + alpha / J_d.

    ``ro`` may carry a rollout already sampled from the current generator.
    Returns ``(stats, rollout)``.
    """
    if ro is None:
        ro = sample_rollout(gen, registry, X, cfg.m, cfg.L, rng)
    if ro.N < 2:
        raise ValueError("the batch baseline needs at least two sequences (n * m >= 2)")
    score_rollout(ro, disc, cfg.gamma, cfg.prob_clamp_eps)
    dist = diversity_distance(ro.origins, ro.finals, cfg.distance_metric, disc, cfg.prob_clamp_eps)
    w, jd = combined_step_weights(ro, cfg.alpha, dist)
    optimizer.step(gen.theta, gen.grad_log_policy(ro.sampled, w))
    stats = BatchStats(ro.baseline, float(ro.losses[:, -1].mean()), jd,
                       _null_fraction(ro.finals, disc, cfg.prob_clamp_eps, null_predicate))
    return stats, ro


# --- evaluation -------------------------------------------------------------

def null_rate(gen, registry: TfRegistry, predicate: Callable, data, trials: int, L: int,
              rng: np.random.Generator) -> float:
    """Monte Carlo estimate of P(final point is null) over (point, sequence) pairs."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    data = registry.check_batch(data)
    p_rng, s_rng, t_rng = split_rng(rng, 3)
    pts = data[p_rng.integers(0, len(data), trials)]
    seqs = gen.sample(s_rng, L, trials).seqs
    finals = rollout(registry, seqs, pts, t_rng)[:, -1]
    return float(np.mean(predicate(finals)))


def policy_marginals(gen, L: int, rng: np.random.Generator, count: int = 2000) -> np.ndarray:
    if gen.kind == "mf":
        return gen.marginals()
    return gen.marginals(rng, L, count)


# --- training loop ----------------------------------------------------------

@dataclass
class MetricsRow:
    epoch: int
    gen_loss: float
    disc_loss: float
    null_rate: float
    diversity: float
    mean_jaccard: float
    ngram_uniqueness: float
    marginals: np.ndarray

    def header(self, names) -> list[str]:
        return ["epoch", "gen_loss", "disc_loss", "null_rate", "diversity", "mean_jaccard",
                "ngram_uniqueness"] + [f"p[{n}]" for n in names]

    def values(self) -> list:
        return [self.epoch, self.gen_loss, self.disc_loss, self.null_rate, self.diversity,
                self.mean_jaccard, self.ngram_uniqueness] + list(self.marginals)


def format_float(v) -> str:
    return f"{float(v):.9g}"


def write_metrics_csv(path, rows: list[MetricsRow], names, append: bool = False):
    path = Path(path)
    new = not (append and path.exists())
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(rows[0].header(names) if rows else MetricsRow.header(None, names))
        for row in rows:
            w.writerow([str(v) if isinstance(v, (int, np.integer)) else format_float(v) for v in row.values()])


@dataclass
class TrainResult:
    metrics: list[MetricsRow]
    checkpoints: list[dict] = field(default_factory=list)


def _batches(n_points: int, n: int, rng: np.random.Generator):
    order = rng.permutation(n_points)
    return [order[i:i + n] for i in range(0, n_points, n)]


def adversarial_train(gen, disc, registry: TfRegistry, data, cfg: TrainingConfig,
                      null_predicate: Optional[Callable] = None, out_dir=None,
                      source: Optional[dict] = None, on_epoch: Optional[Callable] = None) -> TrainResult:
    """Alternate discriminator and generator updates over the unlabeled data.

    Emits one MetricsRow per epoch (epoch 0 evaluates the untrained
    generator without updating anything) and a checkpoint after every
    epoch. With an output directory, checkpoints go to
    ``checkpoint_epoch_XXX.json`` and rows are appended to ``metrics.csv``.
    """
    validate_config(cfg)
    if cfg.K is not None and cfg.K != registry.K:
        raise ValueError(f"config K={cfg.K} does not match registry with {registry.K} TFs")
    data = registry.check_batch(data)
    if len(data) == 0:
        raise ValueError("no unlabeled data")
    eps = cfg.prob_clamp_eps
    root = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 1])))
    shuffle_rng, roll_rng, stat_rng = split_rng(root, 3)
    gen_opt = SGDMomentum(gen.theta.size, cfg.gen_lr, cfg.momentum)
    disc_opt = SGDMomentum(disc.theta.size, cfg.disc_lr, cfg.momentum) if disc.trainable else None
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.csv").unlink(missing_ok=True)
    result = TrainResult([])

    def finish_epoch(epoch, stats, seqs_seen, last_seqs):
        if gen.kind == "mf":
            marg = gen.marginals()
        else:
            allseqs = np.concatenate(seqs_seen)
            marg = np.bincount(allseqs.reshape(-1) - 1, minlength=registry.K) / allseqs.size
        row = MetricsRow(
            epoch=epoch,
            gen_loss=float(np.mean([s.gen_loss for s in stats])),
            disc_loss=float(np.mean([s.disc_loss for s in stats])),
            null_rate=float(np.mean([s.null_rate for s in stats])),
            diversity=float(np.mean([s.diversity for s in stats])),
            mean_jaccard=mean_pairwise_jaccard(last_seqs, registry.K) if len(last_seqs) > 1 else float("nan"),
            ngram_uniqueness=ngram_uniqueness(last_seqs, min(2, cfg.L), registry.K),
            marginals=marg,
        )
        result.metrics.append(row)
        ck = make_checkpoint(gen, disc, cfg, epoch, registry, gen_opt, disc_opt, source)
        result.checkpoints.append(ck)
        if out_dir is not None:
            save_checkpoint(ck, out_dir / f"checkpoint_epoch_{epoch:03d}.json")
            write_metrics_csv(out_dir / "metrics.csv", [row], registry.names, append=True)
        log.info("epoch %d: gen_loss=%.4f disc_loss=%.4f null_rate=%.4f", epoch, row.gen_loss,
                 row.disc_loss, row.null_rate)
        if on_epoch is not None:
            on_epoch(row)

    # epoch 0: evaluation only
    stats, seen = [], []
    for idx in _batches(len(data), cfg.n, shuffle_rng):
        ro = score_rollout(sample_rollout(gen, registry, data[idx], cfg.m, cfg.L, roll_rng), disc, cfg.gamma, eps)
        dist = diversity_distance(ro.origins, ro.finals, cfg.distance_metric, disc, eps)
        dl = discriminator_update(disc, data[idx], ro.finals, None, eps)
        stats.append(BatchStats(ro.baseline, float(ro.losses[:, -1].mean()), float(dist.mean()),
                                _null_fraction(ro.finals, disc, eps, null_predicate), dl))
        seen.append(ro.sampled.seqs)
    finish_epoch(0, stats, seen, seen[-1])

    for epoch in range(1, cfg.epochs + 1):
        stats, seen = [], []
        for idx in _batches(len(data), cfg.n, shuffle_rng):
            batch = data[idx]
            if cfg.split_batches:
                if len(batch) < 2:
                    continue
                half = len(batch) // 2
                d_part, g_part = batch[:half], batch[half:]
            else:
                d_part = g_part = batch
            if len(g_part) * cfg.m < 2:
                continue
            b_rng, d_rng = split_rng(roll_rng, 2)
            ro = sample_rollout(gen, registry, g_part, cfg.m, cfg.L, b_rng)
            fakes = ro.finals if not cfg.split_batches else \
                sample_rollout(gen, registry, d_part, cfg.m, cfg.L, d_rng).finals
            dl = discriminator_update(disc, d_part, fakes, disc_opt, eps)
            st, ro = generator_step(gen, gen_opt, disc, registry, g_part, cfg, b_rng, null_predicate, ro=ro)
            st.disc_loss = dl
            stats.append(st)
            seen.append(ro.sampled.seqs)
        if not stats:
            raise ValueError("every batch was too small for a generator update; raise n or m")
        finish_epoch(epoch, stats, seen, seen[-1])
    return result
