"""End classifier trained on generator-augmented data.

A one-hidden-layer perceptron with leaky-rectifier activations, trained by
minibatch SGD with momentum on cross-entropy, optionally plus the
transformation-regularization (TR) term: the Euclidean distance between
the logits of a point and of its transformed copy.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import TfRegistry, rollout, split_rng
from .generator import SGDMomentum, softmax


@dataclass
class EndModelConfig:
    p_transform: float = 1.0
    final_clean_epochs: int = 10
    tr_coefficient: float = 0.1
    tr_unlabeled_fraction: float = 0.2
    epochs: int = 40
    lr: float = 0.05
    momentum: float = 0.9
    batch_size: int = 10
    hidden: int = 32
    L: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_transform <= 1.0:
            raise ValueError("p_transform must lie in [0, 1]")
        if self.tr_coefficient < 0 or not 0.0 <= self.tr_unlabeled_fraction <= 1.0:
            raise ValueError("tr_coefficient must be >= 0 and tr_unlabeled_fraction in [0, 1]")
        if self.final_clean_epochs < 0 or self.epochs < 1 or self.batch_size < 1 or self.L < 1:
            raise ValueError("epochs, batch_size and L must be >= 1, final_clean_epochs >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


class Classifier:
    kind = "classifier"

    def __init__(self, dim: int, n_classes: int, hidden: int = 32, rng: Optional[np.random.Generator] = None,
                 theta=None, slope: float = 0.2):
        self.dim, self.C, self.hidden, self.slope = int(dim), int(n_classes), int(hidden), float(slope)
        D, H, C = self.dim, self.hidden, self.C
        self._layout = [("W1", (H, D)), ("b1", (H,)), ("W2", (C, H)), ("b2", (C,))]
        size = H * D + H + C * H + C
        if theta is not None:
            self.theta = np.array(theta, dtype=float)
        elif rng is not None:
            self.theta = np.concatenate([
                rng.uniform(-1, 1, H * D) * np.sqrt(6.0 / (D + H)), np.zeros(H),
                rng.uniform(-1, 1, C * H) * np.sqrt(6.0 / (H + C)), np.zeros(C),
            ])
        else:
            self.theta = np.zeros(size)
        if self.theta.shape != (size,):
            raise ValueError(f"expected {size} classifier parameters")
        self.params, off = {}, 0
        for name, shape in self._layout:
            n = int(np.prod(shape))
            self.params[name] = self.theta[off:off + n].reshape(shape)
            off += n

    def forward(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        p = self.params
        pre = X @ p["W1"].T + p["b1"]
        hid = np.where(pre > 0, pre, self.slope * pre)
        return hid @ p["W2"].T + p["b2"], dict(X=X, pre=pre, hid=hid)

    def logits(self, X) -> np.ndarray:
        return self.forward(X)[0]

    def backward(self, cache, dlogits) -> np.ndarray:
        p = self.params
        dhid = dlogits @ p["W2"]
        dpre = dhid * np.where(cache["pre"] > 0, 1.0, self.slope)
        return np.concatenate([
            (dpre.T @ cache["X"]).reshape(-1), dpre.sum(axis=0),
            (dlogits.T @ cache["hid"]).reshape(-1), dlogits.sum(axis=0),
        ])

    def to_dict(self) -> dict:
        return {"model": self.kind, "dim": self.dim, "n_classes": self.C, "hidden": self.hidden,
                "slope": self.slope, "theta": self.theta.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Classifier":
        return cls(d["dim"], d["n_classes"], d["hidden"], theta=d["theta"], slope=d["slope"])


def tr_term(logits_clean, logits_transformed):
    """Euclidean distance between logit vectors (row-wise for 2-D input)."""
    a, b = np.asarray(logits_clean, dtype=float), np.asarray(logits_transformed, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"logit shapes differ: {a.shape} vs {b.shape}")
    return np.linalg.norm(a - b, axis=-1)


def evaluate(clf: Classifier, X, y) -> float:
    """Argmax accuracy; ties go to the lowest class index."""
    y = np.asarray(y)
    if len(y) == 0:
        raise ValueError("empty test set")
    return float(np.mean(np.argmax(clf.logits(X), axis=1) == y))


def p_transform_at(epoch: int, cfg: EndModelConfig) -> float:
    """Schedule: cfg.p_transform, then 0 for the last final_clean_epochs (epochs are 1-based)."""
    return 0.0 if epoch > cfg.epochs - cfg.final_clean_epochs else cfg.p_transform


def _transform(gen, registry, X, L, rng):
    s_rng, t_rng = split_rng(rng, 2)
    seqs = gen.sample(s_rng, L, len(X)).seqs
    return rollout(registry, seqs, X, t_rng)[:, -1]


def train_classifier(X, y, unlabeled, gen, registry: Optional[TfRegistry], cfg: EndModelConfig,
                     n_classes: Optional[int] = None, test=None):
    """Returns (classifier, per-epoch series of dicts).

    ``gen=None`` trains without augmentation or TR. Labels are never changed
    by augmentation.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0 or len(X) != len(y):
        raise ValueError("labeled data must be non-empty and match its labels")
    C = int(n_classes if n_classes is not None else y.max() + 1)
    root = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 3])))
    init_rng, order_rng, aug_rng = split_rng(root, 3)
    clf = Classifier(X.shape[1], C, cfg.hidden, rng=init_rng)
    opt = SGDMomentum(clf.theta.size, cfg.lr, cfg.momentum)
    U = None if unlabeled is None else np.atleast_2d(np.asarray(unlabeled, dtype=float))
    use_tr = gen is not None and cfg.tr_coefficient > 0 and U is not None and len(U) > 0
    series = []
    for epoch in range(1, cfg.epochs + 1):
        p_eff = p_transform_at(epoch, cfg) if gen is not None else 0.0
        n_tf, tr_vals, losses = 0, [], []
        order = order_rng.permutation(len(X))
        for start in range(0, len(X), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = X[idx].copy(), y[idx]
            mask_rng, roll_rng, u_rng = split_rng(aug_rng, 3)
            mask = mask_rng.random(len(idx)) < p_eff
            if mask.any():
                xb[mask] = _transform(gen, registry, xb[mask], cfg.L, roll_rng)
                n_tf += int(mask.sum())
            logits, cache = clf.forward(xb)
            prob = softmax(logits)
            losses.append(float(-np.mean(np.log(prob[np.arange(len(yb)), yb] + 1e-300))))
            dlogits = prob.copy()
            dlogits[np.arange(len(yb)), yb] -= 1.0
            grad = clf.backward(cache, dlogits / len(yb))
            if use_tr and p_eff > 0:
                k = max(1, int(round(cfg.tr_unlabeled_fraction * len(idx))))
                ub = U[u_rng.integers(0, len(U), k)]
                ut = _transform(gen, registry, ub, cfg.L, u_rng)
                la, ca = clf.forward(ub)
                lb, cb = clf.forward(ut)
                dist = tr_term(la, lb)
                tr_vals.append(float(dist.mean()))
                unit = np.divide(la - lb, dist[:, None], out=np.zeros_like(la), where=dist[:, None] > 0)
                scale = cfg.tr_coefficient / k
                grad += clf.backward(ca, scale * unit) - clf.backward(cb, scale * unit)
            opt.step(clf.theta, grad)
        row = {"epoch": epoch, "p_transform": p_eff, "n_transformed": n_tf,
               "tr_mean": float(np.mean(tr_vals)) if tr_vals else 0.0,
               "train_loss": float(np.mean(losses))}
        if test is not None:
            row["test_accuracy"] = evaluate(clf, *test)
        series.append(row)
    return clf, series
