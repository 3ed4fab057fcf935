"""Null-class discriminators D: X -> (0, 1).

Probabilities are clamped to [eps, 1 - eps] so every log D and log(1 - D) is
finite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class DiscriminatorOutput:
    prob: np.ndarray  # (B,)
    features: np.ndarray  # (B, F)
    cache: dict = field(default_factory=dict, repr=False)


class OracleDiscriminator:
    """Analytic indicator 1{||x|| < radius}; features are the raw inputs."""

    kind = "oracle"
    trainable = False

    def __init__(self, radius: float = 1.0):
        self.radius = float(radius)

    def predict(self, X, eps: float = 1e-6) -> DiscriminatorOutput:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        inside = np.linalg.norm(X, axis=1) < self.radius
        return DiscriminatorOutput(np.where(inside, 1.0 - eps, eps), X)

    def to_dict(self) -> dict:
        return {"model": self.kind, "radius": self.radius}


def _lrelu(z, slope):
    return np.where(z > 0, z, slope * z)


class MLPDiscriminator:
    """Two-layer perceptron: logistic(w2 . lrelu(W1 x + b1) + b2)."""

    kind = "mlp"
    trainable = True

    def __init__(self, dim: int, hidden: int = 64, rng: Optional[np.random.Generator] = None,
                 theta=None, slope: float = 0.2):
        self.dim, self.hidden, self.slope = int(dim), int(hidden), float(slope)
        D, H = self.dim, self.hidden
        self._layout = [("W1", (H, D)), ("b1", (H,)), ("w2", (H,)), ("b2", (1,))]
        size = H * D + 2 * H + 1
        if theta is not None:
            self.theta = np.array(theta, dtype=float)
            if self.theta.shape != (size,):
                raise ValueError(f"expected {size} MLP parameters, got shape {self.theta.shape}")
        elif rng is not None:
            self.theta = np.concatenate([
                rng.uniform(-1, 1, H * D) * np.sqrt(6.0 / (D + H)),
                np.zeros(H),
                rng.uniform(-1, 1, H) * np.sqrt(6.0 / (H + 1)),
                np.zeros(1),
            ])
        else:
            self.theta = np.zeros(size)
        self.params = {}
        off = 0
        for name, shape in self._layout:
            n = int(np.prod(shape))
            self.params[name] = self.theta[off:off + n].reshape(shape)
            off += n

    def predict(self, X, eps: float = 1e-6) -> DiscriminatorOutput:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: discriminator dim {self.dim}, input dim {X.shape[1]}")
        p = self.params
        pre = X @ p["W1"].T + p["b1"]
        feat = _lrelu(pre, self.slope)
        z = feat @ p["w2"] + p["b2"][0]
        sig = 0.5 * (1.0 + np.tanh(0.5 * z))
        prob = np.clip(sig, eps, 1.0 - eps)
        live = (sig > eps) & (sig < 1.0 - eps)
        return DiscriminatorOutput(prob, feat, dict(X=X, pre=pre, feat=feat, sig=sig, live=live))

    def _backprop(self, out: DiscriminatorOutput, dprob):
        c = out.cache
        if "X" not in c:
            raise ValueError("discriminator output carries no forward cache")
        dprob = np.asarray(dprob, dtype=float)
        if dprob.shape != c["sig"].shape:
            raise ValueError("upstream gradient does not match the forward batch")
        dz = dprob * c["sig"] * (1.0 - c["sig"]) * c["live"]
        dfeat = dz[:, None] * self.params["w2"]
        dpre = dfeat * np.where(c["pre"] > 0, 1.0, self.slope)
        return dz, dpre

    def backward(self, out: DiscriminatorOutput, dprob) -> np.ndarray:
        """Flat parameter gradient of sum_b dprob[b] * prob[b]."""
        dz, dpre = self._backprop(out, dprob)
        c = out.cache
        return np.concatenate([
            (dpre.T @ c["X"]).reshape(-1),
            dpre.sum(axis=0),
            c["feat"].T @ dz,
            [dz.sum()],
        ])

    def input_grad(self, out: DiscriminatorOutput, dprob) -> np.ndarray:
        _, dpre = self._backprop(out, dprob)
        return dpre @ self.params["W1"]

    def to_dict(self) -> dict:
        return {"model": self.kind, "dim": self.dim, "hidden": self.hidden, "slope": self.slope,
                "theta": self.theta.tolist()}


def discriminator_from_dict(d: dict):
    if d.get("model") == "oracle":
        return OracleDiscriminator(d["radius"])
    if d.get("model") == "mlp":
        return MLPDiscriminator(d["dim"], d["hidden"], theta=d["theta"], slope=d["slope"])
    raise ValueError(f"unknown discriminator model tag {d.get('model')!r}")


def oracle_predict(d: OracleDiscriminator, x, eps: float = 1e-6) -> DiscriminatorOutput:
    return d.predict(x, eps)


def mlp_forward(d: MLPDiscriminator, x, eps: float = 1e-6) -> DiscriminatorOutput:
    return d.predict(x, eps)


def mlp_backward(d: MLPDiscriminator, out: DiscriminatorOutput, dprob) -> np.ndarray:
    return d.backward(out, dprob)


def discriminator_loss(disc, real, transformed, eps: float = 1e-6):
    """-(mean log D(real) + mean log(1 - D(transformed))), plus forward outputs."""
    real = np.atleast_2d(np.asarray(real, dtype=float))
    transformed = np.atleast_2d(np.asarray(transformed, dtype=float))
    if len(real) == 0 or len(transformed) == 0:
        raise ValueError("discriminator update needs non-empty real and transformed batches")
    if real.shape[1] != transformed.shape[1]:
        raise ValueError("real and transformed batches differ in dimension")
    out_r = disc.predict(real, eps)
    out_f = disc.predict(transformed, eps)
    loss = -(np.mean(np.log(out_r.prob)) + np.mean(np.log1p(-out_f.prob)))
    return float(loss), out_r, out_f


def discriminator_objective(disc, real, transformed, eps: float = 1e-6) -> float:
    """mean log D(real) + mean log(1 - D(transformed)), which the discriminator ascends."""
    return -discriminator_loss(disc, real, transformed, eps)[0]


def discriminator_update(disc, real, transformed, optimizer=None, eps: float = 1e-6) -> float:
    """One momentum step ascending the adversarial objective in the
    discriminator's parameters. Returns the pre-step loss (the negated
    objective). Non-trainable discriminators are left unchanged.
    """
    loss, out_r, out_f = discriminator_loss(disc, real, transformed, eps)
    if disc.trainable and optimizer is not None:
        grad = disc.backward(out_r, -1.0 / (len(out_r.prob) * out_r.prob))
        grad += disc.backward(out_f, 1.0 / (len(out_f.prob) * (1.0 - out_f.prob)))
        optimizer.step(disc.theta, grad)
    return loss
