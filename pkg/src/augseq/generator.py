"""Generative sequence policies over TF ids: mean field and LSTM.

Both models keep every parameter in one flat float64 vector ``theta`` so the
optimizer, gradient accumulators and checkpoints share one layout. Named
parameter arrays are views into ``theta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def softmax(v, axis: int = -1) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("softmax input has non-finite entries")
    z = np.exp(v - v.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def log_softmax(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    z = v - v.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _draw(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling, one uniform per row. Returns 0-based indices."""
    cdf = np.cumsum(probs, axis=-1)
    idx = (cdf <= u[:, None]).sum(axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


@dataclass
class SampledSequences:
    """A batch of N sampled sequences with the caches needed for gradients.

    ``seqs`` holds 1-based TF ids, shape (N, L). ``probs`` holds the per-step
    policy, shape (N, L, K).
    """

    seqs: np.ndarray
    step_log_probs: np.ndarray
    probs: np.ndarray
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return self.seqs.shape[0]

    @property
    def L(self) -> int:
        return self.seqs.shape[1]

    @property
    def log_probs(self) -> np.ndarray:
        """Joint log-probability of each sequence."""
        return self.step_log_probs.sum(axis=1)

    def __getitem__(self, rows) -> "SampledSequences":
        rows = np.atleast_1d(np.arange(self.N)[rows])
        cache = {k: v[rows] if isinstance(v, np.ndarray) and v.shape[:1] == (self.N,)
                 else v for k, v in self.cache.items()}
        if "steps" in self.cache:
            cache["steps"] = [{k: a[rows] for k, a in st.items()} for st in self.cache["steps"]]
        return SampledSequences(self.seqs[rows], self.step_log_probs[rows], self.probs[rows], cache)


class MeanFieldGenerator:
    """K unbounded logits; every step draws independently from softmax(logits)."""

    kind = "mf"

    def __init__(self, K: int, logits=None):
        self.K = int(K)
        self.theta = np.zeros(self.K) if logits is None else np.array(logits, dtype=float)
        if self.theta.shape != (self.K,):
            raise ValueError(f"expected {self.K} logits, got shape {self.theta.shape}")

    @property
    def logits(self) -> np.ndarray:
        return self.theta

    def policy(self) -> np.ndarray:
        return softmax(self.theta)

    def marginals(self) -> np.ndarray:
        return self.policy()

    def sample(self, rng: np.random.Generator, L: int, count: int = 1) -> SampledSequences:
        if L < 1:
            raise ValueError("sequence length must be >= 1")
        p = self.policy()
        u = rng.random((count, L))
        idx = np.minimum(np.searchsorted(np.cumsum(p), u, side="right"), self.K - 1)
        logp = log_softmax(self.theta)[idx]
        return SampledSequences(idx + 1, logp, np.broadcast_to(p, (count, L, self.K)), {"p": p})

    def sequence_log_probs(self, seqs) -> np.ndarray:
        seqs = np.asarray(seqs)
        return log_softmax(self.theta)[seqs - 1]

    def grad_log_policy(self, sampled: SampledSequences, weights) -> np.ndarray:
        """Gradient of sum_{n,t} w[n,t] * log pi(tau[n,t]) with respect to theta."""
        if "p" not in sampled.cache:
            raise ValueError("sampled sequences carry no mean field cache")
        w = np.broadcast_to(np.asarray(weights, dtype=float), sampled.seqs.shape)
        counts = np.bincount(sampled.seqs.reshape(-1) - 1, weights=w.reshape(-1), minlength=self.K)
        return counts - w.sum() * sampled.cache["p"]

    def to_dict(self) -> dict:
        return {"model": self.kind, "K": self.K, "theta": self.theta.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MeanFieldGenerator":
        return cls(d["K"], d["theta"])


class LSTMGenerator:
    """LSTM cell unrolled over the sequence.

    Step 1 receives the trainable ``x0`` as input, later steps the one-hot of
    the previous TF. Output logits are ``r * tanh(Wy h + by)``, so they always
    lie in [-r, r].
    """

    kind = "lstm"

    def __init__(self, K: int, hidden: int = 32, r: float = 2.0, rng: Optional[np.random.Generator] = None,
                 theta=None, init_scale: float = 0.1):
        self.K, self.H, self.r = int(K), int(hidden), float(r)
        K, H = self.K, self.H
        self._layout = [("W", (4 * H, K + H)), ("b", (4 * H,)), ("Wy", (K, H)), ("by", (K,)), ("x0", (K,))]
        size = sum(int(np.prod(s)) for _, s in self._layout)
        if theta is not None:
            self.theta = np.array(theta, dtype=float)
            if self.theta.shape != (size,):
                raise ValueError(f"expected {size} LSTM parameters, got shape {self.theta.shape}")
        elif rng is not None:
            self.theta = rng.uniform(-init_scale, init_scale, size)
        else:
            self.theta = np.zeros(size)
        self.init_scale = init_scale
        self._bind()

    def _bind(self):
        self.params = {}
        off = 0
        for name, shape in self._layout:
            n = int(np.prod(shape))
            self.params[name] = self.theta[off:off + n].reshape(shape)
            off += n

    def step(self, inp: np.ndarray, h: np.ndarray, c: np.ndarray):
        """One cell step on a batch. Returns (h, c, logits, cache)."""
        if inp.shape[-1] != self.K or h.shape[-1] != self.H:
            raise ValueError("LSTM step input/state dimension mismatch")
        p = self.params
        H = self.H
        xh = np.concatenate([inp, h], axis=1)
        z = xh @ p["W"].T + p["b"]
        i, f, o = _sigmoid(z[:, :H]), _sigmoid(z[:, H:2 * H]), _sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        ta = np.tanh(h_new @ p["Wy"].T + p["by"])
        cache = dict(xh=xh, i=i, f=f, o=o, g=g, c_prev=c, tc=tc, h=h_new, ta=ta)
        return h_new, c_new, self.r * ta, cache

    def _unroll(self, count: int, L: int, rng=None, seqs=None) -> SampledSequences:
        if L < 1:
            raise ValueError("sequence length must be >= 1")
        K, H = self.K, self.H
        h, c = np.zeros((count, H)), np.zeros((count, H))
        inp = np.broadcast_to(self.params["x0"], (count, K))
        out = np.empty((count, L), dtype=np.int64)
        probs = np.empty((count, L, K))
        steps = []
        for t in range(L):
            h, c, logits, cache = self.step(inp, h, c)
            pt = softmax(logits)
            idx = _draw(pt, rng.random(count)) if seqs is None else seqs[:, t] - 1
            out[:, t] = idx + 1
            probs[:, t] = pt
            steps.append(cache)
            inp = np.zeros((count, K))
            inp[np.arange(count), idx] = 1.0
        logp = np.log(np.take_along_axis(probs, (out - 1)[:, :, None], axis=2)[:, :, 0])
        return SampledSequences(out, logp, probs, {"steps": steps})

    def sample(self, rng: np.random.Generator, L: int, count: int = 1) -> SampledSequences:
        return self._unroll(count, L, rng=rng)

    def evaluate(self, seqs) -> SampledSequences:
        """Teacher-forced pass over given sequences, with gradient caches."""
        seqs = np.asarray(seqs, dtype=np.int64)
        if seqs.ndim != 2 or seqs.min() < 1 or seqs.max() > self.K:
            raise ValueError("sequences must be an (N, L) array of ids in [1, K]")
        return self._unroll(seqs.shape[0], seqs.shape[1], seqs=seqs)

    def sequence_log_probs(self, seqs) -> np.ndarray:
        return self.evaluate(seqs).step_log_probs

    def marginals(self, rng: np.random.Generator, L: int, count: int = 2000) -> np.ndarray:
        """Empirical TF frequencies over sampled sequences."""
        s = self.sample(rng, L, count).seqs
        return np.bincount(s.reshape(-1) - 1, minlength=self.K) / s.size

    def grad_log_policy(self, sampled: SampledSequences, weights) -> np.ndarray:
        """Backpropagation through time of sum_{n,t} w[n,t] * log pi(tau[n,t])."""
        steps = sampled.cache.get("steps")
        if steps is None or len(steps) != sampled.L:
            raise ValueError("sampled sequences carry no LSTM cache")
        w = np.broadcast_to(np.asarray(weights, dtype=float), sampled.seqs.shape)
        p = self.params
        K, H = self.K, self.H
        N, L = sampled.seqs.shape
        g = {name: np.zeros(shape) for name, shape in self._layout}
        dh_next = np.zeros((N, H))
        dc_next = np.zeros((N, H))
        onehot = np.zeros((N, K))
        rows = np.arange(N)
        for t in reversed(range(L)):
            st = steps[t]
            onehot[:] = 0.0
            onehot[rows, sampled.seqs[:, t] - 1] = 1.0
            dlogits = w[:, t:t + 1] * (onehot - sampled.probs[:, t])
            da = dlogits * self.r * (1.0 - st["ta"] ** 2)
            g["Wy"] += da.T @ st["h"]
            g["by"] += da.sum(axis=0)
            dh = da @ p["Wy"] + dh_next
            dc = dc_next + dh * st["o"] * (1.0 - st["tc"] ** 2)
            do = dh * st["tc"]
            di = dc * st["g"]
            dgc = dc * st["i"]
            df = dc * st["c_prev"]
            dc_next = dc * st["f"]
            dz = np.concatenate([
                di * st["i"] * (1.0 - st["i"]),
                df * st["f"] * (1.0 - st["f"]),
                do * st["o"] * (1.0 - st["o"]),
                dgc * (1.0 - st["g"] ** 2),
            ], axis=1)
            g["W"] += dz.T @ st["xh"]
            g["b"] += dz.sum(axis=0)
            dxh = dz @ p["W"]
            dh_next = dxh[:, K:]
            if t == 0:
                g["x0"] += dxh[:, :K].sum(axis=0)
        return np.concatenate([g[name].reshape(-1) for name, _ in self._layout])

    def to_dict(self) -> dict:
        return {"model": self.kind, "K": self.K, "H": self.H, "r": self.r,
                "init": f"uniform[-{self.init_scale}, {self.init_scale}]", "theta": self.theta.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LSTMGenerator":
        return cls(d["K"], d["H"], d["r"], theta=d["theta"])


def make_generator(kind: str, K: int, rng: Optional[np.random.Generator] = None, hidden: int = 32, r: float = 2.0):
    if kind == "mf":
        return MeanFieldGenerator(K)
    if kind == "lstm":
        return LSTMGenerator(K, hidden, r, rng=rng)
    raise ValueError(f"unknown generator model {kind!r}")


def generator_from_dict(d: dict):
    if d.get("model") == "mf":
        return MeanFieldGenerator.from_dict(d)
    if d.get("model") == "lstm":
        return LSTMGenerator.from_dict(d)
    raise ValueError(f"unknown generator model tag {d.get('model')!r}")


def sample_sequence(gen, L: int, rng: np.random.Generator) -> SampledSequences:
    return gen.sample(rng, L, 1)


def mf_policy(gen: MeanFieldGenerator) -> np.ndarray:
    return gen.policy()


class SGDMomentum:
    """Classical momentum: v <- mu * v + g; theta <- theta - lr * v (in place)."""

    def __init__(self, size: int, lr: float, momentum: float = 0.9, velocity=None):
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.velocity = np.zeros(size) if velocity is None else np.array(velocity, dtype=float)
        if self.velocity.shape != (size,):
            raise ValueError("velocity shape does not match parameter size")

    def step(self, theta: np.ndarray, grad) -> np.ndarray:
        grad = np.asarray(grad, dtype=float)
        if grad.shape != theta.shape or theta.shape != self.velocity.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match parameters {theta.shape}")
        self.velocity *= self.momentum
        self.velocity += grad
        theta -= self.lr * self.velocity
        return theta

    def to_dict(self) -> dict:
        return {"lr": self.lr, "momentum": self.momentum, "velocity": self.velocity.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SGDMomentum":
        return cls(len(d["velocity"]), d["lr"], d["momentum"], d["velocity"])
