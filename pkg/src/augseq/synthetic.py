"""Unit-ball world: uniform disk data, displacement TF sets and the null predicate.

Displacement TFs have a fixed random direction per TF; the magnitude is
redrawn from a Gaussian truncated at 0 on every application.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TfRegistry


@dataclass(frozen=True)
class NullPredicate:
    radius: float = 1.0

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm(X, axis=1) >= self.radius


def sample_unit_ball(count: int, rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    """Uniform points on the open disk: radius*sqrt(u), angle 2*pi*v."""
    if count < 1:
        raise ValueError("count must be >= 1")
    u, v = rng.random(count), rng.random(count)
    rho = radius * np.sqrt(u)
    ang = 2.0 * np.pi * v
    return np.column_stack([rho * np.cos(ang), rho * np.sin(ang)])


def random_direction(rng: np.random.Generator) -> np.ndarray:
    a = rng.uniform(0.0, 2.0 * np.pi)
    return np.array([np.cos(a), np.sin(a)])


def displacement_tf(direction, mu: float, sigma: float, decay: float = 0.0, radius: float = 1.0):
    """x -> x + m * direction, m ~ max(0, N(mu, sigma)).

    With ``decay > 0`` the magnitude shrinks by exp(-decay * max(0, ||x|| - radius)),
    so points outside the ball can barely move back.
    """
    d = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")

    def fn(X, rng):
        mag = np.maximum(0.0, rng.normal(mu, sigma, X.shape[0]))
        if decay > 0:
            mag = mag * np.exp(-decay * np.maximum(0.0, np.linalg.norm(X, axis=1) - radius))
        return X + mag[:, None] * d

    fn.direction = d
    return fn


def build_goodbad_set(rng: np.random.Generator, k_good: int = 8, k_bad: int = 4, mu_good: float = 0.05,
                      sigma_good: float = 0.01, mu_bad: float = 1.5, sigma_bad: float = 0.1) -> TfRegistry:
    if not (mu_bad > 1.0 > mu_good >= 0.0):
        raise ValueError(f"need mu_bad > 1 > mu_good >= 0, got mu_bad={mu_bad}, mu_good={mu_good}")
    reg = TfRegistry(dim=2)
    for i in range(k_good):
        reg.register(f"good{i + 1}", displacement_tf(random_direction(rng), mu_good, sigma_good))
    for i in range(k_bad):
        reg.register(f"bad{i + 1}", displacement_tf(random_direction(rng), mu_bad, sigma_bad))
    return reg


def build_lossy_set(rng: np.random.Generator, k: int = 8, mu: float = 0.3, sigma: float = 0.03,
                    decay: float = 5.0) -> TfRegistry:
    if not 0.0 <= mu < 1.0:
        raise ValueError(f"lossy TFs need 0 <= mu < 1, got {mu}")
    if decay < 0:
        raise ValueError("decay must be >= 0")
    reg = TfRegistry(dim=2)
    for i in range(k):
        reg.register(f"lossy{i + 1}", displacement_tf(random_direction(rng), mu, sigma, decay))
    return reg


def build_misspecified_set(rng: np.random.Generator, k_good: int = 8, k_bad: int = 2, mu_good: float = 0.05,
                           sigma_good: float = 0.01, bad_magnitude: float = 2.5) -> TfRegistry:
    """Good displacements plus deterministic jumps long enough to leave the
    ball from any starting point inside it."""
    if bad_magnitude <= 2.0:
        raise ValueError("misspecified TFs need magnitude > 2 to always exit the unit ball")
    reg = TfRegistry(dim=2)
    for i in range(k_good):
        reg.register(f"good{i + 1}", displacement_tf(random_direction(rng), mu_good, sigma_good))
    for i in range(k_bad):
        reg.register(f"misspecified{i + 1}", displacement_tf(random_direction(rng), bad_magnitude, 0.0))
    return reg


def two_blob_task(rng: np.random.Generator, n: int, sep: float = 0.5, std: float = 0.1):
    """Two Gaussian blobs centred at (-sep, 0) and (+sep, 0), rejected to the
    open unit ball. Labels alternate 0, 1, 0, ... so any prefix is balanced."""
    y = np.arange(n) % 2
    X = np.empty((n, 2))
    for i in range(n):
        centre = np.array([sep if y[i] else -sep, 0.0])
        while True:
            p = centre + rng.normal(0.0, std, 2)
            if np.linalg.norm(p) < 1.0:
                X[i] = p
                break
    return X, y
