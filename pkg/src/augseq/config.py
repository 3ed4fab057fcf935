"""Training configuration: defaults, JSON loading and validation."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

DISTANCE_METRICS = ("raw_input", "discriminator_feature")
MODELS = ("mf", "lstm")
DISCRIMINATORS = ("oracle", "mlp")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass
class TrainingConfig:
    L: int = 10
    n: int = 32
    m: int = 5
    gamma: float = 1.0
    alpha: float = 0.1
    distance_metric: str = "raw_input"
    gen_lr: float = 0.01
    disc_lr: float = 0.05
    momentum: float = 0.9
    epochs: int = 15
    r: float = 2.0
    prob_clamp_eps: float = 1e-6
    split_batches: bool = False
    seed: int = 0
    K: Optional[int] = None
    hidden_size: int = 32
    disc_hidden: int = 64
    model: str = "mf"
    discriminator: str = "oracle"
    tf_set: Optional[str] = None

    def replace(self, **changes) -> "TrainingConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(TrainingConfig)}


def validate_config(cfg: TrainingConfig) -> TrainingConfig:
    """Raise ConfigError listing every offending field; return cfg if valid."""
    problems = []

    def check(ok, field, msg):
        if not ok:
            problems.append(f"{field}: {msg}")

    def is_int(v):
        return isinstance(v, int) and not isinstance(v, bool)

    def is_real(v):
        return isinstance(v, (int, float)) and not isinstance(v, bool)

    for name in ("L", "n", "m", "epochs", "hidden_size", "disc_hidden"):
        v = getattr(cfg, name)
        lo = 0 if name == "epochs" else 1
        check(is_int(v) and v >= lo, name, f"must be an integer >= {lo}, got {v!r}")
    ranges = {
        "gamma": (lambda v: 0.0 <= v <= 1.0, "must lie in [0, 1]"),
        "alpha": (lambda v: v >= 0.0, "must be >= 0"),
        "gen_lr": (lambda v: v >= 0.0, "must be >= 0"),
        "disc_lr": (lambda v: v >= 0.0, "must be >= 0"),
        "momentum": (lambda v: 0.0 <= v < 1.0, "must lie in [0, 1)"),
        "r": (lambda v: v > 0.0, "must be > 0"),
        "prob_clamp_eps": (lambda v: 0.0 < v < 0.5, "must lie in (0, 0.5)"),
    }
    for name, (ok, msg) in ranges.items():
        v = getattr(cfg, name)
        if not is_real(v):
            check(False, name, f"must be a real number, got {v!r}")
        else:
            check(ok(v), name, f"{msg}, got {v}")
    check(cfg.distance_metric in DISTANCE_METRICS, "distance_metric", f"must be one of {DISTANCE_METRICS}")
    check(cfg.model in MODELS, "model", f"must be one of {MODELS}")
    check(cfg.discriminator in DISCRIMINATORS, "discriminator", f"must be one of {DISCRIMINATORS}")
    check(isinstance(cfg.split_batches, bool), "split_batches", "must be a boolean")
    check(is_int(cfg.seed) and 0 <= cfg.seed < 2**64, "seed", "must be a 64-bit unsigned integer")
    check(cfg.K is None or (is_int(cfg.K) and cfg.K >= 1), "K", "must be a positive integer")
    check(cfg.tf_set is None or isinstance(cfg.tf_set, str), "tf_set", "must be a catalog name")
    if problems:
        raise ConfigError(problems)
    return cfg


def config_from_dict(data: dict) -> TrainingConfig:
    if not isinstance(data, dict):
        raise ConfigError(["<root>: config must be a JSON object"])
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError([f"{k}: unknown key" for k in unknown])
    return validate_config(TrainingConfig(**data))


def load_config(path) -> TrainingConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([f"<parse>: {e}"]) from e
    return config_from_dict(data)
