"""JSON checkpoints for generators, discriminators and optimizer state.

Floats are written with Python's shortest round-trip repr, so parameter
arrays survive save/load bit for bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .discriminator import discriminator_from_dict
from .generator import SGDMomentum, generator_from_dict

FORMAT = "augseq-checkpoint/1"


class CheckpointError(ValueError):
    pass


def make_checkpoint(gen, disc, cfg, epoch: int, registry, gen_opt=None, disc_opt=None, source=None) -> dict:
    gd = gen.to_dict()
    gd["L"] = cfg.L
    return {
        "format": FORMAT,
        "epoch": int(epoch),
        "seed": int(cfg.seed),
        "config": cfg.to_dict(),
        "tf_names": registry.names,
        "tf_set": source if source is not None else registry.source,
        "generator": gd,
        "discriminator": disc.to_dict(),
        "optimizer": {
            "generator": gen_opt.to_dict() if gen_opt is not None else None,
            "discriminator": disc_opt.to_dict() if disc_opt is not None else None,
        },
    }


def dumps(obj) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        raise TypeError(f"cannot serialize {type(o).__name__}")
    return json.dumps(obj, default=default, sort_keys=True, indent=1, allow_nan=True)


def save_checkpoint(ck: dict, path):
    Path(path).write_text(dumps(ck) + "\n")


def read_checkpoint(path) -> dict:
    try:
        ck = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(ck, dict) or ck.get("format") != FORMAT:
        raise CheckpointError(f"{path} is not a {FORMAT} file")
    for key in ("generator", "discriminator", "tf_names", "config"):
        if key not in ck:
            raise CheckpointError(f"checkpoint {path} lacks {key!r}")
    return ck


def load_models(ck: dict):
    """Rebuild (generator, discriminator, generator optimizer) from a checkpoint dict."""
    try:
        gen = generator_from_dict(ck["generator"])
        disc = discriminator_from_dict(ck["discriminator"])
        opt = ck.get("optimizer", {}).get("generator")
        gen_opt = SGDMomentum.from_dict(opt) if opt else None
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"corrupt checkpoint: {e}") from e
    return gen, disc, gen_opt
