"""Built-in TF sets addressable by name.

A built registry records ``{"name", "seed", "params"}`` in ``registry.source``
so checkpoints can rebuild the identical TF set later.
"""
from __future__ import annotations

import inspect

import numpy as np

from .core import TfRegistry
from .raster import build_raster_registry
from .synthetic import build_goodbad_set, build_lossy_set, build_misspecified_set

_BUILDERS = {
    "goodbad": build_goodbad_set,
    "lossy": build_lossy_set,
    "misspecified": build_misspecified_set,
}

TF_SET_NAMES = ("goodbad", "lossy", "misspecified", "identity", "raster:<names>")


def _identity(X, rng):
    return X.copy()


def tf_set_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 2])))


def build_tf_set(name: str, seed: int = 0, dim: int | None = None, shape=None, **params) -> TfRegistry:
    """Build a named TF set. Raster sets need ``shape=(H, W)``."""
    if name in _BUILDERS:
        builder = _BUILDERS[name]
        defaults = {k: v.default for k, v in inspect.signature(builder).parameters.items() if k != "rng"}
        unknown = set(params) - set(defaults)
        if unknown:
            raise ValueError(f"unknown parameters for TF set {name!r}: {sorted(unknown)}")
        params = {**defaults, **params}
        reg = builder(tf_set_rng(seed), **params)
    elif name == "identity":
        reg = TfRegistry(dim=dim)
        reg.register("identity", _identity)
    elif name.startswith("raster:"):
        if shape is None:
            raise ValueError("raster TF sets need the image shape")
        names = [s for s in name[len("raster:"):].split(",") if s]
        # shift names contain a comma; rejoin "shift+3" with its "+0" part
        merged = []
        for s in names:
            if merged and merged[-1].startswith("shift") and "," not in merged[-1]:
                merged[-1] += "," + s
            else:
                merged.append(s)
        if not merged:
            raise ValueError("raster TF set lists no TFs")
        reg = build_raster_registry(merged, *shape)
        params = dict(params, shape=list(shape))
    else:
        raise ValueError(f"unknown TF set {name!r}; choose from {', '.join(TF_SET_NAMES)}")
    reg.source = {"name": name, "seed": int(seed), "params": params}
    if dim is not None:
        reg.source["dim"] = dim
    return reg


def rebuild_tf_set(source: dict) -> TfRegistry:
    params = dict(source.get("params", {}))
    shape = params.pop("shape", None)
    return build_tf_set(source["name"], source.get("seed", 0), dim=source.get("dim"), shape=shape, **params)
