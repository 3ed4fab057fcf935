"""Grayscale raster TFs (rotate, zoom, shear, shift, swirl) and IDX file I/O.

Geometry: coordinates are (x, y) = (col - cx, row - cy) about the image
center. A warp is given by its *inverse* map from output coordinates to input
coordinates; the input is sampled bilinearly, reading 0 outside the image,
and the result is clamped to [0, 1].
"""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import TfRegistry

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801
_IDENTITY = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


@dataclass
class GrayImage:
    height: int
    width: int
    pixels: np.ndarray  # (height * width,), row-major, values in [0, 1]

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float).reshape(-1)
        if self.height < 1 or self.width < 1 or self.pixels.size != self.height * self.width:
            raise ValueError(f"pixel count {self.pixels.size} does not match {self.height}x{self.width}")
        if np.any(self.pixels < 0) or np.any(self.pixels > 1) or not np.all(np.isfinite(self.pixels)):
            raise ValueError("pixels must lie in [0, 1]")

    @property
    def array(self) -> np.ndarray:
        return self.pixels.reshape(self.height, self.width)

    def __eq__(self, other):
        return (isinstance(other, GrayImage) and (self.height, self.width) == (other.height, other.width)
                and np.array_equal(self.pixels, other.pixels))


def _grid(H: int, W: int):
    cy, cx = (H - 1) / 2.0, (W - 1) / 2.0
    rows, cols = np.mgrid[0:H, 0:W]
    return cols.reshape(-1) - cx, rows.reshape(-1) - cy, cx, cy


def _bilinear_sampler(src_x, src_y, H: int, W: int):
    """Source indices (4, P) and weights (4, P) for bilinear reads at
    centered source coordinates; out-of-bounds taps get weight 0."""
    cy, cx = (H - 1) / 2.0, (W - 1) / 2.0
    c, r = src_x + cx, src_y + cy
    c0, r0 = np.floor(c), np.floor(r)
    fc, fr = c - c0, r - r0
    c0, r0 = c0.astype(np.int64), r0.astype(np.int64)
    idx, wts = [], []
    for dr, dc, w in ((0, 0, (1 - fr) * (1 - fc)), (0, 1, (1 - fr) * fc), (1, 0, fr * (1 - fc)), (1, 1, fr * fc)):
        rr, cc = r0 + dr, c0 + dc
        ok = (rr >= 0) & (rr < H) & (cc >= 0) & (cc < W)
        idx.append(np.where(ok, rr * W + cc, 0))
        wts.append(np.where(ok, w, 0.0))
    return np.array(idx), np.array(wts)


def _apply_sampler(X: np.ndarray, idx: np.ndarray, wts: np.ndarray) -> np.ndarray:
    out = X[:, idx[0]] * wts[0]
    for k in range(1, 4):
        out += X[:, idx[k]] * wts[k]
    return np.clip(out, 0.0, 1.0)


def _affine_sampler(inv, H: int, W: int):
    inv = np.asarray(inv, dtype=float)
    if inv.shape != (2, 3) or not np.all(np.isfinite(inv)):
        raise ValueError("inverse affine map must be a finite 2x3 matrix")
    if np.array_equal(inv, _IDENTITY):
        return None
    x, y, _, _ = _grid(H, W)
    sx = inv[0, 0] * x + inv[0, 1] * y + inv[0, 2]
    sy = inv[1, 0] * x + inv[1, 1] * y + inv[1, 2]
    return _bilinear_sampler(sx, sy, H, W)


def affine_warp(img: GrayImage, inv) -> GrayImage:
    """Warp by the inverse 2x3 map; the identity matrix is returned bit-exact."""
    s = _affine_sampler(inv, img.height, img.width)
    if s is None:
        return GrayImage(img.height, img.width, img.pixels.copy())
    return GrayImage(img.height, img.width, _apply_sampler(img.pixels[None], *s)[0])


def rotate_inverse(deg: float) -> np.ndarray:
    t = np.deg2rad(deg)
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, s, 0.0], [-s, c, 0.0]])


def zoom_inverse(factor: float) -> np.ndarray:
    if factor <= 0:
        raise ValueError("zoom factor must be > 0")
    return np.array([[1.0 / factor, 0.0, 0.0], [0.0, 1.0 / factor, 0.0]])


def shear_inverse(deg: float) -> np.ndarray:
    return np.array([[1.0, -np.tan(np.deg2rad(deg)), 0.0], [0.0, 1.0, 0.0]])


def shift_inverse(dx: float, dy: float) -> np.ndarray:
    return np.array([[1.0, 0.0, -float(dx)], [0.0, 1.0, -float(dy)]])


def swirl_sampler(strength: float, H: int, W: int):
    """Rotation by strength * (1 - rho / rho_max) about the center, for
    rho < rho_max = min(H, W) / 2; no motion beyond."""
    if strength == 0:
        return None
    x, y, _, _ = _grid(H, W)
    rho = np.hypot(x, y)
    rho_max = min(H, W) / 2.0
    a = strength * np.clip(1.0 - rho / rho_max, 0.0, None)
    ca, sa = np.cos(a), np.sin(a)
    # inverse of a rotation by +a
    return _bilinear_sampler(ca * x + sa * y, -sa * x + ca * y, H, W)


def _sampler_tf(sampler):
    def fn(X, rng):
        if sampler is None:
            return X.copy()
        return _apply_sampler(X, *sampler)
    return fn


def tf_rotate(deg: float, H: int, W: int):
    return _sampler_tf(_affine_sampler(rotate_inverse(deg), H, W))


def tf_zoom(factor: float, H: int, W: int):
    return _sampler_tf(_affine_sampler(zoom_inverse(factor), H, W))


def tf_shear(deg: float, H: int, W: int):
    return _sampler_tf(_affine_sampler(shear_inverse(deg), H, W))


def tf_shift(dx: float, dy: float, H: int, W: int):
    return _sampler_tf(_affine_sampler(shift_inverse(dx, dy), H, W))


def tf_swirl(strength: float, H: int, W: int):
    return _sampler_tf(swirl_sampler(strength, H, W))


_NUM = r"[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?"
_NAME = re.compile(rf"^(rotate|zoom|shear|swirl)({_NUM})$|^shift({_NUM}),({_NUM})$")


def raster_tf_from_name(name: str, H: int, W: int):
    """Parse names such as ``rotate+2.5``, ``zoom0.9``, ``shear-0.1``,
    ``swirl+0.2`` or ``shift+3,-1``."""
    m = _NAME.match(name.strip())
    if not m:
        raise ValueError(f"unknown raster TF {name!r}")
    if m.group(1):
        kind, v = m.group(1), float(m.group(2))
        return {"rotate": tf_rotate, "zoom": tf_zoom, "shear": tf_shear, "swirl": tf_swirl}[kind](v, H, W)
    return tf_shift(float(m.group(3)), float(m.group(4)), H, W)


def build_raster_registry(names, H: int, W: int) -> TfRegistry:
    reg = TfRegistry(dim=H * W)
    for name in names:
        reg.register(name.strip(), raster_tf_from_name(name, H, W))
    return reg


# --- IDX and PGM ------------------------------------------------------------

class IdxFormatError(ValueError):
    pass


def _read_idx(data: bytes):
    if len(data) < 4:
        raise IdxFormatError("truncated IDX header")
    (magic,) = struct.unpack(">I", data[:4])
    if magic == IDX_IMAGES:
        ndim = 3
    elif magic == IDX_LABELS:
        ndim = 1
    else:
        raise IdxFormatError(f"bad IDX magic 0x{magic:08x}")
    head = 4 + 4 * ndim
    if len(data) < head:
        raise IdxFormatError("truncated IDX dimensions")
    dims = struct.unpack(f">{ndim}I", data[4:head])
    total = 1
    for d in dims:
        total *= d
        if total > 2**40:
            raise IdxFormatError(f"IDX dimensions {dims} overflow")
    if len(data) - head < total:
        raise IdxFormatError(f"truncated IDX payload: need {total} bytes, have {len(data) - head}")
    if len(data) - head > total:
        raise IdxFormatError("trailing bytes after IDX payload")
    return magic, dims, np.frombuffer(data, dtype=np.uint8, offset=head).reshape(dims)


def load_idx(path):
    """Images (magic 0x803) as a list of GrayImage; labels (0x801) as a uint8 array."""
    magic, dims, arr = _read_idx(Path(path).read_bytes())
    if magic == IDX_LABELS:
        return arr.copy()
    _, H, W = dims
    return [GrayImage(H, W, a.reshape(-1) / 255.0) for a in arr]


def images_to_array(images) -> np.ndarray:
    return np.stack([im.pixels for im in images]) if len(images) else np.zeros((0, 0))


def save_idx(items, path):
    """Write GrayImages (quantized to bytes) or an integer label array."""
    if isinstance(items, np.ndarray) and items.ndim == 1:
        labels = np.asarray(items)
        if labels.size and (labels.min() < 0 or labels.max() > 255):
            raise IdxFormatError("labels must fit in unsigned bytes")
        payload = struct.pack(">II", IDX_LABELS, labels.size) + labels.astype(np.uint8).tobytes()
    else:
        images = list(items)
        if not images:
            raise IdxFormatError("cannot infer image size from an empty list")
        H, W = images[0].height, images[0].width
        if any((im.height, im.width) != (H, W) for im in images):
            raise IdxFormatError("all images must share one size")
        raw = np.rint(np.stack([im.pixels for im in images]) * 255.0).astype(np.uint8)
        payload = struct.pack(">IIII", IDX_IMAGES, len(images), H, W) + raw.tobytes()
    Path(path).write_bytes(payload)


def write_pgm(img: GrayImage, path):
    raw = np.rint(img.pixels * 255.0).astype(np.uint8).tobytes()
    Path(path).write_bytes(f"P5\n{img.width} {img.height}\n255\n".encode() + raw)
