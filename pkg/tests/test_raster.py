import struct

import numpy as np
import pytest

from augseq.core import make_rng
from augseq.raster import (GrayImage, IdxFormatError, affine_warp, build_raster_registry, load_idx,
                           raster_tf_from_name, rotate_inverse, save_idx, shift_inverse, tf_rotate, tf_shear,
                           tf_shift, tf_swirl, tf_zoom, write_pgm)


def blob(H=21, W=21, sigma=3.0):
    r, c = np.mgrid[0:H, 0:W]
    return GrayImage(H, W, np.exp(-((r - H // 2) ** 2 + (c - W // 2) ** 2) / (2 * sigma ** 2)).reshape(-1))


def hot(H, W, r, c):
    a = np.zeros((H, W))
    a[r, c] = 1.0
    return a.reshape(1, -1)


def test_image_validation():
    with pytest.raises(ValueError):
        GrayImage(2, 2, [0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        GrayImage(1, 2, [0.0, 1.5])


def test_identity_bit_exact():
    img = GrayImage(5, 4, np.random.default_rng(0).random(20))
    out = affine_warp(img, np.array([[1.0, 0, 0], [0, 1.0, 0]]))
    assert out.pixels.tobytes() == img.pixels.tobytes()
    X = img.pixels[None]
    for fn in (tf_rotate(0, 5, 4), tf_zoom(1.0, 5, 4), tf_shift(0, 0, 5, 4), tf_swirl(0, 5, 4)):
        assert fn(X, None).tobytes() == X.tobytes()


def test_full_translation_zero():
    img = blob(8, 8)
    assert np.array_equal(affine_warp(img, shift_inverse(8, 0)).pixels, np.zeros(64))


def test_rotate_round_trip_small_loss():
    img = blob()
    back = affine_warp(affine_warp(img, rotate_inverse(10.0)), rotate_inverse(-10.0))
    assert np.mean(np.abs(back.pixels - img.pixels)) < 0.05


def test_integer_shift_moves_hot_pixel():
    out = tf_shift(3, 0, 9, 11)(hot(9, 11, 4, 2), None).reshape(9, 11)
    assert np.array_equal(out, hot(9, 11, 4, 5).reshape(9, 11))
    out = tf_shift(-1, 2, 9, 11)(hot(9, 11, 4, 2), None).reshape(9, 11)
    assert np.array_equal(out, hot(9, 11, 6, 1).reshape(9, 11))


def test_rotation_direction_quarter_turn():
    # +90 degrees maps the pixel right of center to the pixel below center (y axis points down)
    out = tf_rotate(90, 7, 7)(hot(7, 7, 3, 5), None).reshape(7, 7)
    assert out[5, 3] == pytest.approx(1.0) and out.sum() == pytest.approx(1.0)


def test_all_tfs_preserve_shape_and_range():
    rng = np.random.default_rng(0)
    X = rng.random((3, 10 * 12))
    for fn in (tf_rotate(7.5, 10, 12), tf_zoom(1.3, 10, 12), tf_zoom(0.7, 10, 12), tf_shear(12, 10, 12),
               tf_shift(1.5, -0.5, 10, 12), tf_swirl(0.8, 10, 12)):
        out = fn(X, None)
        assert out.shape == X.shape and out.min() >= 0.0 and out.max() <= 1.0


def test_zoom_shift_non_commutative():
    img = blob(16, 16, 2.0).pixels[None]
    z, s = tf_zoom(0.5, 16, 16), tf_shift(4, 0, 16, 16)
    assert not np.allclose(z(s(img, None), None), s(z(img, None), None))


def test_swirl_center_fixed_and_edges_unmoved():
    H = W = 11
    fn = tf_swirl(1.0, H, W)
    assert fn(hot(H, W, 5, 5), None).reshape(H, W)[5, 5] == pytest.approx(1.0)
    corner = hot(H, W, 0, 0)
    assert np.array_equal(fn(corner, None), corner)


def test_name_parsing():
    assert raster_tf_from_name("rotate+2.5", 5, 5) is not None
    reg = build_raster_registry(["rotate-5", "zoom0.9", "shear-0.1", "swirl+0.2", "shift+3,-1"], 5, 5)
    assert reg.K == 5 and reg.dim == 25
    with pytest.raises(ValueError):
        raster_tf_from_name("blur3", 5, 5)
    with pytest.raises(ValueError):
        tf_zoom(0.0, 5, 5)


def test_registry_apply_batch():
    reg = build_raster_registry(["shift+1,0"], 4, 4)
    out = reg[1](hot(4, 4, 0, 0), make_rng(0))
    assert np.array_equal(out, hot(4, 4, 0, 1))


def test_idx_example_bytes(tmp_path):
    p = tmp_path / "one.idx"
    p.write_bytes(struct.pack(">IIII", 0x803, 1, 2, 2) + bytes([0, 255, 128, 64]))
    (img,) = load_idx(p)
    assert (img.height, img.width) == (2, 2)
    assert np.array_equal(img.pixels, [0.0, 1.0, 128 / 255, 64 / 255])


def test_idx_round_trip_byte_identical(tmp_path):
    rng = np.random.default_rng(0)
    raw = struct.pack(">IIII", 0x803, 3, 4, 5) + rng.integers(0, 256, 60, dtype=np.uint8).tobytes()
    a, b = tmp_path / "a.idx", tmp_path / "b.idx"
    a.write_bytes(raw)
    imgs = load_idx(a)
    save_idx(imgs, b)
    assert b.read_bytes() == raw
    assert load_idx(b) == imgs


def test_idx_labels_round_trip(tmp_path):
    p = tmp_path / "l.idx"
    labels = np.array([0, 3, 9, 1], dtype=np.uint8)
    save_idx(labels, p)
    assert p.read_bytes()[:8] == struct.pack(">II", 0x801, 4)
    assert np.array_equal(load_idx(p), labels)


def test_idx_errors(tmp_path):
    p = tmp_path / "x.idx"
    p.write_bytes(struct.pack(">IIII", 0x804, 1, 2, 2) + bytes(4))
    with pytest.raises(IdxFormatError):
        load_idx(p)
    p.write_bytes(struct.pack(">IIII", 0x803, 1, 2, 2) + bytes(3))
    with pytest.raises(IdxFormatError):
        load_idx(p)
    p.write_bytes(struct.pack(">IIII", 0x803, 2**31, 2**31, 2**31))
    with pytest.raises(IdxFormatError):
        load_idx(p)
    p.write_bytes(b"\x00\x00")
    with pytest.raises(IdxFormatError):
        load_idx(p)


def test_pgm(tmp_path):
    p = tmp_path / "b.pgm"
    write_pgm(GrayImage(2, 3, [0, 1, 0.5, 0, 0, 1]), p)
    assert p.read_bytes() == b"P5\n3 2\n255\n" + bytes([0, 255, 128, 0, 0, 255])
