from __future__ import annotations

import cv2
import numpy as np
import pytest

from conftest import random_texture
from meshwrinkle.errors import TextureError
from meshwrinkle.preview import strip_texture, tension_colors, tension_preview
from meshwrinkle.textures import (
    Texture,
    check_same_shape,
    lerp_textures,
    load_texture,
    mse,
    read_pfm,
    save_texture,
    write_pfm,
)


def test_texture_expands_2d_input():
    tex = Texture(np.zeros((2, 3)))
    assert tex.shape == (2, 3, 1)
    assert (tex.width, tex.height, tex.channels) == (3, 2, 1)
    assert tex.data.dtype == np.float32


@pytest.mark.parametrize("shape", [(2, 2, 2), (2, 2, 4), (0, 2, 1)])
def test_texture_rejects_bad_shapes(shape):
    with pytest.raises(TextureError):
        Texture(np.zeros(shape))


def test_texture_rejects_nan():
    with pytest.raises(TextureError):
        Texture(np.full((2, 2, 1), np.nan))


@pytest.mark.parametrize("channels", [1, 3])
def test_pfm_is_bit_exact(tmp_path, rng, channels):
    tex = random_texture(rng, 7, 5, channels, -3.0, 3.0)
    write_pfm(tex, tmp_path / "t.pfm")
    back = read_pfm(tmp_path / "t.pfm")
    assert back.shape == tex.shape
    assert np.array_equal(back.data, tex.data)


def test_pfm_rows_are_stored_bottom_up(tmp_path):
    tex = Texture(np.array([[1.0], [2.0]], dtype=np.float32))
    write_pfm(tex, tmp_path / "rows.pfm")
    raw = (tmp_path / "rows.pfm").read_bytes()
    header = b"Pf\n1 2\n-1.0\n"
    assert raw.startswith(header)
    assert np.frombuffer(raw[len(header) :], dtype="<f4").tolist() == [2.0, 1.0]


def test_big_endian_pfm(tmp_path):
    payload = np.array([[0.25, 0.5]], dtype=">f4")
    (tmp_path / "be.pfm").write_bytes(b"Pf\n2 1\n1.0\n" + payload.tobytes())
    assert read_pfm(tmp_path / "be.pfm").data[0, :, 0].tolist() == [0.25, 0.5]


def test_truncated_pfm(tmp_path):
    (tmp_path / "short.pfm").write_bytes(b"PF\n4 4\n-1.0\n" + b"\0" * 10)
    with pytest.raises(TextureError, match="truncated"):
        read_pfm(tmp_path / "short.pfm")


def test_png_white_pixel_reads_as_one(tmp_path):
    cv2.imwrite(str(tmp_path / "white.png"), np.full((1, 1, 3), 255, dtype=np.uint8))
    tex = load_texture(tmp_path / "white.png")
    assert tex.shape == (1, 1, 3)
    assert np.all(tex.data == 1.0)


def test_png_channel_order_is_rgb(tmp_path):
    tex = Texture(np.array([[[1.0, 0.0, 0.0]]], dtype=np.float32))
    save_texture(tex, tmp_path / "red.png")
    bgr = cv2.imread(str(tmp_path / "red.png"), cv2.IMREAD_UNCHANGED)
    assert bgr[0, 0].tolist() == [0, 0, 255]
    assert np.array_equal(load_texture(tmp_path / "red.png").data, tex.data)


def test_png_16_bit(tmp_path, rng):
    tex = random_texture(rng, 6, 4, 3)
    save_texture(tex, tmp_path / "deep.png", bit_depth=16)
    back = load_texture(tmp_path / "deep.png")
    assert np.max(np.abs(back.data - tex.data)) <= 0.5 / 65535 + 1e-7


def test_png_grayscale(tmp_path):
    tex = Texture(np.array([[0.0, 1.0]], dtype=np.float32))
    save_texture(tex, tmp_path / "gray.png")
    back = load_texture(tmp_path / "gray.png")
    assert back.shape == (1, 2, 1)
    assert back.data[0, :, 0].tolist() == [0.0, 1.0]


def test_png_with_alpha_is_rejected(tmp_path):
    cv2.imwrite(str(tmp_path / "rgba.png"), np.zeros((2, 2, 4), dtype=np.uint8))
    with pytest.raises(TextureError):
        load_texture(tmp_path / "rgba.png")


def test_missing_png(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_texture(tmp_path / "nope.png")


def test_unknown_suffix(tmp_path):
    with pytest.raises(TextureError):
        save_texture(Texture.full(1, 1, 1, 0.0), tmp_path / "t.exr")


def test_lerp_endpoints_are_exact(rng):
    a = random_texture(rng, 4, 4, 3)
    b = random_texture(rng, 4, 4, 3)
    assert np.array_equal(lerp_textures(a, b, Texture.full(4, 4, 1, 0.0)).data, a.data)
    assert np.array_equal(lerp_textures(a, b, Texture.full(4, 4, 1, 1.0)).data, b.data)
    mid = lerp_textures(a, b, Texture.full(4, 4, 1, 0.5)).data
    assert np.allclose(mid, (a.data + b.data) / 2, atol=1e-6)


def test_shape_checks():
    with pytest.raises(TextureError):
        check_same_shape(Texture.full(2, 2, 1, 0.0), Texture.full(3, 2, 1, 0.0))
    with pytest.raises(TextureError):
        mse(Texture.full(2, 2, 3, 0.0), Texture.full(2, 2, 1, 0.0))


def test_mse():
    a = Texture.full(2, 2, 1, 0.5)
    b = Texture(np.array([[0.5, 0.5], [0.5, 1.5]], dtype=np.float32))
    assert mse(a, b) == pytest.approx(0.25)
    assert mse(a, a) == 0.0


def test_tension_colors():
    rgb = tension_colors(np.array([0.5, -2.0, 0.0]))
    assert rgb.tolist() == [[0.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]


def test_preview_of_strip():
    strip = strip_texture(np.array([1.0, -1.0]))
    assert strip.shape == (1, 2, 1)
    preview = tension_preview(strip)
    assert preview.data[0].tolist() == [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
