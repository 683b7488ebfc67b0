from __future__ import annotations

import numpy as np

from .textures import Texture


def tension_colors(values: np.ndarray) -> np.ndarray:
    """Compression in red, expansion in green, zero black; magnitudes clipped to 1."""
    vals = np.asarray(values, dtype=np.float64)
    rgb = np.zeros(vals.shape + (3,), dtype=np.float64)
    rgb[..., 0] = np.clip(vals, 0.0, 1.0)
    rgb[..., 1] = np.clip(-vals, 0.0, 1.0)
    return rgb


def tension_preview(tension: Texture) -> Texture:
    return Texture(tension_colors(tension.data[:, :, 0]))


def strip_texture(values: np.ndarray) -> Texture:
    """One texel per value, laid out as a single row."""
    return Texture(np.asarray(values, dtype=np.float32).reshape(1, -1, 1))
