from __future__ import annotations

import time

import numpy as np
import pytest

from conftest import random_texture
from meshwrinkle.shapes import make_grid
from meshwrinkle.tension import TensionParams, weighted_tension
from meshwrinkle.wrinkles import ExpressionSample, build_wrinkle_maps

pytestmark = pytest.mark.slow


def test_tension_on_ten_thousand_vertices():
    grid = make_grid(99, 100)
    assert grid.vertex_count >= 10_000
    rng = np.random.default_rng(3)
    deformed = grid.with_vertices(grid.vertices + rng.normal(scale=1e-3, size=grid.vertices.shape))
    params = TensionParams(strength=10.0, expansion_iters=3, compression_iters=3)
    weighted_tension(grid, deformed, params)

    start = time.perf_counter()
    weighted_tension(grid, deformed, params)
    assert time.perf_counter() - start < 0.05


def test_wrinkle_maps_at_2k():
    rng = np.random.default_rng(4)
    size = 2048
    samples = [
        ExpressionSample(
            name=f"e{k}",
            albedo=random_texture(rng, size, size, 3),
            displacement=random_texture(rng, size, size, 1),
            tension_map=random_texture(rng, size, size, 1, -1.0, 1.0),
        )
        for k in range(3)
    ]
    neutral_albedo = random_texture(rng, size, size, 3)
    neutral_disp = random_texture(rng, size, size, 1)

    start = time.perf_counter()
    maps = build_wrinkle_maps(neutral_albedo, neutral_disp, samples)
    assert time.perf_counter() - start < 5.0
    assert maps.width == size
