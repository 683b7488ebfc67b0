from __future__ import annotations

import logging

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from conftest import random_mesh
from meshwrinkle.errors import ConfigError, DataError, MeshError, TopologyError
from meshwrinkle.mesh import Mesh
from meshwrinkle.shapes import make_cylinder, make_grid, squash
from meshwrinkle.tension import (
    TensionField,
    TensionParams,
    apply_params,
    bake_tension,
    closed_neighborhoods,
    compute_tension,
    propagate,
    weighted_tension,
)


def _brute_tension(base: Mesh, deformed: Mesh) -> np.ndarray:
    edges = set()
    for face in base.faces:
        for k in range(len(face)):
            a, b = face[k], face[(k + 1) % len(face)]
            edges.add((min(a, b), max(a, b)))
    ratios = {i: [] for i in range(base.vertex_count)}
    for a, b in edges:
        rest = np.linalg.norm(base.vertices[a] - base.vertices[b])
        if rest < 1e-9:
            continue
        r = np.linalg.norm(deformed.vertices[a] - deformed.vertices[b]) / rest
        ratios[a].append(r)
        ratios[b].append(r)
    return np.array([1.0 - np.mean(r) if r else 0.0 for r in ratios.values()])


def _brute_neighbours(mesh: Mesh):
    nbrs = [{i} for i in range(mesh.vertex_count)]
    for a, b in mesh.edges:
        nbrs[a].add(int(b))
        nbrs[b].add(int(a))
    return nbrs


def _brute_morph(values, nbrs, iters):
    out = list(values)
    for _ in range(abs(iters)):
        pick = max if iters > 0 else min
        out = [pick(out[j] for j in nbrs[i]) for i in range(len(out))]
    return np.array(out)


def test_stretched_triangle():
    base = Mesh(vertices=[(0, 0, 0), (1, 0, 0), (0, 1, 0)], faces=[(0, 1, 2)])
    deformed = base.with_vertices([(0, 0, 0), (2, 0, 0), (0, 1, 0)])
    t = compute_tension(base, deformed).values
    diag = np.sqrt(5.0 / 2.0)
    expected = [1 - (2 + 1) / 2, 1 - (2 + diag) / 2, 1 - (1 + diag) / 2]
    assert t == pytest.approx(expected, abs=1e-12)


def test_identical_meshes_have_zero_tension(rng):
    mesh = random_mesh(rng, 100)
    assert np.all(compute_tension(mesh, mesh).values == 0.0)


def test_uniform_scale(rng):
    mesh = random_mesh(rng, 80)
    for k in (0.5, 1.0, 2.0, 3.0):
        t = compute_tension(mesh, mesh.with_vertices(mesh.vertices * k)).values
        connected = mesh.degree > 0
        assert np.allclose(t[connected], 1.0 - k, atol=1e-12)
        assert np.all(t[~connected] == 0.0)


def test_rigid_motion_leaves_tension_at_zero(rng):
    mesh = random_mesh(rng, 120)
    for _ in range(100):
        rotation = Rotation.from_rotvec(rng.normal(size=3))
        moved = rotation.apply(mesh.vertices) + rng.normal(scale=10.0, size=3)
        t = compute_tension(mesh, mesh.with_vertices(moved)).values
        assert np.max(np.abs(t)) < 1e-9


def test_rigid_motion_of_a_deformed_mesh(rng):
    base = random_mesh(rng, 150)
    deformed = base.with_vertices(base.vertices + rng.normal(scale=0.2, size=base.vertices.shape))
    expected = compute_tension(base, deformed).values
    assert np.max(np.abs(expected)) > 0.05
    for _ in range(100):
        rotation = Rotation.from_rotvec(rng.normal(size=3))
        moved = rotation.apply(deformed.vertices) + rng.normal(scale=10.0, size=3)
        t = compute_tension(base, deformed.with_vertices(moved)).values
        assert np.allclose(t, expected, rtol=0, atol=1e-9)


def test_matches_brute_force(rng):
    for _ in range(500):
        n = int(rng.integers(3, 201))
        base = random_mesh(rng, n, int(rng.integers(1, 2 * n)))
        deformed = base.with_vertices(base.vertices + rng.normal(scale=0.2, size=base.vertices.shape))
        assert np.allclose(compute_tension(base, deformed).values, _brute_tension(base, deformed), atol=1e-12)


def test_short_edges_are_skipped(caplog):
    base = Mesh(vertices=[(0, 0, 0), (0, 0, 0), (1, 0, 0)], faces=[(0, 1, 2)])
    deformed = base.with_vertices([(0, 0, 0), (0.5, 0, 0), (2, 0, 0)])
    with caplog.at_level(logging.WARNING, logger="meshwrinkle"):
        t = compute_tension(base, deformed).values
    # vertex 0 keeps only edge (0, 2), ratio 2
    assert t[0] == pytest.approx(-1.0)
    assert np.all(np.isfinite(t))
    assert any("shorter than" in r.getMessage() for r in caplog.records)


def test_isolated_vertex_is_zero():
    base = Mesh(vertices=[(0, 0, 0), (1, 0, 0), (0, 1, 0), (5, 5, 5)], faces=[(0, 1, 2)])
    deformed = base.with_vertices([(0, 0, 0), (2, 0, 0), (0, 2, 0), (9, 9, 9)])
    t = compute_tension(base, deformed).values
    assert t[3] == 0.0
    assert t[:3] == pytest.approx([-1.0, -1.0, -1.0])


def test_topology_mismatch():
    a = Mesh(vertices=np.eye(3), faces=[(0, 1, 2)])
    b = Mesh(vertices=np.eye(4)[:, :3], faces=[(0, 1, 2), (1, 2, 3)])
    with pytest.raises(TopologyError, match="topology mismatch"):
        compute_tension(a, b)


def test_tension_field_rejects_non_finite():
    with pytest.raises(DataError):
        TensionField([0.0, np.nan])


def test_params_validation():
    with pytest.raises(ConfigError):
        TensionParams(strength=-1.0)
    with pytest.raises(ConfigError):
        TensionParams(expansion_iters=65)
    with pytest.raises(ConfigError):
        TensionParams(compression_iters=1.5)
    with pytest.raises(ConfigError, match="compression_iters"):
        TensionParams.from_dict({"compression_iters": 1.5})
    with pytest.raises(ConfigError, match="expansion_iters"):
        TensionParams.from_dict({"expansion_iters": "2"})
    assert TensionParams.from_dict({"expansion_iters": 2.0}).expansion_iters == 2
    assert type(TensionParams.from_dict({"expansion_iters": 2.0}).expansion_iters) is int
    params = TensionParams.from_dict({"strength": 2, "compression_iters": -3})
    assert params == TensionParams(strength=2.0, bias=0.0, expansion_iters=0, compression_iters=-3)
    assert TensionParams.from_dict(params.to_dict()) == params


def test_apply_params():
    t = TensionField([0.1, -0.2, 0.0])
    out = apply_params(t, TensionParams(strength=10.0, bias=0.5)).values
    assert out == pytest.approx([1.5, -1.5, 0.5])


def test_closed_neighborhoods_start_with_self():
    grid = make_grid(2, 2)
    offsets, ids = closed_neighborhoods(grid)
    nbrs = _brute_neighbours(grid)
    for i in range(grid.vertex_count):
        block = ids[offsets[i] : offsets[i + 1]]
        assert block[0] == i
        assert set(block.tolist()) == nbrs[i]


def test_propagate_matches_brute_force(rng):
    for _ in range(200):
        n = int(rng.integers(3, 1000))
        mesh = random_mesh(rng, n, int(rng.integers(1, n + 1)))
        values = rng.normal(size=n)
        values[rng.random(n) < 0.3] = 0.0
        exp_iters = int(rng.integers(-3, 4))
        comp_iters = int(rng.integers(-3, 4))
        got = propagate(TensionField(values), mesh, exp_iters, comp_iters).values

        nbrs = _brute_neighbours(mesh)
        c = _brute_morph(np.maximum(values, 0.0), nbrs, comp_iters)
        x = _brute_morph(np.maximum(-values, 0.0), nbrs, exp_iters)
        assert np.array_equal(got, c - x)


def test_propagate_zero_iters_is_identity(rng):
    mesh = random_mesh(rng, 50)
    t = TensionField(rng.normal(size=50))
    assert np.array_equal(propagate(t, mesh, 0, 0).values, t.values)


def test_dilation_spreads_compression_one_ring():
    grid = make_grid(4, 4)
    values = np.zeros(grid.vertex_count)
    center = 2 * 5 + 2
    values[center] = 0.8
    out = propagate(TensionField(values), grid, 0, 1).values
    assert set(np.flatnonzero(out).tolist()) == {center, center - 1, center + 1, center - 5, center + 5}
    assert np.all(out[out != 0] == 0.8)
    # erosion removes an isolated peak
    assert np.all(propagate(TensionField(values), grid, 0, -1).values == 0.0)


def test_propagate_rejects_wrong_length(triangle):
    with pytest.raises(DataError):
        propagate(TensionField([0.0, 0.0]), triangle, 1, 1)


def test_weighted_tension_scales_before_propagating():
    grid = make_grid(3, 3)
    stretched = grid.with_vertices(grid.vertices * [1.1, 1.0, 1.0])
    params = TensionParams(strength=10.0, bias=0.0)
    expected = 10.0 * compute_tension(grid, stretched).values
    assert np.allclose(weighted_tension(grid, stretched, params).values, expected)


def test_squashed_cylinder_compresses_at_the_waist():
    cylinder = make_cylinder(rings=16, segments=24)
    t = compute_tension(cylinder, squash(cylinder, amount=0.5)).values.reshape(17, 24)
    assert np.all(t[8] > 0.2)
    assert np.all(np.abs(t[0]) < 0.01)
    assert np.all(np.abs(t[16]) < 0.01)


# ---------------------------------------------------------------- baking


def test_bake_constant_over_full_square(unit_quad):
    t = TensionField(np.full(4, 0.5))
    baked = bake_tension(unit_quad, t, 8)
    assert baked.shape == (8, 8, 1)
    assert np.allclose(baked.data, 0.5, atol=1e-6)


def test_bake_leaves_uncovered_texels_at_zero():
    half = Mesh(
        vertices=[(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)],
        faces=[(0, 1, 2, 3)],
        uvs=[(0, 0), (0.5, 0), (0.5, 1), (0, 1)],
        face_uvs=[(0, 1, 2, 3)],
    )
    baked = bake_tension(half, TensionField(np.full(4, 0.5)), 8).data[:, :, 0]
    assert np.allclose(baked[:, :4], 0.5, atol=1e-6)
    assert np.all(baked[:, 4:] == 0.0)


def test_bake_barycentric_centre():
    mesh = Mesh(
        vertices=[(0, 0, 0), (1, 0, 0), (0, 1, 0)],
        faces=[(0, 1, 2)],
        uvs=[(0.0, 0.25), (1.0, 0.25), (0.5, 1.0)],
        face_uvs=[(0, 1, 2)],
    )
    baked = bake_tension(mesh, TensionField([0.0, 0.0, 1.0]), 1)
    assert baked.data[0, 0, 0] == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_bake_v_axis_points_up():
    # lower half of UV space is the bottom half of the image
    mesh = Mesh(
        vertices=[(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)],
        faces=[(0, 1, 2, 3)],
        uvs=[(0, 0), (1, 0), (1, 0.5), (0, 0.5)],
        face_uvs=[(0, 1, 2, 3)],
    )
    baked = bake_tension(mesh, TensionField(np.ones(4)), 4).data[:, :, 0]
    assert np.all(baked[2:] > 0.99)
    assert np.all(baked[:2] == 0.0)


def test_bake_needs_uvs(triangle):
    with pytest.raises(MeshError):
        bake_tension(triangle, TensionField(np.zeros(3)), 4)


def test_bake_rejects_bad_resolution(unit_quad):
    with pytest.raises(ConfigError):
        bake_tension(unit_quad, TensionField(np.zeros(4)), 0)


def test_bake_overlapping_faces_take_the_later_face():
    # two faces with the same UV triangle, each carrying its own vertex values
    mesh = Mesh(
        vertices=[(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (0, 1, 1)],
        faces=[(0, 1, 2), (3, 4, 5)],
        uvs=[(0, 0), (1, 0), (0, 1)],
        face_uvs=[(0, 1, 2), (0, 1, 2)],
    )
    baked = bake_tension(mesh, TensionField([1.0, 1.0, 1.0, 2.0, 2.0, 2.0]), 8).data[:, :, 0]
    covered = baked[baked != 0.0]
    assert covered.size > 0
    assert np.all(covered == 2.0)

    swapped = Mesh(vertices=mesh.vertices, faces=[(3, 4, 5), (0, 1, 2)], uvs=mesh.uvs, face_uvs=mesh.face_uvs)
    again = bake_tension(swapped, TensionField([1.0, 1.0, 1.0, 2.0, 2.0, 2.0]), 8).data[:, :, 0]
    assert np.array_equal(again != 0.0, baked != 0.0)
    assert np.all(again[again != 0.0] == 1.0)
