from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pytest

from meshwrinkle.mesh import Mesh, save_mesh
from meshwrinkle.shapes import make_grid
from meshwrinkle.textures import Texture, save_texture


@pytest.fixture(autouse=True)
def _reset_package_logger():
    """`cli.main` detaches the package logger from root; undo that so caplog keeps working."""
    yield
    root = logging.getLogger("meshwrinkle")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    root.propagate = True
    root.setLevel(logging.NOTSET)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def triangle() -> Mesh:
    return Mesh(vertices=[(0, 0, 0), (1, 0, 0), (0, 1, 0)], faces=[(0, 1, 2)])


@pytest.fixture
def unit_quad() -> Mesh:
    """One quad whose UVs cover the whole unit square."""
    return Mesh(
        vertices=[(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)],
        faces=[(0, 1, 2, 3)],
        uvs=[(0, 0), (1, 0), (1, 1), (0, 1)],
        face_uvs=[(0, 1, 2, 3)],
    )


def random_mesh(rng: np.random.Generator, n_vertices: int, n_faces: Optional[int] = None) -> Mesh:
    """Random triangle soup over `n_vertices` points; some vertices may stay isolated."""
    n_faces = n_faces if n_faces is not None else max(1, 2 * n_vertices)
    vertices = rng.uniform(-1.0, 1.0, size=(n_vertices, 3))
    faces = [tuple(int(i) for i in rng.choice(n_vertices, size=3, replace=False)) for _ in range(n_faces)]
    return Mesh(vertices=vertices, faces=faces)


def random_texture(rng: np.random.Generator, width: int, height: int, channels: int, lo=0.0, hi=1.0) -> Texture:
    return Texture(rng.uniform(lo, hi, size=(height, width, channels)).astype(np.float32))


def write_identity(
    root: Path,
    ident_id: str,
    rng: np.random.Generator,
    size: int = 16,
    expressions: int = 2,
    with_mesh: bool = False,
    neutral_albedo: Optional[Texture] = None,
) -> Dict:
    """Write one identity's assets under `root/ident_id` and return its config entry."""
    base = root / ident_id
    base.mkdir(parents=True, exist_ok=True)
    albedo = neutral_albedo if neutral_albedo is not None else random_texture(rng, size, size, 3)
    save_texture(albedo, base / "neutral_albedo.pfm")
    save_texture(random_texture(rng, size, size, 1, -0.1, 0.1), base / "neutral_disp.pfm")
    entry: Dict = {
        "id": ident_id,
        "neutral_albedo": f"{ident_id}/neutral_albedo.pfm",
        "neutral_disp": f"{ident_id}/neutral_disp.pfm",
        "expressions": [],
    }
    grid = make_grid(4, 4)
    if with_mesh:
        save_mesh(grid, base / "neutral.obj")
        entry["neutral_mesh"] = f"{ident_id}/neutral.obj"
    for k in range(expressions):
        name = f"expr{k}"
        save_texture(random_texture(rng, size, size, 3), base / f"{name}_albedo.pfm")
        save_texture(random_texture(rng, size, size, 1, -0.1, 0.1), base / f"{name}_disp.pfm")
        expr = {"name": name, "albedo": f"{ident_id}/{name}_albedo.pfm", "displacement": f"{ident_id}/{name}_disp.pfm"}
        if with_mesh:
            moved = grid.vertices + rng.normal(scale=0.02, size=grid.vertices.shape)
            save_mesh(grid.with_vertices(moved), base / f"{name}.obj")
            expr["mesh"] = f"{ident_id}/{name}.obj"
        else:
            save_texture(random_texture(rng, size, size, 1, -1.0, 1.0), base / f"{name}_tension.pfm")
            expr["tension_map"] = f"{ident_id}/{name}_tension.pfm"
        entry["expressions"].append(expr)
    return entry


def write_config(root: Path, identities: List[Dict], **fields) -> Path:
    data = {"output_dir": "out", "beta": 10.0, "identities": identities}
    data.update(fields)
    path = root / "config.json"
    path.write_text(json.dumps(data, indent=2))
    return path
