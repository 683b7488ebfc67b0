"""Procedural demo meshes."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh


def make_grid(rows: int, cols: int, size: float = 1.0) -> Mesh:
    """Flat quad sheet of rows x cols cells in the XY plane, UVs spanning [0, 1]^2."""
    if rows < 1 or cols < 1:
        raise ValueError("grid needs at least one row and column")
    ys, xs = np.meshgrid(np.linspace(0.0, 1.0, rows + 1), np.linspace(0.0, 1.0, cols + 1), indexing="ij")
    uvs = np.stack([xs.ravel(), ys.ravel()], axis=1)
    vertices = np.column_stack([uvs * size, np.zeros(len(uvs))])
    faces = []
    for r in range(rows):
        for c in range(cols):
            a = r * (cols + 1) + c
            faces.append((a, a + 1, a + cols + 2, a + cols + 1))
    return Mesh(vertices=vertices, faces=tuple(faces), uvs=uvs, face_uvs=tuple(faces))


def make_cylinder(rings: int = 16, segments: int = 24, radius: float = 0.5, height: float = 2.0) -> Mesh:
    """Open quad cylinder along +Z. The UV seam column is duplicated in UV space only."""
    if rings < 1 or segments < 3:
        raise ValueError("cylinder needs >= 1 ring and >= 3 segments")
    theta = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    z = np.linspace(0.0, height, rings + 1)
    vertices = np.array([(radius * np.cos(t), radius * np.sin(t), zz) for zz in z for t in theta])
    uvs = np.array([(s / segments, r / rings) for r in range(rings + 1) for s in range(segments + 1)])

    faces = []
    face_uvs = []
    for r in range(rings):
        for s in range(segments):
            s1 = (s + 1) % segments
            faces.append((r * segments + s, r * segments + s1, (r + 1) * segments + s1, (r + 1) * segments + s))
            u = r * (segments + 1) + s
            face_uvs.append((u, u + 1, u + segments + 2, u + segments + 1))
    return Mesh(vertices=vertices, faces=tuple(faces), uvs=uvs, face_uvs=tuple(face_uvs))


def squash(mesh: Mesh, amount: float = 0.5, axis: int = 2) -> Mesh:
    """Pinch the mesh towards its axis around the middle of `axis`.

    Radial distance is scaled by 1 - amount * bump, where bump is a smooth
    profile equal to 1 at the midpoint and 0 at both ends.
    """
    verts = mesh.vertices.copy()
    coord = verts[:, axis]
    lo, hi = coord.min(), coord.max()
    span = hi - lo if hi > lo else 1.0
    bump = np.sin(np.pi * (coord - lo) / span) ** 2
    radial = [i for i in range(3) if i != axis]
    verts[:, radial] *= (1.0 - amount * bump)[:, None]
    return mesh.with_vertices(verts)
