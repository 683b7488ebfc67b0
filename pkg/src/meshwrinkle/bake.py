from __future__ import annotations

import numpy as np

from .errors import MeshError
from .mesh import Mesh

# texel centres this close outside a triangle edge still count as covered
_INSIDE_TOLERANCE = 1e-9


def uv_to_texel(uv: np.ndarray, width: int, height: int) -> np.ndarray:
    """Map UV (v up) to continuous texel coordinates where texel centres are integers."""
    x = uv[..., 0] * width - 0.5
    y = (1.0 - uv[..., 1]) * height - 0.5
    return np.stack([x, y], axis=-1)


def bake_vertex_values(mesh: Mesh, values: np.ndarray, width: int, height: int | None = None) -> np.ndarray:
    """Rasterize per-vertex values into UV space.

    `values` is (vertices,) or (vertices, channels). Each texel whose centre lies
    inside a fan-triangulated UV triangle gets the barycentric blend of the three
    corner values; later faces overwrite earlier ones and uncovered texels are 0.
    Returns a float32 array of shape (height, width, channels).
    """
    if not mesh.has_uvs:
        raise MeshError("mesh has no UV coordinates; cannot bake")
    height = width if height is None else height
    if width < 1 or height < 1:
        raise ValueError(f"bake resolution must be positive, got {width}x{height}")
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape[0] != mesh.vertex_count:
        raise MeshError(f"expected {mesh.vertex_count} vertex values, got {vals.shape[0]}")

    out = np.zeros((height, width, vals.shape[1]), dtype=np.float64)
    tris, uv_tris, _ = mesh.triangles()
    corners = uv_to_texel(mesh.uvs[uv_tris], width, height)  # (T, 3, 2)

    for tri, (p0, p1, p2) in zip(tris, corners):
        (x0, y0), (x1, y1), (x2, y2) = p0, p1, p2
        denom = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2)
        if abs(denom) < 1e-18:
            continue
        xs = np.array([x0, x1, x2])
        ys = np.array([y0, y1, y2])
        cx0 = max(int(np.ceil(xs.min() - _INSIDE_TOLERANCE)), 0)
        cx1 = min(int(np.floor(xs.max() + _INSIDE_TOLERANCE)), width - 1)
        cy0 = max(int(np.ceil(ys.min() - _INSIDE_TOLERANCE)), 0)
        cy1 = min(int(np.floor(ys.max() + _INSIDE_TOLERANCE)), height - 1)
        if cx0 > cx1 or cy0 > cy1:
            continue
        px, py = np.meshgrid(
            np.arange(cx0, cx1 + 1, dtype=np.float64),
            np.arange(cy0, cy1 + 1, dtype=np.float64),
        )
        l0 = ((y1 - y2) * (px - x2) + (x2 - x1) * (py - y2)) / denom
        l1 = ((y2 - y0) * (px - x2) + (x0 - x2) * (py - y2)) / denom
        l2 = 1.0 - l0 - l1
        inside = (l0 >= -_INSIDE_TOLERANCE) & (l1 >= -_INSIDE_TOLERANCE) & (l2 >= -_INSIDE_TOLERANCE)
        if not inside.any():
            continue
        v0, v1, v2 = vals[tri[0]], vals[tri[1]], vals[tri[2]]
        blended = l0[..., None] * v0 + l1[..., None] * v1 + l2[..., None] * v2
        block = out[cy0 : cy1 + 1, cx0 : cx1 + 1]
        block[inside] = blended[inside]

    return out.astype(np.float32)
