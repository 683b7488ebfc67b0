from __future__ import annotations

import dataclasses
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .errors import MeshError

logger = logging.getLogger(__name__)

Face = Tuple[int, ...]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def derive_edges(faces: Sequence[Face]) -> np.ndarray:
    """Unique unordered consecutive-corner pairs, sorted lexicographically."""
    pairs: List[Tuple[int, int]] = []
    for face in faces:
        n = len(face)
        for k in range(n):
            a, b = face[k], face[(k + 1) % n]
            pairs.append((a, b) if a < b else (b, a))
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(np.asarray(pairs, dtype=np.int64), axis=0)


def derive_adjacency(edges: np.ndarray, vertex_count: int) -> Tuple[np.ndarray, np.ndarray]:
    """CSR incidence: edges incident to vertex i are indices[offsets[i]:offsets[i+1]]."""
    ends = edges.reshape(-1)
    edge_ids = np.repeat(np.arange(len(edges), dtype=np.int64), 2)
    order = np.argsort(ends, kind="stable")
    counts = np.bincount(ends, minlength=vertex_count)
    offsets = np.zeros(vertex_count + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, edge_ids[order]


@dataclasses.dataclass(frozen=True, eq=False)
class Mesh:
    """Polygon mesh with optional per-corner UVs.

    `uvs` holds the UV coordinate pool and `face_uvs` indexes into it with the
    same shape as `faces`. Edges and adjacency are derived on construction and
    the instance is read-only afterwards.
    """

    vertices: np.ndarray
    faces: Tuple[Face, ...]
    uvs: Optional[np.ndarray] = None
    face_uvs: Optional[Tuple[Face, ...]] = None
    edges: np.ndarray = dataclasses.field(init=False, repr=False)
    adjacency_offsets: np.ndarray = dataclasses.field(init=False, repr=False)
    adjacency_edges: np.ndarray = dataclasses.field(init=False, repr=False)

    def __post_init__(self) -> None:
        verts = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = tuple(tuple(int(i) for i in f) for f in self.faces)
        n = len(verts)
        for fi, face in enumerate(faces):
            if len(face) < 3:
                raise MeshError(f"face {fi} has {len(face)} corners; at least 3 required")
            if len(set(face)) != len(face):
                raise MeshError(f"face {fi} repeats a vertex index")
            for idx in face:
                if idx < 0 or idx >= n:
                    raise MeshError(f"face {fi} references vertex {idx}; mesh has {n} vertices")
        if not np.all(np.isfinite(verts)):
            raise MeshError("vertex positions must be finite")

        uvs = self.uvs
        face_uvs = self.face_uvs
        if (uvs is None) != (face_uvs is None):
            raise MeshError("uvs and face_uvs must be given together")
        if uvs is not None and face_uvs is not None:
            uvs = np.array(uvs, dtype=np.float64).reshape(-1, 2)
            face_uvs = tuple(tuple(int(i) for i in f) for f in face_uvs)
            if len(face_uvs) != len(faces):
                raise MeshError("face_uvs must have one entry per face")
            for fi, (face, corners) in enumerate(zip(faces, face_uvs)):
                if len(corners) != len(face):
                    raise MeshError(f"face {fi} has {len(face)} corners but {len(corners)} uv indices")
                for idx in corners:
                    if idx < 0 or idx >= len(uvs):
                        raise MeshError(f"face {fi} references uv {idx}; mesh has {len(uvs)} uvs")
            uvs = _frozen(uvs)

        edges = derive_edges(faces)
        offsets, incident = derive_adjacency(edges, n)
        object.__setattr__(self, "vertices", _frozen(verts))
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "uvs", uvs)
        object.__setattr__(self, "face_uvs", face_uvs)
        object.__setattr__(self, "edges", _frozen(edges))
        object.__setattr__(self, "adjacency_offsets", _frozen(offsets))
        object.__setattr__(self, "adjacency_edges", _frozen(incident))

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def has_uvs(self) -> bool:
        return self.uvs is not None

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.adjacency_offsets)

    def incident_edges(self, vertex: int) -> np.ndarray:
        return self.adjacency_edges[self.adjacency_offsets[vertex] : self.adjacency_offsets[vertex + 1]]

    @property
    def adjacency(self) -> List[np.ndarray]:
        return [self.incident_edges(i) for i in range(self.vertex_count)]

    def with_vertices(self, vertices: np.ndarray) -> "Mesh":
        """Same topology and UVs, new positions."""
        vertices = np.asarray(vertices, dtype=np.float64)
        if vertices.shape != self.vertices.shape:
            raise MeshError(f"expected vertex array of shape {self.vertices.shape}, got {vertices.shape}")
        return Mesh(vertices=vertices, faces=self.faces, uvs=self.uvs, face_uvs=self.face_uvs)

    def triangles(self) -> Tuple[np.ndarray, Optional[np.ndarray], np.ndarray]:
        """Fan triangulation from corner 0.

        Returns (vertex index triples, uv index triples or None, owning face index).
        """
        tris: List[Tuple[int, int, int]] = []
        uv_tris: List[Tuple[int, int, int]] = []
        owners: List[int] = []
        for fi, face in enumerate(self.faces):
            corners = self.face_uvs[fi] if self.face_uvs is not None else None
            for k in range(1, len(face) - 1):
                tris.append((face[0], face[k], face[k + 1]))
                if corners is not None:
                    uv_tris.append((corners[0], corners[k], corners[k + 1]))
                owners.append(fi)
        tri_arr = np.asarray(tris, dtype=np.int64).reshape(-1, 3)
        uv_arr = np.asarray(uv_tris, dtype=np.int64).reshape(-1, 3) if self.face_uvs is not None else None
        return tri_arr, uv_arr, np.asarray(owners, dtype=np.int64)


def same_topology(a: Mesh, b: Mesh) -> bool:
    if a.vertex_count != b.vertex_count:
        return False
    return a.edges.shape == b.edges.shape and bool(np.array_equal(a.edges, b.edges))


def apply_blendshapes(base: Mesh, offsets: np.ndarray, weights: Sequence[float]) -> Mesh:
    """Deform `base` by a weighted sum of per-vertex offset sets.

    `offsets` has shape (shapes, vertices, 3).
    """
    offsets = np.asarray(offsets, dtype=np.float64)
    weights_arr = np.asarray(weights, dtype=np.float64)
    if offsets.ndim != 3 or offsets.shape[1:] != base.vertices.shape:
        raise MeshError(f"blendshape offsets must have shape (n, {base.vertex_count}, 3), got {offsets.shape}")
    if weights_arr.shape != (offsets.shape[0],):
        raise MeshError(f"expected {offsets.shape[0]} blendshape weights, got {weights_arr.shape[0]}")
    return base.with_vertices(base.vertices + np.tensordot(weights_arr, offsets, axes=1))


def _parse_index(token: str, count: int, line_no: int, kind: str) -> int:
    try:
        raw = int(token)
    except ValueError as exc:
        raise MeshError(f"bad {kind} index '{token}'", line=line_no) from exc
    if raw == 0:
        raise MeshError(f"{kind} index 0 is invalid (OBJ indices are 1-based)", line=line_no)
    idx = raw - 1 if raw > 0 else count + raw
    if idx < 0 or idx >= count:
        raise MeshError(f"{kind} index {raw} out of range ({count} defined)", line=line_no)
    return idx


def parse_obj(lines: Iterable[str]) -> Mesh:
    vertices: List[Tuple[float, float, float]] = []
    uvs: List[Tuple[float, float]] = []
    faces: List[Face] = []
    face_uvs: List[Optional[Face]] = []
    warned: set[str] = set()

    for line_no, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *fields = line.split()
        if tag == "v":
            if len(fields) < 3:
                raise MeshError("vertex needs 3 coordinates", line=line_no)
            try:
                vertices.append((float(fields[0]), float(fields[1]), float(fields[2])))
            except ValueError as exc:
                raise MeshError(f"bad vertex coordinate: {exc}", line=line_no) from exc
        elif tag == "vt":
            if len(fields) < 2:
                raise MeshError("texture coordinate needs u and v", line=line_no)
            try:
                uvs.append((float(fields[0]), float(fields[1])))
            except ValueError as exc:
                raise MeshError(f"bad texture coordinate: {exc}", line=line_no) from exc
        elif tag == "f":
            if len(fields) < 3:
                raise MeshError(f"face has {len(fields)} corners; at least 3 required", line=line_no)
            corners: List[int] = []
            corner_uvs: List[int] = []
            for field in fields:
                parts = field.split("/")
                corners.append(_parse_index(parts[0], len(vertices), line_no, "vertex"))
                if len(parts) > 1 and parts[1]:
                    corner_uvs.append(_parse_index(parts[1], len(uvs), line_no, "uv"))
            if len(set(corners)) != len(corners):
                raise MeshError("face repeats a vertex index", line=line_no)
            if corner_uvs and len(corner_uvs) != len(corners):
                raise MeshError("face mixes corners with and without uv indices", line=line_no)
            faces.append(tuple(corners))
            face_uvs.append(tuple(corner_uvs) if corner_uvs else None)
        elif tag not in warned:
            warned.add(tag)
            logger.warning("ignoring OBJ record type '%s' (first seen on line %d)", tag, line_no)

    with_uv = [f is not None for f in face_uvs]
    if any(with_uv) and not all(with_uv):
        raise MeshError("some faces carry uv indices and others do not")
    has_uv = bool(faces) and all(with_uv)
    return Mesh(
        vertices=np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
        faces=tuple(faces),
        uvs=np.asarray(uvs, dtype=np.float64).reshape(-1, 2) if has_uv else None,
        face_uvs=tuple(f for f in face_uvs if f is not None) if has_uv else None,
    )


def load_mesh(path: str | Path) -> Mesh:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_obj(fh)


def _fmt(value: float) -> str:
    return f"{value:.{config.OBJ_PRECISION}g}"


def save_mesh(mesh: Mesh, path: str | Path, vertex_colors: Optional[np.ndarray] = None) -> None:
    """Write `mesh` as OBJ. `vertex_colors` (n, 3) in [0, 1] is appended to `v` records."""
    if vertex_colors is not None:
        vertex_colors = np.asarray(vertex_colors, dtype=np.float64)
        if vertex_colors.shape != (mesh.vertex_count, 3):
            raise MeshError(f"vertex colors must have shape ({mesh.vertex_count}, 3)")
    out: List[str] = []
    for i, (x, y, z) in enumerate(mesh.vertices):
        record = f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}"
        if vertex_colors is not None:
            r, g, b = vertex_colors[i]
            record += f" {r:.4f} {g:.4f} {b:.4f}"
        out.append(record)
    if mesh.uvs is not None:
        out.extend(f"vt {_fmt(u)} {_fmt(v)}" for u, v in mesh.uvs)
    for fi, face in enumerate(mesh.faces):
        if mesh.face_uvs is not None:
            corners = " ".join(f"{v + 1}/{t + 1}" for v, t in zip(face, mesh.face_uvs[fi]))
        else:
            corners = " ".join(str(v + 1) for v in face)
        out.append(f"f {corners}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
