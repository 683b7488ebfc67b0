"""Per-vertex mesh tension.

Tension at a vertex is one minus the mean ratio of deformed to base length
over its incident edges: positive values mean compression, negative values
mean expansion.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Tuple

import numpy as np

from . import config
from .bake import bake_vertex_values
from .errors import ConfigError, DataError, TopologyError
from .mesh import Mesh, same_topology
from .textures import Texture

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class TensionField:
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise DataError("tension values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclasses.dataclass(frozen=True)
class TensionParams:
    strength: float = config.DEFAULT_STRENGTH
    bias: float = config.DEFAULT_BIAS
    expansion_iters: int = config.DEFAULT_EXPANSION_ITERS
    compression_iters: int = config.DEFAULT_COMPRESSION_ITERS

    def __post_init__(self) -> None:
        if not math.isfinite(self.strength) or self.strength < 0:
            raise ConfigError(f"tension strength must be finite and >= 0, got {self.strength}")
        if not math.isfinite(self.bias):
            raise ConfigError(f"tension bias must be finite, got {self.bias}")
        for name in ("expansion_iters", "compression_iters"):
            value = getattr(self, name)
            numeric = isinstance(value, (int, float, np.integer)) and not isinstance(value, bool)
            if not numeric or not math.isfinite(value) or int(value) != value:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
            if abs(value) > config.MAX_PROPAGATION_ITERS:
                raise ConfigError(f"|{name}| must be <= {config.MAX_PROPAGATION_ITERS}, got {value}")

    def to_dict(self) -> dict:
        return {
            "strength": self.strength,
            "bias": self.bias,
            "expansion_iters": self.expansion_iters,
            "compression_iters": self.compression_iters,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TensionParams":
        return cls(
            strength=float(data.get("strength", config.DEFAULT_STRENGTH)),
            bias=float(data.get("bias", config.DEFAULT_BIAS)),
            expansion_iters=data.get("expansion_iters", config.DEFAULT_EXPANSION_ITERS),
            compression_iters=data.get("compression_iters", config.DEFAULT_COMPRESSION_ITERS),
        )


def _edge_lengths(vertices: np.ndarray, edges: np.ndarray) -> np.ndarray:
    return np.linalg.norm(vertices[edges[:, 0]] - vertices[edges[:, 1]], axis=1)


def compute_tension(base: Mesh, deformed: Mesh) -> TensionField:
    if not same_topology(base, deformed):
        raise TopologyError()
    n = base.vertex_count
    edges = base.edges
    base_len = _edge_lengths(base.vertices, edges)
    keep = base_len >= config.EDGE_EPSILON
    if not keep.all():
        logger.warning("%d base edges shorter than %g left out of the tension mean", int((~keep).sum()), config.EDGE_EPSILON)
    ratio = _edge_lengths(deformed.vertices, edges[keep]) / base_len[keep]
    a, b = edges[keep, 0], edges[keep, 1]
    sums = np.bincount(a, weights=ratio, minlength=n) + np.bincount(b, weights=ratio, minlength=n)
    counts = np.bincount(a, minlength=n) + np.bincount(b, minlength=n)

    values = np.zeros(n, dtype=np.float64)
    has = counts > 0
    values[has] = 1.0 - sums[has] / counts[has]
    isolated = int((base.degree == 0).sum())
    if isolated:
        logger.warning("%d isolated vertices get tension 0", isolated)
    return TensionField(values)


def apply_params(t: TensionField, p: TensionParams) -> TensionField:
    return TensionField(p.strength * t.values + p.bias)


def closed_neighborhoods(mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
    """CSR (offsets, vertex ids) of each vertex's closed neighbourhood, self first."""
    n = mesh.vertex_count
    edges = mesh.edges
    other = np.where(
        edges[mesh.adjacency_edges, 0] == np.repeat(np.arange(n), mesh.degree),
        edges[mesh.adjacency_edges, 1],
        edges[mesh.adjacency_edges, 0],
    )
    sizes = mesh.degree + 1
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    ids = np.empty(offsets[-1], dtype=np.int64)
    ids[offsets[:-1]] = np.arange(n)
    mask = np.ones(offsets[-1], dtype=bool)
    mask[offsets[:-1]] = False
    ids[mask] = other
    return offsets, ids


def _morph(values: np.ndarray, iters: int, offsets: np.ndarray, ids: np.ndarray) -> np.ndarray:
    if iters == 0 or len(values) == 0:
        return values
    reduce = np.maximum if iters > 0 else np.minimum
    starts = offsets[:-1]
    out = values
    for _ in range(abs(iters)):
        out = reduce.reduceat(out[ids], starts)
    return out


def propagate(t: TensionField, mesh: Mesh, expansion_iters: int, compression_iters: int) -> TensionField:
    """Dilate (iters > 0) or erode (iters < 0) the compression and expansion channels separately.

    Channels are c = max(t, 0) and x = max(-t, 0); the result is c' - x'.
    """
    if len(t) != mesh.vertex_count:
        raise DataError(f"tension has {len(t)} values but mesh has {mesh.vertex_count} vertices")
    for name, value in (("expansion_iters", expansion_iters), ("compression_iters", compression_iters)):
        if abs(value) > config.MAX_PROPAGATION_ITERS:
            raise ConfigError(f"|{name}| must be <= {config.MAX_PROPAGATION_ITERS}, got {value}")
    if expansion_iters == 0 and compression_iters == 0:
        return t
    offsets, ids = closed_neighborhoods(mesh)
    compression = _morph(np.maximum(t.values, 0.0), compression_iters, offsets, ids)
    expansion = _morph(np.maximum(-t.values, 0.0), expansion_iters, offsets, ids)
    return TensionField(compression - expansion)


def weighted_tension(base: Mesh, deformed: Mesh, params: TensionParams) -> TensionField:
    """compute -> strength/bias -> propagation."""
    t = apply_params(compute_tension(base, deformed), params)
    return propagate(t, base, params.expansion_iters, params.compression_iters)


def bake_tension(mesh: Mesh, t: TensionField, resolution: int) -> Texture:
    if len(t) != mesh.vertex_count:
        raise DataError(f"tension has {len(t)} values but mesh has {mesh.vertex_count} vertices")
    if resolution < 1:
        raise ConfigError(f"bake resolution must be >= 1, got {resolution}")
    return Texture(bake_vertex_values(mesh, t.values, resolution))
