from __future__ import annotations

import dataclasses
import logging
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from . import config
from .bake import bake_vertex_values
from .errors import WrinkleError
from .mesh import Mesh
from .tension import TensionParams, weighted_tension
from .textures import Texture, check_same_shape, check_same_size, mse

logger = logging.getLogger(__name__)

# rows per band when building maps; bounds peak memory on large rasters
_BAND_ROWS = 256


@dataclasses.dataclass(frozen=True)
class ExpressionSample:
    name: str
    albedo: Texture
    displacement: Texture
    tension_map: Texture

    def __post_init__(self) -> None:
        if self.albedo.channels != 3:
            raise WrinkleError(f"expression '{self.name}': albedo must have 3 channels")
        if self.displacement.channels != 1 or self.tension_map.channels != 1:
            raise WrinkleError(f"expression '{self.name}': displacement and tension must have 1 channel")
        check_same_size(self.albedo, self.displacement, self.tension_map, what=f"expression '{self.name}' rasters")


@dataclasses.dataclass(frozen=True)
class WrinkleMapSet:
    neutral_albedo: Texture
    expanded_albedo: Texture
    compressed_albedo: Texture
    neutral_disp: Texture
    expanded_disp: Texture
    compressed_disp: Texture

    ALBEDO = ("neutral_albedo", "expanded_albedo", "compressed_albedo")
    DISPLACEMENT = ("neutral_disp", "expanded_disp", "compressed_disp")

    def __post_init__(self) -> None:
        albedo = [getattr(self, n) for n in self.ALBEDO]
        disp = [getattr(self, n) for n in self.DISPLACEMENT]
        check_same_shape(*albedo, what="albedo maps")
        check_same_shape(*disp, what="displacement maps")
        check_same_size(albedo[0], disp[0], what="albedo and displacement maps")
        if albedo[0].channels != 3 or disp[0].channels != 1:
            raise WrinkleError("albedo maps need 3 channels and displacement maps 1")

    @property
    def width(self) -> int:
        return self.neutral_albedo.width

    @property
    def height(self) -> int:
        return self.neutral_albedo.height

    def rasters(self) -> List[Tuple[str, Texture]]:
        return [(name, getattr(self, name)) for name in self.ALBEDO + self.DISPLACEMENT]


def softmax_weights(tensions: np.ndarray, beta: float) -> np.ndarray:
    """Per-texel weights over [neutral, sample_1, ..., sample_K].

    `tensions` holds the non-negative channel values, shape (K, ...). The neutral
    candidate enters with logit 0. Returns shape (K + 1, ...).
    """
    logits = np.concatenate([np.zeros((1,) + tensions.shape[1:]), beta * tensions], axis=0)
    return softmax(logits, axis=0)


def _blend_candidates(weights: np.ndarray, candidates: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros(candidates[0].shape, dtype=np.float64)
    for w, cand in zip(weights, candidates):
        out += w[..., None] * cand
    return out


def build_wrinkle_maps(
    neutral_albedo: Texture,
    neutral_disp: Texture,
    samples: Sequence[ExpressionSample],
    beta: float = config.DEFAULT_BETA,
) -> WrinkleMapSet:
    """Softmax-weighted combination of expression textures per texel.

    Compression maps weight each sample by max(tension, 0), expansion maps by
    max(-tension, 0); the neutral textures take part with tension 0. Albedo and
    displacement share the same weights.
    """
    if not samples:
        raise WrinkleError("at least one expression sample is required")
    if not beta > 0:
        raise WrinkleError(f"softmax beta must be > 0, got {beta}")
    names = [s.name for s in samples]
    if len(set(names)) != len(names):
        raise WrinkleError("expression sample names must be unique")
    if neutral_albedo.channels != 3 or neutral_disp.channels != 1:
        raise WrinkleError("neutral albedo needs 3 channels and neutral displacement 1")
    check_same_size(neutral_albedo, neutral_disp, what="neutral rasters")
    for s in samples:
        check_same_size(neutral_albedo, s.albedo, what=f"neutral and expression '{s.name}' rasters")

    # canonical order makes the result independent of the order samples were given in
    ordered = sorted(samples, key=lambda s: s.name)
    height = neutral_albedo.height
    outputs = {
        name: np.empty(neutral_albedo.shape if "albedo" in name else neutral_disp.shape, dtype=np.float32)
        for name in ("expanded_albedo", "compressed_albedo", "expanded_disp", "compressed_disp")
    }

    for r0 in range(0, height, _BAND_ROWS):
        r1 = min(r0 + _BAND_ROWS, height)
        tension = np.stack([s.tension_map.data[r0:r1, :, 0] for s in ordered]).astype(np.float64)
        albedo = [neutral_albedo.data[r0:r1]] + [s.albedo.data[r0:r1] for s in ordered]
        disp = [neutral_disp.data[r0:r1]] + [s.displacement.data[r0:r1] for s in ordered]
        for kind, channel in (("compressed", np.maximum(tension, 0.0)), ("expanded", np.maximum(-tension, 0.0))):
            weights = softmax_weights(channel, beta)
            outputs[f"{kind}_albedo"][r0:r1] = np.clip(_blend_candidates(weights, albedo), 0.0, 1.0)
            outputs[f"{kind}_disp"][r0:r1] = _blend_candidates(weights, disp)

    return WrinkleMapSet(
        neutral_albedo=neutral_albedo,
        expanded_albedo=Texture(outputs["expanded_albedo"]),
        compressed_albedo=Texture(outputs["compressed_albedo"]),
        neutral_disp=neutral_disp,
        expanded_disp=Texture(outputs["expanded_disp"]),
        compressed_disp=Texture(outputs["compressed_disp"]),
    )


def select_donor(target_neutral_albedo: Texture, donors: Sequence[Tuple[str, WrinkleMapSet]]) -> Tuple[str, float]:
    """Donor whose neutral albedo has the lowest MSE to the target; ties go to the lowest id."""
    if not donors:
        raise WrinkleError("donor pool is empty")
    best: Tuple[str, float] | None = None
    for identity, maps in sorted(donors, key=lambda d: d[0]):
        score = mse(maps.neutral_albedo, target_neutral_albedo)
        if best is None or score < best[1]:
            best = (identity, score)
    assert best is not None
    return best


def _transfer(target: np.ndarray, donor_neutral: np.ndarray, donor_wrinkle: np.ndarray) -> np.ndarray:
    moved = target.astype(np.float64) + (donor_wrinkle.astype(np.float64) - donor_neutral)
    return np.where(target == donor_neutral, donor_wrinkle, moved)


def graft_wrinkles(
    target_neutral_albedo: Texture,
    target_neutral_disp: Texture,
    donors: Sequence[Tuple[str, WrinkleMapSet]],
    clamp: bool = True,
) -> WrinkleMapSet:
    """Add the closest donor's wrinkle deltas to the target neutral textures."""
    identity, score = select_donor(target_neutral_albedo, donors)
    logger.debug("selected donor %s (mse=%.6g)", identity, score)
    return transfer_wrinkles(target_neutral_albedo, target_neutral_disp, dict(donors)[identity], clamp)


def transfer_wrinkles(
    target_neutral_albedo: Texture,
    target_neutral_disp: Texture,
    donor: WrinkleMapSet,
    clamp: bool = True,
) -> WrinkleMapSet:
    """target_neutral + (donor_wrinkle - donor_neutral) for each wrinkle map; albedo clamped to [0, 1]."""
    check_same_shape(donor.neutral_albedo, target_neutral_albedo, what="donor and target albedo")
    check_same_shape(donor.neutral_disp, target_neutral_disp, what="donor and target displacement")

    def albedo(wrinkle: Texture) -> Texture:
        out = _transfer(target_neutral_albedo.data, donor.neutral_albedo.data, wrinkle.data)
        return Texture(np.clip(out, 0.0, 1.0) if clamp else out)

    def disp(wrinkle: Texture) -> Texture:
        return Texture(_transfer(target_neutral_disp.data, donor.neutral_disp.data, wrinkle.data))

    return WrinkleMapSet(
        neutral_albedo=target_neutral_albedo,
        expanded_albedo=albedo(donor.expanded_albedo),
        compressed_albedo=albedo(donor.compressed_albedo),
        neutral_disp=target_neutral_disp,
        expanded_disp=disp(donor.expanded_disp),
        compressed_disp=disp(donor.compressed_disp),
    )


def _blend(neutral: np.ndarray, expanded: np.ndarray, compressed: np.ndarray, w: np.ndarray) -> np.ndarray:
    amount = np.abs(w)[..., None]
    target = np.where(w[..., None] > 0, compressed, expanded)
    out = (1.0 - amount) * neutral + amount * target
    out = np.where(amount == 0.0, neutral, np.where(amount == 1.0, target, out))
    return out


def blend_at_synthesis(maps: WrinkleMapSet, tension_map: Texture) -> Tuple[Texture, Texture]:
    """Blend towards the compressed maps where tension > 0 and the expanded maps where it is < 0."""
    if tension_map.channels != 1:
        raise WrinkleError("tension map must have 1 channel")
    check_same_size(maps.neutral_albedo, tension_map, what="wrinkle maps and tension map")
    w = np.clip(tension_map.data[:, :, 0].astype(np.float64), -1.0, 1.0)
    albedo = _blend(maps.neutral_albedo.data, maps.expanded_albedo.data, maps.compressed_albedo.data, w)
    disp = _blend(maps.neutral_disp.data, maps.expanded_disp.data, maps.compressed_disp.data, w)
    return Texture(np.clip(albedo, 0.0, 1.0)), Texture(disp)


def synthesize(
    maps: WrinkleMapSet,
    base: Mesh,
    deformed: Mesh,
    params: TensionParams | None = None,
) -> Tuple[Texture, Texture]:
    """Tension of `deformed` against `base`, baked at the map size, drives the blend."""
    t = weighted_tension(base, deformed, params or TensionParams())
    tension_map = Texture(bake_vertex_values(base, t.values, maps.width, maps.height))
    return blend_at_synthesis(maps, tension_map)
