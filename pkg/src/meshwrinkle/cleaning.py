"""Two-stage artifact masking for raw expression textures.

The coarse mask is a hand-authored, identity-agnostic asset selecting the
regions where wrinkles are expected. The fine mask marks texels where an
identity's raw neutral texture departs from its cleaned neutral texture by
more than `tau` standard deviations of the global difference; a single
clean frame plays the role of the background model.
"""

from __future__ import annotations

import dataclasses
import logging

import cv2
import numpy as np

from . import config
from .errors import DataError
from .textures import Texture, check_same_shape, check_same_size

logger = logging.getLogger(__name__)

_NEIGHBOURHOOD_8 = np.ones((3, 3), dtype=np.uint8)


@dataclasses.dataclass(frozen=True)
class MaskStack:
    coarse: Texture
    fine: Texture

    def __post_init__(self) -> None:
        if self.coarse.channels != 1 or self.fine.channels != 1:
            raise DataError("masks must have 1 channel")
        check_same_size(self.coarse, self.fine, what="coarse and fine masks")
        coarse = self.coarse.data
        if coarse.min() < 0.0 or coarse.max() > 1.0:
            raise DataError("coarse mask values must lie in [0, 1]")
        if not np.isin(self.fine.data, (0.0, 1.0)).all():
            raise DataError("fine mask must be binary")


def dilate_mask(mask: np.ndarray, rounds: int) -> np.ndarray:
    """Binary dilation over the 8-neighbourhood; texels outside the raster count as 0."""
    if rounds <= 0:
        return mask
    out = cv2.dilate(
        mask.astype(np.uint8),
        _NEIGHBOURHOOD_8,
        iterations=rounds,
        borderType=cv2.BORDER_CONSTANT,
        borderValue=0,
    )
    return out.astype(mask.dtype)


def build_fine_mask(
    raw_neutral: Texture,
    clean_neutral: Texture,
    tau: float = config.DEFAULT_TAU,
    dilate_px: int = config.DEFAULT_DILATE_PX,
) -> Texture:
    check_same_shape(raw_neutral, clean_neutral, what="raw and clean neutral")
    if not tau > 0:
        raise DataError(f"tau must be > 0, got {tau}")
    if dilate_px < 0:
        raise DataError(f"dilate_px must be >= 0, got {dilate_px}")
    diff = raw_neutral.data.astype(np.float64) - clean_neutral.data.astype(np.float64)
    dist2 = np.sum(diff * diff, axis=2)
    flat = diff.reshape(-1, diff.shape[2])
    variance = float(np.sum(np.var(flat, axis=0, ddof=1))) if len(flat) > 1 else 0.0
    mask = dist2 > (tau * tau) * variance
    mask = dilate_mask(mask.astype(np.uint8), dilate_px)
    logger.debug("fine mask: variance=%.6g masked=%d", variance, int(mask.sum()))
    return Texture(mask.astype(np.float32))


def clean_expression_texture(raw_expr: Texture, clean_neutral: Texture, masks: MaskStack) -> Texture:
    """coarse * (fine ? clean_neutral : raw_expr) + (1 - coarse) * clean_neutral."""
    check_same_shape(raw_expr, clean_neutral, what="expression and clean neutral")
    check_same_size(raw_expr, masks.coarse, what="expression and masks")
    coarse = masks.coarse.data.astype(np.float64)
    inner = np.where(masks.fine.data == 1.0, clean_neutral.data, raw_expr.data)
    out = coarse * inner + (1.0 - coarse) * clean_neutral.data
    # exact pass-through where the coarse mask is fully on or off
    out = np.where(coarse == 1.0, inner, np.where(coarse == 0.0, clean_neutral.data, out))
    return Texture(out.astype(np.float32))
