"""Landmark evaluation metrics.

Normalized metrics are reported in percent by default (`percent=True`);
pass `percent=False` for the raw ratio.
"""

from __future__ import annotations

import dataclasses
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from . import config
from .errors import MetricsError

UPPER_LEFT = "upper_left_eyelid"
LOWER_LEFT = "lower_left_eyelid"
UPPER_RIGHT = "upper_right_eyelid"
LOWER_RIGHT = "lower_right_eyelid"
EYELID_GROUPS = (UPPER_LEFT, LOWER_LEFT, UPPER_RIGHT, LOWER_RIGHT)

CONDITIONS = ("both-closed", "left-wink", "right-wink")
PAIRINGS = ("index", "nearest-x")


@dataclasses.dataclass(frozen=True, eq=False)
class Polyline:
    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise MetricsError(f"polyline needs at least 2 points of 2 coordinates, got shape {pts.shape}")
        if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise MetricsError("polyline has repeated consecutive points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


@dataclasses.dataclass(frozen=True, eq=False)
class LandmarkSet:
    points: np.ndarray
    groups: Dict[str, np.ndarray] = dataclasses.field(default_factory=dict)
    bbox_diagonal: float = 1.0
    interocular: Optional[float] = None

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        groups = {}
        for name, idx in self.groups.items():
            arr = np.asarray(idx, dtype=np.int64).reshape(-1)
            if arr.size and (arr.min() < 0 or arr.max() >= len(pts)):
                raise MetricsError(f"group '{name}' indexes outside the {len(pts)} points")
            groups[name] = arr
        if not self.bbox_diagonal > 0:
            raise MetricsError(f"bbox diagonal must be > 0, got {self.bbox_diagonal}")
        if self.interocular is not None and not self.interocular > 0:
            raise MetricsError(f"interocular distance must be > 0, got {self.interocular}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "groups", groups)

    def group(self, name: str) -> np.ndarray:
        if name not in self.groups:
            raise MetricsError(f"landmark group '{name}' missing")
        return self.points[self.groups[name]]


def bbox_diagonal(x0: float, y0: float, x1: float, y1: float) -> float:
    return float(np.hypot(x1 - x0, y1 - y0))


def interocular_from_corners(points: np.ndarray, left_corner: int, right_corner: int) -> float:
    pts = np.asarray(points, dtype=np.float64)
    return float(np.linalg.norm(pts[left_corner] - pts[right_corner]))


def _scale(value: float, normalizer: float, percent: bool) -> float:
    ratio = value / normalizer
    return ratio * 100.0 if percent else ratio


def point_to_polyline(p: Sequence[float], line: Polyline) -> float:
    """Shortest distance from `p` to any segment of `line`."""
    point = np.asarray(p, dtype=np.float64)
    a = line.points[:-1]
    ab = line.points[1:] - a
    t = np.clip(np.einsum("ij,ij->i", point - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    nearest = a + t[:, None] * ab
    return float(np.min(np.linalg.norm(nearest - point, axis=1)))


def eyelid_error(pred: LandmarkSet, gt_polylines: Mapping[str, Polyline], percent: bool = True) -> float:
    distances = []
    for name in EYELID_GROUPS:
        if name not in pred.groups:
            continue
        if name not in gt_polylines:
            raise MetricsError(f"no ground-truth polyline for '{name}'")
        line = gt_polylines[name]
        distances.extend(point_to_polyline(p, line) for p in pred.group(name))
    if not distances:
        raise MetricsError("prediction has no eyelid landmarks")
    return _scale(float(np.mean(distances)), pred.bbox_diagonal, percent)


def aperture(upper: np.ndarray, lower: np.ndarray, pairing: str = config.DEFAULT_PAIRING) -> float:
    """Mean distance between paired upper- and lower-lid landmarks."""
    if len(upper) == 0 or len(lower) == 0:
        raise MetricsError("eyelid groups must not be empty")
    if pairing == "index":
        if len(upper) != len(lower):
            raise MetricsError(f"upper and lower lids have {len(upper)} and {len(lower)} points; index pairing needs equal counts")
        partner = lower
    elif pairing == "nearest-x":
        partner = lower[np.argmin(np.abs(upper[:, None, 0] - lower[None, :, 0]), axis=1)]
    else:
        raise MetricsError(f"unknown pairing '{pairing}'")
    return float(np.mean(np.linalg.norm(upper - partner, axis=1)))


def eye_opening_error(
    pred: LandmarkSet,
    condition: str,
    pairing: str = config.DEFAULT_PAIRING,
    percent: bool = True,
) -> float:
    if condition not in CONDITIONS:
        raise MetricsError(f"unknown eye condition '{condition}'")
    if condition == "left-wink":
        value = aperture(pred.group(UPPER_LEFT), pred.group(LOWER_LEFT), pairing)
    elif condition == "right-wink":
        value = aperture(pred.group(UPPER_RIGHT), pred.group(LOWER_RIGHT), pairing)
    else:
        left = aperture(pred.group(UPPER_LEFT), pred.group(LOWER_LEFT), pairing)
        right = aperture(pred.group(UPPER_RIGHT), pred.group(LOWER_RIGHT), pairing)
        value = (left + right) / 2.0
    return _scale(value, pred.bbox_diagonal, percent)


def nme(pred: LandmarkSet, gt: LandmarkSet, percent: bool = True) -> float:
    if len(pred.points) != len(gt.points):
        raise MetricsError(f"prediction has {len(pred.points)} points, ground truth {len(gt.points)}")
    if gt.interocular is None:
        raise MetricsError("ground truth has no interocular distance")
    if len(gt.points) == 0:
        raise MetricsError("no landmarks to compare")
    err = float(np.mean(np.linalg.norm(pred.points - gt.points, axis=1)))
    return _scale(err, gt.interocular, percent)


def failure_rate(errors: Sequence[float], threshold: float = config.DEFAULT_FAILURE_THRESHOLD) -> float:
    """Percentage of errors strictly above `threshold`."""
    arr = np.asarray(errors, dtype=np.float64)
    if arr.size == 0:
        raise MetricsError("failure rate of an empty error list")
    return float(np.count_nonzero(arr > threshold)) / arr.size * 100.0
