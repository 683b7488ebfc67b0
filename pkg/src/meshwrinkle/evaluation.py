from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import config
from .errors import MetricsError
from .metrics import (
    CONDITIONS,
    LandmarkSet,
    Polyline,
    bbox_diagonal,
    eye_opening_error,
    eyelid_error,
    failure_rate,
    interocular_from_corners,
    nme,
)

logger = logging.getLogger(__name__)

REPORT_FIELDS = ("image_id", "condition", "nme", "eyelid_error", "eye_opening_error")


@dataclasses.dataclass
class EvalOptions:
    threshold: float = config.DEFAULT_FAILURE_THRESHOLD
    pairing: str = config.DEFAULT_PAIRING
    left_corner: Optional[int] = None
    right_corner: Optional[int] = None
    jobs: int = 1


@dataclasses.dataclass
class EvalRecord:
    image_id: str
    condition: str
    pred: LandmarkSet
    gt: Optional[LandmarkSet]
    polylines: Dict[str, Polyline]


@dataclasses.dataclass
class ImageResult:
    image_id: str
    condition: str
    nme: Optional[float] = None
    eyelid_error: Optional[float] = None
    eye_opening_error: Optional[float] = None

    def to_row(self) -> dict:
        return {
            "image_id": self.image_id,
            "condition": self.condition,
            "nme": "" if self.nme is None else f"{self.nme:.6f}",
            "eyelid_error": "" if self.eyelid_error is None else f"{self.eyelid_error:.6f}",
            "eye_opening_error": "" if self.eye_opening_error is None else f"{self.eye_opening_error:.6f}",
        }


def _diagonal(raw: dict) -> float:
    if "bbox_diagonal" in raw:
        return float(raw["bbox_diagonal"])
    bbox = raw.get("bbox")
    if bbox is None or len(bbox) != 4:
        raise MetricsError("needs 'bbox' [x0, y0, x1, y1] or 'bbox_diagonal'")
    return bbox_diagonal(*(float(v) for v in bbox))


def _mapping(raw: dict, key: str) -> dict:
    value = raw.get(key, {})
    if not isinstance(value, dict):
        raise MetricsError(f"'{key}' must be a JSON object, got {type(value).__name__}")
    return value


def parse_record(raw: dict, options: EvalOptions) -> EvalRecord:
    image_id = str(raw["image_id"])
    condition = raw.get("condition", "open")
    if condition != "open" and condition not in CONDITIONS:
        raise MetricsError(f"unknown condition '{condition}'")
    groups = dict(_mapping(raw, "groups"))
    diagonal = _diagonal(raw)
    pred = LandmarkSet(points=np.asarray(raw["pred"], dtype=np.float64), groups=groups, bbox_diagonal=diagonal)

    gt = None
    if raw.get("gt") is not None:
        gt_points = np.asarray(raw["gt"], dtype=np.float64).reshape(-1, 2)
        interocular = raw.get("interocular")
        if options.left_corner is not None and options.right_corner is not None:
            interocular = interocular_from_corners(gt_points, options.left_corner, options.right_corner)
        gt = LandmarkSet(
            points=gt_points,
            bbox_diagonal=diagonal,
            interocular=None if interocular is None else float(interocular),
        )
    polylines = {name: Polyline(np.asarray(pts, dtype=np.float64)) for name, pts in _mapping(raw, "gt_polylines").items()}
    return EvalRecord(image_id=image_id, condition=condition, pred=pred, gt=gt, polylines=polylines)


def load_manifest(path: str | Path, options: EvalOptions) -> List[EvalRecord]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MetricsError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, list):
        raise MetricsError(f"{path}: manifest must be a JSON array of records")
    records = []
    for index, raw in enumerate(data):
        try:
            records.append(parse_record(raw, options))
        except (KeyError, TypeError, ValueError, MetricsError) as exc:
            raise MetricsError(f"record {index}: {exc}") from exc
    ids = [r.image_id for r in records]
    if len(set(ids)) != len(ids):
        raise MetricsError(f"{path}: duplicate image_id values")
    return records


def evaluate_record(record: EvalRecord, options: EvalOptions) -> ImageResult:
    result = ImageResult(image_id=record.image_id, condition=record.condition)
    if record.gt is not None and record.gt.interocular is not None:
        result.nme = nme(record.pred, record.gt)
    if record.polylines:
        result.eyelid_error = eyelid_error(record.pred, record.polylines)
    if record.condition in CONDITIONS:
        result.eye_opening_error = eye_opening_error(record.pred, record.condition, pairing=options.pairing)
    return result


def evaluate(records: Sequence[EvalRecord], options: EvalOptions) -> List[ImageResult]:
    """Evaluate every record; results come back sorted by image id regardless of `jobs`."""
    if options.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=options.jobs) as pool:
            results = list(pool.map(lambda r: evaluate_record(r, options), records))
    else:
        results = [evaluate_record(r, options) for r in records]
    return sorted(results, key=lambda r: r.image_id)


def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def summarize(results: Sequence[ImageResult], threshold: float = config.DEFAULT_FAILURE_THRESHOLD) -> dict:
    nmes = [r.nme for r in results if r.nme is not None]
    eyelid = [r.eyelid_error for r in results if r.eyelid_error is not None]
    opening = [r.eye_opening_error for r in results if r.eye_opening_error is not None]
    return {
        "images": len(results),
        "nme_mean": _mean(nmes),
        "nme_count": len(nmes),
        "failure_rate": failure_rate(nmes, threshold) if nmes else None,
        "failure_threshold": threshold,
        "eyelid_error_mean": _mean(eyelid),
        "eyelid_count": len(eyelid),
        "eye_opening_error_mean": _mean(opening),
        "eye_opening_count": len(opening),
    }


def write_report(results: Sequence[ImageResult], summary: dict, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
        writer.writeheader()
        for result in results:
            writer.writerow(result.to_row())
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
