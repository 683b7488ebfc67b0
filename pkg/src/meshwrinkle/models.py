from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path
from typing import List, Optional

from . import config
from .errors import ConfigError
from .tension import TensionParams


def _resolve(base: Path, value: Optional[str]) -> Optional[str]:
    if value is None or value == "":
        return None
    p = Path(value)
    return str(p if p.is_absolute() else base / p)


@dataclasses.dataclass
class ExpressionEntry:
    name: str
    albedo: str
    displacement: str
    mesh: Optional[str] = None
    tension_map: Optional[str] = None
    blendshapes: Optional[str] = None  # .npy offsets, shape (shapes, vertices, 3)
    weights: Optional[List[float]] = None

    def validate(self, owner: str) -> None:
        where = f"identity {owner}, expression '{self.name}'"
        if not self.name:
            raise ConfigError(f"identity {owner}: expression name must not be empty")
        if not self.albedo or not self.displacement:
            raise ConfigError(f"{where}: albedo and displacement are required")
        if not (self.mesh or self.tension_map or self.blendshapes):
            raise ConfigError(f"{where}: give one of mesh, tension_map or blendshapes")
        if self.blendshapes and self.weights is None:
            raise ConfigError(f"{where}: blendshapes need weights")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "albedo": self.albedo,
            "displacement": self.displacement,
            "mesh": self.mesh,
            "tension_map": self.tension_map,
            "blendshapes": self.blendshapes,
            "weights": self.weights,
        }

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path(".")) -> "ExpressionEntry":
        return cls(
            name=str(data["name"]),
            albedo=_resolve(base, data["albedo"]),
            displacement=_resolve(base, data["displacement"]),
            mesh=_resolve(base, data.get("mesh")),
            tension_map=_resolve(base, data.get("tension_map")),
            blendshapes=_resolve(base, data.get("blendshapes")),
            weights=None if data.get("weights") is None else [float(w) for w in data["weights"]],
        )


@dataclasses.dataclass
class IdentityEntry:
    id: str
    neutral_albedo: str
    neutral_disp: str
    neutral_mesh: Optional[str] = None
    raw_neutral_albedo: Optional[str] = None
    expressions: List[ExpressionEntry] = dataclasses.field(default_factory=list)

    @property
    def has_scans(self) -> bool:
        return bool(self.expressions)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "neutral_albedo": self.neutral_albedo,
            "neutral_disp": self.neutral_disp,
            "neutral_mesh": self.neutral_mesh,
            "raw_neutral_albedo": self.raw_neutral_albedo,
            "expressions": [e.to_dict() for e in self.expressions],
        }

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path(".")) -> "IdentityEntry":
        return cls(
            id=str(data["id"]),
            neutral_albedo=_resolve(base, data["neutral_albedo"]),
            neutral_disp=_resolve(base, data["neutral_disp"]),
            neutral_mesh=_resolve(base, data.get("neutral_mesh")),
            raw_neutral_albedo=_resolve(base, data.get("raw_neutral_albedo")),
            expressions=[ExpressionEntry.from_dict(e, base) for e in data.get("expressions", [])],
        )


@dataclasses.dataclass
class PipelineConfig:
    tension: TensionParams = dataclasses.field(default_factory=TensionParams)
    beta: float = config.DEFAULT_BETA
    tau: float = config.DEFAULT_TAU
    dilate_px: int = config.DEFAULT_DILATE_PX
    resolution: int = config.DEFAULT_RESOLUTION
    output_dir: str = "out"
    coarse_mask: Optional[str] = None
    clean: bool = False
    identities: List[IdentityEntry] = dataclasses.field(default_factory=list)

    def validate(self) -> None:
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ConfigError(f"beta must be > 0, got {self.beta}")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.dilate_px < 0:
            raise ConfigError(f"dilate_px must be >= 0, got {self.dilate_px}")
        if self.resolution < 1:
            raise ConfigError(f"resolution must be >= 1, got {self.resolution}")
        if not self.output_dir:
            raise ConfigError("output_dir must not be empty")
        if self.clean and not self.coarse_mask:
            raise ConfigError("cleaning is enabled but no coarse_mask is configured")
        ids = [i.id for i in self.identities]
        if len(set(ids)) != len(ids):
            raise ConfigError("identity ids must be unique")
        for ident in self.identities:
            if not ident.id:
                raise ConfigError("identity id must not be empty")
            if not ident.neutral_albedo or not ident.neutral_disp:
                raise ConfigError(f"identity {ident.id}: neutral_albedo and neutral_disp are required")
            names = [e.name for e in ident.expressions]
            if len(set(names)) != len(names):
                raise ConfigError(f"identity {ident.id}: expression names must be unique")
            for expr in ident.expressions:
                expr.validate(ident.id)

    def to_dict(self) -> dict:
        return {
            "tension": self.tension.to_dict(),
            "beta": self.beta,
            "tau": self.tau,
            "dilate_px": self.dilate_px,
            "resolution": self.resolution,
            "output_dir": self.output_dir,
            "coarse_mask": self.coarse_mask,
            "clean": self.clean,
            "identities": [i.to_dict() for i in self.identities],
        }

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path(".")) -> "PipelineConfig":
        try:
            cfg = cls(
                tension=TensionParams.from_dict(data.get("tension", {})),
                beta=float(data.get("beta", config.DEFAULT_BETA)),
                tau=float(data.get("tau", config.DEFAULT_TAU)),
                dilate_px=int(data.get("dilate_px", config.DEFAULT_DILATE_PX)),
                resolution=int(data.get("resolution", config.DEFAULT_RESOLUTION)),
                output_dir=_resolve(base, data.get("output_dir", "out")) or "",
                coarse_mask=_resolve(base, data.get("coarse_mask")),
                clean=bool(data.get("clean", False)),
                identities=[IdentityEntry.from_dict(i, base) for i in data.get("identities", [])],
            )
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        cfg.validate()
        return cfg


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return PipelineConfig.from_dict(data, base=path.parent)
