from __future__ import annotations

import concurrent.futures
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from . import logutil
from .bake import bake_vertex_values
from .cleaning import MaskStack, build_fine_mask, clean_expression_texture
from .errors import ConfigError, DataError, MeshWrinkleError, WrinkleError
from .mapstore import load_wrinkle_maps, save_wrinkle_maps
from .mesh import Mesh, apply_blendshapes, load_mesh
from .models import ExpressionEntry, IdentityEntry, PipelineConfig
from .tension import weighted_tension
from .textures import Texture, load_texture, save_texture
from .wrinkles import ExpressionSample, WrinkleMapSet, build_wrinkle_maps, select_donor, transfer_wrinkles

logger = logging.getLogger(__name__)

T = TypeVar("T")


def run_per_identity(
    identities: Sequence[IdentityEntry],
    task: Callable[[IdentityEntry], T],
    jobs: int = 1,
) -> Tuple[Dict[str, T], Dict[str, BaseException]]:
    """Run `task` for every identity; failures are collected, not raised."""
    done: Dict[str, T] = {}
    failed: Dict[str, BaseException] = {}

    def guarded(ident: IdentityEntry):
        try:
            return ident.id, task(ident), None
        except (MeshWrinkleError, OSError) as exc:
            return ident.id, None, exc

    if jobs > 1 and len(identities) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(guarded, identities))
    else:
        outcomes = [guarded(i) for i in identities]
    for ident_id, value, exc in outcomes:
        if exc is None:
            done[ident_id] = value
        else:
            logger.error("identity %s failed: %s", ident_id, exc)
            failed[ident_id] = exc
    return done, failed


def identity_dir(cfg: PipelineConfig, ident: IdentityEntry) -> Path:
    return Path(cfg.output_dir) / ident.id


def load_masks(cfg: PipelineConfig, ident: IdentityEntry, clean_neutral_albedo: Texture) -> MaskStack:
    if not ident.raw_neutral_albedo:
        raise DataError(f"identity {ident.id}: cleaning needs raw_neutral_albedo")
    coarse = load_texture(cfg.coarse_mask)
    if coarse.channels == 3:
        coarse = Texture(coarse.data[:, :, :1])
    fine = build_fine_mask(load_texture(ident.raw_neutral_albedo), clean_neutral_albedo, cfg.tau, cfg.dilate_px)
    return MaskStack(coarse=coarse, fine=fine)


def load_offsets(path: str) -> np.ndarray:
    try:
        return np.load(path, allow_pickle=False)
    except ValueError as exc:
        raise DataError(f"{path}: not a blendshape offset array: {exc}") from exc


def expression_tension(
    ident: IdentityEntry,
    expr: ExpressionEntry,
    cfg: PipelineConfig,
    neutral_mesh: Optional[Mesh],
    width: int,
    height: int,
) -> Texture:
    if expr.tension_map:
        return load_texture(expr.tension_map)
    if expr.mesh or expr.blendshapes:
        if neutral_mesh is None:
            raise WrinkleError(f"expression '{expr.name}': identity {ident.id} has no neutral_mesh to deform")
        if expr.mesh:
            deformed = load_mesh(expr.mesh)
        else:
            deformed = apply_blendshapes(neutral_mesh, load_offsets(expr.blendshapes), expr.weights)
        t = weighted_tension(neutral_mesh, deformed, cfg.tension)
        return Texture(bake_vertex_values(neutral_mesh, t.values, width, height))
    raise WrinkleError(f"expression '{expr.name}': missing tension map (give 'tension_map', 'mesh' or 'blendshapes')")


def prepare_samples(cfg: PipelineConfig, ident: IdentityEntry) -> Tuple[Texture, Texture, List[ExpressionSample]]:
    neutral_albedo = load_texture(ident.neutral_albedo)
    neutral_disp = load_texture(ident.neutral_disp)
    neutral_mesh = load_mesh(ident.neutral_mesh) if ident.neutral_mesh else None
    masks = load_masks(cfg, ident, neutral_albedo) if cfg.clean else None

    samples = []
    for expr in ident.expressions:
        albedo = load_texture(expr.albedo)
        disp = load_texture(expr.displacement)
        if masks is not None:
            albedo = clean_expression_texture(albedo, neutral_albedo, masks)
            disp = clean_expression_texture(disp, neutral_disp, masks)
        with logutil.stage("tension", identity=ident.id, expression=expr.name):
            tension = expression_tension(ident, expr, cfg, neutral_mesh, albedo.width, albedo.height)
        samples.append(ExpressionSample(name=expr.name, albedo=albedo, displacement=disp, tension_map=tension))
    return neutral_albedo, neutral_disp, samples


def build_identity(cfg: PipelineConfig, ident: IdentityEntry) -> Path:
    with logutil.stage("build-maps", identity=ident.id, expressions=len(ident.expressions)):
        neutral_albedo, neutral_disp, samples = prepare_samples(cfg, ident)
        maps = build_wrinkle_maps(neutral_albedo, neutral_disp, samples, cfg.beta)
        return save_wrinkle_maps(maps, identity_dir(cfg, ident), ident.id, beta=cfg.beta)


def run_build_maps(cfg: PipelineConfig, jobs: int = 1):
    scanned = [i for i in cfg.identities if i.has_scans]
    if not scanned:
        raise WrinkleError("no identity has expression scans")
    return run_per_identity(scanned, lambda ident: build_identity(cfg, ident), jobs)


def load_donors(cfg: PipelineConfig) -> List[Tuple[str, WrinkleMapSet]]:
    donors = []
    for ident in cfg.identities:
        if not ident.has_scans:
            continue
        directory = identity_dir(cfg, ident)
        if not directory.is_dir():
            logger.warning("identity %s has scans but no built maps in %s; skipped as donor", ident.id, directory)
            continue
        maps, _ = load_wrinkle_maps(directory)
        donors.append((ident.id, maps))
    return donors


def run_graft(cfg: PipelineConfig, jobs: int = 1):
    donors = load_donors(cfg)
    if not donors:
        raise WrinkleError("donor pool is empty; run build-maps first")
    targets = [i for i in cfg.identities if not i.has_scans]

    def graft(ident: IdentityEntry) -> Path:
        with logutil.stage("graft", identity=ident.id):
            neutral_albedo = load_texture(ident.neutral_albedo)
            neutral_disp = load_texture(ident.neutral_disp)
            donor_id, score = select_donor(neutral_albedo, donors)
            logger.info("identity %s takes wrinkles from %s (mse=%.6g)", ident.id, donor_id, score)
            maps = transfer_wrinkles(neutral_albedo, neutral_disp, dict(donors)[donor_id])
            return save_wrinkle_maps(maps, identity_dir(cfg, ident), ident.id, source=f"graft:{donor_id}")

    return run_per_identity(targets, graft, jobs)


def run_clean(cfg: PipelineConfig, jobs: int = 1):
    if not cfg.coarse_mask:
        raise ConfigError("clean needs coarse_mask in the config")
    scanned = [i for i in cfg.identities if i.has_scans]

    def clean(ident: IdentityEntry) -> Path:
        with logutil.stage("clean", identity=ident.id):
            neutral_albedo = load_texture(ident.neutral_albedo)
            neutral_disp = load_texture(ident.neutral_disp)
            masks = load_masks(cfg, ident, neutral_albedo)
            out = identity_dir(cfg, ident) / "cleaned"
            save_texture(masks.fine, out / "fine_mask.png")
            for expr in ident.expressions:
                albedo = clean_expression_texture(load_texture(expr.albedo), neutral_albedo, masks)
                disp = clean_expression_texture(load_texture(expr.displacement), neutral_disp, masks)
                save_texture(albedo, out / f"{expr.name}_albedo.pfm")
                save_texture(albedo, out / f"{expr.name}_albedo.png")
                save_texture(disp, out / f"{expr.name}_displacement.pfm")
            return out

    return run_per_identity(scanned, clean, jobs)


def _inputs(ident: IdentityEntry) -> List[str]:
    paths = [ident.neutral_albedo, ident.neutral_disp, ident.neutral_mesh, ident.raw_neutral_albedo]
    for expr in ident.expressions:
        paths.extend([expr.albedo, expr.displacement, expr.mesh, expr.tension_map, expr.blendshapes])
    return [p for p in paths if p]


def plan(cfg: PipelineConfig, command: str) -> Tuple[List[str], List[str]]:
    """Execution plan lines and missing inputs, without touching outputs."""
    lines: List[str] = []
    missing: List[str] = []
    if cfg.clean and cfg.coarse_mask and not Path(cfg.coarse_mask).is_file():
        missing.append(cfg.coarse_mask)
    for ident in cfg.identities:
        if command in ("build-maps", "clean") and not ident.has_scans:
            continue
        if command == "graft" and ident.has_scans:
            continue
        missing.extend(p for p in _inputs(ident) if not Path(p).is_file())
        target = identity_dir(cfg, ident)
        if command == "build-maps":
            lines.append(f"{ident.id}: {len(ident.expressions)} expressions -> {target}")
        elif command == "graft":
            lines.append(f"{ident.id}: graft from nearest donor -> {target}")
        else:
            lines.append(f"{ident.id}: clean {len(ident.expressions)} expressions -> {target / 'cleaned'}")
    return lines, missing
