from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from . import config, logutil
from .errors import ConfigError, DataError, TopologyError
from .evaluation import EvalOptions, evaluate, load_manifest, summarize, write_report
from .mapstore import load_wrinkle_maps
from .mesh import Mesh, load_mesh, same_topology, save_mesh
from .metrics import PAIRINGS
from .models import PipelineConfig, load_config
from .pipeline import plan, run_build_maps, run_clean, run_graft
from .preview import strip_texture, tension_colors, tension_preview
from .tension import TensionParams, bake_tension, weighted_tension
from .textures import load_texture, save_texture
from .wrinkles import blend_at_synthesis

logger = logging.getLogger("meshwrinkle.cli")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Pipeline config JSON; flags override its values")
    common.add_argument("--jobs", type=int, default=1, help="Identities processed in parallel")
    common.add_argument("--dry-run", action="store_true", help="Validate inputs and print the plan only")
    common.add_argument("--json-log", action="store_true", help="Log one JSON object per line to stderr")
    return common


def _add_tension_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--strength", type=float, default=None, help=f"Tension scale s (default {config.DEFAULT_STRENGTH})")
    parser.add_argument("--bias", type=float, default=None, help=f"Tension offset b (default {config.DEFAULT_BIAS})")
    parser.add_argument("--expansion-iters", type=int, default=None, help=">0 dilate, <0 erode expansion")
    parser.add_argument("--compression-iters", type=int, default=None, help=">0 dilate, <0 erode compression")


def build_arg_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="meshwrinkle", description="Tension-driven wrinkle maps for face meshes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tension", parents=[common], help="Per-vertex tension between two meshes")
    p.add_argument("base")
    p.add_argument("deformed")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--resolution", type=int, default=None)
    _add_tension_flags(p)

    p = sub.add_parser("bake", parents=[common], help="Bake tension to a UV texture")
    p.add_argument("base")
    p.add_argument("deformed")
    p.add_argument("--out", required=True, help="Output PFM")
    p.add_argument("--preview", help="Optional PNG preview (compression red, expansion green)")
    p.add_argument("--resolution", type=int, default=None)
    _add_tension_flags(p)

    for name, text in (
        ("build-maps", "Build wrinkle maps for identities with expression scans"),
        ("graft", "Graft wrinkle maps onto identities without scans"),
        ("clean", "Clean raw expression textures"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--tau", type=float, default=None)
        p.add_argument("--dilate-px", type=int, default=None)
        p.add_argument("--output-dir", default=None)
        _add_tension_flags(p)

    p = sub.add_parser("blend", parents=[common], help="Blend a map set with a baked tension texture")
    p.add_argument("maps_dir")
    p.add_argument("tension")
    p.add_argument("--out", required=True, help="Output directory")

    p = sub.add_parser("eval", parents=[common], help="Landmark metrics over a JSON manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="Output directory for report.csv and summary.json")
    p.add_argument("--threshold", type=float, default=config.DEFAULT_FAILURE_THRESHOLD)
    p.add_argument("--pairing", choices=PAIRINGS, default=config.DEFAULT_PAIRING)
    p.add_argument("--left-corner", type=int, default=None, help="Ground-truth index of the left outer eye corner")
    p.add_argument("--right-corner", type=int, default=None, help="Ground-truth index of the right outer eye corner")
    return parser


# ---------------------------------------------------------------- config


def _pipeline_config(args: argparse.Namespace, required: bool) -> PipelineConfig:
    if args.config:
        cfg = load_config(args.config)
    elif required:
        raise ConfigError(f"'{args.command}' needs --config")
    else:
        cfg = PipelineConfig()
    tension = cfg.tension.to_dict()
    for key in ("strength", "bias", "expansion_iters", "compression_iters"):
        value = getattr(args, key, None)
        if value is not None:
            tension[key] = value
    overrides: Dict[str, object] = {"tension": TensionParams.from_dict(tension)}
    for key in ("beta", "tau", "dilate_px", "output_dir", "resolution"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    cfg = dataclasses.replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _load_pair(args: argparse.Namespace) -> Tuple[Mesh, Mesh]:
    with logutil.stage("load"):
        base = load_mesh(args.base)
        deformed = load_mesh(args.deformed)
    if not same_topology(base, deformed):
        raise TopologyError()
    return base, deformed


# ---------------------------------------------------------------- commands


def cmd_tension(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args, required=False)
    base, deformed = _load_pair(args)
    out = Path(args.out)
    if args.dry_run:
        print(f"[tension] {base.vertex_count} vertices, {len(base.edges)} edges -> {out}")
        return config.EXIT_OK
    with logutil.stage("tension", vertices=base.vertex_count):
        t = weighted_tension(base, deformed, cfg.tension)
    save_texture(strip_texture(t.values), out / "tension.pfm")
    save_mesh(deformed, out / "tension_colored.obj", vertex_colors=tension_colors(t.values))
    if base.has_uvs:
        with logutil.stage("bake", resolution=cfg.resolution):
            preview = tension_preview(bake_tension(base, t, cfg.resolution))
    else:
        preview = tension_preview(strip_texture(t.values))
    save_texture(preview, out / "tension_preview.png")
    print(f"[tension] min={t.values.min():.6g} max={t.values.max():.6g} written to {out}")
    return config.EXIT_OK


def cmd_bake(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args, required=False)
    base, deformed = _load_pair(args)
    if not base.has_uvs:
        raise DataError("base mesh has no UV coordinates; cannot bake")
    if args.dry_run:
        print(f"[bake] {base.vertex_count} vertices at {cfg.resolution}x{cfg.resolution} -> {args.out}")
        return config.EXIT_OK
    with logutil.stage("bake", resolution=cfg.resolution):
        baked = bake_tension(base, weighted_tension(base, deformed, cfg.tension), cfg.resolution)
    save_texture(baked, args.out)
    if args.preview:
        save_texture(tension_preview(baked), args.preview)
    print(f"[bake] {cfg.resolution}x{cfg.resolution} written to {args.out}")
    return config.EXIT_OK


def _run_pipeline(args: argparse.Namespace, runner: Callable) -> int:
    cfg = _pipeline_config(args, required=True)
    lines, missing = plan(cfg, args.command)
    if args.dry_run:
        for line in lines:
            print(f"[{args.command}] {line}")
        for path in missing:
            print(f"[{args.command}] missing input: {path}")
        return config.EXIT_IO if missing else config.EXIT_OK
    done, failed = runner(cfg, jobs=max(1, args.jobs))
    for ident_id in sorted(done):
        print(f"[{args.command}] {ident_id}: {done[ident_id]}")
    if failed:
        print(f"[{args.command}] {len(failed)} identities failed: {', '.join(sorted(failed))}", file=sys.stderr)
        return config.EXIT_DATA
    return config.EXIT_OK


def cmd_build_maps(args: argparse.Namespace) -> int:
    return _run_pipeline(args, run_build_maps)


def cmd_graft(args: argparse.Namespace) -> int:
    return _run_pipeline(args, run_graft)


def cmd_clean(args: argparse.Namespace) -> int:
    return _run_pipeline(args, run_clean)


def cmd_blend(args: argparse.Namespace) -> int:
    with logutil.stage("load"):
        maps, manifest = load_wrinkle_maps(args.maps_dir)
        tension = load_texture(args.tension)
    if args.dry_run:
        print(f"[blend] {manifest.get('identity')} {maps.width}x{maps.height} -> {args.out}")
        return config.EXIT_OK
    with logutil.stage("blend"):
        albedo, displacement = blend_at_synthesis(maps, tension)
    out = Path(args.out)
    save_texture(albedo, out / "albedo.pfm")
    save_texture(albedo, out / "albedo.png")
    save_texture(displacement, out / "displacement.pfm")
    print(f"[blend] written to {out}")
    return config.EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    options = EvalOptions(
        threshold=args.threshold,
        pairing=args.pairing,
        left_corner=args.left_corner,
        right_corner=args.right_corner,
        jobs=max(1, args.jobs),
    )
    records = load_manifest(args.manifest, options)
    if args.dry_run:
        print(f"[eval] {len(records)} images -> {args.out}")
        return config.EXIT_OK
    with logutil.stage("eval", images=len(records)):
        results = evaluate(records, options)
        summary = summarize(results, options.threshold)
    write_report(results, summary, args.out)
    print(f"[eval] {summary['images']} images, nme={summary['nme_mean']} fr={summary['failure_rate']}")
    return config.EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "tension": cmd_tension,
    "bake": cmd_bake,
    "build-maps": cmd_build_maps,
    "graft": cmd_graft,
    "clean": cmd_clean,
    "blend": cmd_blend,
    "eval": cmd_eval,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    logutil.configure(json_log=args.json_log)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error("%s: config error: %s", args.command, exc)
        return config.EXIT_CONFIG
    except DataError as exc:
        logger.error("%s: %s", args.command, exc)
        return config.EXIT_DATA
    except OSError as exc:
        logger.error("%s: I/O error: %s", args.command, exc)
        return config.EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
