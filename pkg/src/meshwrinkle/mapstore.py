"""WrinkleMapSet persistence.

A map set is a directory holding six PFM rasters, 8-bit PNG previews of the
albedo maps and `manifest.json`:

    {"version": 1, "identity": "...", "beta": 10.0, "source": "scans" | "graft:<donor>",
     "maps": {"neutral_albedo": {"file": "neutral_albedo.pfm", "sha256": "..."}, ...},
     "previews": {"neutral_albedo": "neutral_albedo.png", ...}}
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional, Tuple

from . import config
from .errors import WrinkleError
from .textures import load_texture, save_texture
from .wrinkles import WrinkleMapSet

READ_BUF = 1024 * 256


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(READ_BUF), b""):
            h.update(chunk)
    return h.hexdigest()


def save_wrinkle_maps(
    maps: WrinkleMapSet,
    directory: str | Path,
    identity: str,
    beta: Optional[float] = None,
    source: str = "scans",
) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    entries = {}
    previews = {}
    for name, texture in maps.rasters():
        filename = f"{name}.pfm"
        save_texture(texture, out / filename)
        entries[name] = {"file": filename, "sha256": file_sha256(out / filename)}
        if name in WrinkleMapSet.ALBEDO:
            previews[name] = f"{name}.png"
            save_texture(texture, out / previews[name])
    manifest = {
        "version": config.MANIFEST_VERSION,
        "identity": identity,
        "beta": beta,
        "source": source,
        "width": maps.width,
        "height": maps.height,
        "maps": entries,
        "previews": previews,
    }
    manifest_path = out / config.MANIFEST_NAME
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def load_wrinkle_maps(directory: str | Path, verify: bool = True) -> Tuple[WrinkleMapSet, dict]:
    root = Path(directory)
    manifest_path = root / config.MANIFEST_NAME
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise WrinkleError(f"{manifest_path}: invalid JSON: {exc.msg}") from exc
    version = manifest.get("version")
    if version != config.MANIFEST_VERSION:
        raise WrinkleError(f"{manifest_path}: unsupported manifest version {version}")
    rasters = {}
    for name in WrinkleMapSet.ALBEDO + WrinkleMapSet.DISPLACEMENT:
        entry = manifest.get("maps", {}).get(name)
        if entry is None:
            raise WrinkleError(f"{manifest_path}: missing map '{name}'")
        path = root / entry["file"]
        if verify and entry.get("sha256") and file_sha256(path) != entry["sha256"]:
            raise WrinkleError(f"{path}: sha256 mismatch")
        rasters[name] = load_texture(path)
    return WrinkleMapSet(**rasters), manifest
