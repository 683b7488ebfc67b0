from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Tuple

import cv2
import numpy as np

from .errors import TextureError

PNG_SUFFIXES = (".png",)
PFM_SUFFIXES = (".pfm",)


@dataclasses.dataclass(frozen=True, eq=False)
class Texture:
    """Float32 raster stored as (height, width, channels), row 0 at the top."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise TextureError(f"texture must have 1 or 3 channels, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise TextureError(f"texture must be at least 1x1, got {arr.shape[1]}x{arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise TextureError("texture samples must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @classmethod
    def full(cls, width: int, height: int, channels: int, value: float) -> "Texture":
        return cls(np.full((height, width, channels), value, dtype=np.float32))

    def clamped(self, lo: float = 0.0, hi: float = 1.0) -> "Texture":
        return Texture(np.clip(self.data, lo, hi))


def check_same_shape(*textures: Texture, what: str = "textures") -> None:
    first = textures[0]
    for tex in textures[1:]:
        if tex.shape != first.shape:
            raise TextureError(
                f"{what} differ in size: {first.width}x{first.height}x{first.channels} "
                f"vs {tex.width}x{tex.height}x{tex.channels}"
            )


def check_same_size(*textures: Texture, what: str = "textures") -> None:
    """Width and height must agree; channel counts may differ."""
    first = textures[0]
    for tex in textures[1:]:
        if (tex.width, tex.height) != (first.width, first.height):
            raise TextureError(f"{what} differ in size: {first.width}x{first.height} vs {tex.width}x{tex.height}")


# ---------------------------------------------------------------- PFM


def _read_header_line(fh) -> str:
    line = fh.readline()
    if not line:
        raise TextureError("unexpected end of PFM header")
    return line.decode("ascii", errors="replace").strip()


def read_pfm(path: str | Path) -> Texture:
    with open(path, "rb") as fh:
        ident = _read_header_line(fh)
        if ident == "PF":
            channels = 3
        elif ident == "Pf":
            channels = 1
        else:
            raise TextureError(f"{path}: unrecognized PFM identifier '{ident}'")
        dims = _read_header_line(fh).split()
        if len(dims) != 2:
            raise TextureError(f"{path}: bad PFM dimensions line")
        try:
            width, height = int(dims[0]), int(dims[1])
            scale = float(_read_header_line(fh))
        except ValueError as exc:
            raise TextureError(f"{path}: bad PFM header: {exc}") from exc
        dtype = "<f4" if scale < 0 else ">f4"
        count = width * height * channels
        raw = fh.read(count * 4)
    if len(raw) != count * 4:
        raise TextureError(f"{path}: PFM payload truncated ({len(raw)} of {count * 4} bytes)")
    data = np.frombuffer(raw, dtype=dtype).astype(np.float32).reshape(height, width, channels)
    # PFM stores rows bottom to top
    return Texture(np.flipud(data))


def write_pfm(texture: Texture, path: str | Path) -> None:
    ident = "PF" if texture.channels == 3 else "Pf"
    header = f"{ident}\n{texture.width} {texture.height}\n-1.0\n".encode("ascii")
    payload = np.flipud(texture.data).astype("<f4").tobytes()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


# ---------------------------------------------------------------- PNG


def read_png(path: str | Path) -> Texture:
    if not Path(path).is_file():
        raise FileNotFoundError(f"no such texture: {path}")
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise TextureError(f"{path}: could not decode PNG")
    if img.dtype == np.uint8:
        scale = 255.0
    elif img.dtype == np.uint16:
        scale = 65535.0
    else:
        raise TextureError(f"{path}: unsupported bit depth ({img.dtype})")
    if img.ndim == 3:
        if img.shape[2] != 3:
            raise TextureError(f"{path}: unsupported channel count {img.shape[2]}")
        img = cv2.cvtColor(img, cv2.COLOR_BGR2RGB)
    return Texture(img.astype(np.float32) / np.float32(scale))


def write_png(texture: Texture, path: str | Path, bit_depth: int = 8) -> None:
    if bit_depth == 8:
        scale, dtype = 255.0, np.uint8
    elif bit_depth == 16:
        scale, dtype = 65535.0, np.uint16
    else:
        raise TextureError(f"unsupported PNG bit depth {bit_depth}")
    codes = np.rint(np.clip(texture.data, 0.0, 1.0) * scale).astype(dtype)
    if texture.channels == 3:
        codes = cv2.cvtColor(codes, cv2.COLOR_RGB2BGR)
    else:
        codes = codes[:, :, 0]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), codes):
        raise OSError(f"could not write {path}")


def load_texture(path: str | Path) -> Texture:
    suffix = Path(path).suffix.lower()
    if suffix in PFM_SUFFIXES:
        return read_pfm(path)
    if suffix in PNG_SUFFIXES:
        return read_png(path)
    raise TextureError(f"{path}: unsupported texture format '{suffix}'")


def save_texture(texture: Texture, path: str | Path, bit_depth: int = 8) -> None:
    suffix = Path(path).suffix.lower()
    if suffix in PFM_SUFFIXES:
        write_pfm(texture, path)
    elif suffix in PNG_SUFFIXES:
        write_png(texture, path, bit_depth=bit_depth)
    else:
        raise TextureError(f"{path}: unsupported texture format '{suffix}'")


# ---------------------------------------------------------------- arithmetic


def lerp_textures(a: Texture, b: Texture, w: Texture) -> Texture:
    """(1 - w) * a + w * b per texel, w broadcast over channels."""
    check_same_shape(a, b, what="lerp inputs")
    check_same_size(a, w, what="lerp weight")
    if w.channels != 1:
        raise TextureError("lerp weight must be a 1-channel texture")
    wt = w.data.astype(np.float64)
    out = (1.0 - wt) * a.data + wt * b.data
    # keep the endpoints exact
    out = np.where(wt == 0.0, a.data, np.where(wt == 1.0, b.data, out))
    return Texture(out.astype(np.float32))


def mse(a: Texture, b: Texture) -> float:
    check_same_shape(a, b, what="mse inputs")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    return float(np.mean(diff * diff))
