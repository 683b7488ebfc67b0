"""Mesh-tension driven wrinkle maps for textured face meshes."""

__all__ = [
    "config",
    "errors",
    "logutil",
    "mesh",
    "shapes",
    "bake",
    "tension",
    "textures",
    "preview",
    "wrinkles",
    "mapstore",
    "cleaning",
    "metrics",
    "evaluation",
    "models",
    "pipeline",
    "cli",
]
