from __future__ import annotations


class MeshWrinkleError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(MeshWrinkleError):
    pass


class DataError(MeshWrinkleError):
    pass


class MeshError(DataError):
    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TopologyError(DataError):
    def __init__(self, message: str = "topology mismatch") -> None:
        super().__init__(message)


class TextureError(DataError):
    pass


class WrinkleError(DataError):
    pass


class MetricsError(DataError):
    pass
