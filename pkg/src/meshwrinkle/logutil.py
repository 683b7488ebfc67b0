from __future__ import annotations

import contextlib
import json
import logging
import sys
import time
from typing import Iterator

_ROOT = "meshwrinkle"


class JsonFormatter(logging.Formatter):
    """One JSON object per record, for machine consumption."""

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "time": round(record.created, 3),
            "level": record.levelname,
            "stage": record.name.rsplit(".", 1)[-1],
            "message": record.getMessage(),
        }
        extra = getattr(record, "fields", None)
        if extra:
            payload.update(extra)
        return json.dumps(payload, sort_keys=True)


class TagFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        tag = record.name.rsplit(".", 1)[-1]
        msg = record.getMessage()
        extra = getattr(record, "fields", None)
        if extra:
            msg += " " + " ".join(f"{k}={v}" for k, v in extra.items())
        if record.levelno >= logging.WARNING:
            return f"[{tag}] {record.levelname.lower()}: {msg}"
        return f"[{tag}] {msg}"


def configure(json_log: bool = False, level: int = logging.INFO) -> None:
    root = logging.getLogger(_ROOT)
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter() if json_log else TagFormatter())
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False


@contextlib.contextmanager
def stage(name: str, **fields: object) -> Iterator[logging.Logger]:
    """Log the wall time spent inside the block under logger `name`."""
    logger = logging.getLogger(f"{_ROOT}.{name}")
    start = time.perf_counter()
    try:
        yield logger
    except BaseException:
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        logger.info("failed", extra={"fields": {**fields, "ms": round(elapsed_ms, 1)}})
        raise
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    logger.info("done", extra={"fields": {**fields, "ms": round(elapsed_ms, 1)}})
