"""
Atomic file writes: write to a temporary sibling, then rename over the target.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Union

from apps.core.utils.json import to_json_safe

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write text to path atomically and return the resolved path."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except Exception:
        logger.error("Failed to write %s", target, exc_info=True)
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target


def atomic_write_json(path: PathLike, payload: Any) -> Path:
    """Write a JSON document with a stable layout (two-space indent, trailing newline)."""
    text = json.dumps(to_json_safe(payload), indent=2, allow_nan=False) + "\n"
    return atomic_write_text(path, text)
