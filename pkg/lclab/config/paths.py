from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import List


def resolve_output_dir(target: os.PathLike[str] | str) -> Path:
    """Expand and absolutize an output directory without touching the filesystem."""
    return Path(target).expanduser().resolve()


def output_dir_problems(target: os.PathLike[str] | str) -> List[str]:
    """Reasons the directory cannot receive results; empty when it is usable."""
    resolved = resolve_output_dir(target)
    if resolved.exists() and not resolved.is_dir():
        return [f"output_dir: {resolved} exists and is not a directory"]
    probe = resolved
    while not probe.exists():
        if probe.parent == probe:
            return [f"output_dir: no existing ancestor for {resolved}"]
        probe = probe.parent
    if not os.access(probe, os.W_OK | os.X_OK):
        return [f"output_dir: {probe} is not writable"]
    return []


def ensure_output_dir(target: os.PathLike[str] | str) -> Path:
    resolved = resolve_output_dir(target)
    problems = output_dir_problems(resolved)
    if problems:
        raise PermissionError(problems[0])
    resolved.mkdir(parents=True, exist_ok=True)
    return resolved


def atomic_write_text(path: os.PathLike[str] | str, text: str) -> Path:
    """Write through a sibling temp file and rename over the target."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


__all__ = [
    "atomic_write_text",
    "ensure_output_dir",
    "output_dir_problems",
    "resolve_output_dir",
]
