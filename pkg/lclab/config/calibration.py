from __future__ import annotations

import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

logger = logging.getLogger(__name__)

CalibrationKey = Tuple[str, float, int]


@dataclass(frozen=True)
class CalibrationRecord:
    """Isotropy scaling constant for one (kind, p, M) sampler configuration."""

    kind: str
    p: float
    M: int
    scale: float
    pilot: int

    @property
    def key(self) -> CalibrationKey:
        return (self.kind, float(self.p), int(self.M))

    def to_row(self) -> str:
        return f"kind={self.kind} p={self.p!r} M={self.M} scale={self.scale!r} pilot={self.pilot}"

    @classmethod
    def from_row(cls, row: str) -> "CalibrationRecord":
        fields = dict(part.split("=", 1) for part in row.split())
        return cls(
            kind=fields["kind"],
            p=float(fields["p"]),
            M=int(fields["M"]),
            scale=float(fields["scale"]),
            pilot=int(fields["pilot"]),
        )


class MemoryCalibrationCache:
    """In-process calibration store shared by all sampler calls."""

    def __init__(self) -> None:
        self.storage: Dict[CalibrationKey, CalibrationRecord] = {}
        self._lock = threading.Lock()

    def get(self, kind: str, p: float, M: int, min_pilot: int = 0) -> Optional[CalibrationRecord]:
        with self._lock:
            record = self.storage.get((kind, float(p), int(M)))
        if record is None or record.pilot < min_pilot:
            logger.debug("calibration miss kind=%s p=%s M=%s", kind, p, M)
            return None
        logger.debug("calibration hit kind=%s p=%s M=%s scale=%r", kind, p, M, record.scale)
        return record

    def put(self, record: CalibrationRecord) -> CalibrationRecord:
        with self._lock:
            self.storage[record.key] = record
        return record

    def clear(self) -> None:
        with self._lock:
            self.storage.clear()


class FileBackedCalibrationCache(MemoryCalibrationCache):
    """Calibration store persisted as plain-text key=value rows."""

    def __init__(self, path: str | Path) -> None:
        super().__init__()
        self.file = Path(path).expanduser()
        self.file.parent.mkdir(parents=True, exist_ok=True)
        self._load()

    def _load(self) -> None:
        if not self.file.exists():
            return
        try:
            lines = self.file.read_text(encoding="utf-8").splitlines()
        except OSError:
            return
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                record = CalibrationRecord.from_row(line)
            except (KeyError, ValueError):
                logger.warning("Skipping malformed calibration row: %s", line)
                continue
            self.storage[record.key] = record

    def _persist(self) -> None:
        rows = ["# lclab calibration cache: one row per (kind, p, M)"]
        rows.extend(record.to_row() for _, record in sorted(self.storage.items()))
        tmp = self.file.with_suffix(self.file.suffix + ".tmp")
        try:
            tmp.write_text("\n".join(rows) + "\n", encoding="utf-8")
            os.replace(tmp, self.file)
        except OSError as exc:
            logger.warning("Could not persist calibration cache %s: %s", self.file, exc)

    def put(self, record: CalibrationRecord) -> CalibrationRecord:
        with self._lock:
            self.storage[record.key] = record
            self._persist()
        return record

    def clear(self) -> None:
        super().clear()
        with self._lock:
            self._persist()


def create_calibration_cache() -> MemoryCalibrationCache:
    """File-backed when LCLAB_CALIBRATION_CACHE is set, in-memory otherwise."""
    location = os.environ.get("LCLAB_CALIBRATION_CACHE")
    if location:
        return FileBackedCalibrationCache(location)
    return MemoryCalibrationCache()


_default_cache: Optional[MemoryCalibrationCache] = None
_default_lock = threading.Lock()


def get_calibration_cache() -> MemoryCalibrationCache:
    global _default_cache
    with _default_lock:
        if _default_cache is None:
            _default_cache = create_calibration_cache()
        return _default_cache


def reset_calibration_cache() -> None:
    global _default_cache
    with _default_lock:
        _default_cache = None


__all__ = [
    "CalibrationRecord",
    "FileBackedCalibrationCache",
    "MemoryCalibrationCache",
    "create_calibration_cache",
    "get_calibration_cache",
    "reset_calibration_cache",
]
