"""Tracy-Widom (beta = 1) distribution.

The oracle evaluates F1(s) = det(I - K) for K(x, y) = Ai((x + y)/2) / 2 on (s, inf) by
Nystrom discretisation on a truncated interval. The oracle is frozen once into a knot
table and all runtime lookups go through its monotone cubic interpolant.
"""

from __future__ import annotations

import logging
import os
import tempfile
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect
from scipy.special import airy

from ..errors import DomainError

logger = logging.getLogger(__name__)

S_MIN = -10.0
S_MAX = 8.0
TABLE_STEP = 0.01
DEFAULT_NODES = 128
TAIL_PAD = 16.0
TABLE_FILENAME = "tw1_table.txt"
TABLE_FORMAT = "lclab-tw1/1"


def _truncation(s: float) -> float:
    # Kernel arguments beyond (s + upper)/2 >= 8 are below double precision relevance.
    return abs(s) + TAIL_PAD


def tw1_oracle_cdf_flagged(s: float, nodes: int = DEFAULT_NODES) -> Tuple[float, bool]:
    """(F1(s), clamped) with s clamped into [S_MIN, S_MAX]."""
    clamped = not S_MIN <= s <= S_MAX
    if clamped:
        s = min(max(s, S_MIN), S_MAX)
    x, w = leggauss(nodes)
    upper = _truncation(s)
    half = 0.5 * (upper - s)
    points = s + half * (x + 1.0)
    weights = half * w
    ai, _, _, _ = airy(0.5 * (points[:, None] + points[None, :]))
    root = np.sqrt(weights)
    kernel = 0.5 * root[:, None] * ai * root[None, :]
    value = float(scipy.linalg.det(np.eye(nodes) - kernel))
    return min(max(value, 0.0), 1.0), clamped


def tw1_oracle_cdf(s: float, nodes: int = DEFAULT_NODES) -> float:
    value, clamped = tw1_oracle_cdf_flagged(s, nodes)
    if clamped:
        logger.warning("TW1 oracle argument %r clamped into [%g, %g]", s, S_MIN, S_MAX)
    return value


@dataclass
class Tw1Table:
    """Frozen TW1 CDF on a knot grid with a monotone cubic interpolant."""

    knots: NDArray[np.float64]
    values: NDArray[np.float64]
    params: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.knots = np.asarray(self.knots, dtype=np.float64)
        values = np.clip(np.asarray(self.values, dtype=np.float64), 0.0, 1.0)
        self.values = np.maximum.accumulate(values)
        if np.any(np.diff(self.knots) <= 0):
            raise DomainError("TW1 table knots must be strictly increasing.")
        self._interp = PchipInterpolator(self.knots, self.values, extrapolate=False)
        self._density = self._interp.derivative()

    @property
    def lower(self) -> float:
        return float(self.knots[0])

    @property
    def upper(self) -> float:
        return float(self.knots[-1])

    def cdf(self, s: ArrayLike):
        arr = np.asarray(s, dtype=np.float64)
        out = self._interp(np.clip(arr, self.lower, self.upper))
        out = np.where(arr < self.lower, 0.0, np.where(arr > self.upper, 1.0, out))
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def density(self, s: ArrayLike):
        arr = np.asarray(s, dtype=np.float64)
        inside = (arr >= self.lower) & (arr <= self.upper)
        out = np.where(inside, self._density(np.clip(arr, self.lower, self.upper)), 0.0)
        out = np.maximum(out, 0.0)
        return float(out) if out.ndim == 0 else out

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise DomainError(f"Quantile level must lie in (0, 1), got p={p!r}.")
        if p <= self.values[0]:
            return self.lower
        if p >= self.values[-1]:
            return self.upper
        return float(bisect(lambda s: self.cdf(s) - p, self.lower, self.upper, xtol=1e-12, maxiter=200))

    def mean(self) -> float:
        # cdf() puts the mass below lower at lower and the mass above upper at upper,
        # so integration by parts leaves upper - int F ds.
        integral, _ = quad(self.cdf, self.lower, self.upper, limit=1000)
        return self.upper - integral

    def variance(self) -> float:
        first, _ = quad(lambda s: s * self.cdf(s), self.lower, self.upper, limit=1000)
        second = self.upper**2 - 2.0 * first
        return second - self.mean() ** 2


def build_tw1_table(
    nodes: int = DEFAULT_NODES, step: float = TABLE_STEP, s_min: float = S_MIN, s_max: float = S_MAX
) -> Tw1Table:
    count = int(round((s_max - s_min) / step)) + 1
    knots = np.linspace(s_min, s_max, count)
    logger.info("Building TW1 table: %d knots, %d Nystrom nodes", count, nodes)
    values = np.array([tw1_oracle_cdf_flagged(s, nodes)[0] for s in knots])
    params = {
        "format": TABLE_FORMAT,
        "oracle": "fredholm-airy-nystrom",
        "nodes": str(nodes),
        "step": repr(step),
        "truncation": f"|s|+{TAIL_PAD:g}",
    }
    return Tw1Table(knots=knots, values=values, params=params)


def write_tw1_table(table: Tw1Table, path: str | Path) -> Path:
    target = Path(path).expanduser()
    target.parent.mkdir(parents=True, exist_ok=True)
    header = "# " + " ".join(f"{k}={v}" for k, v in table.params.items())
    lines = [header, "# s F1(s)"]
    lines.extend(f"{s!r} {v!r}" for s, v in zip(table.knots.tolist(), table.values.tolist()))
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tw1-", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
    os.replace(tmp, target)
    return target


def read_tw1_table(path: str | Path) -> Tw1Table:
    text = Path(path).expanduser().read_text(encoding="utf-8")
    params: Dict[str, str] = {}
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    key, value = token.split("=", 1)
                    params[key] = value
            continue
        s, v = line.split()
        rows.append((float(s), float(v)))
    data = np.asarray(rows, dtype=np.float64)
    return Tw1Table(knots=data[:, 0], values=data[:, 1], params=params)


def _packaged_table() -> Optional[Path]:
    try:
        candidate = resources.files("lclab").joinpath("data", TABLE_FILENAME)
    except (ModuleNotFoundError, FileNotFoundError):
        return None
    if candidate.is_file():
        return Path(str(candidate))
    return None


def table_cache_path() -> Path:
    from ..config.env import get_app_dir

    return get_app_dir() / TABLE_FILENAME


def load_tw1_table() -> Tw1Table:
    """LCLAB_TW_TABLE, then the packaged asset, then the user cache.

    The Fredholm build only runs when all three are missing, i.e. for a broken install.
    """
    override = os.environ.get("LCLAB_TW_TABLE")
    if override:
        return read_tw1_table(override)
    packaged = _packaged_table()
    if packaged is not None:
        return read_tw1_table(packaged)
    cached = table_cache_path()
    if cached.exists():
        return read_tw1_table(cached)
    logger.warning(
        "Packaged TW1 table %s is missing; rebuilding it from the Fredholm oracle (slow). "
        "Reinstall lclab or run scripts/build_tw1_table.py.",
        TABLE_FILENAME,
    )
    table = build_tw1_table()
    try:
        write_tw1_table(table, cached)
    except OSError as exc:
        logger.warning("Could not cache TW1 table at %s: %s", cached, exc)
    return table


_table: Optional[Tw1Table] = None
_table_lock = threading.Lock()


def get_tw1_table() -> Tw1Table:
    global _table
    with _table_lock:
        if _table is None:
            _table = load_tw1_table()
        return _table


def set_tw1_table(table: Optional[Tw1Table]) -> None:
    global _table
    with _table_lock:
        _table = table


def tw1_cdf(s: ArrayLike):
    return get_tw1_table().cdf(s)


def tw1_density(s: ArrayLike):
    return get_tw1_table().density(s)


def tw1_quantile(p: float) -> float:
    return get_tw1_table().quantile(p)


def tw1_mean() -> float:
    return get_tw1_table().mean()


def tw1_variance() -> float:
    return get_tw1_table().variance()


__all__ = [
    "DEFAULT_NODES",
    "S_MAX",
    "S_MIN",
    "Tw1Table",
    "build_tw1_table",
    "get_tw1_table",
    "load_tw1_table",
    "read_tw1_table",
    "set_tw1_table",
    "table_cache_path",
    "tw1_cdf",
    "tw1_density",
    "tw1_mean",
    "tw1_oracle_cdf",
    "tw1_oracle_cdf_flagged",
    "tw1_quantile",
    "tw1_variance",
    "write_tw1_table",
]
