"""Shared trial plumbing: seeding, matrix draws, parallel trial execution and payload shape."""

from __future__ import annotations

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..config.settings import ExperimentConfig
from ..errors import LabError, NumericalError
from ..rmt.ensemble import SpectralSample, SpikeList, sample_spectrum
from ..rmt.sampling import MatrixDraw, SamplerSpec, assemble_X, derive_seed

logger = logging.getLogger(__name__)

Row = Dict[str, Any]


@dataclass
class TrialOutcome:
    """One trial's CSV row plus in-memory extras used only for aggregation."""

    row: Row
    extras: Dict[str, Any] = field(default_factory=dict)


def trial_seed(config: ExperimentConfig, *keys: int) -> int:
    return derive_seed(config.seed, *keys)


def draw(spec: SamplerSpec, N: int, seed: int) -> MatrixDraw:
    return assemble_X(spec, N, seed)


def spectra(
    X: np.ndarray, seed: int, spikes: Optional[SpikeList] = None, t: Optional[float] = None
) -> Tuple[SpectralSample, SpectralSample]:
    return sample_spectrum(X, spikes=spikes, seed=seed, t=t)


def run_trials(
    pool: Executor,
    keys: Sequence[Tuple[int, ...]],
    seeds: Sequence[int],
    trial: Callable[[Tuple[int, ...], int], TrialOutcome],
) -> List[TrialOutcome]:
    """Run trial(key, seed) for every key on the pool; outcomes come back in key order."""
    futures = [pool.submit(_guarded, trial, key, seed) for key, seed in zip(keys, seeds)]
    return [future.result() for future in futures]


def _guarded(trial, key, seed) -> TrialOutcome:
    try:
        return trial(key, seed)
    except LabError:
        raise
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        raise NumericalError(f"Trial {key} failed: {exc}", seed=seed) from exc


def payload(
    rows: Iterable[Row],
    aggregates: Dict[str, Any],
    verdicts: Dict[str, bool],
    series: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    return {
        "error": False,
        "rows": list(rows),
        "aggregates": aggregates,
        "verdicts": {k: bool(v) for k, v in verdicts.items()},
        "series": series or {},
    }


def mean_se(values: Sequence[float]) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return float("nan"), float("nan")
    se = float(np.std(arr, ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else float("nan")
    return float(arr.mean()), se


def nonincreasing(values: Sequence[float]) -> bool:
    return bool(np.all(np.diff(np.asarray(values, dtype=np.float64)) <= 0))


__all__ = [
    "Row",
    "TrialOutcome",
    "draw",
    "mean_se",
    "nonincreasing",
    "payload",
    "run_trials",
    "spectra",
    "trial_seed",
]
