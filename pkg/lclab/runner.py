"""Run one experiment end to end and persist its result files."""

from __future__ import annotations

import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from . import __version__
from .config.paths import atomic_write_text, ensure_output_dir
from .config.settings import ExperimentConfig
from .experiments.registry import EXPERIMENT_REGISTRY

logger = logging.getLogger(__name__)

CSV_SCHEMA = "lclab-results/1"
CSV_NAME = "results.csv"
JSON_NAME = "results.json"


@dataclass
class ExperimentResult:
    experiment: str
    config: Dict[str, Any]
    rows: List[Dict[str, Any]]
    aggregates: Dict[str, Any]
    verdicts: Dict[str, bool]
    series: Dict[str, Any] = field(default_factory=dict)
    wall_clock: float = 0.0
    code_version: str = __version__
    started_at: str = ""
    files: List[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    @property
    def failed_verdicts(self) -> List[str]:
        return [name for name, ok in self.verdicts.items() if not ok]


def run(config: ExperimentConfig, output_dir: Optional[Path] = None, write: bool = True) -> ExperimentResult:
    """Execute config.experiment on a worker pool and write results.csv / results.json."""
    runner = EXPERIMENT_REGISTRY[config.experiment]
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    clock = time.perf_counter()
    logger.info("Running %s with %d worker(s), seed=%d", config.experiment, config.workers, config.seed)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        outcome = runner(config, pool)
    result = ExperimentResult(
        experiment=config.experiment,
        config=config.model_dump(mode="json"),
        rows=outcome["rows"],
        aggregates=outcome["aggregates"],
        verdicts=outcome["verdicts"],
        series=outcome.get("series", {}),
        wall_clock=time.perf_counter() - clock,
        started_at=started,
    )
    if not result.rows:
        logger.warning("Experiment %s produced no rows", config.experiment)
    if write:
        target = ensure_output_dir(output_dir if output_dir is not None else config.output_dir)
        result.files = [write_csv(result, target / CSV_NAME), write_json(result, target / JSON_NAME)]
    return result


def csv_header(experiment: str, columns: List[str]) -> str:
    return f"# schema={CSV_SCHEMA} experiment={experiment} columns={','.join(columns)}\n"


def render_csv(result: ExperimentResult) -> str:
    frame = pd.DataFrame(result.rows)
    buffer = io.StringIO()
    buffer.write(csv_header(result.experiment, [str(c) for c in frame.columns]))
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def write_csv(result: ExperimentResult, path: Path) -> Path:
    return atomic_write_text(path, render_csv(result))


def read_csv(path: Path) -> pd.DataFrame:
    """Parse a results file, checking the schema comment line."""
    with open(path, encoding="utf-8") as handle:
        first = handle.readline()
    if not first.startswith(f"# schema={CSV_SCHEMA} "):
        raise ValueError(f"{path} does not carry the {CSV_SCHEMA} header")
    return pd.read_csv(path, skiprows=1)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def render_json(result: ExperimentResult) -> str:
    document = {
        "experiment": result.experiment,
        "passed": result.passed,
        "verdicts": result.verdicts,
        "aggregates": result.aggregates,
        "config": result.config,
        "code_version": result.code_version,
        "started_at": result.started_at,
        "wall_clock": result.wall_clock,
        "rows": result.rows,
        "series": result.series,
    }
    return json.dumps(_jsonable(document), indent=2, allow_nan=False) + "\n"


def write_json(result: ExperimentResult, path: Path) -> Path:
    return atomic_write_text(path, render_json(result))


__all__ = ["CSV_SCHEMA", "ExperimentResult", "read_csv", "render_csv", "render_json", "run"]
