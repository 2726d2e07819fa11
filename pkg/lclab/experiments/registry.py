from __future__ import annotations

from concurrent.futures import Executor
from typing import Any, Callable, Dict

from ..config.settings import ExperimentConfig
from .concentration import run_concentration
from .edge_tw import run_edge_tw
from .green_compare import run_green_compare
from .interp import run_interp
from .local_law import run_local_law
from .mp_check import run_mp_check
from .rigidity import run_rigidity
from .spike import run_spike

ExperimentRunner = Callable[[ExperimentConfig, Executor], Dict[str, Any]]

EXPERIMENT_REGISTRY: Dict[str, ExperimentRunner] = {
    "concentration": run_concentration,
    "edge-tw": run_edge_tw,
    "green-compare": run_green_compare,
    "interp": run_interp,
    "local-law": run_local_law,
    "mp-check": run_mp_check,
    "rigidity": run_rigidity,
    "spike": run_spike,
}

__all__ = ["EXPERIMENT_REGISTRY", "ExperimentRunner"]
