"""Largest eigenvalue at the soft edge against TW1."""

from __future__ import annotations

from concurrent.futures import Executor
from typing import Any, Dict

import numpy as np

from ..config.settings import ExperimentConfig
from ..rmt.stats import edge_rescale, ks_tw1
from ..rmt.tw_dist import tw1_mean, tw1_variance
from .common import TrialOutcome, draw, payload, run_trials, spectra, trial_seed


def run_edge_tw(config: ExperimentConfig, pool: Executor) -> Dict[str, Any]:
    M, N = config.dims
    spec = config.sampler_spec()

    def trial(key, seed) -> TrialOutcome:
        X = draw(spec, N, seed).X
        sample, _ = spectra(X, seed)
        row = {
            "trial": key[0],
            "seed": seed,
            "lambda1": sample.largest,
            "rescaled": edge_rescale(sample.largest, M, N),
        }
        return TrialOutcome(row=row)

    keys = [(i,) for i in range(config.trials)]
    outcomes = run_trials(pool, keys, [trial_seed(config, *k) for k in keys], trial)
    rescaled = np.array([o.row["rescaled"] for o in outcomes])
    ks = ks_tw1(rescaled)
    aggregates = {
        "M": M,
        "N": N,
        "ks_tw1": ks,
        "mean": float(rescaled.mean()),
        "variance": float(rescaled.var(ddof=1)) if len(rescaled) > 1 else float("nan"),
        "tw1_mean": tw1_mean(),
        "tw1_variance": tw1_variance(),
    }
    verdicts = {"tracy_widom": ks <= config.tolerances.ks_max}
    return payload((o.row for o in outcomes), aggregates, verdicts, {"rescaled": rescaled.tolist()})
