"""Eigenvalue rigidity against classical locations, with an edge scaling sweep over N."""

from __future__ import annotations

from concurrent.futures import Executor
from typing import Any, Dict, List

import numpy as np

from ..config.settings import ExperimentConfig
from ..rmt.mp_model import MpModel
from ..rmt.stats import rigidity_profile, scaling_exponent
from .common import TrialOutcome, draw, payload, run_trials, spectra, trial_seed


def run_rigidity(config: ExperimentConfig, pool: Executor) -> Dict[str, Any]:
    sizes: List[int] = sorted(config.N_values) or [config.dims[1]]
    eps = config.tolerances.eps_test

    def trial(key, seed) -> TrialOutcome:
        size_index, index = key
        M, N = config.dims_for(sizes[size_index])
        model = MpModel.from_dims(M, N)
        X = draw(config.sampler_spec(M), N, seed).X
        sample, _ = spectra(X, seed)
        profile = rigidity_profile(sample, model, config.convention)
        row = {
            "N": N,
            "M": M,
            "trial": index,
            "seed": seed,
            "max_ratio": profile.max_ratio,
            "argmax": profile.argmax,
            "edge_deviation": float(profile.deviation[0]),
            "clamped": sample.clamped,
        }
        return TrialOutcome(row=row, extras={"ratio": profile.ratio})

    keys = [(s, i) for s in range(len(sizes)) for i in range(config.trials)]
    outcomes = run_trials(pool, keys, [trial_seed(config, *k) for k in keys], trial)

    aggregates: Dict[str, Any] = {"convention": config.convention}
    verdicts: Dict[str, bool] = {}
    edge_by_N: Dict[int, List[float]] = {}
    for N in sizes:
        rows = [o.row for o in outcomes if o.row["N"] == N]
        median = float(np.median([r["max_ratio"] for r in rows]))
        aggregates[f"median_max_ratio_N{N}"] = median
        verdicts[f"rigidity_N{N}"] = median <= N**eps
        edge_by_N[N] = [r["edge_deviation"] for r in rows]
    if len(sizes) >= 3:
        fit = scaling_exponent(edge_by_N)
        aggregates.update(edge_slope=fit.slope, edge_slope_ci=[fit.ci_low, fit.ci_high])
        verdicts["edge_scaling"] = config.tolerances.slope_low <= fit.slope <= config.tolerances.slope_high
    largest = [o for o in outcomes if o.row["N"] == sizes[-1]][0]
    series = {
        "ratio": largest.extras["ratio"].tolist(),
        "N": sizes[-1],
        "edge_medians": {str(N): float(np.median(v)) for N, v in edge_by_N.items()},
    }
    return payload((o.row for o in outcomes), aggregates, verdicts, series)
