"""Outlier eigenvalues of the spiked model: location and Gaussian fluctuations."""

from __future__ import annotations

import math
from concurrent.futures import Executor
from typing import Any, Dict, List

import numpy as np

from ..config.settings import ExperimentConfig
from ..rmt.sampling import stream
from ..rmt.stats import SpikePrediction, ks_normal, phi_from_resolvent, phi_statistic, spike_prediction
from .common import TrialOutcome, draw, mean_se, payload, run_trials, spectra, trial_seed

PILOT_STREAM = 2**31 + 1


def predictions(config: ExperimentConfig) -> List[SpikePrediction]:
    """Per-spike theta, a and b from a pilot stream disjoint from every trial stream."""
    M, N = config.dims
    spec = config.sampler_spec()
    rng = stream(config.seed, PILOT_STREAM)
    return [
        spike_prediction(
            d, config.ratio, N, spec, config.pilot, rng, kurtosis=config.kurtosis, epsilon=config.spike_epsilon
        )
        for d in config.spike_list().d
    ]


def run_spike(config: ExperimentConfig, pool: Executor) -> Dict[str, Any]:
    M, N = config.dims
    y = config.ratio
    spikes = config.spike_list()
    spikes.require_supercritical(y, config.spike_epsilon)
    if spikes.r > 1:
        spikes.require_gaps(N, config.tolerances.eps_test)
    preds = predictions(config)
    spec = config.sampler_spec()

    def trial(key, seed) -> TrialOutcome:
        X = draw(spec, N, seed).X
        sample, _ = spectra(X, seed, spikes=spikes)
        row: Dict[str, Any] = {"trial": key[0], "seed": seed}
        for i, pred in enumerate(preds, start=1):
            lam = float(sample.eigenvalues[i - 1])
            row[f"lambda{i}"] = lam
            row[f"phi{i}"] = phi_statistic(lam, pred)
            row[f"phi{i}_resolvent"] = (phi_from_resolvent(X, pred.d, i - 1) - pred.a) / pred.b
        return TrialOutcome(row=row)

    keys = [(i,) for i in range(config.trials)]
    outcomes = run_trials(pool, keys, [trial_seed(config, *k) for k in keys], trial)
    rows = [o.row for o in outcomes]

    aggregates: Dict[str, Any] = {"M": M, "N": N, "y": y, "pilot": config.pilot}
    verdicts: Dict[str, bool] = {}
    series: Dict[str, Any] = {"d": list(spikes.d)}
    for i, pred in enumerate(preds, start=1):
        scale = math.sqrt((pred.d**2 - y) / N)
        expected = pred.theta + pred.a * scale
        mean, se = mean_se([r[f"lambda{i}"] for r in rows])
        slack = config.tolerances.se_multiplier * math.hypot(se if math.isfinite(se) else 0.0, pred.a_se * scale)
        phis = np.array([r[f"phi{i}"] for r in rows])
        ks = ks_normal(phis)
        aggregates.update(
            {
                f"d{i}": pred.d,
                f"theta{i}": pred.theta,
                f"a{i}": pred.a,
                f"a{i}_se": pred.a_se,
                f"b{i}": pred.b,
                f"kurtosis{i}": pred.kurtosis,
                f"lambda{i}_mean": mean,
                f"lambda{i}_se": se,
                f"lambda{i}_expected": expected,
                f"ks_phi{i}": ks,
                f"ks_phi{i}_resolvent": ks_normal([r[f"phi{i}_resolvent"] for r in rows]),
            }
        )
        verdicts[f"location{i}"] = abs(mean - expected) <= slack
        verdicts[f"fluctuation{i}"] = ks <= config.tolerances.ks_max
        series[f"phi{i}"] = phis.tolist()
    return payload(rows, aggregates, verdicts, series)
