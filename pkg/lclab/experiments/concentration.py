"""Concentration of linear and quadratic forms, thin shell, and the Rademacher quadratic CLT."""

from __future__ import annotations

import math
from concurrent.futures import Executor
from typing import Any, Dict, List

import numpy as np

from ..config.settings import ExperimentConfig
from ..rmt.green import real_resolvent
from ..rmt.mp_model import theta
from ..rmt.sampling import stream
from ..rmt.stats import (
    hw_linear_test,
    hw_quadratic_test,
    rademacher_quadratic_clt,
    rademacher_variance_prediction,
    thin_shell_constant,
)
from .common import TrialOutcome, draw, nonincreasing, payload, run_trials, trial_seed

QUADRATIC_LEVELS = np.linspace(1.0, 4.0, 7)


def _quadratic_grid(M: int, N: int) -> np.ndarray:
    # Thresholds in units of the Gaussian spread sqrt(2M)/N at the smallest size.
    return QUADRATIC_LEVELS * math.sqrt(2.0 * M) / N


def run_concentration(config: ExperimentConfig, pool: Executor) -> Dict[str, Any]:
    sizes: List[int] = sorted(config.M_values) or [config.dims[0]]
    y = config.ratio
    shapes = [(M, max(2, int(round(M / y)))) for M in sizes]
    t_grid = _quadratic_grid(*shapes[0])
    draws = config.pilot

    def trial(key, seed) -> TrialOutcome:
        M, N = shapes[key[0]]
        spec = config.sampler_spec(M)
        A = np.zeros(M)
        A[0] = 1.0
        linear = hw_linear_test(spec, A, draws, N, stream(seed, 0))
        quadratic = hw_quadratic_test(spec, np.eye(M), draws, N, stream(seed, 1), t_grid=t_grid)
        shell = thin_shell_constant(spec, N, draws, stream(seed, 2))
        row: Dict[str, Any] = {"M": M, "N": N, "seed": seed, "thin_shell_C": shell.constant}
        for eps, p in zip(linear.labels, linear.exceedance):
            row[f"linear_eps{eps:g}"] = float(p)
        for k, p in enumerate(quadratic.exceedance):
            row[f"quadratic_t{k}"] = float(p)
        row["quadratic_slope"] = quadratic.slope
        return TrialOutcome(row=row, extras={"linear": linear.exceedance, "quadratic": quadratic.exceedance})

    keys = [(k,) for k in range(len(shapes))]
    outcomes = run_trials(pool, keys, [trial_seed(config, *k) for k in keys], trial)
    linear = np.stack([o.extras["linear"] for o in outcomes])
    quadratic = np.stack([o.extras["quadratic"] for o in outcomes])

    clt = _rademacher(config)
    aggregates: Dict[str, Any] = {
        "M_values": sizes,
        "draws": draws,
        "quadratic_thresholds": t_grid.tolist(),
        "max_thin_shell_C": max(o.row["thin_shell_C"] for o in outcomes),
        **clt,
    }
    verdicts = {
        "thin_shell": aggregates["max_thin_shell_C"] < config.tolerances.thin_shell_max,
        "rademacher_clt": clt["rademacher_ks"] <= config.tolerances.rademacher_ks_max,
    }
    if len(sizes) > 1:
        verdicts["linear_decay"] = all(nonincreasing(linear[:, j]) for j in range(linear.shape[1]))
        verdicts["quadratic_decay"] = all(nonincreasing(quadratic[:, j]) for j in range(quadratic.shape[1]))
    series = {
        "M": sizes,
        "linear": linear.tolist(),
        "quadratic": quadratic.tolist(),
        "thresholds": t_grid.tolist(),
    }
    return payload((o.row for o in outcomes), aggregates, verdicts, series)


def _rademacher(config: ExperimentConfig) -> Dict[str, Any]:
    """Sign-randomized quadratic form of row 1 against the minor resolvent at theta(d)."""
    M, N = config.dims
    y = config.ratio
    d = config.spikes[0] if config.spikes else 1.0 + math.sqrt(y)
    seed = trial_seed(config, len(config.M_values) + 1, 0)
    X = draw(config.sampler_spec(), N, seed).X
    G = real_resolvent(X[1:], theta(d, y), side=2) if M > 1 else np.zeros((N, N))
    report = rademacher_quadratic_clt(X[0], G, config.sign_trials, stream(seed, 1))
    kurtosis = float(np.mean((X[0] * math.sqrt(N)) ** 4))
    prediction = rademacher_variance_prediction(d, y, kurtosis)
    return {
        "rademacher_d": d,
        "rademacher_ks": report.ks,
        "rademacher_predicted_variance": report.predicted_variance,
        "rademacher_empirical_variance": report.empirical_variance,
        "rademacher_D2": prediction.D2,
        "rademacher_b1_squared": prediction.b1_squared,
        "rademacher_b2_squared": prediction.b2_squared,
    }
