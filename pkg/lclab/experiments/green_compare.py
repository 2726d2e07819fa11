"""Green-function comparison at the soft edge between two ensembles."""

from __future__ import annotations

import math
from concurrent.futures import Executor
from typing import Any, Callable, Dict

import numpy as np

from ..config.settings import ExperimentConfig
from ..rmt.green import edge_green_bounds, green_comparison_integrated, green_comparison_statistic
from ..rmt.sampling import derive_seed
from .common import TrialOutcome, draw, payload, run_trials, spectra, trial_seed

TEST_FUNCTIONS: Dict[str, Callable[[float], float]] = {
    "identity": lambda x: x,
    "square": lambda x: x * x,
    "bounded": lambda x: x / (1.0 + abs(x)),
}
BOUND_EXPONENT = 0.15


def run_green_compare(config: ExperimentConfig, pool: Executor) -> Dict[str, Any]:
    M, N = config.dims
    model = config.model()
    spec_A = config.sampler_spec()
    spec_B = config.reference_spec()
    eps = config.grid.epsilon
    E = model.lambda_plus
    eta0 = N ** (-2.0 / 3.0 - eps)
    window = N ** (-2.0 / 3.0 + eps)
    F = TEST_FUNCTIONS[config.test_function]

    def trial(key, seed) -> TrialOutcome:
        seed_A, seed_B = derive_seed(seed, 0), derive_seed(seed, 1)
        X_A = draw(spec_A, N, seed_A).X
        _, companion_A = spectra(X_A, seed_A)
        _, companion_B = spectra(draw(spec_B, N, seed_B).X, seed_B)
        bounds = edge_green_bounds(X_A, E, eps)
        row = {
            "trial": key[0],
            "seed": seed,
            "q_form_scaled": bounds.q_form / N ** (1.0 / 3.0),
            "diag_dev_scaled": bounds.diag_dev * N ** (1.0 / 3.0),
            "offdiag_max": bounds.offdiag_max,
            "sq_entry_max": bounds.sq_entry_max,
        }
        return TrialOutcome(row=row, extras={"A": companion_A, "B": companion_B})

    keys = [(i,) for i in range(config.trials)]
    outcomes = run_trials(pool, keys, [trial_seed(config, *k) for k in keys], trial)
    samples_A = [o.extras["A"] for o in outcomes]
    samples_B = [o.extras["B"] for o in outcomes]
    point = green_comparison_statistic(samples_A, samples_B, E, eta0, F)
    integrated = green_comparison_integrated(samples_A, samples_B, E - window, E + window, eta0, F)
    allowance = N ** (-1.0 / 6.0 + config.tolerances.eps_test)
    k = config.tolerances.se_multiplier
    rows = [o.row for o in outcomes]
    cap = N**BOUND_EXPONENT
    within = np.mean([r["q_form_scaled"] <= cap and r["diag_dev_scaled"] <= cap for r in rows])
    aggregates = {
        "M": M,
        "N": N,
        "E": E,
        "eta0": eta0,
        "test_function": config.test_function,
        "mean_A": point.mean_A,
        "mean_B": point.mean_B,
        "diff": point.diff,
        "se_diff": point.se_diff,
        "integrated_diff": integrated.diff,
        "integrated_se_diff": integrated.se_diff,
        "allowance": allowance,
        "edge_bounds_fraction": float(within),
    }
    verdicts = {
        "green_comparison": abs(point.diff) <= k * _finite(point.se_diff) + allowance,
        "integrated_comparison": abs(integrated.diff) <= k * _finite(integrated.se_diff) + allowance,
        "edge_green_bounds": within >= 1.0 - config.tolerances.delta_test,
    }
    series = {
        "statistic_A": [F(v) for v in _scaled(samples_A, E, eta0)],
        "statistic_B": [F(v) for v in _scaled(samples_B, E, eta0)],
    }
    return payload(rows, aggregates, verdicts, series)


def _finite(value: float) -> float:
    return value if math.isfinite(value) else 0.0


def _scaled(samples, E: float, eta0: float):
    for sample in samples:
        values = sample.eigenvalues
        yield float(np.sum(eta0 * eta0 / ((values - E) ** 2 + eta0 * eta0)))
