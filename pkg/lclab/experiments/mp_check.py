"""Global law: empirical spectral distribution against the MP law, plus the analytic self-checks."""

from __future__ import annotations

from concurrent.futures import Executor
from typing import Any, Dict

import numpy as np

from ..config.settings import ExperimentConfig
from ..rmt.ensemble import trace_identity_gap
from ..rmt.mp_model import (
    MpModel,
    identity_residuals,
    mp_cdf,
    mp_density,
    self_consistent_residuals,
    stieltjes,
)
from ..rmt.stats import ks_distance
from .common import TrialOutcome, draw, mean_se, payload, run_trials, spectra, trial_seed

RESIDUAL_MAX = 1e-9
INVERSION_MAX = 1e-4


def analytic_sweep(model: MpModel, points: int = 10) -> Dict[str, float]:
    """Worst quadratic and identity residuals on a log eta grid, and the Stieltjes inversion error."""
    low = model.lambda_minus / 2.0
    energies = np.linspace(low if low > 0 else 1e-3, 2.0 * model.lambda_plus, points)
    etas = np.geomspace(1e-6, 10.0, points)
    worst_quad = 0.0
    worst_ident = 0.0
    for E in energies:
        for eta in etas:
            pair = stieltjes(complex(E, eta), model)
            worst_quad = max(worst_quad, *self_consistent_residuals(pair, model))
            worst_ident = max(worst_ident, *identity_residuals(pair, model))
    bulk = np.linspace(model.lambda_minus + 0.1, model.lambda_plus - 0.1, 50)
    inverted = np.array([stieltjes(complex(x, 1e-6), model).m1.imag / np.pi for x in bulk])
    inversion = float(np.abs(inverted - mp_density(bulk, model, 1)).max())
    return {"max_quadratic_residual": worst_quad, "max_identity_residual": worst_ident, "inversion_error": inversion}


def run_mp_check(config: ExperimentConfig, pool: Executor) -> Dict[str, Any]:
    M, N = config.dims
    model = config.model()
    spec = config.sampler_spec()

    def trial(key, seed) -> TrialOutcome:
        X = draw(spec, N, seed).X
        sample, _ = spectra(X, seed)
        ks = ks_distance(sample.eigenvalues, lambda x: mp_cdf(x, model, 1))
        row = {
            "trial": key[0],
            "seed": seed,
            "ks": ks,
            "lambda_max": sample.largest,
            "clamped": sample.clamped,
            "trace_gap": trace_identity_gap(sample, X),
        }
        return TrialOutcome(row=row, extras={"eigenvalues": sample.eigenvalues})

    keys = [(i,) for i in range(config.trials)]
    outcomes = run_trials(pool, keys, [trial_seed(config, *k) for k in keys], trial)
    ks_mean, ks_se = mean_se([o.row["ks"] for o in outcomes])
    analytic = analytic_sweep(model)
    aggregates = {"M": M, "N": N, "y": model.y, "ks_mean": ks_mean, "ks_se": ks_se, **analytic}
    verdicts = {
        "global_law": ks_mean <= config.tolerances.global_ks_max,
        "self_consistent": analytic["max_quadratic_residual"] < RESIDUAL_MAX,
        "identities": analytic["max_identity_residual"] < RESIDUAL_MAX,
        "stieltjes_inversion": analytic["inversion_error"] < INVERSION_MAX,
    }
    series = {"eigenvalues": outcomes[0].extras["eigenvalues"].tolist(), "y": model.y}
    return payload((o.row for o in outcomes), aggregates, verdicts, series)
