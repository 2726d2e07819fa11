"""Experiment statistics: rigidity, edge rescaling, spike fluctuations, concentration and scaling fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.stats
from numpy.typing import ArrayLike, NDArray

from ..errors import DomainError
from .ensemble import SpectralSample
from .green import real_resolvent
from .mp_model import LocationConvention, MpModel, classical_locations, stieltjes_outside, theta
from .sampling import SamplerSpec, sample_columns

MIN_PILOT = 10_000
HW_EPSILONS = (0.05, 0.1, 0.2)


@dataclass
class RigidityProfile:
    deviation: NDArray[np.float64]
    budget: NDArray[np.float64]
    gamma: NDArray[np.float64]

    @property
    def ratio(self) -> NDArray[np.float64]:
        return self.deviation / self.budget

    @property
    def max_ratio(self) -> float:
        return float(self.ratio.max())

    @property
    def argmax(self) -> int:
        """1-based index j of the worst ratio."""
        return int(np.argmax(self.ratio)) + 1


def rigidity_budget(M: int, N: int) -> NDArray[np.float64]:
    """N^{-2/3} min(j, M^N + 1 - j)^{-1/3} for j = 1..M^N."""
    count = min(M, N)
    j = np.arange(1, count + 1)
    return N ** (-2.0 / 3.0) * np.minimum(j, count + 1 - j) ** (-1.0 / 3.0)


def rigidity_profile(
    sample: Union[SpectralSample, ArrayLike],
    model: MpModel,
    convention: LocationConvention = "companion",
) -> RigidityProfile:
    """Deviations |lambda_j - gamma_j| of the top M^N eigenvalues against the rigidity budget."""
    if model.M is None or model.N is None:
        raise DomainError("Rigidity needs a model built with explicit dimensions (MpModel.from_dims).")
    M, N = model.M, model.N
    values = sample.eigenvalues if isinstance(sample, SpectralSample) else np.asarray(sample, dtype=np.float64)
    count = min(M, N)
    if len(values) < count:
        raise DomainError(f"Need at least {count} eigenvalues, got {len(values)}.")
    gamma = classical_locations(M, N, convention)
    return RigidityProfile(
        deviation=np.abs(values[:count] - gamma),
        budget=rigidity_budget(M, N),
        gamma=gamma,
    )


def edge_rescale(lambda1: ArrayLike, M: int, N: int):
    """(N lambda_1 - (sqrt M + sqrt N)^2) / ((sqrt M + sqrt N)(1/sqrt M + 1/sqrt N)^{1/3})."""
    if M < 1 or N < 1:
        raise DomainError(f"Dimensions must be positive, got M={M}, N={N}.")
    rm, rn = math.sqrt(M), math.sqrt(N)
    center = (rm + rn) ** 2
    scale = (rm + rn) * (1.0 / rm + 1.0 / rn) ** (1.0 / 3.0)
    out = (N * np.asarray(lambda1, dtype=np.float64) - center) / scale
    return float(out) if np.ndim(out) == 0 else out


def ks_distance(samples: ArrayLike, cdf: Callable) -> float:
    """Two-sided Kolmogorov-Smirnov distance to a fully specified law."""
    data = np.asarray(samples, dtype=np.float64).ravel()
    if data.size == 0:
        raise DomainError("KS distance needs at least one sample.")
    return float(scipy.stats.kstest(data, cdf).statistic)


def ks_normal(samples: ArrayLike) -> float:
    return ks_distance(samples, scipy.stats.norm.cdf)


def ks_tw1(samples: ArrayLike) -> float:
    from .tw_dist import tw1_cdf

    return ks_distance(samples, tw1_cdf)


def within_slack(ratios: ArrayLike, N: int, eps_test: float = 0.1) -> float:
    """Fraction of ratios at most N^eps_test."""
    arr = np.asarray(ratios, dtype=np.float64).ravel()
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return float("nan")
    return float(np.mean(arr <= N**eps_test))


@dataclass(frozen=True)
class SpikePrediction:
    d: float
    y: float
    N: int
    theta: float
    a: float
    b: float
    kurtosis: float
    mixed_moment: float
    a_se: float
    pilot: int

    @property
    def b_squared(self) -> float:
        return self.b * self.b


def _b_squared(d: float, y: float, kurtosis: float) -> float:
    return 2.0 * (1.0 + 1.0 / d) ** 2 + (d * d - y) * (d + 1.0) ** 2 / d**4 * (kurtosis - 3.0)


def spike_prediction(
    d: float,
    y: float,
    N: int,
    sampler: SamplerSpec,
    pilot: int,
    rng: np.random.Generator,
    *,
    kurtosis: Optional[float] = None,
    epsilon: float = 0.0,
) -> SpikePrediction:
    """theta, a and b of the outlier fluctuation law, moments estimated from fresh pilot columns."""
    if not d > math.sqrt(y) + epsilon:
        raise DomainError(f"Spike d={d!r} must exceed sqrt(y) + eps = {math.sqrt(y) + epsilon!r}.")
    if pilot < MIN_PILOT:
        raise DomainError(f"Pilot size {pilot} is below the minimum of {MIN_PILOT} columns.")
    M = sampler.dimension
    q = sample_columns(sampler, pilot, rng)
    first = q[0] ** 2
    # Per column: q_1^2 (sum_{u != 1} q_u^2 - (M - 1)); the 1/N^2 and the sum over N columns leave 1/N.
    per_column = first * (np.sum(q * q, axis=0) - first - (M - 1))
    mixed = float(np.mean(per_column)) / N
    mixed_se = float(np.std(per_column, ddof=1)) / math.sqrt(pilot) / N
    factor = (d + 1.0) * math.sqrt(N) * math.sqrt(d * d - y) / d**3
    kurt = float(np.mean(q**4)) if kurtosis is None else float(kurtosis)
    b2 = _b_squared(d, y, kurt)
    if not b2 > 0:
        raise DomainError(f"Fluctuation variance b^2={b2!r} is not positive (kurtosis {kurt!r}).")
    return SpikePrediction(
        d=d,
        y=y,
        N=N,
        theta=theta(d, y),
        a=factor * mixed,
        b=math.sqrt(b2),
        kurtosis=kurt,
        mixed_moment=mixed,
        a_se=factor * mixed_se,
        pilot=pilot,
    )


def raw_phi(lambda_obs: ArrayLike, d: float, y: float, N: int):
    """(lambda - theta(d)) sqrt(N / (d^2 - y))."""
    out = (np.asarray(lambda_obs, dtype=np.float64) - theta(d, y)) * math.sqrt(N / (d * d - y))
    return float(out) if np.ndim(out) == 0 else out


def phi_statistic(lambda_obs: ArrayLike, pred: SpikePrediction):
    """Studentized outlier fluctuation (Phi - a) / b."""
    out = (np.asarray(raw_phi(lambda_obs, pred.d, pred.y, pred.N)) - pred.a) / pred.b
    return float(out) if np.ndim(out) == 0 else out


def phi_from_resolvent(X: NDArray[np.float64], d: float, i: int = 0) -> float:
    """-sqrt(N (d^2 - y)) theta(d) ([G1(theta)]_ii - m1(theta)) on the unspiked XX*."""
    M, N = X.shape
    y = M / N
    location = theta(d, y)
    G1 = real_resolvent(X, location, side=1)
    m1 = stieltjes_outside(location, MpModel(y=y)).m1
    return float(-math.sqrt(N * (d * d - y)) * location * (G1[i, i] - m1))


@dataclass
class TailReport:
    """Empirical exceedance probabilities against a sequence of thresholds."""

    thresholds: NDArray[np.float64]
    exceedance: NDArray[np.float64]
    statistics: NDArray[np.float64]
    labels: Tuple[float, ...] = ()
    shape: Optional[NDArray[np.float64]] = None
    slope: float = float("nan")

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.exceedance) <= 0))


def hw_linear_test(
    sampler: SamplerSpec,
    A: ArrayLike,
    trials: int,
    N: int,
    rng: np.random.Generator,
    epsilons: Sequence[float] = HW_EPSILONS,
) -> TailReport:
    """P(|sum_k x_k A_k| > N^eps ||A|| / sqrt N) for x = q / sqrt N."""
    A = np.asarray(A, dtype=np.float64)
    x = sample_columns(sampler, trials, rng) / math.sqrt(N)
    stat = np.abs(A @ x)
    norm = float(np.linalg.norm(A))
    thresholds = np.array([N**eps * norm / math.sqrt(N) for eps in epsilons])
    exceedance = np.array([np.mean(stat > level) for level in thresholds])
    return TailReport(thresholds=thresholds, exceedance=exceedance, statistics=stat, labels=tuple(epsilons))


def hw_quadratic_test(
    sampler: SamplerSpec,
    B: ArrayLike,
    trials: int,
    N: int,
    rng: np.random.Generator,
    t_grid: Optional[ArrayLike] = None,
) -> TailReport:
    """P(|x^T B x - tr(B)/N| >= t) with the two-regime decay min(Nt/||B||_HS, sqrt(Nt/||B||))."""
    B = np.asarray(B, dtype=np.float64)
    x = sample_columns(sampler, trials, rng) / math.sqrt(N)
    stat = np.einsum("it,ij,jt->t", x, B, x) - np.trace(B) / N
    hs = float(np.linalg.norm(B, "fro"))
    op = float(np.linalg.norm(B, 2))
    spread = float(np.std(stat))
    if t_grid is None:
        t_grid = np.linspace(0.5, 6.0, 12) * (spread if spread > 0 else 1.0)
    t = np.asarray(t_grid, dtype=np.float64)
    exceedance = np.array([np.mean(np.abs(stat) >= level) for level in t])
    if hs > 0:
        shape = np.minimum(N * t / hs, np.sqrt(N * t / op))
    else:
        shape = np.full_like(t, np.inf)
    slope = float("nan")
    usable = exceedance > 0
    if usable.sum() >= 2 and np.all(np.isfinite(shape[usable])):
        slope = float(np.polyfit(shape[usable], np.log(exceedance[usable]), 1)[0])
    return TailReport(
        thresholds=t, exceedance=exceedance, statistics=stat, labels=tuple(t.tolist()), shape=shape, slope=slope
    )


@dataclass(frozen=True)
class ThinShell:
    constant: float
    variance: float
    M: int
    N: int
    draws: int


def thin_shell_constant(sampler: SamplerSpec, N: int, draws: int, rng: np.random.Generator) -> ThinShell:
    """Fitted C in Var(||q / sqrt N||^2) <= C M / N^2."""
    if draws < 2:
        raise DomainError("Thin-shell estimate needs at least two draws.")
    q = sample_columns(sampler, draws, rng)
    norms = np.sum(q * q, axis=0) / N
    variance = float(np.var(norms, ddof=1))
    M = sampler.dimension
    return ThinShell(constant=variance * N * N / M, variance=variance, M=M, N=N, draws=draws)


@dataclass(frozen=True)
class RademacherReport:
    predicted_variance: float
    empirical_variance: float
    ks: float
    trials: int


def rademacher_quadratic_clt(
    x_row: ArrayLike, green_entries: ArrayLike, trials: int, rng: np.random.Generator
) -> RademacherReport:
    """Law of sqrt(N) sum_{k != l} delta_k delta_l x_k x_l G_kl over fresh Rademacher signs."""
    x = np.asarray(x_row, dtype=np.float64)
    G = np.asarray(green_entries, dtype=np.float64)
    n = x.shape[0]
    W = np.outer(x, x) * G
    np.fill_diagonal(W, 0.0)
    signs = np.where(rng.random((trials, n)) < 0.5, -1.0, 1.0)
    values = math.sqrt(n) * np.einsum("tk,kl,tl->t", signs, W, signs)
    predicted = 2.0 * n * float(np.sum(W * W))
    empirical = float(np.var(values))
    if predicted > 0:
        ks = ks_normal(values / math.sqrt(predicted))
    else:
        ks = 0.0 if np.all(values == 0) else 1.0
    return RademacherReport(predicted_variance=predicted, empirical_variance=empirical, ks=ks, trials=trials)


@dataclass(frozen=True)
class RademacherPrediction:
    D2: float
    b1_squared: float
    b2_squared: float


def rademacher_variance_prediction(d: float, y: float, kurtosis: float) -> RademacherPrediction:
    """D2 = 2 m2' - 2 m2^2, b1^2 = 2(m2' - m2^2) and b2^2 = m2^2 (kurtosis - 1) at theta(d)."""
    values = stieltjes_outside(theta(d, y), MpModel(y=y))
    base = values.dm2 - values.m2**2
    return RademacherPrediction(D2=2.0 * base, b1_squared=2.0 * base, b2_squared=values.m2**2 * (kurtosis - 1.0))


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    points: int

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def scaling_exponent(values_by_N: Mapping[int, Union[float, ArrayLike]], confidence: float = 0.95) -> ScalingFit:
    """Least-squares slope of log(median value) against log N."""
    if len(values_by_N) < 3:
        raise DomainError(f"Scaling fit needs at least 3 values of N, got {len(values_by_N)}.")
    Ns = np.array(sorted(values_by_N), dtype=np.float64)
    medians = np.array([float(np.median(np.asarray(values_by_N[int(n)], dtype=np.float64))) for n in Ns])
    if np.any(medians <= 0):
        raise DomainError("Scaling fit needs strictly positive values.")
    fit = scipy.stats.linregress(np.log(Ns), np.log(medians))
    dof = len(Ns) - 2
    half = float(scipy.stats.t.ppf(0.5 + confidence / 2.0, dof)) * fit.stderr if dof > 0 else math.inf
    return ScalingFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        ci_low=float(fit.slope) - half,
        ci_high=float(fit.slope) + half,
        points=len(Ns),
    )


__all__ = [
    "MIN_PILOT",
    "RademacherPrediction",
    "RademacherReport",
    "RigidityProfile",
    "ScalingFit",
    "SpikePrediction",
    "TailReport",
    "ThinShell",
    "edge_rescale",
    "hw_linear_test",
    "hw_quadratic_test",
    "ks_distance",
    "ks_normal",
    "ks_tw1",
    "phi_from_resolvent",
    "phi_statistic",
    "rademacher_quadratic_clt",
    "rademacher_variance_prediction",
    "raw_phi",
    "rigidity_budget",
    "rigidity_profile",
    "scaling_exponent",
    "spike_prediction",
    "thin_shell_constant",
    "within_slack",
]
