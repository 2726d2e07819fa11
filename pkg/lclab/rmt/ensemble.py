"""Assembly of H = XX*, spiked Q = TXX*T* and their dense spectra."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from ..errors import DomainError, NumericalError

logger = logging.getLogger(__name__)

MAX_SPIKES = 16
CLAMP_FLOOR = -1e-10
RESIDUAL_TOL = 1e-9
RESIDUAL_PAIRS = 5


@dataclass(frozen=True)
class SpikeList:
    """Rank-r population spikes d_1 >= ... >= d_r on the first r coordinates."""

    d: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        values = tuple(sorted((float(v) for v in self.d), reverse=True))
        if len(values) > MAX_SPIKES:
            raise DomainError(f"At most {MAX_SPIKES} spikes are supported, got {len(values)}.")
        for value in values:
            if not value > -1.0:
                raise DomainError(f"Spike d={value!r} makes the population covariance singular (need d > -1).")
        object.__setattr__(self, "d", values)

    @property
    def r(self) -> int:
        return len(self.d)

    def require_supercritical(self, y: float, epsilon: float = 0.0) -> None:
        threshold = math.sqrt(y) + epsilon
        for value in self.d:
            if not value > threshold:
                raise DomainError(f"Spike d={value!r} must exceed sqrt(y) + eps = {threshold!r} for outliers.")

    def require_gaps(self, N: int, epsilon: float) -> None:
        gap = N ** (-0.5 + epsilon)
        for upper, lower in zip(self.d, self.d[1:]):
            if upper - lower <= gap:
                raise DomainError(f"Spikes {upper!r} and {lower!r} are closer than N^(-1/2+eps) = {gap:.4g}.")


@dataclass(frozen=True)
class SampleMeta:
    M: int
    N: int
    t: Optional[float] = None
    spikes: Tuple[float, ...] = ()
    seed: Optional[int] = None


@dataclass
class SpectralSample:
    """Eigenvalues in descending order plus provenance."""

    eigenvalues: NDArray[np.float64]
    meta: SampleMeta
    clamped: int = 0
    vectors: Optional[NDArray[np.float64]] = field(default=None, repr=False)

    def __len__(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def largest(self) -> float:
        return float(self.eigenvalues[0])


def assemble_H(X: NDArray[np.float64]) -> NDArray[np.float64]:
    """H = XX*, symmetrized after the product."""
    H = X @ X.T
    return 0.5 * (H + H.T)


def population_root(M: int, spikes: SpikeList) -> NDArray[np.float64]:
    """Diagonal of T = Sigma^{1/2}: sqrt(1 + d_i) on the first r coordinates, 1 elsewhere."""
    if spikes.r > M:
        raise DomainError(f"{spikes.r} spikes do not fit in dimension M={M}.")
    diag = np.ones(M, dtype=np.float64)
    diag[: spikes.r] = np.sqrt(1.0 + np.asarray(spikes.d))
    return diag


def assemble_spiked(
    X: NDArray[np.float64],
    spikes: SpikeList,
    *,
    require_outliers: bool = False,
    epsilon: float = 0.0,
) -> NDArray[np.float64]:
    M, N = X.shape
    if require_outliers:
        spikes.require_supercritical(M / N, epsilon)
    if spikes.r == 0:
        return assemble_H(X)
    TX = population_root(M, spikes)[:, None] * X
    return assemble_H(TX)


def _sorted_descending(values: NDArray[np.float64]) -> Tuple[NDArray[np.float64], NDArray[np.intp]]:
    # Stable order on -values keeps ties in index order.
    order = np.argsort(-values, kind="stable")
    return values[order], order


def _clamp(values: NDArray[np.float64], seed: Optional[int]) -> Tuple[NDArray[np.float64], int]:
    negative = values < 0.0
    if not negative.any():
        return values, 0
    worst = float(values.min())
    if worst < CLAMP_FLOOR:
        raise NumericalError(f"Eigenvalue {worst:.3e} is below the PSD clamp floor {CLAMP_FLOOR:g}", seed=seed)
    count = int(negative.sum())
    logger.warning("Clamped %d tiny negative eigenvalue(s) to zero (min %.3e)", count, worst)
    values = values.copy()
    values[negative] = 0.0
    return values, count


def spectrum(
    A: NDArray[np.float64],
    *,
    meta: Optional[SampleMeta] = None,
    psd: bool = True,
    check_residuals: bool = True,
    keep_vectors: bool = False,
    seed: Optional[int] = None,
) -> SpectralSample:
    """All eigenvalues of the symmetric matrix A in descending order."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"spectrum expects a square matrix, got shape {A.shape}.")
    if meta is None:
        meta = SampleMeta(M=A.shape[0], N=A.shape[0], seed=seed)
    seed = meta.seed if seed is None else seed
    want_vectors = check_residuals or keep_vectors
    try:
        if want_vectors:
            values, vectors = scipy.linalg.eigh(A)
        else:
            values, vectors = scipy.linalg.eigh(A, eigvals_only=True), None
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(f"Symmetric eigensolver failed: {exc}", seed=seed) from exc
    if not np.all(np.isfinite(values)):
        raise NumericalError("Symmetric eigensolver returned non-finite eigenvalues", seed=seed)
    values, order = _sorted_descending(values)
    if vectors is not None:
        vectors = vectors[:, order]
    if check_residuals and len(values):
        _check_eigenpairs(A, values, vectors, seed)
    clamped = 0
    if psd:
        values, clamped = _clamp(values, seed)
    return SpectralSample(
        eigenvalues=values,
        meta=meta,
        clamped=clamped,
        vectors=vectors if keep_vectors else None,
    )


def _check_eigenpairs(A, values, vectors, seed: Optional[int]) -> None:
    n = len(values)
    picker = np.random.default_rng(0 if seed is None else int(seed) % (2**63))
    idx = picker.choice(n, size=min(RESIDUAL_PAIRS, n), replace=False)
    norm = max(float(np.abs(values).max()), np.finfo(float).tiny)
    for k in idx:
        residual = np.linalg.norm(A @ vectors[:, k] - values[k] * vectors[:, k])
        if residual > RESIDUAL_TOL * norm:
            raise NumericalError(
                f"Eigenpair residual {residual:.3e} exceeds {RESIDUAL_TOL:g} x ||A|| for index {k}", seed=seed
            )


def companion_spectrum(sample: SpectralSample, N: int) -> SpectralSample:
    """Spectrum of X*X from that of XX*: pad with zeros (N > M) or drop trailing zeros (N < M)."""
    values = sample.eigenvalues
    if N >= len(values):
        padded = np.concatenate([values, np.zeros(N - len(values))])
    else:
        padded = values[:N].copy()
    return SpectralSample(eigenvalues=padded, meta=sample.meta, clamped=sample.clamped)


def sample_spectrum(
    X: NDArray[np.float64],
    *,
    t: Optional[float] = None,
    spikes: Optional[SpikeList] = None,
    seed: Optional[int] = None,
    check_residuals: bool = True,
) -> Tuple[SpectralSample, SpectralSample]:
    """(spectrum of H or Q, length M; spectrum of the companion, length N) from the smaller Gram matrix."""
    M, N = X.shape
    spikes = spikes or SpikeList()
    meta = SampleMeta(M=M, N=N, t=t, spikes=spikes.d, seed=seed)
    Y = population_root(M, spikes)[:, None] * X if spikes.r else X
    if M <= N:
        small = spectrum(assemble_H(Y), meta=meta, check_residuals=check_residuals, seed=seed)
        return small, companion_spectrum(small, N)
    gram = Y.T @ Y
    small = spectrum(0.5 * (gram + gram.T), meta=meta, check_residuals=check_residuals, seed=seed)
    full = companion_spectrum(small, M)
    return full, replace(small, meta=meta)


def trace_identity_gap(sample: SpectralSample, X: NDArray[np.float64]) -> float:
    """|sum lambda_j - sum X_ik^2| relative to sum lambda_j."""
    total = float(np.sum(sample.eigenvalues))
    frob = float(np.sum(X * X))
    return abs(total - frob) / max(total, np.finfo(float).tiny)


__all__ = [
    "MAX_SPIKES",
    "SampleMeta",
    "SpectralSample",
    "SpikeList",
    "assemble_H",
    "assemble_spiked",
    "companion_spectrum",
    "population_root",
    "sample_spectrum",
    "spectrum",
    "trace_identity_gap",
]
