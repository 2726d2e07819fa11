"""Green-function probes for H = XX* and its companion X*X.

All resolvent entries come from a spectral decomposition; dense complex inversion is
left to the tests as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from ..errors import DomainError
from .ensemble import SpectralSample, companion_spectrum
from .mp_model import MpModel, stieltjes

ENTRY_SAMPLE = 32
FULL_SCAN_MAX = 128


def _check_upper(z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"Spectral parameter needs Im z > 0, got z={z!r}.")
    return z


def empirical_stieltjes(sample: Union[SpectralSample, ArrayLike], z: complex) -> complex:
    """(1/n) sum_j 1/(lambda_j - z) over the full, zero-padded spectrum."""
    z = _check_upper(z)
    values = sample.eigenvalues if isinstance(sample, SpectralSample) else np.asarray(sample, dtype=np.float64)
    return complex(np.mean(1.0 / (values - z)))


def _companion(sample: SpectralSample) -> SpectralSample:
    N = sample.meta.N
    return sample if len(sample) == N else companion_spectrum(sample, N)


@dataclass(frozen=True)
class SpectralDomainGrid:
    """Finite probe set inside the domain D(eps) of the local law."""

    epsilon: float
    points: Tuple[complex, ...]
    energies: Tuple[float, ...] = ()
    etas: Tuple[float, ...] = ()

    @staticmethod
    def bounds(model: MpModel, N: int, epsilon: float) -> Tuple[float, float, float, float]:
        e_low = model.lambda_minus / 5.0 if model.y < 1 else 0.0
        return e_low, 5.0 * model.lambda_plus, N ** (-1.0 + epsilon), 10.0 * (1.0 + model.y)

    @classmethod
    def build(
        cls, model: MpModel, N: int, epsilon: float, n_energy: int = 20, n_eta: int = 10
    ) -> "SpectralDomainGrid":
        if epsilon <= 0:
            raise DomainError(f"Grid epsilon must be positive, got {epsilon!r}.")
        e_low, e_high, eta_low, eta_high = cls.bounds(model, N, epsilon)
        energies = np.linspace(e_low, e_high, n_energy)
        etas = np.geomspace(eta_low, eta_high, n_eta)
        points = tuple(complex(E, eta) for E in energies for eta in etas)
        return cls(epsilon=epsilon, points=points, energies=tuple(energies), etas=tuple(etas))

    def contains(self, z: complex, model: MpModel, N: int) -> bool:
        e_low, e_high, eta_low, eta_high = self.bounds(model, N, self.epsilon)
        tol = 1e-12
        return e_low - tol <= z.real <= e_high + tol and eta_low * (1 - tol) <= z.imag <= eta_high * (1 + tol)

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class GreenProbe:
    """Measured vs deterministic m2 and entrywise deviations at every grid point."""

    z: NDArray[np.complex128]
    m2N: NDArray[np.complex128]
    m2: NDArray[np.complex128]
    residual: NDArray[np.float64]
    budget: NDArray[np.float64]
    entrywise_max: NDArray[np.float64]
    entrywise_budget: NDArray[np.float64]
    indices: Tuple[int, ...] = field(default=())

    @property
    def ratio(self) -> NDArray[np.float64]:
        return self.residual / self.budget

    @property
    def entry_ratio(self) -> NDArray[np.float64]:
        return self.entrywise_max / self.entrywise_budget


class ResolventBasis:
    """Thin SVD X = U diag(s) V^T giving resolvent entries of XX* - z and X*X - z."""

    def __init__(self, X: NDArray[np.float64]) -> None:
        self.X = np.asarray(X, dtype=np.float64)
        self.M, self.N = self.X.shape
        U, s, Vt = scipy.linalg.svd(self.X, full_matrices=False)
        self.U = U
        self.V = Vt.T
        self.eigenvalues = s * s

    def entries(self, z: complex, rows: Sequence[int], cols: Optional[Sequence[int]] = None, side: int = 2):
        """Block [G_side(z)]_{rows, cols}; side 1 is (XX* - z)^{-1}, side 2 is (X*X - z)^{-1}."""
        z = _check_upper(z)
        basis = self.V if side == 2 else self.U
        rows = np.asarray(rows, dtype=np.intp)
        cols = rows if cols is None else np.asarray(cols, dtype=np.intp)
        left, right = basis[rows], basis[cols]
        inner = (left / (self.eigenvalues - z)) @ right.T
        # Kernel of the Gram matrix contributes -1/z on the orthogonal complement.
        identity = (rows[:, None] == cols[None, :]).astype(np.float64)
        return inner - (identity - left @ right.T) / z

    def trace(self, z: complex, side: int = 2) -> complex:
        z = _check_upper(z)
        dim = self.N if side == 2 else self.M
        kernel = dim - len(self.eigenvalues)
        return complex((np.sum(1.0 / (self.eigenvalues - z)) - kernel / z) / dim)


def real_resolvent(X: NDArray[np.float64], x: float, side: int = 2) -> NDArray[np.float64]:
    """Real resolvent (X*X - x)^{-1} (side 2) or (XX* - x)^{-1} (side 1) for x outside the spectrum."""
    gram = X.T @ X if side == 2 else X @ X.T
    mu, vectors = scipy.linalg.eigh(0.5 * (gram + gram.T))
    gaps = mu - x
    if np.any(np.abs(gaps) < 1e-12):
        raise DomainError(f"x={x!r} lies on the spectrum; the real resolvent is singular.")
    return (vectors / gaps) @ vectors.T


def local_law_scan(
    sample: SpectralSample,
    model: MpModel,
    grid: SpectralDomainGrid,
    basis: Optional[ResolventBasis] = None,
    rng: Optional[np.random.Generator] = None,
    n_indices: int = ENTRY_SAMPLE,
) -> GreenProbe:
    full = _companion(sample)
    N = full.meta.N
    z = np.asarray(grid.points, dtype=np.complex128)
    eta = z.imag
    m2N = np.array([empirical_stieltjes(full, point) for point in z])
    m2 = np.array([stieltjes(point, model).m2 for point in z])
    budget = 1.0 / (N * eta)
    entry_budget = np.sqrt(m2.imag / (N * eta)) + budget
    entry_max = np.full(z.shape, np.nan)
    indices: Tuple[int, ...] = ()
    if basis is not None:
        if basis.N <= FULL_SCAN_MAX:
            chosen = np.arange(basis.N)
        else:
            rng = rng if rng is not None else np.random.default_rng(0)
            chosen = np.sort(rng.choice(basis.N, size=min(n_indices, basis.N), replace=False))
        indices = tuple(int(i) for i in chosen)
        eye = np.eye(len(chosen))
        for k, point in enumerate(z):
            block = basis.entries(point, chosen)
            entry_max[k] = float(np.abs(block - m2[k] * eye).max())
    return GreenProbe(
        z=z,
        m2N=m2N,
        m2=m2,
        residual=np.abs(m2N - m2),
        budget=budget,
        entrywise_max=entry_max,
        entrywise_budget=entry_budget,
        indices=indices,
    )


def refined_edge_budget(N: int, kappa: float, eta: float) -> float:
    """1/(N(kappa + eta)) + 1/((N eta)^2 sqrt(kappa + eta))."""
    return 1.0 / (N * (kappa + eta)) + 1.0 / ((N * eta) ** 2 * math.sqrt(kappa + eta))


def edge_refined_residual(sample: SpectralSample, model: MpModel, E: float, eta: float) -> Tuple[float, float]:
    """(|m2N - m2|, refined budget) at E + i eta right of the spectral edge."""
    if E < model.lambda_plus:
        raise DomainError(f"Refined edge estimate needs E >= lambda_plus={model.lambda_plus!r}, got E={E!r}.")
    full = _companion(sample)
    z = complex(E, eta)
    residual = abs(empirical_stieltjes(full, z) - stieltjes(z, model).m2)
    return residual, refined_edge_budget(full.meta.N, E - model.lambda_plus, eta)


@dataclass(frozen=True)
class EtaStarReport:
    """Worst violation ratio per clause; a clause passes when its ratio is at most 1."""

    worst_i: float
    worst_ii: float
    worst_iii: float
    edge: float

    @property
    def pass_i(self) -> bool:
        return self.worst_i <= 1.0

    @property
    def pass_ii(self) -> bool:
        return self.worst_ii <= 1.0

    @property
    def pass_iii(self) -> bool:
        return self.worst_iii <= 1.0

    @property
    def passed(self) -> bool:
        return self.pass_i and self.pass_ii and self.pass_iii


def _band_ratio(value: float, target: float, C_V: float) -> float:
    # value must sit in [target / C_V, C_V target].
    return max(target / (C_V * value), value / (C_V * target))


def eta_star_regularity(
    m_V: Union[SpectralSample, Callable[[complex], complex]],
    eta_star: float,
    c_V: float = 0.05,
    C_V: float = 10.0,
    *,
    edge: Optional[float] = None,
    eta_max: float = 1.0,
    n_points: int = 16,
) -> EtaStarReport:
    """Check the square-root edge behaviour of Im m_V down to scale eta_star.

    A SpectralSample supplies both m_V and the edge lambda_1; a bare callable needs `edge`.
    """
    if isinstance(m_V, SpectralSample):
        values = m_V.eigenvalues
        edge = float(values[0]) if edge is None else edge
        transform = lambda z: empirical_stieltjes(values, z)  # noqa: E731
    else:
        if edge is None:
            raise DomainError("An explicit edge is required when m_V is a callable.")
        transform = m_V
    worst_i = 0.0
    for E in np.linspace(edge - c_V, edge, n_points):
        kappa = abs(edge - E)
        low = eta_star + math.sqrt(eta_star * kappa)
        for eta in np.geomspace(low, max(eta_max, low), n_points):
            im = transform(complex(E, eta)).imag
            worst_i = max(worst_i, _band_ratio(im, math.sqrt(kappa + eta), C_V))
    worst_ii = 0.0
    for E in np.linspace(edge, edge + c_V, n_points):
        kappa = abs(E - edge)
        for eta in np.geomspace(eta_star, max(eta_max, eta_star), n_points):
            im = transform(complex(E, eta)).imag
            worst_ii = max(worst_ii, _band_ratio(im, eta / math.sqrt(kappa + eta), C_V))
    worst_iii = max(2.0 * c_V / edge if edge > 0 else math.inf, edge / (C_V / 2.0))
    return EtaStarReport(worst_i=worst_i, worst_ii=worst_ii, worst_iii=worst_iii, edge=edge)


@dataclass(frozen=True)
class EdgeGreenBounds:
    """Edge probes of the minor resolvent with column 1 removed."""

    q_form: float
    diag_dev: float
    offdiag_max: float
    sq_entry_max: float
    z: complex
    symmetry_gap: float = 0.0


def edge_green_bounds(X: NDArray[np.float64], E: float, epsilon: float) -> EdgeGreenBounds:
    """Minor-resolvent statistics at z = E + i N^{-2/3-eps}.

    diag_dev is measured against m1(z) of the MP law at y = M/N; for square X, where
    that law is excluded, against the normalized trace of the minor resolvent.
    """
    M, N = X.shape
    if N < 2:
        raise DomainError("Edge Green probes need at least two columns.")
    eta0 = N ** (-2.0 / 3.0 - epsilon)
    z = complex(E, eta0)
    x1 = X[:, 0]
    minor = np.delete(X, 0, axis=1)
    gram = minor @ minor.T
    mu, U = scipy.linalg.eigh(0.5 * (gram + gram.T))
    inv = 1.0 / (mu - z)
    G = (U * inv) @ U.T
    G2 = (U * inv**2) @ U.T
    proj = U.T @ x1
    q_form = complex(np.sum(proj**2 * inv**2))
    reference = stieltjes(z, MpModel(y=M / N)).m1 if M != N else complex(np.mean(inv))
    off = G.copy()
    np.fill_diagonal(off, 0.0)
    return EdgeGreenBounds(
        q_form=abs(q_form),
        diag_dev=float(np.abs(np.diag(G) - reference).max()),
        offdiag_max=float(np.abs(off).max()) if M > 1 else 0.0,
        sq_entry_max=float(np.abs(G2).max()),
        z=z,
        symmetry_gap=float(np.abs(G - G.T).max()),
    )


@dataclass(frozen=True)
class ComparisonResult:
    mean_A: float
    mean_B: float
    diff: float
    se_A: float
    se_B: float

    @property
    def se_diff(self) -> float:
        return math.hypot(self.se_A, self.se_B)


def _mean_se(values: NDArray[np.float64]) -> Tuple[float, float]:
    if len(values) == 0:
        raise DomainError("Comparison needs at least one sample per ensemble.")
    se = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else math.inf
    return float(np.mean(values)), se


def _compare(values_A, values_B) -> ComparisonResult:
    mean_A, se_A = _mean_se(np.asarray(values_A, dtype=np.float64))
    mean_B, se_B = _mean_se(np.asarray(values_B, dtype=np.float64))
    return ComparisonResult(mean_A=mean_A, mean_B=mean_B, diff=mean_A - mean_B, se_A=se_A, se_B=se_B)


def _scaled_imaginary(sample: SpectralSample, E: float, eta0: float) -> float:
    full = _companion(sample)
    return full.meta.N * eta0 * empirical_stieltjes(full, complex(E, eta0)).imag


def green_comparison_statistic(
    samples_A: Sequence[SpectralSample],
    samples_B: Sequence[SpectralSample],
    E: float,
    eta0: float,
    F: Callable[[float], float],
) -> ComparisonResult:
    """Monte Carlo E F(N eta0 Im m2N(E + i eta0)) under two ensembles."""
    values_A = [F(_scaled_imaginary(s, E, eta0)) for s in samples_A]
    values_B = [F(_scaled_imaginary(s, E, eta0)) for s in samples_B]
    return _compare(values_A, values_B)


def _integrated_imaginary(sample: SpectralSample, E1: float, E2: float, eta0: float) -> float:
    # N * int_{E1}^{E2} Im m2N(x + i eta0) dx, exactly.
    values = _companion(sample).eigenvalues
    return float(np.sum(np.arctan((E2 - values) / eta0) - np.arctan((E1 - values) / eta0)))


def green_comparison_integrated(
    samples_A: Sequence[SpectralSample],
    samples_B: Sequence[SpectralSample],
    E1: float,
    E2: float,
    eta0: float,
    F: Callable[[float], float],
) -> ComparisonResult:
    if not E2 > E1:
        raise DomainError(f"Integration window needs E1 < E2, got [{E1!r}, {E2!r}].")
    values_A = [F(_integrated_imaginary(s, E1, E2, eta0)) for s in samples_A]
    values_B = [F(_integrated_imaginary(s, E1, E2, eta0)) for s in samples_B]
    return _compare(values_A, values_B)


__all__ = [
    "ComparisonResult",
    "EdgeGreenBounds",
    "EtaStarReport",
    "GreenProbe",
    "ResolventBasis",
    "SpectralDomainGrid",
    "edge_green_bounds",
    "edge_refined_residual",
    "empirical_stieltjes",
    "eta_star_regularity",
    "green_comparison_integrated",
    "green_comparison_statistic",
    "local_law_scan",
    "real_resolvent",
    "refined_edge_budget",
]
