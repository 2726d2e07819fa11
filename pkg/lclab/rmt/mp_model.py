"""Deterministic Marchenko-Pastur machinery for H = XX*.

Densities, Stieltjes transforms, spectral edges, classical eigenvalue locations and
the outlier map of the rank-r spiked model. Everything here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import bisect

from ..errors import DomainError

Which = Literal[1, 2]
LocationConvention = Literal["companion", "literal"]

GAUSS_ORDER = 64
QUADRATURE_TOL = 1e-12
_MAX_DEPTH = 40
_GL_NODES, _GL_WEIGHTS = leggauss(GAUSS_ORDER)


def edges(y: float) -> Tuple[float, float]:
    """Return (lambda_minus, lambda_plus) = ((1 - sqrt y)^2, (1 + sqrt y)^2)."""
    _check_ratio(y)
    root = math.sqrt(y)
    return (1.0 - root) ** 2, (1.0 + root) ** 2


def _check_ratio(y: float) -> None:
    if not math.isfinite(y) or y <= 0:
        raise DomainError(f"Dimension ratio y must be positive, got {y!r}.")
    if y == 1:
        raise DomainError("Dimension ratio y = 1 is excluded (hard edge at 0).")


@dataclass(frozen=True)
class MpModel:
    """Marchenko-Pastur law with ratio y = M/N and its spectral edges."""

    y: float
    M: Optional[int] = None
    N: Optional[int] = None
    lambda_minus: float = field(init=False)
    lambda_plus: float = field(init=False)

    def __post_init__(self) -> None:
        low, high = edges(self.y)
        object.__setattr__(self, "lambda_minus", low)
        object.__setattr__(self, "lambda_plus", high)

    @classmethod
    def from_dims(cls, M: int, N: int) -> "MpModel":
        if M < 1 or N < 1:
            raise DomainError(f"Dimensions must be positive, got M={M}, N={N}.")
        return cls(y=M / N, M=M, N=N)

    @property
    def width(self) -> float:
        return self.lambda_plus - self.lambda_minus

    def continuous_mass(self, which: Which = 1) -> float:
        """Total mass of the absolutely continuous part of nu_{y,which}."""
        return 1.0 - point_mass(self, which)


@dataclass(frozen=True)
class StieltjesPair:
    """Values of m1(z) and m2(z) at one spectral parameter z in the upper half plane."""

    m1: complex
    m2: complex
    z: complex


@dataclass(frozen=True)
class RealStieltjes:
    """m1, m2 and their derivatives at a real point right of the support."""

    x: float
    m1: float
    m2: float
    dm1: float
    dm2: float


def point_mass(model: MpModel, which: Which = 1) -> float:
    """Atom at zero: (1 - 1/y)_+ for nu_{y,1}, (1 - y)_+ for nu_{y,2}."""
    _check_which(which)
    if which == 1:
        return max(0.0, 1.0 - 1.0 / model.y)
    return max(0.0, 1.0 - model.y)


def _check_which(which: int) -> None:
    if which not in (1, 2):
        raise DomainError(f"`which` selects nu_{{y,1}} or nu_{{y,2}}; got {which!r}.")


def mp_density(x: ArrayLike, model: MpModel, which: Which = 1):
    """Absolutely continuous density of nu_{y,which}; zero outside [lambda_-, lambda_+].

    The atom at zero is never folded in; see `point_mass`.
    """
    _check_which(which)
    arr = np.asarray(x, dtype=np.float64)
    inside = (arr > model.lambda_minus) & (arr < model.lambda_plus)
    out = np.zeros_like(arr)
    xi = arr[inside]
    scale = 2.0 * math.pi * xi * (model.y if which == 1 else 1.0)
    out[inside] = np.sqrt((model.lambda_plus - xi) * (xi - model.lambda_minus)) / scale
    if out.ndim == 0:
        return float(out)
    return out


def _stable_roots(a: complex, b: complex, c: complex) -> Tuple[complex, complex]:
    disc = np.sqrt(complex(b * b - 4.0 * a * c))
    if (b.conjugate() * disc).real < 0:
        disc = -disc
    q = -0.5 * (b + disc)
    return q / a, c / q


def _upper_root(a: complex, b: complex, c: complex) -> complex:
    first, second = _stable_roots(a, b, c)
    return complex(first if first.imag >= second.imag else second)


def stieltjes(z: complex, model: MpModel) -> StieltjesPair:
    """m1(z), m2(z) as the roots in C+ of the two self-consistent quadratics."""
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"Stieltjes transforms need Im z > 0, got z={z!r}.")
    y = model.y
    m1 = _upper_root(z * y, z - (1.0 - y), 1.0 + 0j)
    m2 = _upper_root(z, z + (1.0 - y), 1.0 + 0j)
    return StieltjesPair(m1=m1, m2=m2, z=z)


def stieltjes_derivatives(pair: StieltjesPair, model: MpModel) -> Tuple[complex, complex]:
    """Exact m1'(z), m2'(z) by differentiating the defining quadratics."""
    z, y = pair.z, model.y
    m1, m2 = pair.m1, pair.m2
    dm1 = -(y * m1 * m1 + m1) / (2.0 * z * y * m1 + z - (1.0 - y))
    dm2 = -(m2 * m2 + m2) / (2.0 * z * m2 + z + (1.0 - y))
    return dm1, dm2


def stieltjes_outside(x: float, model: MpModel) -> RealStieltjes:
    """Real boundary values of m1, m2 (and derivatives) at x > lambda_plus."""
    if not x > model.lambda_plus:
        raise DomainError(f"x={x!r} must lie right of lambda_plus={model.lambda_plus!r}.")
    y = model.y
    root = math.sqrt((x - model.lambda_plus) * (x - model.lambda_minus))
    m1 = (1.0 - y - x + root) / (2.0 * x * y)
    m2 = (y - 1.0 - x + root) / (2.0 * x)
    dm1 = -(y * m1 * m1 + m1) / (2.0 * x * y * m1 + x - (1.0 - y))
    dm2 = -(m2 * m2 + m2) / (2.0 * x * m2 + x + (1.0 - y))
    return RealStieltjes(x=x, m1=m1, m2=m2, dm1=dm1, dm2=dm2)


def self_consistent_residuals(pair: StieltjesPair, model: MpModel) -> Tuple[float, float]:
    """|z y m1^2 + (z-(1-y)) m1 + 1| and |z m2^2 + (z+(1-y)) m2 + 1|."""
    z, y = pair.z, model.y
    r1 = abs(z * y * pair.m1**2 + (z - (1.0 - y)) * pair.m1 + 1.0)
    r2 = abs(z * pair.m2**2 + (z + (1.0 - y)) * pair.m2 + 1.0)
    return float(r1), float(r2)


def identity_residuals(pair: StieltjesPair, model: MpModel) -> Tuple[float, float, float]:
    """Residuals of m1 = -1/(z(1+m2)), 1 + z m1 = (1 + z m2)/y, m1((z m2)' + 1) = m1'/m1."""
    z, y = pair.z, model.y
    m1, m2 = pair.m1, pair.m2
    dm1, dm2 = stieltjes_derivatives(pair, model)
    dzm2 = m2 + z * dm2
    first = abs(m1 + 1.0 / (z * (1.0 + m2)))
    second = abs(1.0 + z * m1 - (1.0 + z * m2) / y)
    third = abs(m1 * (dzm2 + 1.0) - dm1 / m1)
    return float(first), float(second), float(third)


def _gauss_legendre(func: Callable[[NDArray[np.float64]], NDArray[np.float64]], a: float, b: float) -> float:
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * _GL_NODES
    return float(half * np.dot(_GL_WEIGHTS, func(nodes)))


def _adaptive_integral(func, a: float, b: float, tol: float = QUADRATURE_TOL, depth: int = 0) -> float:
    whole = _gauss_legendre(func, a, b)
    mid = 0.5 * (a + b)
    left = _gauss_legendre(func, a, mid)
    right = _gauss_legendre(func, mid, b)
    if abs(whole - (left + right)) <= tol or depth >= _MAX_DEPTH:
        return left + right
    return _adaptive_integral(func, a, mid, 0.5 * tol, depth + 1) + _adaptive_integral(
        func, mid, b, 0.5 * tol, depth + 1
    )


def _edge_integrand(model: MpModel, which: Which):
    # x = lambda_+ - w sin^2(t) turns the square-root edges into a smooth integrand.
    w = model.width
    denom_scale = math.pi * (model.y if which == 1 else 1.0)

    def integrand(t: NDArray[np.float64]) -> NDArray[np.float64]:
        s2 = np.sin(t) ** 2
        c2 = np.cos(t) ** 2
        x = model.lambda_plus - w * s2
        return w * w * s2 * c2 / (denom_scale * x)

    return integrand


def tail_mass(x: float, model: MpModel, which: Which = 1) -> float:
    """Continuous mass of nu_{y,which} on [x, lambda_plus]."""
    _check_which(which)
    if x >= model.lambda_plus:
        return 0.0
    if x <= model.lambda_minus:
        upper = 0.5 * math.pi
    else:
        upper = math.asin(math.sqrt((model.lambda_plus - x) / model.width))
    return _adaptive_integral(_edge_integrand(model, which), 0.0, upper)


def mp_cdf(x: ArrayLike, model: MpModel, which: Which = 1):
    """Distribution function of nu_{y,which}, atom at zero included."""
    _check_which(which)
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    atom = point_mass(model, which)
    total = model.continuous_mass(which)
    out = np.empty_like(arr)
    for idx, value in enumerate(arr):
        below = atom if value >= 0 else 0.0
        out[idx] = below + (total - tail_mass(value, model, which) if value > model.lambda_minus else 0.0)
    out = np.clip(out, 0.0, 1.0)
    if np.ndim(x) == 0:
        return float(out[0])
    return out


def classical_locations(M: int, N: int, convention: LocationConvention = "companion") -> NDArray[np.float64]:
    """Classical locations gamma_1 > ... > gamma_{M^N} of the nonzero eigenvalues.

    "companion" places mass (j - 1/2)/N of nu_{y,2} (equivalently (j - 1/2)/M of
    nu_{y,1}) to the right of gamma_j. "literal" integrates nu_{y,1} against
    (j - 1/2)/N as written in the rigidity statement.
    """
    return _classical_locations(int(M), int(N), convention).copy()


@lru_cache(maxsize=32)
def _classical_locations(M: int, N: int, convention: LocationConvention) -> NDArray[np.float64]:
    model = MpModel.from_dims(M, N)
    which: Which = 2 if convention == "companion" else 1
    count = min(M, N)
    available = model.continuous_mass(which)
    targets = (np.arange(1, count + 1) - 0.5) / N
    if targets[-1] > available:
        raise DomainError(
            f"Requested tail mass {targets[-1]:.6g} exceeds the continuous mass {available:.6g} "
            f"of nu_{{y,{which}}}."
        )
    out = np.empty(count, dtype=np.float64)
    low, high = model.lambda_minus, model.lambda_plus
    for j, target in enumerate(targets):
        out[j] = bisect(
            lambda x, t=target: tail_mass(x, model, which) - t,
            low,
            high,
            xtol=1e-14,
            rtol=4 * np.finfo(float).eps,
            maxiter=200,
        )
        # Tail mass is monotone: later quantiles lie to the left.
        high = out[j]
    return out


def theta(d: float, y: float) -> float:
    """Outlier location 1 + d + y + y/d of a supercritical spike d > sqrt(y)."""
    if not d > math.sqrt(y):
        raise DomainError(f"Spike d={d!r} must exceed the threshold sqrt(y)={math.sqrt(y)!r}.")
    return 1.0 + d + y + y / d


__all__ = [
    "GAUSS_ORDER",
    "MpModel",
    "RealStieltjes",
    "StieltjesPair",
    "classical_locations",
    "edges",
    "identity_residuals",
    "mp_cdf",
    "mp_density",
    "point_mass",
    "self_consistent_residuals",
    "stieltjes",
    "stieltjes_derivatives",
    "stieltjes_outside",
    "tail_mass",
    "theta",
]
