"""Samplers for unconditional isotropic log-concave columns.

Exact samplers (gaussian, laplace_product, lp_ball) draw each column from its own
counter-derived Philox substream. The hit-and-run sampler runs one vectorized chain
per column from a single derived stream, so a matrix is still a pure function of
(spec, N, seed).
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from numpy.typing import NDArray

from ..config.calibration import CalibrationRecord, MemoryCalibrationCache, get_calibration_cache
from ..errors import DomainError

logger = logging.getLogger(__name__)

SamplerKind = Literal["gaussian", "laplace_product", "lp_ball", "hit_and_run"]
BodyKind = Literal["lp_ball", "cube"]
Direction = Literal["coordinate", "sphere"]

SAMPLER_KINDS = ("gaussian", "laplace_product", "lp_ball", "hit_and_run")
DEFAULT_BURN_IN_FACTOR = 50
DEFAULT_THINNING_FACTOR = 10
DEFAULT_BURN_IN_FLOOR = 10
DEFAULT_PILOT = 100_000
CALIBRATION_ENTROPY = 0x1C1AB5EED
# Spawn key of the hit-and-run chain stream; column substreams use keys < 2**31.
CHAIN_STREAM = 2**31
_BISECT_STEPS = 60
_PILOT_BATCH = 4096
_PILOT_CHAINS = 1024


@dataclass(frozen=True)
class BodySpec:
    """Symmetric convex body explored by hit-and-run: an lp ball or the cube [-1, 1]^M."""

    kind: BodyKind = "lp_ball"
    p: float = 1.0
    direction: Direction = "coordinate"

    def __post_init__(self) -> None:
        if self.kind not in ("lp_ball", "cube"):
            raise DomainError(f"Unknown body kind {self.kind!r}.")
        if self.direction not in ("coordinate", "sphere"):
            raise DomainError(f"Unknown hit-and-run direction {self.direction!r}.")
        if self.kind == "lp_ball":
            _check_p(self.p)


@dataclass(frozen=True)
class SamplerSpec:
    kind: SamplerKind
    dimension: int
    p: Optional[float] = None
    body: Optional[BodySpec] = None
    burn_in: Optional[int] = None
    thinning: Optional[int] = None
    burn_in_floor: int = DEFAULT_BURN_IN_FLOOR
    pilot: int = DEFAULT_PILOT

    def __post_init__(self) -> None:
        if self.kind not in SAMPLER_KINDS:
            raise DomainError(f"Unknown sampler kind {self.kind!r}; expected one of {SAMPLER_KINDS}.")
        if self.dimension < 1:
            raise DomainError(f"Sampler dimension must be positive, got {self.dimension}.")
        if self.kind == "lp_ball":
            if self.p is None:
                raise DomainError("lp_ball sampler needs an exponent p.")
            _check_p(self.p)
        if self.kind == "hit_and_run":
            if self.body is None:
                object.__setattr__(self, "body", BodySpec())
            if self.burn_in is None:
                object.__setattr__(self, "burn_in", DEFAULT_BURN_IN_FACTOR * self.dimension)
            if self.thinning is None:
                object.__setattr__(self, "thinning", DEFAULT_THINNING_FACTOR * self.dimension)

    @property
    def is_mcmc(self) -> bool:
        return self.kind == "hit_and_run"

    @property
    def calibration_key(self) -> tuple[str, float]:
        if self.kind == "lp_ball":
            return "lp_ball", float(self.p)
        if self.kind == "hit_and_run":
            # The pilot chains run burn_in steps and sample every thinning steps.
            body = self.body
            kind = f"hit_and_run:{body.kind}:{body.direction}:burn{self.burn_in}:thin{self.thinning}"
            return kind, (float(body.p) if body.kind == "lp_ball" else math.inf)
        return self.kind, 0.0


@dataclass
class MatrixDraw:
    """M x N matrix X with columns q_i / sqrt(N), reproducible from (spec, seed)."""

    X: NDArray[np.float64]
    seed: int
    spec: SamplerSpec
    scale: float = field(default=1.0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape


def _check_p(p: float) -> None:
    if p is None or not math.isfinite(p):
        raise DomainError(f"lp ball exponent must be finite, got p={p!r} (p = inf is not supported).")
    if p < 1:
        raise DomainError(f"lp ball exponent must satisfy p >= 1 for convexity, got p={p!r}.")


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator for the substream (seed, keys)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(keys))))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed of `seed` along `keys`."""
    words = np.random.SeedSequence(int(seed), spawn_key=tuple(keys)).generate_state(2, dtype=np.uint32)
    return (int(words[0]) << 32) | int(words[1])


def _random_signs(rng: np.random.Generator, shape) -> NDArray[np.float64]:
    return np.where(rng.random(shape) < 0.5, -1.0, 1.0)


def _lp_ball_block(p: float, M: int, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    # |g_k|^p ~ Gamma(1/p) and W ~ Exp(1): g / (sum |g_k|^p + W)^{1/p} is uniform on the ball.
    powers = rng.gamma(1.0 / p, size=(M, n))
    signs = _random_signs(rng, (M, n))
    tail = rng.exponential(size=n)
    radius = (powers.sum(axis=0) + tail) ** (1.0 / p)
    return signs * powers ** (1.0 / p) / radius


def lp_ball_raw(p: float, M: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """One uniform draw on the unit lp ball of R^M, unscaled."""
    _check_p(p)
    return _lp_ball_block(p, M, 1, rng)[:, 0]


class HitAndRunChains:
    """n independent hit-and-run chains on a symmetric convex body, started at the origin."""

    def __init__(self, body: BodySpec, M: int, n: int, rng: np.random.Generator) -> None:
        self.body = body
        self.M = M
        self.n = n
        self.rng = rng
        self.state = np.zeros((M, n), dtype=np.float64)
        self._powsum = np.zeros(n, dtype=np.float64)
        self._cols = np.arange(n)
        self._steps = 0
        if body.kind == "lp_ball":
            self._reach = 2.0 * max(1.0, M ** (0.5 - 1.0 / body.p))

    def run(self, steps: int) -> NDArray[np.float64]:
        step = self._coordinate_step if self.body.direction == "coordinate" else self._sphere_step
        for _ in range(int(steps)):
            step()
        return self.state

    def _coordinate_step(self) -> None:
        k = self.rng.integers(0, self.M, size=self.n)
        if self.body.kind == "cube":
            self.state[k, self._cols] = self.rng.uniform(-1.0, 1.0, size=self.n)
            return
        p = self.body.p
        rest = np.maximum(self._powsum - np.abs(self.state[k, self._cols]) ** p, 0.0)
        half = np.maximum(1.0 - rest, 0.0) ** (1.0 / p)
        new = self.rng.uniform(-half, half)
        self.state[k, self._cols] = new
        self._powsum = rest + np.abs(new) ** p
        self._steps += 1
        if self._steps % self.M == 0:
            self._powsum = np.sum(np.abs(self.state) ** p, axis=0)

    def _sphere_step(self) -> None:
        direction = self.rng.standard_normal((self.M, self.n))
        direction /= np.linalg.norm(direction, axis=0)
        if self.body.kind == "cube":
            low, high = self._cube_chord(direction)
        else:
            high = self._lp_boundary(direction)
            low = -self._lp_boundary(-direction)
        t = self.rng.uniform(low, high)
        self.state += t * direction

    def _cube_chord(self, direction: NDArray[np.float64]):
        x = self.state
        with np.errstate(divide="ignore", invalid="ignore"):
            up = (1.0 - x) / direction
            down = (-1.0 - x) / direction
        low = np.where(direction > 0, down, np.where(direction < 0, up, -np.inf)).max(axis=0)
        high = np.where(direction > 0, up, np.where(direction < 0, down, np.inf)).min(axis=0)
        return low, high

    def _lp_boundary(self, direction: NDArray[np.float64]) -> NDArray[np.float64]:
        p = self.body.p
        inside_t = np.zeros(self.n)
        outside_t = np.full(self.n, self._reach)
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (inside_t + outside_t)
            inside = np.sum(np.abs(self.state + mid * direction) ** p, axis=0) <= 1.0
            inside_t = np.where(inside, mid, inside_t)
            outside_t = np.where(inside, outside_t, mid)
        return inside_t


def check_mixing_budget(spec: SamplerSpec) -> None:
    if spec.is_mcmc and spec.burn_in < spec.burn_in_floor * spec.dimension:
        raise DomainError(
            f"Insufficient mixing budget: burn_in={spec.burn_in} < {spec.burn_in_floor} x M={spec.dimension}."
        )


def _raw_block(spec: SamplerSpec, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """n unscaled draws as columns of an M x n block."""
    M = spec.dimension
    if spec.kind == "gaussian":
        return rng.standard_normal((M, n))
    if spec.kind == "laplace_product":
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size=(M, n))
    if spec.kind == "lp_ball":
        return _lp_ball_block(spec.p, M, n, rng)
    check_mixing_budget(spec)
    chains = HitAndRunChains(spec.body, M, n, rng)
    block = chains.run(spec.burn_in)
    return block * _random_signs(rng, block.shape)


def _pilot_second_moment(spec: SamplerSpec, draws: int, rng: np.random.Generator) -> float:
    total, count = 0.0, 0
    if spec.is_mcmc:
        check_mixing_budget(spec)
        chains = HitAndRunChains(spec.body, spec.dimension, min(_PILOT_CHAINS, draws), rng)
        chains.run(spec.burn_in)
        while count < draws * spec.dimension:
            total += float(np.sum(chains.state**2))
            count += chains.state.size
            chains.run(spec.thinning)
        return total / count
    remaining = draws
    while remaining > 0:
        batch = min(_PILOT_BATCH, remaining)
        block = _raw_block(spec, batch, rng)
        total += float(np.sum(block**2))
        count += block.size
        remaining -= batch
    return total / count


def isotropy_scale(spec: SamplerSpec, cache: Optional[MemoryCalibrationCache] = None) -> float:
    """Constant c with E[(c u_k)^2] = 1, from the calibration cache or a fresh pilot run."""
    if spec.kind in ("gaussian", "laplace_product"):
        return 1.0
    cache = cache if cache is not None else get_calibration_cache()
    kind, p = spec.calibration_key
    record = cache.get(kind, p, spec.dimension, min_pilot=spec.pilot)
    if record is not None:
        return record.scale
    tag = zlib.crc32(f"{kind}:{p!r}:{spec.dimension}".encode("utf-8"))
    rng = stream(CALIBRATION_ENTROPY, tag)
    second = _pilot_second_moment(spec, spec.pilot, rng)
    scale = 1.0 / math.sqrt(second)
    logger.info("Calibrated %s p=%s M=%d: scale=%.6f (pilot=%d)", kind, p, spec.dimension, scale, spec.pilot)
    cache.put(CalibrationRecord(kind=kind, p=p, M=spec.dimension, scale=scale, pilot=spec.pilot))
    return scale


def sample_column(
    spec: SamplerSpec, rng: np.random.Generator, cache: Optional[MemoryCalibrationCache] = None
) -> NDArray[np.float64]:
    """One isotropic unconditional draw q of length M (not divided by sqrt N)."""
    return sample_columns(spec, 1, rng, cache)[:, 0]


def sample_columns(
    spec: SamplerSpec, n: int, rng: np.random.Generator, cache: Optional[MemoryCalibrationCache] = None
) -> NDArray[np.float64]:
    """n independent isotropic draws as the columns of an M x n array."""
    scale = isotropy_scale(spec, cache)
    block = _raw_block(spec, n, rng)
    if scale != 1.0:
        block *= scale
    return block


def assemble_X(
    spec: SamplerSpec, N: int, seed: int, cache: Optional[MemoryCalibrationCache] = None
) -> MatrixDraw:
    if N < 1:
        raise DomainError(f"N must be positive, got {N}.")
    scale = isotropy_scale(spec, cache)
    if spec.is_mcmc:
        Q = sample_columns(spec, N, stream(seed, CHAIN_STREAM), cache)
    else:
        Q = np.empty((spec.dimension, N), dtype=np.float64)
        for j in range(N):
            Q[:, j] = _raw_block(spec, 1, stream(seed, j))[:, 0]
        if scale != 1.0:
            Q *= scale
    return MatrixDraw(X=Q / math.sqrt(N), seed=int(seed), spec=spec, scale=scale)


def gaussian_matrix(M: int, N: int, seed: int) -> NDArray[np.float64]:
    """M x N matrix of i.i.d. N(0, 1/N) entries."""
    return assemble_X(SamplerSpec(kind="gaussian", dimension=M), N, seed).X


def interpolate(X: NDArray[np.float64], Xw: NDArray[np.float64], t: float) -> NDArray[np.float64]:
    """sqrt(1-t) X + sqrt(t) Xw; the endpoints return copies of X and Xw bit for bit."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"Interpolation time must lie in [0, 1], got t={t!r}.")
    if X.shape != Xw.shape:
        raise DomainError(f"Shape mismatch: X{X.shape} vs Xw{Xw.shape}.")
    if t == 0.0:
        return X.copy()
    if t == 1.0:
        return Xw.copy()
    return math.sqrt(1.0 - t) * X + math.sqrt(t) * Xw


__all__ = [
    "BodySpec",
    "HitAndRunChains",
    "MatrixDraw",
    "SAMPLER_KINDS",
    "SamplerSpec",
    "assemble_X",
    "check_mixing_budget",
    "derive_seed",
    "gaussian_matrix",
    "interpolate",
    "isotropy_scale",
    "lp_ball_raw",
    "sample_column",
    "sample_columns",
    "stream",
]
