"""Experiment configuration: one JSON document, unknown keys rejected."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError
from ..rmt.ensemble import MAX_SPIKES, SpikeList
from ..rmt.mp_model import MpModel
from ..rmt.sampling import BodySpec, SamplerSpec
from .env import default_threads
from .paths import output_dir_problems

ExperimentName = Literal[
    "mp-check",
    "rigidity",
    "local-law",
    "edge-tw",
    "spike",
    "concentration",
    "interp",
    "green-compare",
]
EXPERIMENTS: Tuple[str, ...] = (
    "mp-check",
    "rigidity",
    "local-law",
    "edge-tw",
    "spike",
    "concentration",
    "interp",
    "green-compare",
)
SEED_LIMIT = 2**64


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BodyConfig(_Strict):
    kind: Literal["lp_ball", "cube"] = "lp_ball"
    p: float = 1.0
    direction: Literal["coordinate", "sphere"] = "coordinate"


class SamplerConfig(_Strict):
    kind: Literal["gaussian", "laplace_product", "lp_ball", "hit_and_run"] = "gaussian"
    p: Optional[float] = None
    body: Optional[BodyConfig] = None
    burn_in: Optional[int] = None
    thinning: Optional[int] = None
    burn_in_floor: int = 10
    pilot: int = 100_000

    def problems(self, M: Optional[int], prefix: str = "sampler") -> List[str]:
        found: List[str] = []
        if self.kind == "lp_ball":
            if self.p is None:
                found.append(f"{prefix}.p: required for the lp_ball sampler")
            elif not math.isfinite(self.p) or self.p < 1:
                found.append(f"{prefix}.p: must be finite and >= 1, got {self.p}")
        if self.kind == "hit_and_run":
            body = self.body or BodyConfig()
            if body.kind == "lp_ball" and (not math.isfinite(body.p) or body.p < 1):
                found.append(f"{prefix}.body.p: must be finite and >= 1, got {body.p}")
            if self.burn_in is not None and M is not None and self.burn_in < self.burn_in_floor * M:
                found.append(f"{prefix}.burn_in: {self.burn_in} is below {self.burn_in_floor} x M = {self.burn_in_floor * M}")
        if self.pilot < 1:
            found.append(f"{prefix}.pilot: must be positive")
        return found

    def to_spec(self, M: int) -> SamplerSpec:
        body = None
        if self.kind == "hit_and_run":
            cfg = self.body or BodyConfig()
            body = BodySpec(kind=cfg.kind, p=cfg.p, direction=cfg.direction)
        return SamplerSpec(
            kind=self.kind,
            dimension=M,
            p=self.p,
            body=body,
            burn_in=self.burn_in,
            thinning=self.thinning,
            burn_in_floor=self.burn_in_floor,
            pilot=self.pilot,
        )


class GridConfig(_Strict):
    """Spectral-domain probe parameters."""

    epsilon: float = 0.1
    n_energy: int = 20
    n_eta: int = 10
    entry_indices: int = 32
    edge_kappas: List[float] = Field(default_factory=lambda: [0.1, 0.5, 1.0])
    edge_eta_exponent: float = -0.4
    phi_star: float = 0.6
    c_V: float = 0.05
    C_V: float = 10.0
    eta_max: float = 1.0


class ToleranceConfig(_Strict):
    eps_test: float = 0.1
    delta_test: float = 0.1
    global_ks_max: float = 0.02
    ks_max: float = 0.05
    rademacher_ks_max: float = 0.06
    thin_shell_max: float = 10.0
    se_multiplier: float = 3.0
    local_law_fraction: float = 0.95
    refined_fraction: float = 0.90
    slope_low: float = -0.8
    slope_high: float = -0.55


class ExperimentConfig(_Strict):
    experiment: ExperimentName
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    reference_sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    M: Optional[int] = None
    N: Optional[int] = None
    y: Optional[float] = None
    N_values: List[int] = Field(default_factory=list)
    M_values: List[int] = Field(default_factory=list)
    trials: int = 10
    seed: int = 0
    grid: GridConfig = Field(default_factory=GridConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    spikes: List[float] = Field(default_factory=list)
    spike_epsilon: float = 0.0
    pilot: int = 20_000
    kurtosis: Optional[float] = None
    convention: Literal["companion", "literal"] = "companion"
    sign_trials: int = 5_000
    test_function: Literal["identity", "square", "bounded"] = "identity"
    output_dir: str = "results"
    threads: Optional[int] = None
    plots: bool = True

    @model_validator(mode="after")
    def _cross_field(self) -> "ExperimentConfig":
        problems: List[str] = []
        if self.trials < 1:
            problems.append(f"trials: must be >= 1, got {self.trials}")
        if not 0 <= self.seed < SEED_LIMIT:
            problems.append(f"seed: must be an unsigned 64-bit integer, got {self.seed}")
        if self.threads is not None and self.threads < 1:
            problems.append(f"threads: must be >= 1, got {self.threads}")
        M = self._dimension_problems(problems)
        for n in self.N_values:
            if n < 2:
                problems.append(f"N_values: every N must be >= 2, got {n}")
        if self.N_values and len(self.N_values) < 3:
            problems.append("N_values: a scaling sweep needs at least 3 values of N")
        for m in self.M_values:
            if m < 1:
                problems.append(f"M_values: every M must be >= 1, got {m}")
        problems.extend(self.sampler.problems(M))
        problems.extend(self.reference_sampler.problems(M, prefix="reference_sampler"))
        self._spike_problems(problems)
        if self.experiment == "spike" and self.pilot < 10_000:
            problems.append(f"pilot: spike predictions need at least 10000 columns, got {self.pilot}")
        if self.grid.epsilon <= 0:
            problems.append(f"grid.epsilon: must be positive, got {self.grid.epsilon}")
        if not 0 < self.grid.phi_star <= 2.0 / 3.0:
            problems.append(f"grid.phi_star: must lie in (0, 2/3], got {self.grid.phi_star}")
        problems.extend(output_dir_problems(self.output_dir))
        if problems:
            raise ConfigError(problems)
        return self

    def _dimension_problems(self, problems: List[str]) -> Optional[int]:
        if self.N is None:
            problems.append("N: required")
            return None
        if self.N < 1:
            problems.append(f"N: must be positive, got {self.N}")
            return None
        if self.M is None and self.y is None:
            problems.append("M: give M or y together with N")
            return None
        if self.y is not None and self.y <= 0:
            problems.append(f"y: must be positive, got {self.y}")
            return None
        M = self.M if self.M is not None else int(round(self.y * self.N))
        if M < 1:
            problems.append(f"M: must be positive, got {M}")
            return None
        if self.M is not None and self.y is not None and abs(self.M / self.N - self.y) > 1e-12:
            problems.append(f"y: {self.y} disagrees with M/N = {self.M / self.N}")
        if M == self.N:
            problems.append("y: the ratio M/N = 1 is excluded")
        return M

    def _spike_problems(self, problems: List[str]) -> None:
        if len(self.spikes) > MAX_SPIKES:
            problems.append(f"spikes: at most {MAX_SPIKES} supported, got {len(self.spikes)}")
        for d in self.spikes:
            if not d > -1:
                problems.append(f"spikes: d={d} must exceed -1")
        if self.experiment == "spike":
            if not self.spikes:
                problems.append("spikes: the spike experiment needs at least one d")
            elif self.N and (self.M or self.y):
                y = self.ratio
                threshold = math.sqrt(y) + self.spike_epsilon
                for d in self.spikes:
                    if not d > threshold:
                        problems.append(f"spikes: d={d} is not above the BBP threshold sqrt(y)+eps={threshold:.6g}")

    @property
    def dims(self) -> Tuple[int, int]:
        M = self.M if self.M is not None else int(round(self.y * self.N))
        return M, self.N

    @property
    def ratio(self) -> float:
        if self.M is not None:
            return self.M / self.N
        return int(round(self.y * self.N)) / self.N

    def model(self) -> MpModel:
        M, N = self.dims
        return MpModel.from_dims(M, N)

    def dims_for(self, N: int) -> Tuple[int, int]:
        """(M, N) at the configured ratio for another N."""
        return max(1, int(round(self.ratio * N))), N

    def sampler_spec(self, M: Optional[int] = None) -> SamplerSpec:
        return self.sampler.to_spec(M if M is not None else self.dims[0])

    def reference_spec(self, M: Optional[int] = None) -> SamplerSpec:
        return self.reference_sampler.to_spec(M if M is not None else self.dims[0])

    def spike_list(self) -> SpikeList:
        return SpikeList(tuple(self.spikes))

    @property
    def workers(self) -> int:
        return self.threads if self.threads is not None else default_threads()


def _flatten(error: ValidationError) -> List[str]:
    problems = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item.get("loc", ())) or "config"
        problems.append(f"{loc}: {item.get('msg', 'invalid')}")
    return problems


def validate_config(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_flatten(exc)) from exc


def load_config(path: str | Path, experiment: Optional[str] = None, **overrides: Any) -> ExperimentConfig:
    """Parse a JSON config; `experiment` fills a missing name and must agree with a present one."""
    source = Path(path).expanduser()
    try:
        data = json.loads(source.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError([f"config: cannot read {source}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config: {source} is not valid JSON: {exc}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError([f"config: {source} must hold a JSON object"])
    if experiment is not None:
        named = data.setdefault("experiment", experiment)
        if named != experiment:
            raise ConfigError([f"experiment: config names {named!r} but the command is {experiment!r}"])
    data.update({k: v for k, v in overrides.items() if v is not None})
    return validate_config(data)


__all__ = [
    "BodyConfig",
    "EXPERIMENTS",
    "ExperimentConfig",
    "GridConfig",
    "SamplerConfig",
    "ToleranceConfig",
    "load_config",
    "validate_config",
]
