from __future__ import annotations

from typing import List, Optional


class LabError(Exception):
    """Base class for every error raised by lclab."""


class DomainError(LabError, ValueError):
    """An input lies outside the mathematical contract of an operation."""


class ConfigError(LabError):
    """Experiment configuration is invalid; carries every violated field."""

    def __init__(self, problems: List[str]) -> None:
        self.problems = list(problems)
        super().__init__("Invalid configuration:\n  - " + "\n  - ".join(self.problems))


class NumericalError(LabError, RuntimeError):
    """A numerical routine failed; `seed` replays the offending draw."""

    def __init__(self, message: str, seed: Optional[int] = None) -> None:
        self.seed = seed
        suffix = f" (seed={seed})" if seed is not None else ""
        super().__init__(f"{message}{suffix}")


__all__ = ["LabError", "DomainError", "ConfigError", "NumericalError"]
