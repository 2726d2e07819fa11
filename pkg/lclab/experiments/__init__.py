"""Experiment runners keyed by experiment name."""

from .registry import EXPERIMENT_REGISTRY

__all__ = ["EXPERIMENT_REGISTRY"]
