"""Entropy-gated frame selection.

A frame is attacked only when the policy is confident about it, i.e. when
the normalized entropy of its action distribution falls below a threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigError, InputError


@dataclass(frozen=True)
class TcaConfig:
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"TCA threshold must lie in [0, 1], got {self.threshold}")


def attack_uncertainty(dist) -> float:
    """Shannon entropy of ``dist`` divided by log(m); 0 log 0 counts as 0."""
    p = np.asarray(dist, dtype=np.float64)
    m = p.shape[0]
    if m < 2:
        raise ConfigError("attack uncertainty is undefined for fewer than two actions")
    nz = p[p > 0]
    h = -float(np.sum(nz * np.log(nz)))
    return min(max(h / math.log(m), 0.0), 1.0)


def should_attack(zeta: float, config: TcaConfig) -> bool:
    return zeta < config.threshold


def mean_uncertainty_threshold(trajectory: Iterable) -> float:
    """Mean attack uncertainty over an unattacked rollout's distributions."""
    values = [attack_uncertainty(d) for d in trajectory]
    if not values:
        raise InputError("cannot average attack uncertainty over an empty trajectory")
    return float(math.fsum(values) / len(values))
