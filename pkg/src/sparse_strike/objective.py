"""Discrepancy fitness: best rival probability minus the original action's."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ConfigError
from .oracle import OracleSession, greedy_action
from .perturbation import AdversaryGenome, FsaConfig, apply
from .state import FrameState


class SoundnessError(AssertionError):
    """A positive discrepancy that did not change the greedy action."""


@dataclass(frozen=True)
class AttackOutcome:
    discrepancy: float
    original_action: int
    perturbed_action: int
    success: bool

    def __post_init__(self) -> None:
        if self.success != (self.discrepancy > 0):
            raise SoundnessError(
                f"success={self.success} inconsistent with discrepancy={self.discrepancy}"
            )
        if self.success and self.perturbed_action == self.original_action:
            raise SoundnessError(
                f"discrepancy {self.discrepancy} > 0 but action stayed {self.original_action}"
            )


def discrepancy(perturbed_dist, original_action: int) -> float:
    probs = np.asarray(perturbed_dist, dtype=np.float64)
    m = probs.shape[0]
    if m < 2:
        raise ConfigError("discrepancy needs at least two actions")
    if not 0 <= original_action < m:
        raise BoundsError(f"original action {original_action} outside [0, {m})")
    p_o = probs[original_action]
    rival = max(probs[:original_action].max(initial=-np.inf),
                probs[original_action + 1:].max(initial=-np.inf))
    return float(rival - p_o)


def outcome_from_distribution(perturbed_dist, original_action: int) -> AttackOutcome:
    d = discrepancy(perturbed_dist, original_action)
    return AttackOutcome(d, original_action, greedy_action(perturbed_dist), d > 0)


def evaluate(
    session: OracleSession,
    state: FrameState,
    genome: AdversaryGenome,
    original_action: int,
    config: FsaConfig,
) -> AttackOutcome:
    """Score one genome with exactly one oracle query."""
    dist = session.query(apply(state, genome, config))
    return outcome_from_distribution(dist, original_action)
