"""Elitist genetic algorithm over integer pixel-edit genomes.

Each generation keeps the top ``ceil(pop_size * selection_rate)`` scored
individuals and refills the population with crossover children of elite
pairs, every child mutated before scoring. Elites keep their cached score,
so only new children spend evaluation budget. The search stops at the first
strictly positive discrepancy (a guaranteed action flip) or when the budget
is spent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError
from .objective import AttackOutcome, evaluate
from .oracle import OracleSession
from .perturbation import AdversaryGenome, FsaConfig, gene_bounds, random_genome
from .state import FrameState, StateShape

INIT_MODES = ("random_init", "warm_start")


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 10
    selection_rate: float = 0.2
    mutation_rate: float = 0.1
    max_evaluations: int = 400
    init_mode: str = "random_init"

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ConfigError("population_size must be at least 2")
        if not 0.0 < self.selection_rate < 1.0:
            raise ConfigError("selection_rate must lie in (0, 1)")
        if not self.mutation_rate > 0:
            raise ConfigError("mutation_rate must be positive")
        if self.max_evaluations < 1:
            raise ConfigError("max_evaluations must be at least 1")
        if self.init_mode not in INIT_MODES:
            raise ConfigError(f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}")
        elites = self.elite_count
        if not 1 <= elites <= self.population_size - 1:
            raise ConfigError(
                f"elite count {elites} from pop {self.population_size} x rate "
                f"{self.selection_rate} must lie in [1, {self.population_size - 1}]"
            )
        if (self.population_size - elites) % 2:
            raise ConfigError(
                f"offspring count {self.population_size - elites} must be even"
            )

    @property
    def elite_count(self) -> int:
        # round first so 10 * 0.2 style products cannot ceil upward on float noise
        return math.ceil(round(self.population_size * self.selection_rate, 9))

    @property
    def pairs_per_generation(self) -> int:
        return (self.population_size - self.elite_count) // 2


@dataclass
class GaResult:
    best_genome: AdversaryGenome
    best_outcome: AttackOutcome
    evaluations_used: int
    generations: int
    terminated_early: bool
    # best discrepancy seen after each evaluation
    history: list[float] = field(default_factory=list)


def crossover(
    parent_a: AdversaryGenome, parent_b: AdversaryGenome, rng: np.random.Generator,
    cut: int | None = None,
) -> AdversaryGenome:
    """One-point crossover on the flattened ``[x1, y1, p1, ..., xn, yn, pn]``."""
    if parent_a.n != parent_b.n:
        raise ConfigError(f"cannot cross genomes of size {parent_a.n} and {parent_b.n}")
    length = 3 * parent_a.n
    if cut is None:
        cut = int(rng.integers(1, length)) if length > 1 else 0
    child = np.concatenate([parent_a.flat()[:cut], parent_b.flat()[cut:]])
    return AdversaryGenome.from_flat(child)


def mutate(
    genome: AdversaryGenome, rate: float, shape: StateShape, rng: np.random.Generator
) -> AdversaryGenome:
    """Gaussian integer mutation scaled by each component's domain width.

    A gene component ``i`` moves by ``round(rate * width_i * eps)`` with
    ``eps ~ N(0, 1)`` and is then clamped back into its box. Widths are the
    image height, the image width and ``2 * 255 + 1`` for the pixel delta.
    """
    lo, hi = gene_bounds(shape)
    widths = (hi - lo + 1).astype(np.float64)
    eps = rng.standard_normal(genome.genes.shape)
    step = np.rint(rate * widths * eps).astype(np.int64)
    return AdversaryGenome(np.clip(genome.genes + step, lo, hi))


class _Scored:
    __slots__ = ("genome", "outcome")

    def __init__(self, genome: AdversaryGenome, outcome: AttackOutcome) -> None:
        self.genome = genome
        self.outcome = outcome

    def rank_key(self) -> tuple:
        return (-self.outcome.discrepancy, self.genome.sort_key())


def optimize(
    session: OracleSession,
    state: FrameState,
    original_action: int,
    fsa: FsaConfig,
    ga: GaConfig,
    warm_seed: AdversaryGenome | None = None,
    rng: np.random.Generator | None = None,
    on_outcome: Callable[[AdversaryGenome, AttackOutcome], None] | None = None,
) -> GaResult:
    """Search for an n-pixel edit that flips the greedy action of ``state``.

    ``warm_seed`` replaces individual 0 of the initial population when
    ``ga.init_mode == "warm_start"``; without a seed warm start falls back to
    a fully random population. ``on_outcome`` sees every scored individual.
    """
    if rng is None:
        rng = np.random.default_rng()
    shape = state.shape
    if warm_seed is not None and warm_seed.n != fsa.n:
        raise ConfigError(f"warm seed has {warm_seed.n} genes, FSA size is {fsa.n}")

    population = [random_genome(shape, fsa, rng) for _ in range(ga.population_size)]
    if ga.init_mode == "warm_start" and warm_seed is not None:
        population[0] = warm_seed

    used = 0
    history: list[float] = []
    best: _Scored | None = None

    def score(batch: list[AdversaryGenome]) -> tuple[list[_Scored], bool]:
        nonlocal used, best
        scored = []
        for genome in batch:
            if used >= ga.max_evaluations:
                break
            outcome = evaluate(session, state, genome, original_action, fsa)
            used += 1
            item = _Scored(genome, outcome)
            scored.append(item)
            if on_outcome is not None:
                on_outcome(genome, outcome)
            if best is None or item.rank_key() < best.rank_key():
                best = item
            history.append(best.outcome.discrepancy)
            if outcome.success:
                return scored, True
        return scored, False

    scored, found = score(population)
    generations = 0
    n_elites = ga.elite_count
    while not found and used < ga.max_evaluations:
        elites = sorted(scored, key=_Scored.rank_key)[:n_elites]
        children = []
        for _ in range(ga.pairs_per_generation):
            if len(elites) >= 2:
                i, j = rng.choice(len(elites), size=2, replace=False)
            else:
                i = j = 0
            a, b = elites[i].genome, elites[j].genome
            for first, second in ((a, b), (b, a)):
                child = crossover(first, second, rng)
                children.append(mutate(child, ga.mutation_rate, shape, rng))
        new_scored, found = score(children)
        scored = elites + new_scored
        generations += 1

    assert best is not None
    return GaResult(
        best_genome=best.genome,
        best_outcome=best.outcome,
        evaluations_used=used,
        generations=generations,
        terminated_early=found,
        history=history,
    )
