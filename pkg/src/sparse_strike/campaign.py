"""Attack campaigns: gated per-frame attacks over whole episodes, sweeps,
and the random-vs-warm-start initialization study."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .envs import EnvSpec, reset
from .errors import ConfigError, InputError
from .experts import distill
from .ga import INIT_MODES, GaConfig, optimize
from .objective import evaluate
from .oracle import OracleSession, PolicySpec, greedy_action, load_policy_file, query
from .perturbation import AdversaryGenome, FsaConfig
from .state import FrameState, push_frame
from .tca import TcaConfig, attack_uncertainty, mean_uncertainty_threshold, should_attack
from .trajectory import TrajectoryRecord

SWEEP_PARAMS = ("fsa_size", "tca_threshold", "init_mode")
SUMMARY_HEADER = (
    "sweep_param", "value", "mean_reward", "std_reward", "mean_attacked_frames",
    "std_attacked_frames", "mean_total_frames", "std_total_frames", "runs",
)
COMPARE_HEADER = ("frame", "mode", "trial", "evaluations", "best_objective")
MEAN_OF_TRAJECTORY = "mean_of_trajectory"


@dataclass(frozen=True)
class Sweep:
    param: str
    values: tuple

    def __post_init__(self) -> None:
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}")
        if not self.values:
            raise ConfigError("sweep values must be non-empty")


@dataclass(frozen=True)
class CampaignConfig:
    env: EnvSpec = field(default_factory=EnvSpec)
    policy_path: str | None = None  # None: distilled expert for ``env``
    fsa: FsaConfig = field(default_factory=FsaConfig)
    ga: GaConfig = field(default_factory=GaConfig)
    # a number in [0, 1], or MEAN_OF_TRAJECTORY
    tca_threshold: float | str = MEAN_OF_TRAJECTORY
    runs: int = 30
    base_seed: int = 0
    sweep: Sweep | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.tca_threshold != MEAN_OF_TRAJECTORY:
            TcaConfig(float(self.tca_threshold))

    @property
    def seeds(self) -> list[int]:
        return list(range(self.base_seed, self.base_seed + self.runs))

    def with_param(self, param: str, value) -> "CampaignConfig":
        if param == "fsa_size":
            return replace(self, fsa=replace(self.fsa, n=int(value)), sweep=None)
        if param == "tca_threshold":
            return replace(self, tca_threshold=value, sweep=None)
        if param == "init_mode":
            return replace(self, ga=replace(self.ga, init_mode=value), sweep=None)
        raise ConfigError(f"unknown sweep parameter {param!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["env"]["shape"] = list(self.env.shape.as_tuple())
        d["fsa"]["value_bounds"] = list(self.fsa.value_bounds)
        if self.sweep is not None:
            d["sweep"]["values"] = list(self.sweep.values)
        return d


@dataclass
class FrameEntry:
    t: int
    zeta: float
    attacked: bool
    evaluations_used: int
    success: bool
    genome: list | None
    original_action: int
    perturbed_action: int | None
    reward: float


@dataclass
class EpisodeRecord:
    seed: int
    tca_threshold: float
    frames: list[FrameEntry]
    accumulated_reward: float
    total_frames: int
    attacked_frames: int
    successful_attacks: int
    total_oracle_queries: int
    sweep_param: str | None = None
    sweep_value: object = None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "sweep_param": self.sweep_param,
            "sweep_value": self.sweep_value,
            "tca_threshold": self.tca_threshold,
            "frames": [asdict(f) for f in self.frames],
            "totals": {
                "accumulated_reward": self.accumulated_reward,
                "total_frames": self.total_frames,
                "attacked_frames": self.attacked_frames,
                "successful_attacks": self.successful_attacks,
                "total_oracle_queries": self.total_oracle_queries,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeRecord":
        totals = d["totals"]
        return cls(
            seed=d["seed"],
            tca_threshold=d["tca_threshold"],
            frames=[FrameEntry(**f) for f in d["frames"]],
            accumulated_reward=totals["accumulated_reward"],
            total_frames=totals["total_frames"],
            attacked_frames=totals["attacked_frames"],
            successful_attacks=totals["successful_attacks"],
            total_oracle_queries=totals["total_oracle_queries"],
            sweep_param=d.get("sweep_param"),
            sweep_value=d.get("sweep_value"),
        )


@dataclass(frozen=True)
class SummaryRow:
    sweep_param: str
    value: object
    mean_reward: float
    std_reward: float
    mean_attacked_frames: float
    std_attacked_frames: float
    mean_total_frames: float
    std_total_frames: float
    runs: int


@dataclass
class CompareRow:
    frame: int
    mode: str
    trial: int
    evaluations: int
    best_objective: float
    success: bool
    seed_succeeds: bool | None  # warm seed alone already flips this frame
    history: list[float]


@lru_cache(maxsize=8)
def _load_cached(path: str) -> PolicySpec:
    return load_policy_file(path)


def resolve_policy(config: CampaignConfig, check_actions: bool = True) -> PolicySpec:
    """Load ``config.policy_path`` (or distill the expert) and check it fits the env.

    ``check_actions=False`` skips the action-count check, for replaying
    recorded states that are never stepped.
    """
    if config.policy_path is None:
        policy = distill(config.env)
    else:
        policy = _load_cached(str(config.policy_path))
    if policy.input_shape != config.env.shape:
        raise ConfigError(
            f"policy input {policy.input_shape} does not match env shape {config.env.shape}"
        )
    if check_actions and policy.action_count != config.env.action_count:
        raise ConfigError(
            f"policy has {policy.action_count} actions, {config.env.name} has "
            f"{config.env.action_count}"
        )
    return policy


def _frame_rng(seed: int, t: int, trial: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, t, trial, 0x5EED])


def rollout_distributions(policy: PolicySpec, env: EnvSpec) -> list[np.ndarray]:
    """Action distributions along the unattacked greedy rollout of ``env``."""
    env_state, frame = reset(env)
    state = push_frame(FrameState.zeros(env.shape), frame)
    dists = []
    done = False
    while not done:
        dist = query(policy, state)
        dists.append(dist)
        result = env_state.step(greedy_action(dist))
        state = push_frame(state, result.observation)
        done = result.done
    return dists


def resolve_threshold(config: CampaignConfig, policy: PolicySpec, seed: int) -> float:
    if config.tca_threshold == MEAN_OF_TRAJECTORY:
        return mean_uncertainty_threshold(rollout_distributions(policy, config.env.with_seed(seed)))
    return float(config.tca_threshold)


def run_episode(
    config: CampaignConfig, episode_seed: int, policy: PolicySpec | None = None,
    on_outcome=None,
) -> EpisodeRecord:
    """Play one episode, attacking every frame the entropy gate opens on.

    The perturbation only changes the action taken at that step; the
    environment and the observation stack keep evolving from true frames.
    """
    if policy is None:
        policy = resolve_policy(config)
    threshold = resolve_threshold(config, policy, episode_seed)
    gate = TcaConfig(threshold)
    session = OracleSession(policy)
    env_state, frame = reset(config.env.with_seed(episode_seed))
    state = push_frame(FrameState.zeros(config.env.shape), frame)

    frames: list[FrameEntry] = []
    warm_seed: AdversaryGenome | None = None
    evals_total = 0
    done = False
    while not done:
        t = env_state.t
        dist = session.query(state)
        o = greedy_action(dist)
        zeta = attack_uncertainty(dist)
        action = o
        entry = FrameEntry(t, zeta, False, 0, False, None, o, None, 0.0)
        if should_attack(zeta, gate):
            result = optimize(
                session, state, o, config.fsa, config.ga,
                warm_seed=warm_seed if config.ga.init_mode == "warm_start" else None,
                rng=_frame_rng(episode_seed, t),
                on_outcome=on_outcome,
            )
            evals_total += result.evaluations_used
            entry.attacked = True
            entry.evaluations_used = result.evaluations_used
            entry.success = result.best_outcome.success
            entry.genome = result.best_genome.to_list()
            entry.perturbed_action = result.best_outcome.perturbed_action
            if entry.success:
                action = result.best_outcome.perturbed_action
                warm_seed = result.best_genome
        step = env_state.step(action)
        entry.reward = step.reward
        frames.append(entry)
        state = push_frame(state, step.observation)
        done = step.done

    record = EpisodeRecord(
        seed=episode_seed,
        tca_threshold=threshold,
        frames=frames,
        accumulated_reward=math.fsum(f.reward for f in frames),
        total_frames=len(frames),
        attacked_frames=sum(f.attacked for f in frames),
        successful_attacks=sum(f.success for f in frames),
        total_oracle_queries=session.query_count,
    )
    assert record.total_oracle_queries == record.total_frames + evals_total
    return record


def _episode_job(args) -> EpisodeRecord:
    config, seed = args
    return run_episode(config, seed)


def run_episodes(config: CampaignConfig, seeds: Sequence[int] | None = None) -> list[EpisodeRecord]:
    """Episodes for ``seeds`` (default ``config.seeds``), in seed order.

    With ``threads > 1`` episodes run in worker processes; results do not
    depend on the worker count.
    """
    seeds = list(config.seeds if seeds is None else seeds)
    resolve_policy(config)  # fail fast in the parent
    if config.threads > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(config.threads, len(seeds))) as pool:
            return list(pool.map(_episode_job, [(config, s) for s in seeds]))
    policy = resolve_policy(config)
    return [run_episode(config, s, policy) for s in seeds]


def summarize(records: Sequence[EpisodeRecord], sweep_param: str = "none", value=None) -> SummaryRow:
    """Mean and sample standard deviation of the episode totals.

    A single record reports std 0; its ``runs`` column of 1 marks that case.
    """
    if not records:
        raise InputError("cannot summarize an empty list of episode records")

    def stats(values: list[float]) -> tuple[float, float]:
        mean = statistics.fmean(values)
        std = statistics.stdev(values) if len(values) > 1 else 0.0
        return mean, std

    mr, sr = stats([r.accumulated_reward for r in records])
    ma, sa = stats([r.attacked_frames for r in records])
    mt, st = stats([r.total_frames for r in records])
    return SummaryRow(sweep_param, value, mr, sr, ma, sa, mt, st, len(records))


def run_sweep(config: CampaignConfig) -> tuple[list[SummaryRow], list[EpisodeRecord]]:
    if config.sweep is None:
        raise ConfigError("run_sweep needs a sweep in the campaign config")
    rows, all_records = [], []
    for value in config.sweep.values:
        point = config.with_param(config.sweep.param, value)
        records = run_episodes(point)
        for r in records:
            r.sweep_param, r.sweep_value = config.sweep.param, value
        rows.append(summarize(records, config.sweep.param, value))
        all_records.extend(records)
    return rows, all_records


def compare_init(
    config: CampaignConfig,
    trajectory: Sequence[TrajectoryRecord],
    frame_ids: Sequence[int] | None = None,
    trials: int = 10,
    policy: PolicySpec | None = None,
) -> list[CompareRow]:
    """Random vs warm-start initialization on the frames of a recorded rollout.

    Frames default to those the entropy gate opens on. Warm-start trial ``k``
    on a frame is seeded with the best genome of warm-start trial ``k`` on
    the previous selected frame; the first frame has no seed and therefore
    runs as random initialization. Both modes share the per-trial random
    stream, so their populations differ only in the inserted seed.
    """
    if not trajectory:
        raise InputError("compare_init needs a non-empty trajectory")
    if policy is None:
        policy = resolve_policy(config)
    session = OracleSession(policy)
    dists = [session.query(rec.state) for rec in trajectory]
    if frame_ids is None:
        if config.tca_threshold == MEAN_OF_TRAJECTORY:
            threshold = mean_uncertainty_threshold(dists)
        else:
            threshold = float(config.tca_threshold)
        gate = TcaConfig(threshold)
        frame_ids = [i for i, d in enumerate(dists) if should_attack(attack_uncertainty(d), gate)]

    rows: list[CompareRow] = []
    prev_best: list[AdversaryGenome | None] = [None] * trials
    for idx in frame_ids:
        state = trajectory[idx].state
        o = greedy_action(dists[idx])
        for mode in INIT_MODES:
            ga = replace(config.ga, init_mode=mode)
            for k in range(trials):
                seed_genome = prev_best[k] if mode == "warm_start" else None
                seed_ok = None
                if seed_genome is not None:
                    # direct check, outside the optimizer's budget
                    seed_ok = evaluate(OracleSession(policy), state, seed_genome, o, config.fsa).success
                result = optimize(
                    session, state, o, config.fsa, ga, warm_seed=seed_genome,
                    rng=_frame_rng(config.base_seed, idx, k),
                )
                rows.append(CompareRow(
                    idx, mode, k, result.evaluations_used, result.best_outcome.discrepancy,
                    result.best_outcome.success, seed_ok, result.history,
                ))
                if mode == "warm_start":
                    prev_best[k] = result.best_genome
    return rows


# ---- output files -------------------------------------------------------

def write_episodes(path: str | Path, records: Sequence[EpisodeRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_episodes(path: str | Path) -> list[EpisodeRecord]:
    with open(path, encoding="utf-8") as fh:
        return [EpisodeRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def summary_csv(rows: Sequence[SummaryRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) for v in asdict(row).values()])
    return buf.getvalue()


def compare_csv(rows: Sequence[CompareRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMPARE_HEADER)
    for row in rows:
        writer.writerow([row.frame, row.mode, row.trial, row.evaluations, _fmt(row.best_objective)])
    return buf.getvalue()


def read_summary(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
