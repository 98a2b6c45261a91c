"""Deterministic pixel environments standing in for Atari at desk scale.

mini_pong
    A ball bounces around an H x W court; the agent steers a 3-cell paddle on
    the bottom row. Actions: 0 NOOP, 1 LEFT, 2 RIGHT (the paddle moves two
    cells). The ball moves one cell diagonally per step and bounces off the
    side and top walls. Returning the ball scores +1. A miss costs a life,
    scores nothing and respawns the ball on the top row at a seeded random
    column and direction. The episode ends when lives run out or after
    ``max_steps`` steps.

grid_chase
    The agent walks a grid towards a target. Actions: 0 UP, 1 DOWN, 2 LEFT,
    3 RIGHT (moves off the grid are clamped). Reaching the target scores +1
    and the target respawns at a seeded random cell. Ends after ``max_steps``.

Rendering uses three gray levels: background 0, ball/target 255,
paddle/agent 128.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, LifecycleError
from .state import StateShape

BACKGROUND = 0
PADDLE = 128
AGENT = 128
BALL = 255
TARGET = 255

ENV_NAMES = ("mini_pong", "grid_chase")
ACTION_COUNTS = {"mini_pong": 3, "grid_chase": 4}
PONG_ACTIONS = ("NOOP", "LEFT", "RIGHT")
CHASE_ACTIONS = ("UP", "DOWN", "LEFT", "RIGHT")

PADDLE_HALF = 1
PADDLE_SPEED = 2


@dataclass(frozen=True)
class EnvSpec:
    name: str = "mini_pong"
    shape: StateShape = StateShape(32, 32, 4)
    max_steps: int = 300
    lives: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.name not in ENV_NAMES:
            raise ConfigError(f"unknown environment {self.name!r}; choose from {ENV_NAMES}")
        if self.max_steps < 1 or self.lives < 1:
            raise ConfigError("max_steps and lives must be positive")
        h, w = self.shape.height, self.shape.width
        if self.name == "mini_pong" and (h < 4 or w < 2 * PADDLE_HALF + 2):
            raise ConfigError(f"mini_pong needs at least a 4x4 court, got {h}x{w}")
        if self.name == "grid_chase" and h * w < 2:
            raise ConfigError("grid_chase needs at least two cells")

    @property
    def action_count(self) -> int:
        return ACTION_COUNTS[self.name]

    def with_seed(self, seed: int) -> "EnvSpec":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    t: int


class MiniPong:
    def __init__(self, spec: EnvSpec) -> None:
        self.spec = spec
        self.h, self.w = spec.shape.height, spec.shape.width
        self.rng = np.random.default_rng(spec.seed)
        self.t = 0
        self.lives = spec.lives
        self.done = False
        self.paddle = self.w // 2
        self._spawn_ball()

    def _spawn_ball(self) -> None:
        self.ball_r = 0
        self.ball_c = int(self.rng.integers(0, self.w))
        self.vr = 1
        self.vc = int(self.rng.choice((-1, 1)))

    def render(self) -> np.ndarray:
        frame = np.zeros((self.h, self.w), dtype=np.uint8)
        lo = self.paddle - PADDLE_HALF
        frame[self.h - 1, lo : lo + 2 * PADDLE_HALF + 1] = PADDLE
        frame[self.ball_r, self.ball_c] = BALL
        return frame

    def step(self, action: int) -> StepResult:
        if self.done:
            raise LifecycleError("step() called on a finished episode; call reset()")
        if not 0 <= action < 3:
            raise ConfigError(f"mini_pong action must be in [0, 3), got {action}")
        if action == 1:
            self.paddle -= PADDLE_SPEED
        elif action == 2:
            self.paddle += PADDLE_SPEED
        self.paddle = min(max(self.paddle, PADDLE_HALF), self.w - 1 - PADDLE_HALF)

        nc = self.ball_c + self.vc
        if nc < 0 or nc >= self.w:
            self.vc = -self.vc
            nc = self.ball_c + self.vc
        nr = self.ball_r + self.vr
        if nr < 0:
            self.vr = 1
            nr = self.ball_r + 1

        reward = 0.0
        if nr >= self.h - 1:
            if abs(nc - self.paddle) <= PADDLE_HALF:
                reward = 1.0
                self.vr = -1
                self.ball_r, self.ball_c = self.h - 3, nc
            else:
                self.lives -= 1
                self._spawn_ball()
        else:
            self.ball_r, self.ball_c = nr, nc

        self.t += 1
        self.done = self.lives <= 0 or self.t >= self.spec.max_steps
        return StepResult(self.render(), reward, self.done, self.t)


class GridChase:
    _MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))

    def __init__(self, spec: EnvSpec) -> None:
        self.spec = spec
        self.h, self.w = spec.shape.height, spec.shape.width
        self.rng = np.random.default_rng(spec.seed)
        self.t = 0
        self.done = False
        cells = self.rng.choice(self.h * self.w, size=2, replace=False)
        self.agent = divmod(int(cells[0]), self.w)
        self.target = divmod(int(cells[1]), self.w)

    def _respawn_target(self) -> None:
        agent_idx = self.agent[0] * self.w + self.agent[1]
        idx = int(self.rng.integers(0, self.h * self.w - 1))
        if idx >= agent_idx:
            idx += 1
        self.target = divmod(idx, self.w)

    def render(self) -> np.ndarray:
        frame = np.zeros((self.h, self.w), dtype=np.uint8)
        frame[self.agent] = AGENT
        frame[self.target] = TARGET
        return frame

    def step(self, action: int) -> StepResult:
        if self.done:
            raise LifecycleError("step() called on a finished episode; call reset()")
        if not 0 <= action < 4:
            raise ConfigError(f"grid_chase action must be in [0, 4), got {action}")
        dr, dc = self._MOVES[action]
        r = min(max(self.agent[0] + dr, 0), self.h - 1)
        c = min(max(self.agent[1] + dc, 0), self.w - 1)
        self.agent = (r, c)
        reward = 0.0
        if self.agent == self.target:
            reward = 1.0
            self._respawn_target()
        self.t += 1
        self.done = self.t >= self.spec.max_steps
        return StepResult(self.render(), reward, self.done, self.t)


def reset(spec: EnvSpec):
    """Fresh environment for ``spec`` and its first rendered frame."""
    env = MiniPong(spec) if spec.name == "mini_pong" else GridChase(spec)
    return env, env.render()


def step(env, action: int) -> StepResult:
    return env.step(action)
