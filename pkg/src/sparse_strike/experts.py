"""Scripted controllers and their distillation into policy files.

The distilled policies are built by writing weights directly, not by
training: each one computes the same integer features its scripted expert
uses (ball column minus paddle column, target offset from the agent) and
turns them into logits whose argmax reproduces the expert's decision.
Only the newest frame of the stack carries nonzero weights.
"""

from __future__ import annotations

import numpy as np

from .envs import AGENT, PADDLE, PADDLE_HALF, EnvSpec, GridChase, MiniPong
from .oracle import PolicySpec, policy_from_dict
from .state import StateShape

DEFAULT_GAIN = 1.0


def pong_expert(env: MiniPong) -> int:
    d = env.ball_c - env.paddle
    return 2 if d > 0 else 1 if d < 0 else 0


def chase_scores(dr: int, dc: int) -> list[int]:
    """Progress of UP, DOWN, LEFT, RIGHT towards a target offset (dr, dc)."""
    return [-dr, dr, -dc, dc]


def chase_expert(env: GridChase) -> int:
    dr = env.target[0] - env.agent[0]
    dc = env.target[1] - env.agent[1]
    return int(np.argmax(chase_scores(dr, dc)))


def scripted_action(env) -> int:
    return pong_expert(env) if isinstance(env, MiniPong) else chase_expert(env)


def distill_mini_pong(shape: StateShape, gain: float = DEFAULT_GAIN) -> PolicySpec:
    """Single dense layer reproducing :func:`pong_expert` (Q-value head).

    Logits are ``[gain / 2, -gain * d, gain * d]`` with ``d`` the ball column
    minus the paddle centre column, so NOOP wins exactly when ``d == 0``.
    """
    h, w, c = shape.as_tuple()
    cols = np.arange(w, dtype=np.float64)
    feature = np.zeros((c, h, w))
    feature[c - 1, : h - 1, :] = cols  # ball never reaches the paddle row
    paddle_cells = 2 * PADDLE_HALF + 1
    feature[c - 1, h - 1, :] = -cols * 255.0 / (PADDLE * paddle_cells)
    feature = feature.reshape(-1)
    weights = np.stack([np.zeros_like(feature), -gain * feature, gain * feature])
    raw = {
        "input_shape": [h, w, c],
        "action_count": 3,
        "head": "q_values",
        "layers": [
            {
                "kind": "dense",
                "out_features": 3,
                "weights": weights.reshape(-1).tolist(),
                "bias": [gain / 2, 0.0, 0.0],
                "activation": "linear",
            }
        ],
    }
    return policy_from_dict(raw)


def distill_grid_chase(shape: StateShape, gain: float = DEFAULT_GAIN) -> PolicySpec:
    """1x1 conv that separates target from agent by gray level, then dense.

    Conv channel 0 is ``relu(x - 0.75)`` (target only), channel 1 is
    ``relu(x - 0.25)`` (target and agent). Small descending biases make
    ties resolve in action order, matching :func:`chase_expert`.
    """
    h, w, c = shape.as_tuple()
    conv_w = np.zeros((2, c, 1, 1))
    conv_w[:, c - 1, 0, 0] = 1.0
    hi_cut, lo_cut = 0.75, 0.25
    target_level = 1.0 - hi_cut
    agent_level = AGENT / 255.0 - lo_cut
    spill = (1.0 - lo_cut) / target_level  # channel-1 response to the target

    rows = np.repeat(np.arange(h, dtype=np.float64)[:, None], w, axis=1)
    cols = np.repeat(np.arange(w, dtype=np.float64)[None, :], h, axis=0)
    # target_pos = ch0 / target_level; agent_pos = (ch1 - spill * ch0) / agent_level
    def offset(coord: np.ndarray) -> np.ndarray:
        ch0 = coord / target_level + spill * coord / agent_level
        ch1 = -coord / agent_level
        return np.concatenate([ch0.reshape(-1), ch1.reshape(-1)])

    dr, dc = offset(rows), offset(cols)
    dense_w = gain * np.stack([-dr, dr, -dc, dc])
    tie = 0.01 * gain
    raw = {
        "input_shape": [h, w, c],
        "action_count": 4,
        "head": "probabilities",
        "layers": [
            {
                "kind": "conv",
                "out_channels": 2,
                "kernel": [1, 1],
                "stride": 1,
                "weights": conv_w.reshape(-1).tolist(),
                "bias": [-hi_cut, -lo_cut],
                "activation": "relu",
            },
            {"kind": "flatten"},
            {
                "kind": "dense",
                "out_features": 4,
                "weights": dense_w.reshape(-1).tolist(),
                "bias": [4 * tie, 3 * tie, 2 * tie, tie],
                "activation": "linear",
            },
        ],
    }
    return policy_from_dict(raw)


def distill(spec: EnvSpec, gain: float = DEFAULT_GAIN) -> PolicySpec:
    if spec.name == "mini_pong":
        return distill_mini_pong(spec.shape, gain)
    return distill_grid_chase(spec.shape, gain)
