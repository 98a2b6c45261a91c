"""Regenerate the policy files shipped in src/sparse_strike/data/policies."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from sparse_strike.envs import EnvSpec
from sparse_strike.experts import distill
from sparse_strike.oracle import dump_policy, policy_from_dict
from sparse_strike.state import StateShape

OUT = Path(__file__).resolve().parents[1] / "src" / "sparse_strike" / "data" / "policies"


def linear_vulnerable() -> dict:
    # only pixel (0, 0) can overcome the bias of 2 toward action 0;
    # the sub-threshold ramp gives a search direction toward it
    i, j = np.indices((8, 8))
    toward_1 = 1.0 - (i + j) / 14.0
    toward_1[0, 0] = 10.0
    weights = [0.0] * 64 + [round(float(v), 12) for v in toward_1.ravel()]
    return {
        "input_shape": [8, 8, 1],
        "action_count": 2,
        "head": "q_values",
        "layers": [
            {"kind": "dense", "out_features": 2, "weights": weights,
             "bias": [2.0, 0.0], "activation": "linear"}
        ],
    }


def conv_small() -> dict:
    rng = np.random.default_rng(20240607)
    conv_w = np.round(rng.uniform(-1, 1, size=2 * 1 * 3 * 3), 3)
    conv_b = np.round(rng.uniform(-0.2, 0.2, size=2), 3)
    dense_w = np.round(rng.uniform(-0.5, 0.5, size=3 * 2 * 6 * 6), 3)
    dense_b = np.round(rng.uniform(-0.1, 0.1, size=3), 3)
    return {
        "input_shape": [8, 8, 1],
        "action_count": 3,
        "head": "probabilities",
        "layers": [
            {"kind": "conv", "out_channels": 2, "kernel": [3, 3], "stride": 1,
             "weights": conv_w.tolist(), "bias": conv_b.tolist(), "activation": "relu"},
            {"kind": "flatten"},
            {"kind": "dense", "out_features": 3, "weights": dense_w.tolist(),
             "bias": dense_b.tolist(), "activation": "linear"},
        ],
    }


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, raw in (("linear_vulnerable", linear_vulnerable()), ("conv_small", conv_small())):
        policy_from_dict(raw)
        (OUT / f"{name}.json").write_text(json.dumps(raw) + "\n")
    experts = (
        ("mini_pong_expert", EnvSpec("mini_pong", StateShape(32, 32, 4))),
        ("grid_chase_expert", EnvSpec("grid_chase", StateShape(16, 16, 4))),
    )
    for name, spec in experts:
        (OUT / f"{name}.json").write_text(dump_policy(distill(spec)) + "\n")


if __name__ == "__main__":
    main()
