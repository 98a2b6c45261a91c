import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sparse_strike.errors import PolicyParseError, PolicyValidationError, ShapeError
from sparse_strike.oracle import (
    OracleSession,
    dump_policy,
    greedy_action,
    load_policy,
    query,
    query_count,
    softmax,
)
from sparse_strike.state import FrameState, StateShape

# frozen from tests/oracles/forward_oracle.py (independent pure-Python forward pass)
CONV_SMALL_GOLDEN = [0.3599542311795108, 0.5271984280461292, 0.11284734077436011]
CONV_SMALL_ZERO = [0.3765853834580043, 0.3842505460976578, 0.23916407044433796]
LINEAR_ZERO = [0.8807970779778823, 0.11920292202211755]
LINEAR_HOT = [0.00033535013046647816, 0.9996646498695336]
SOFTMAX_1000 = [0.4753668864186717, 0.17487770452710946, 0.17487770452710946, 0.17487770452710946]


def dense_policy(shape, m, weights, bias, head="probabilities", layers=None):
    raw = {
        "input_shape": list(shape),
        "action_count": m,
        "head": head,
        "layers": layers
        or [{"kind": "dense", "out_features": m, "weights": weights, "bias": bias,
             "activation": "linear"}],
    }
    return json.dumps(raw)


def two_layer_text():
    return dense_policy(
        (2, 2, 1), 2, None, None,
        layers=[
            {"kind": "dense", "out_features": 3, "weights": [0.1] * 12, "bias": [0, 0, 0],
             "activation": "relu"},
            {"kind": "dense", "out_features": 2, "weights": [1, -1, 0.5, 0, 0, 2],
             "bias": [0, 0.1], "activation": "linear"},
        ],
    )


def test_load_two_layer_round_trip():
    policy = load_policy(two_layer_text())
    assert len(policy.layers) == 2
    again = load_policy(dump_policy(policy))
    s = FrameState(np.arange(4).reshape(2, 2, 1))
    assert np.array_equal(query(policy, s), query(again, s))


def test_bias_length_mismatch():
    with pytest.raises(PolicyValidationError, match="bias length"):
        load_policy(dense_policy((2, 2, 1), 2, [0.0] * 8, [0.0, 0.0, 0.0]))


def test_q_values_head_is_flagged():
    policy = load_policy(dense_policy((2, 2, 1), 2, [0.0] * 8, [0.0, 0.0], head="q_values"))
    assert policy.softmax_wrapped


@pytest.mark.parametrize(
    "text, error",
    [
        ("{not json", PolicyParseError),
        ("[]", PolicyParseError),
        (dense_policy((2, 2, 1), 1, [0.0] * 4, [0.0]), PolicyValidationError),
        (dense_policy((2, 2, 1), 2, [0.0] * 7, [0.0, 0.0]), PolicyValidationError),
        (dense_policy((2, 2, 1), 2, [0.0] * 8, [0.0, 0.0], head="logits"), PolicyValidationError),
        (dense_policy((2, 2, 1), 3, [0.0] * 8, [0.0, 0.0]), PolicyValidationError),
    ],
)
def test_malformed_files(text, error):
    with pytest.raises(error):
        load_policy(text)


def test_uniform_from_zero_weights():
    policy = load_policy(dense_policy((3, 3, 2), 2, [0.0] * 36, [0.0, 0.0]))
    dist = query(policy, FrameState(np.full((3, 3, 2), 200)))
    assert dist.tolist() == [0.5, 0.5]


def test_softmax_bias_golden():
    policy = load_policy(dense_policy((2, 2, 1), 4, [0.0] * 16, [1.0, 0.0, 0.0, 0.0]))
    dist = query(policy, FrameState.zeros(StateShape(2, 2, 1)))
    assert dist == pytest.approx(SOFTMAX_1000, abs=1e-12)
    assert dist[0] == pytest.approx(0.4754, abs=1e-4)
    assert dist[1] == pytest.approx(0.1749, abs=1e-4)


def test_conv_golden(conv_policy, golden_state):
    assert query(conv_policy, golden_state) == pytest.approx(CONV_SMALL_GOLDEN, abs=1e-9)
    zero = FrameState.zeros(StateShape(8, 8, 1))
    assert query(conv_policy, zero) == pytest.approx(CONV_SMALL_ZERO, abs=1e-9)


def test_linear_golden(vulnerable_policy, zero_8x8):
    assert query(vulnerable_policy, zero_8x8) == pytest.approx(LINEAR_ZERO, abs=1e-9)
    px = np.zeros((8, 8, 1), dtype=np.uint8)
    px[0, 0, 0] = 255
    assert query(vulnerable_policy, FrameState(px)) == pytest.approx(LINEAR_HOT, abs=1e-9)


def test_conv_stride_and_channels_match_oracle():
    from forward_oracle import forward

    rng = np.random.default_rng(3)
    raw = {
        "input_shape": [7, 9, 3],
        "action_count": 3,
        "head": "q_values",
        "softmax_temperature": 0.7,
        "layers": [
            {"kind": "conv", "out_channels": 4, "kernel": [3, 2], "stride": [2, 1],
             "weights": rng.normal(size=4 * 3 * 3 * 2).tolist(),
             "bias": rng.normal(size=4).tolist(), "activation": "relu"},
            {"kind": "conv", "out_channels": 2, "kernel": [2, 2], "stride": 2,
             "weights": rng.normal(size=2 * 4 * 2 * 2).tolist(),
             "bias": rng.normal(size=2).tolist(), "activation": "relu"},
            {"kind": "flatten"},
            {"kind": "dense", "out_features": 3, "weights": rng.normal(size=3 * 2 * 1 * 4).tolist(),
             "bias": rng.normal(size=3).tolist(), "activation": "linear"},
        ],
    }
    policy = load_policy(json.dumps(raw))
    px = rng.integers(0, 256, size=(7, 9, 3))
    assert query(policy, FrameState(px)) == pytest.approx(forward(raw, px.tolist()), abs=1e-12)


def test_shape_mismatch(vulnerable_policy):
    with pytest.raises(ShapeError):
        query(vulnerable_policy, FrameState.zeros(StateShape(8, 8, 2)))


@pytest.mark.parametrize(
    "dist, expected", [([0.1, 0.7, 0.2], 1), ([0.5, 0.5], 0), ([0.25] * 4, 0)]
)
def test_greedy_action(dist, expected):
    assert greedy_action(dist) == expected


def test_query_counter(vulnerable_policy, zero_8x8):
    session = OracleSession(vulnerable_policy)
    assert query_count(session) == 0
    for _ in range(3):
        session.query(zero_8x8)
    assert query_count(session) == 3
    session.reset()
    assert query_count(session) == 0


def test_query_is_bitwise_repeatable(conv_policy, golden_state):
    a = query(conv_policy, golden_state)
    b = query(load_policy(dump_policy(conv_policy)), golden_state)
    assert a.tobytes() == b.tobytes()


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, st.integers(2, 10), elements=st.floats(-50, 50)),
    st.floats(-1e3, 1e3),
)
def test_softmax_shift_invariance(logits, shift):
    assert np.allclose(softmax(logits), softmax(logits + shift), atol=1e-9, rtol=0)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, (8, 8, 1)))
def test_distribution_invariants(conv_policy, px):
    dist = query(conv_policy, FrameState(px))
    assert np.all((dist >= 0) & (dist <= 1))
    assert abs(dist.sum() - 1) < 1e-6
    assert 0 <= greedy_action(dist) < conv_policy.action_count


def test_shipped_files_load(policy_dir):
    names = sorted(p.stem for p in policy_dir.glob("*.json"))
    assert names == ["conv_small", "grid_chase_expert", "linear_vulnerable", "mini_pong_expert"]
    for p in policy_dir.glob("*.json"):
        load_policy(p.read_bytes())
