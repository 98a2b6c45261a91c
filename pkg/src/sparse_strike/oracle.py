"""Black-box policy access: load a serialized feed-forward net and query it.

Policy file format (JSON)::

    {
      "input_shape": [h, w, c],
      "action_count": m,
      "head": "q_values" | "probabilities",
      "softmax_temperature": 1.0,          # optional, q_values head only
      "layers": [
        {"kind": "conv", "out_channels": k, "kernel": [kh, kw], "stride": s,
         "weights": [...], "bias": [...], "activation": "relu"},
        {"kind": "flatten"},
        {"kind": "dense", "out_features": m, "weights": [...], "bias": [...],
         "activation": "linear"}
      ]
    }

Pixels are divided by 255 before the first layer. The state tensor
(H, W, C) is transposed to channels-first (C, H, W) and stays channels-first
through every conv layer; flattening is row-major over (C, H, W). Dense
weights are row-major ``[out][in]``; conv weights are
``[out_channel][in_channel][kernel_row][kernel_col]``, valid padding,
cross-correlation. A dense layer fed a 3-D tensor flattens it implicitly.
Both head types pass the final outputs through a softmax.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import PolicyParseError, PolicyValidationError, ShapeError
from .state import FrameState, StateShape

HEADS = ("q_values", "probabilities")
ACTIVATIONS = ("relu", "linear")
KINDS = ("conv", "dense", "flatten")


@dataclass(frozen=True, eq=False)
class LayerSpec:
    kind: str
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bias: np.ndarray = field(default_factory=lambda: np.zeros(0))
    activation: str = "linear"
    out_channels: int | None = None
    kernel: tuple[int, int] | None = None
    stride: tuple[int, int] = (1, 1)
    out_features: int | None = None

    def to_dict(self) -> dict:
        if self.kind == "flatten":
            return {"kind": "flatten"}
        d: dict = {"kind": self.kind}
        if self.kind == "conv":
            d["out_channels"] = self.out_channels
            d["kernel"] = list(self.kernel)
            d["stride"] = list(self.stride)
        else:
            d["out_features"] = self.out_features
        d["weights"] = self.weights.ravel().tolist()
        d["bias"] = self.bias.ravel().tolist()
        d["activation"] = self.activation
        return d


@dataclass(frozen=True, eq=False)
class PolicySpec:
    input_shape: StateShape
    layers: tuple[LayerSpec, ...]
    head: str
    action_count: int
    softmax_temperature: float = 1.0

    @property
    def softmax_wrapped(self) -> bool:
        """True when raw outputs are Q-values that need normalizing."""
        return self.head == "q_values"

    def to_dict(self) -> dict:
        d = {
            "input_shape": list(self.input_shape.as_tuple()),
            "action_count": self.action_count,
            "head": self.head,
            "layers": [layer.to_dict() for layer in self.layers],
        }
        if self.softmax_temperature != 1.0:
            d["softmax_temperature"] = self.softmax_temperature
        return d


def _pair(value, name: str) -> tuple[int, int]:
    if isinstance(value, (int, np.integer)):
        value = (value, value)
    try:
        a, b = value
    except (TypeError, ValueError) as exc:
        raise PolicyValidationError(f"{name} must be an int or a pair, got {value!r}") from exc
    if int(a) != a or int(b) != b or a <= 0 or b <= 0:
        raise PolicyValidationError(f"{name} entries must be positive integers, got {value!r}")
    return int(a), int(b)


def _positive_int(raw: dict, key: str, where: str) -> int:
    value = raw.get(key)
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise PolicyValidationError(f"{where}: {key} must be a positive integer, got {value!r}")
    return value


def _floats(raw: dict, key: str, where: str) -> np.ndarray:
    value = raw.get(key)
    if not isinstance(value, list):
        raise PolicyValidationError(f"{where}: {key} must be an array of numbers")
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise PolicyValidationError(f"{where}: {key} must contain only numbers") from exc
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise PolicyValidationError(f"{where}: {key} must be a flat array of finite numbers")
    return arr


def _layer_from_dict(raw: dict, in_shape: tuple[int, ...], index: int):
    """Validate one layer against its input shape; return (layer, out_shape)."""
    where = f"layer {index}"
    if not isinstance(raw, dict):
        raise PolicyValidationError(f"{where}: expected an object")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise PolicyValidationError(f"{where}: unknown kind {kind!r}")
    if kind == "flatten":
        return LayerSpec(kind="flatten"), (int(np.prod(in_shape)),)

    activation = raw.get("activation", "linear")
    if activation not in ACTIVATIONS:
        raise PolicyValidationError(f"{where}: unknown activation {activation!r}")
    weights = _floats(raw, "weights", where)
    bias = _floats(raw, "bias", where)

    if kind == "conv":
        if len(in_shape) != 3:
            raise PolicyValidationError(f"{where}: conv needs a 3-D input, got {in_shape}")
        c_in, h, w = in_shape
        out_channels = _positive_int(raw, "out_channels", where)
        kh, kw = _pair(raw.get("kernel"), f"{where}: kernel")
        sh, sw = _pair(raw.get("stride", 1), f"{where}: stride")
        if kh > h or kw > w:
            raise PolicyValidationError(f"{where}: kernel {kh}x{kw} larger than input {h}x{w}")
        expected = out_channels * c_in * kh * kw
        if weights.size != expected:
            raise PolicyValidationError(
                f"{where}: weights length {weights.size} != {expected} "
                f"({out_channels}x{c_in}x{kh}x{kw})"
            )
        if bias.size != out_channels:
            raise PolicyValidationError(
                f"{where}: bias length {bias.size} != out_channels {out_channels}"
            )
        out_shape = (out_channels, (h - kh) // sh + 1, (w - kw) // sw + 1)
        layer = LayerSpec(
            kind="conv",
            weights=weights.reshape(out_channels, c_in, kh, kw),
            bias=bias,
            activation=activation,
            out_channels=out_channels,
            kernel=(kh, kw),
            stride=(sh, sw),
        )
        return layer, out_shape

    n_in = int(np.prod(in_shape))
    out_features = _positive_int(raw, "out_features", where)
    if weights.size != out_features * n_in:
        raise PolicyValidationError(
            f"{where}: weights length {weights.size} != {out_features}x{n_in}"
        )
    if bias.size != out_features:
        raise PolicyValidationError(
            f"{where}: bias length {bias.size} != out_features {out_features}"
        )
    layer = LayerSpec(
        kind="dense",
        weights=weights.reshape(out_features, n_in),
        bias=bias,
        activation=activation,
        out_features=out_features,
    )
    return layer, (out_features,)


def policy_from_dict(raw: dict) -> PolicySpec:
    if not isinstance(raw, dict):
        raise PolicyParseError("policy file must contain a JSON object")
    for key in ("input_shape", "action_count", "head", "layers"):
        if key not in raw:
            raise PolicyValidationError(f"missing key {key!r}")
    try:
        shape = StateShape(*raw["input_shape"])
    except (TypeError, ShapeError) as exc:
        raise PolicyValidationError(f"bad input_shape {raw['input_shape']!r}") from exc
    head = raw["head"]
    if head not in HEADS:
        raise PolicyValidationError(f"head must be one of {HEADS}, got {head!r}")
    m = raw["action_count"]
    if isinstance(m, bool) or not isinstance(m, int) or m < 2:
        raise PolicyValidationError(f"action_count must be an integer >= 2, got {m!r}")
    temperature = float(raw.get("softmax_temperature", 1.0))
    if not temperature > 0:
        raise PolicyValidationError("softmax_temperature must be positive")
    if not isinstance(raw["layers"], list) or not raw["layers"]:
        raise PolicyValidationError("layers must be a non-empty array")

    cur: tuple[int, ...] = (shape.channels, shape.height, shape.width)
    layers = []
    for i, raw_layer in enumerate(raw["layers"]):
        layer, cur = _layer_from_dict(raw_layer, cur, i)
        layers.append(layer)
    if cur != (m,):
        raise PolicyValidationError(f"network output shape {cur} != ({m},)")
    return PolicySpec(shape, tuple(layers), head, m, temperature)


def load_policy(data: bytes | str) -> PolicySpec:
    """Parse and validate policy file contents."""
    try:
        raw = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PolicyParseError(f"malformed policy file: {exc}") from exc
    return policy_from_dict(raw)


def load_policy_file(path: str | Path) -> PolicySpec:
    return load_policy(Path(path).read_bytes())


def dump_policy(policy: PolicySpec) -> str:
    return json.dumps(policy.to_dict())


def softmax(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64) / temperature
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _conv(x: np.ndarray, layer: LayerSpec) -> np.ndarray:
    kh, kw = layer.kernel
    sh, sw = layer.stride
    # windows: (C_in, oh, ow, kh, kw)
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::sh, ::sw]
    out = np.einsum("chwij,ocij->ohw", windows, layer.weights, optimize=True)
    return out + layer.bias[:, None, None]


def forward(policy: PolicySpec, state: FrameState) -> np.ndarray:
    """Raw network outputs (logits or Q-values) for ``state``."""
    if state.pixels.shape != policy.input_shape.as_tuple():
        raise ShapeError(
            f"state shape {state.shape} does not match policy input {policy.input_shape}"
        )
    x = state.pixels.transpose(2, 0, 1).astype(np.float64) / 255.0
    for layer in policy.layers:
        if layer.kind == "flatten":
            x = x.reshape(-1)
            continue
        if layer.kind == "conv":
            x = _conv(x, layer)
        else:
            x = layer.weights @ x.reshape(-1) + layer.bias
        if layer.activation == "relu":
            x = np.maximum(x, 0.0)
    return x


def query(policy: PolicySpec, state: FrameState) -> np.ndarray:
    """Action distribution pi(.|state) as a float64 vector summing to 1."""
    out = forward(policy, state)
    temperature = policy.softmax_temperature if policy.softmax_wrapped else 1.0
    return softmax(out, temperature)


def greedy_action(dist: Sequence[float]) -> int:
    """Index of the largest probability; ties go to the lowest index."""
    return int(np.argmax(dist))


class OracleSession:
    """Counts every query made through it. Safe for concurrent callers."""

    def __init__(self, policy: PolicySpec) -> None:
        self.policy = policy
        self._count = 0
        self._lock = threading.Lock()

    def query(self, state: FrameState) -> np.ndarray:
        dist = query(self.policy, state)
        with self._lock:
            self._count += 1
        return dist

    @property
    def query_count(self) -> int:
        return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


def query_count(session: OracleSession) -> int:
    return session.query_count
