"""Recorded rollouts in a small length-prefixed binary format.

Layout (little-endian)::

    header  16 bytes  magic b"SSTJ", u16 version, u16 height, u16 width,
                      u16 channels, u32 reserved (0)
    record  u32 payload length, then payload:
              u32 t, i32 action, f64 reward, u8 done,
              height*width*channels bytes of the stacked state (H, W, C order)

``state`` is the full frame stack the agent observed before acting at ``t``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .envs import EnvSpec, reset
from .errors import InputError
from .state import FrameState, StateShape, push_frame

MAGIC = b"SSTJ"
VERSION = 1
_HEADER = struct.Struct("<4sHHHHI")
_LEN = struct.Struct("<I")
_FIELDS = struct.Struct("<IidB")


@dataclass(frozen=True)
class TrajectoryRecord:
    t: int
    state: FrameState
    action: int
    reward: float
    done: bool


def encode(records: Iterable[TrajectoryRecord], shape: StateShape) -> bytes:
    parts = [_HEADER.pack(MAGIC, VERSION, shape.height, shape.width, shape.channels, 0)]
    for rec in records:
        if rec.state.shape != shape:
            raise InputError(f"record t={rec.t} has shape {rec.state.shape}, expected {shape}")
        payload = _FIELDS.pack(rec.t, rec.action, rec.reward, rec.done) + rec.state.tobytes()
        parts.append(_LEN.pack(len(payload)))
        parts.append(payload)
    return b"".join(parts)


def decode(data: bytes) -> tuple[StateShape, list[TrajectoryRecord]]:
    if len(data) < _HEADER.size:
        raise InputError("trajectory file shorter than its header")
    magic, version, h, w, c, _ = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise InputError(f"bad trajectory magic {magic!r}")
    if version != VERSION:
        raise InputError(f"unsupported trajectory version {version}")
    shape = StateShape(h, w, c)
    n_pixels = h * w * c
    offset = _HEADER.size
    records = []
    while offset < len(data):
        if offset + _LEN.size > len(data):
            raise InputError("truncated record length")
        (length,) = _LEN.unpack_from(data, offset)
        offset += _LEN.size
        if length != _FIELDS.size + n_pixels or offset + length > len(data):
            raise InputError(f"corrupt record at byte {offset}")
        t, action, reward, done = _FIELDS.unpack_from(data, offset)
        pixels = np.frombuffer(data, dtype=np.uint8, count=n_pixels, offset=offset + _FIELDS.size)
        records.append(
            TrajectoryRecord(t, FrameState(pixels.reshape(h, w, c)), action, reward, bool(done))
        )
        offset += length
    return shape, records


def save(path: str | Path, records: list[TrajectoryRecord], shape: StateShape) -> None:
    Path(path).write_bytes(encode(records, shape))


def load(path: str | Path) -> tuple[StateShape, list[TrajectoryRecord]]:
    return decode(Path(path).read_bytes())


def record_rollout(
    spec: EnvSpec, choose: Callable[[object, FrameState], int]
) -> list[TrajectoryRecord]:
    """Play one episode, asking ``choose(env, state)`` for every action."""
    env, frame = reset(spec)
    state = push_frame(FrameState.zeros(spec.shape), frame)
    records = []
    done = False
    while not done:
        action = int(choose(env, state))
        result = env.step(action)
        records.append(TrajectoryRecord(result.t - 1, state, action, result.reward, result.done))
        state = push_frame(state, result.observation)
        done = result.done
    return records
