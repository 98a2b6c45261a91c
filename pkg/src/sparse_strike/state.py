"""Observation tensors: stacked 8-bit grayscale frames, newest channel last."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, DomainError, ShapeError

PIXEL_MAX = 255


@dataclass(frozen=True)
class StateShape:
    height: int
    width: int
    channels: int

    def __post_init__(self) -> None:
        for name in ("height", "width", "channels"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value <= 0:
                raise ShapeError(f"{name} must be a positive integer, got {value!r}")

    @classmethod
    def parse(cls, text: str) -> "StateShape":
        """Parse ``"32x32x4"`` (or ``"32,32,4"``)."""
        parts = text.lower().replace(",", "x").split("x")
        if len(parts) != 3:
            raise ShapeError(f"expected HxWxC, got {text!r}")
        try:
            h, w, c = (int(p) for p in parts)
        except ValueError as exc:
            raise ShapeError(f"expected HxWxC, got {text!r}") from exc
        return cls(h, w, c)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    def __str__(self) -> str:
        return f"{self.height}x{self.width}x{self.channels}"


def _check_pixels(arr: np.ndarray) -> None:
    if arr.size and (arr.min() < 0 or arr.max() > PIXEL_MAX):
        raise DomainError(f"pixel values must lie in [0, {PIXEL_MAX}]")


class FrameState:
    """Immutable H x W x C stack of uint8 frames.

    Channel ``C - 1`` is the most recent frame.
    """

    __slots__ = ("_pixels",)

    def __init__(self, pixels) -> None:
        arr = np.asarray(pixels)
        if arr.ndim != 3:
            raise ShapeError(f"state must be 3-D (H, W, C), got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.dtype.kind == "f" and not np.all(arr == np.round(arr)):
                raise DomainError("pixel values must be integers")
            _check_pixels(arr)
            arr = arr.astype(np.uint8)
        else:
            arr = arr.copy()
        StateShape(*arr.shape)
        arr.flags.writeable = False
        self._pixels = arr

    @classmethod
    def zeros(cls, shape: StateShape) -> "FrameState":
        return cls(np.zeros(shape.as_tuple(), dtype=np.uint8))

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "FrameState":
        # trusted constructor: arr is a fresh uint8 array already in range
        obj = cls.__new__(cls)
        arr.flags.writeable = False
        obj._pixels = arr
        return obj

    @property
    def pixels(self) -> np.ndarray:
        """Read-only uint8 view of the stack."""
        return self._pixels

    @property
    def shape(self) -> StateShape:
        return StateShape(*self._pixels.shape)

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def channels(self) -> int:
        return self._pixels.shape[2]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrameState):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and np.array_equal(
            self._pixels, other._pixels
        )

    def __hash__(self) -> int:
        return hash((self._pixels.shape, self._pixels.tobytes()))

    def __repr__(self) -> str:
        return f"FrameState({self.shape})"

    def tobytes(self) -> bytes:
        return self._pixels.tobytes()


def get_pixel(state: FrameState, x: int, y: int, c: int) -> int:
    for axis, index, size in (
        ("x", x, state.height),
        ("y", y, state.width),
        ("c", c, state.channels),
    ):
        if not 0 <= index < size:
            raise BoundsError(f"{axis}={index} outside [0, {size})")
    return int(state.pixels[x, y, c])


def push_frame(state: FrameState, frame) -> FrameState:
    """Drop the oldest channel and append ``frame`` as the newest one."""
    frame = np.asarray(frame)
    if frame.shape != (state.height, state.width):
        raise ShapeError(
            f"frame shape {frame.shape} does not match state ({state.height}, {state.width})"
        )
    _check_pixels(frame)
    out = np.empty_like(state.pixels)
    out[:, :, :-1] = state.pixels[:, :, 1:]
    out[:, :, -1] = frame
    return FrameState._wrap(out)
