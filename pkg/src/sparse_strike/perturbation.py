"""Fractional-state adversary: n pixel edits encoded as integer (x, y, p) triples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ConfigError
from .state import PIXEL_MAX, FrameState, StateShape

TARGET_CHANNELS = ("newest_only", "all_channels")


@dataclass(frozen=True)
class FsaConfig:
    n: int = 1
    target_channels: str = "newest_only"
    value_bounds: tuple[int, int] = (0, PIXEL_MAX)

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError(f"FSA size n must be an integer >= 1, got {self.n!r}")
        if self.target_channels not in TARGET_CHANNELS:
            raise ConfigError(
                f"target_channels must be one of {TARGET_CHANNELS}, got {self.target_channels!r}"
            )
        lo, hi = self.value_bounds
        if not 0 <= lo < hi <= PIXEL_MAX:
            raise ConfigError(f"bad value_bounds {self.value_bounds!r}")


class AdversaryGenome:
    """Immutable ``(n, 3)`` int64 array of ``(x, y, p)`` genes."""

    __slots__ = ("_genes",)

    def __init__(self, genes) -> None:
        arr = np.array(genes, dtype=np.int64).reshape(-1, 3)
        if arr.shape[0] < 1:
            raise ConfigError("a genome needs at least one gene")
        arr.flags.writeable = False
        self._genes = arr

    @classmethod
    def from_flat(cls, flat) -> "AdversaryGenome":
        flat = np.asarray(flat, dtype=np.int64)
        if flat.size % 3:
            raise ConfigError(f"flat genome length {flat.size} is not a multiple of 3")
        return cls(flat.reshape(-1, 3))

    @property
    def genes(self) -> np.ndarray:
        return self._genes

    @property
    def n(self) -> int:
        return self._genes.shape[0]

    def flat(self) -> np.ndarray:
        return self._genes.reshape(-1)

    def sort_key(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self._genes.reshape(-1))

    def to_list(self) -> list[list[int]]:
        return self._genes.tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AdversaryGenome):
            return NotImplemented
        return np.array_equal(self._genes, other._genes)

    def __hash__(self) -> int:
        return hash(self.sort_key())

    def __repr__(self) -> str:
        return f"AdversaryGenome({self.to_list()})"


def gene_bounds(shape: StateShape) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive per-component (lower, upper) bounds for one gene."""
    lo = np.array([0, 0, -PIXEL_MAX], dtype=np.int64)
    hi = np.array([shape.height - 1, shape.width - 1, PIXEL_MAX], dtype=np.int64)
    return lo, hi


def random_genome(
    shape: StateShape, config: FsaConfig, rng: np.random.Generator
) -> AdversaryGenome:
    lo, hi = gene_bounds(shape)
    genes = rng.integers(lo, hi + 1, size=(config.n, 3), dtype=np.int64)
    return AdversaryGenome(genes)


def apply(state: FrameState, genome: AdversaryGenome, config: FsaConfig) -> FrameState:
    """Return a copy of ``state`` with every gene written as clamp(u + p).

    ``u`` is always the unperturbed pixel, so a later gene at the same
    coordinate replaces an earlier one instead of accumulating.
    """
    genes = genome.genes
    xs, ys = genes[:, 0], genes[:, 1]
    if xs.min() < 0 or xs.max() >= state.height:
        raise BoundsError(f"gene x outside [0, {state.height})")
    if ys.min() < 0 or ys.max() >= state.width:
        raise BoundsError(f"gene y outside [0, {state.width})")
    lo, hi = config.value_bounds
    src = state.pixels
    out = src.copy()
    channels = slice(-1, None) if config.target_channels == "newest_only" else slice(None)
    for x, y, p in genes.tolist():
        u = src[x, y, channels].astype(np.int64)
        out[x, y, channels] = np.clip(u + p, lo, hi)
    return FrameState._wrap(out)


def perturbed_fraction(shape: StateShape, config: FsaConfig) -> float:
    return config.n / (shape.height * shape.width)
