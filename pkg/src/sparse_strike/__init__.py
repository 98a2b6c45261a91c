"""Black-box sparse-pixel attacks on pixel-input RL policies."""

__version__ = "0.1.0"
