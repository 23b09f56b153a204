"""XOR folding and response segmentation.

Folding XORs each group of `arity` consecutive bits into one output bit.
For independent bits with ones-probability p the folded bias follows

    bias(arity, p) = (1 - (1 - 2p)**arity) / 2,

so any residual ones-density offset shrinks geometrically with arity.
Segmentation then slices the folded stream into fixed-width responses.
Both operations drop the tail remainder rather than padding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def xor_fold(bits: np.ndarray, arity: int) -> np.ndarray:
    """XOR each run of `arity` consecutive bits; remainder bits are dropped."""
    if arity < 1:
        raise ValueError(f"arity must be >= 1, got {arity}")
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError(f"expected a flat bit vector, got shape {bits.shape}")
    n_out = bits.size // arity
    if n_out == 0:
        raise ValueError(f"need at least {arity} bits, got {bits.size}")
    folded = bits[: n_out * arity].reshape(n_out, arity)
    return np.bitwise_xor.reduce(folded, axis=1)


def xor_bias(arity: int, p: float) -> float:
    """Ones-probability of an XOR of `arity` independent Bernoulli(p) bits."""
    if arity < 1:
        raise ValueError(f"arity must be >= 1, got {arity}")
    return (1.0 - (1.0 - 2.0 * p) ** arity) / 2.0


@dataclass(frozen=True)
class ResponseSet:
    """Fixed-width responses cut from one folded bitstream."""

    responses: np.ndarray        # shape (n_responses, width), uint8
    xor_arity: int
    source_tag: str = ""

    def __post_init__(self) -> None:
        if self.responses.ndim != 2:
            raise ValueError(f"responses must be 2-D, got shape {self.responses.shape}")

    @property
    def n_responses(self) -> int:
        return self.responses.shape[0]

    @property
    def width(self) -> int:
        return self.responses.shape[1]

    def hamming_weights(self) -> np.ndarray:
        """Per-response fractional ones-count."""
        return self.responses.mean(axis=1)

    def flat(self) -> np.ndarray:
        return self.responses.reshape(-1)


def segment(bits: np.ndarray, width: int, xor_arity: int = 1,
            source_tag: str = "") -> ResponseSet:
    """Cut a bit vector into floor(len/width) responses of `width` bits each."""
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.size // width
    if n == 0:
        raise ValueError(f"need at least {width} bits, got {bits.size}")
    return ResponseSet(responses=bits[: n * width].reshape(n, width).copy(),
                       xor_arity=xor_arity, source_tag=source_tag)


def fold_and_segment(bits: np.ndarray, arity: int, width: int,
                     source_tag: str = "") -> ResponseSet:
    """Convenience: xor_fold then segment, tagging the result with the arity."""
    return segment(xor_fold(bits, arity), width, xor_arity=arity,
                   source_tag=source_tag)
