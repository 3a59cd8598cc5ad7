"""Closed-form bit-depth expanders: zero padding, ideal gain, bit replication.

Each expander maps q-bit pixel values to H-bit values (q < H <= 16) through
a 2**q lookup table, which keeps them exact, vectorized and exhaustively
testable. Channels are processed independently.
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass

from .image import ImageBuffer


@dataclass(frozen=True)
class BitDepthSpec:
    """Source bit-depth q and target bit-depth H of one expansion."""

    q: int
    H: int

    def __post_init__(self):
        if not 1 <= self.q <= 15:
            raise ValueError(f"q must be in [1, 15], got {self.q}")
        if not self.q < self.H <= 16:
            raise ValueError(f"H must satisfy q < H <= 16, got q={self.q}, H={self.H}")


def zero_pad_value(x: int, spec: BitDepthSpec) -> int:
    """Append H - q zero bits after the LSB."""
    return x << (spec.H - spec.q)


def mig_value(x: int, spec: BitDepthSpec) -> int:
    """Scale by (2**H - 1)/(2**q - 1), rounding half away from zero.

    Computed in exact integer arithmetic: endpoints map 0 -> 0 and
    2**q - 1 -> 2**H - 1.
    """
    lo = (1 << spec.q) - 1
    hi = (1 << spec.H) - 1
    return (2 * x * hi + lo) // (2 * lo)


def bit_replicate_value(x: int, spec: BitDepthSpec) -> int:
    """Write the q source bits cyclically, MSB first, into the H output bits."""
    q, H = spec.q, spec.H
    out = 0
    for i in range(H):
        out = (out << 1) | ((x >> (q - 1 - (i % q))) & 1)
    return out


def _lut(fn, spec: BitDepthSpec) -> np.ndarray:
    return np.array([fn(v, spec) for v in range(1 << spec.q)], dtype=np.uint16)


def _apply(fn, img: ImageBuffer, spec: BitDepthSpec) -> ImageBuffer:
    if img.bit_depth != spec.q:
        raise ValueError(f"image is {img.bit_depth}-bit, spec expects q={spec.q}")
    if img.pixels.size and int(img.pixels.max()) >= (1 << spec.q):
        raise ValueError(f"pixel values exceed the {spec.q}-bit range")
    return ImageBuffer(_lut(fn, spec)[img.pixels], spec.H)


def zero_pad(img: ImageBuffer, spec: BitDepthSpec) -> ImageBuffer:
    return _apply(zero_pad_value, img, spec)


def mig(img: ImageBuffer, spec: BitDepthSpec) -> ImageBuffer:
    return _apply(mig_value, img, spec)


def bit_replicate(img: ImageBuffer, spec: BitDepthSpec) -> ImageBuffer:
    return _apply(bit_replicate_value, img, spec)


EXPANDERS = {"zp": zero_pad, "mig": mig, "br": bit_replicate}
