"""Deterministic random stream used everywhere randomness is needed.

The generator is xorshift64* (shift triple 12/25/27, multiplier
0x2545F4914F6CDD1D) seeded through one round of splitmix64, so a given
seed produces the identical draw sequence on every platform and Python
build. All arithmetic is plain Python integers masked to 64 bits; no
floating-point state is involved.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_XORSHIFT_MULT = 0x2545F4914F6CDD1D
_DOUBLE_SCALE = 1.0 / (1 << 53)


def splitmix64(x: int) -> int:
    """One splitmix64 step: mixes x into a well-distributed 64-bit value."""
    x = (x + _SPLITMIX_GAMMA) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(a: int, b: int) -> int:
    """Combine two integers into one substream seed (order-sensitive)."""
    return splitmix64((a & MASK64) ^ splitmix64(b & MASK64))


def fnv1a64(text: str) -> int:
    """FNV-1a hash of a UTF-8 string, for deriving per-name substreams."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


class RandomStream:
    """xorshift64* stream with the small draw vocabulary the pipeline needs."""

    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        # xorshift state must be nonzero; splitmix64 maps exactly one seed to 0.
        self.state = state if state != 0 else _SPLITMIX_GAMMA

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _XORSHIFT_MULT) & MASK64

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform double in [lo, hi) built from the top 53 bits of one draw."""
        return lo + (hi - lo) * ((self.next_u64() >> 11) * _DOUBLE_SCALE)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive.

        Uses a plain modulo reduction; for the tiny ranges drawn here the
        bias is below 2**-57 and irrelevant, while the reduction keeps the
        stream trivially reproducible in any language.
        """
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.next_u64() % (hi - lo + 1)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]

    def spawn(self, tag: str) -> "RandomStream":
        """Independent child stream derived from this stream's seed position."""
        return RandomStream(mix64(self.next_u64(), fnv1a64(tag)))
