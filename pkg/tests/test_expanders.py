"""Classical expander tests, including the exhaustive per-value suites."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bitexpand.expanders import (BitDepthSpec, bit_replicate,
                                 bit_replicate_value, mig, mig_value, zero_pad,
                                 zero_pad_value)
from bitexpand.image import ImageBuffer
from bitexpand.pipeline import quantize


def buf(values, bit_depth):
    arr = np.array(values, dtype=np.uint16).reshape(1, -1, 1)
    return ImageBuffer(arr, bit_depth)


class TestSpec:
    def test_valid_range(self):
        BitDepthSpec(1, 2)
        BitDepthSpec(15, 16)

    @pytest.mark.parametrize("q,H", [(0, 8), (8, 8), (8, 4), (3, 17), (16, 17)])
    def test_invalid_rejected(self, q, H):
        with pytest.raises(ValueError):
            BitDepthSpec(q, H)


class TestZeroPad:
    def test_seven_to_224(self):
        assert zero_pad_value(7, BitDepthSpec(3, 8)) == 224

    def test_zero_stays_zero(self):
        assert zero_pad_value(0, BitDepthSpec(3, 8)) == 0

    def test_out_of_range_pixel_rejected(self):
        with pytest.raises(ValueError):
            zero_pad(buf([8], 3), BitDepthSpec(3, 8))


class TestMig:
    @pytest.mark.parametrize("x,q,H,want", [
        (7, 3, 8, 255),          # endpoint
        (4, 3, 8, 146),          # round(4*255/7) = round(145.714)
        (15, 4, 8, 255),         # endpoint
        (0, 5, 12, 0),
    ])
    def test_values(self, x, q, H, want):
        assert mig_value(x, BitDepthSpec(q, H)) == want

    def test_round_half_away_from_zero(self):
        # 1 * 15 / 2 = 7.5 must round up to 8
        assert mig_value(1, BitDepthSpec(1, 4)) == 15  # endpoint; and:
        assert mig_value(1, BitDepthSpec(2, 4)) == 5   # 15/3 exact
        assert mig_value(3, BitDepthSpec(3, 4)) == 6   # 45/7 = 6.43 -> 6
        assert mig_value(4, BitDepthSpec(3, 4)) == 9   # 60/7 = 8.57 -> 9


class TestBitReplicate:
    @pytest.mark.parametrize("x,q,H,want", [
        (0b101, 3, 8, 0b10110110),  # 5 -> 182
        (0xA, 4, 8, 0xAA),          # 10 -> 170
        (7, 3, 8, 255),
        (0, 3, 8, 0),
    ])
    def test_values(self, x, q, H, want):
        assert bit_replicate_value(x, BitDepthSpec(q, H)) == want

    def test_doubling_is_multiplication(self):
        for q in range(1, 9):
            spec = BitDepthSpec(q, 2 * q)
            for x in range(1 << q):
                assert bit_replicate_value(x, spec) == x * ((1 << q) + 1)


class TestExhaustive:
    """Every q in [1,8], every H in (q,16], every source value."""

    @pytest.mark.parametrize("q", range(1, 9))
    def test_quantize_inverts_zero_pad(self, q):
        values = np.arange(1 << q, dtype=np.uint16)
        img = buf(values, q)
        for H in range(q + 1, 17):
            expanded = zero_pad(img, BitDepthSpec(q, H))
            back = quantize(expanded, q)
            np.testing.assert_array_equal(back.pixels, img.pixels)
            assert back.bit_depth == q

    @pytest.mark.parametrize("q", range(1, 9))
    def test_mig_endpoints_and_monotone(self, q):
        values = np.arange(1 << q, dtype=np.uint16)
        for H in range(q + 1, 17):
            out = mig(buf(values, q), BitDepthSpec(q, H)).pixels.ravel()
            assert out[0] == 0
            assert out[-1] == (1 << H) - 1
            assert np.all(np.diff(out.astype(np.int64)) >= 0)

    @pytest.mark.parametrize("q", range(1, 9))
    def test_bit_replicate_cyclic_layout(self, q):
        for H in range(q + 1, 17):
            spec = BitDepthSpec(q, H)
            for x in range(1 << q):
                got = bit_replicate_value(x, spec)
                bits = [(x >> (q - 1 - i)) & 1 for i in range(q)]
                want = 0
                for i in range(H):
                    want = (want << 1) | bits[i % q]
                assert got == want

    @pytest.mark.parametrize("q", range(1, 9))
    def test_all_monotone_and_zero_pad_max(self, q):
        values = np.arange(1 << q, dtype=np.uint16)
        img = buf(values, q)
        for H in range(q + 1, 17):
            spec = BitDepthSpec(q, H)
            for fn in (zero_pad, mig, bit_replicate):
                out = fn(img, spec).pixels.ravel().astype(np.int64)
                assert np.all(np.diff(out) >= 0), fn.__name__
            zp = zero_pad(img, spec).pixels.ravel()
            assert zp[-1] == (1 << H) - (1 << (H - q))


@given(q=st.integers(1, 8), h_extra=st.integers(1, 8),
       data=st.data())
def test_expanders_monotone_property(q, h_extra, data):
    H = min(q + h_extra, 16)
    spec = BitDepthSpec(q, H)
    a = data.draw(st.integers(0, (1 << q) - 1))
    b = data.draw(st.integers(0, (1 << q) - 1))
    lo, hi = min(a, b), max(a, b)
    for fn in (zero_pad_value, mig_value, bit_replicate_value):
        assert fn(lo, spec) <= fn(hi, spec)


def test_channels_processed_independently():
    rng = np.random.default_rng(0)
    px = rng.integers(0, 8, size=(5, 4, 3), dtype=np.uint16)
    img = ImageBuffer(px, 3)
    spec = BitDepthSpec(3, 8)
    out = mig(img, spec)
    for c in range(3):
        chan = ImageBuffer(px[:, :, c : c + 1], 3)
        np.testing.assert_array_equal(out.pixels[:, :, c : c + 1],
                                      mig(chan, spec).pixels)
