"""Network construction, forward graph, initialization and gradient tests."""

import numpy as np
import pytest

from bitexpand.model import (BitNetConfig, backward, build, crop, forward,
                             forward_chan, layer_table, pad_to_multiple)
from bitexpand.ops import conv2d, l1_loss

from conftest import max_rel_err

SMALL = BitNetConfig(num_stages=2, widths=(4, 8))


class TestConfig:
    def test_width_count_must_match_stages(self):
        with pytest.raises(ValueError):
            BitNetConfig(num_stages=3, widths=(8, 16))

    def test_bad_dilation(self):
        with pytest.raises(ValueError):
            BitNetConfig(r_d=3)

    def test_chan_input_channels_with_bit_info(self):
        cfg = BitNetConfig(variant="chan", num_stages=2, widths=(4, 8))
        assert cfg.in_channels == 2
        assert cfg.out_channels == 1

    def test_rgb_input_channels_without_bit_info(self):
        cfg = BitNetConfig(use_bit_info=False)
        assert cfg.in_channels == 3


class TestBuild:
    def test_two_builds_bit_identical(self):
        a = build(BitNetConfig(), seed=42)
        b = build(BitNetConfig(), seed=42)
        for pa, pb in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa, pb)

    def test_seed_changes_xavier_layers_only(self):
        a = build(BitNetConfig(), seed=1)
        b = build(BitNetConfig(), seed=2)
        assert not np.array_equal(a.layers["tail.1"].weight, b.layers["tail.1"].weight)
        np.testing.assert_array_equal(a.layers["head.0"].weight,
                                      b.layers["head.0"].weight)

    def test_default_parameter_count_closed_form(self):
        # layer list of the default config, written out independently:
        # (c_out, c_in, k) with the transposed layers as (in, out, k)
        layers = [
            (16, 4, 3), (16, 16, 3),             # head
            (16, 16, 3), (16, 16, 3),            # down1
            (32, 16, 3), (32, 32, 3),            # down2
            (64, 32, 3), (64, 64, 3),            # down3
            (128, 64, 3), (128, 128, 3),         # down4
            (128, 128, 3), (128, 64, 3),         # up4 (tconv bias on 64)
            (64, 64, 3), (64, 32, 3),            # up3
            (32, 32, 3), (32, 16, 3),            # up2
            (16, 16, 3), (16, 16, 3),            # up1
            (16, 16, 1), (16, 16, 1), (16, 32, 1), (16, 64, 1),  # msfi 1x1
            (16, 16, 3), (3, 16, 1),             # tail
        ]
        tconv_rows = {11, 13, 15, 17}  # bias counts the second channel entry
        want = 0
        for i, (a, b, k) in enumerate(layers):
            want += k * k * a * b + (b if i in tconv_rows else a)
        assert build(BitNetConfig(), seed=0).num_parameters() == want

    def test_chan_variant_first_layer_input(self):
        m = build(BitNetConfig(variant="chan", num_stages=2, widths=(4, 8)), seed=0)
        assert m.layers["head.0"].weight.shape[1] == 2

    def test_identity_init_center_tap(self):
        m = build(SMALL, seed=0)
        spec = {s.name: s for s in layer_table(SMALL)}
        rng = np.random.default_rng(3)
        for name, p in m.layers.items():
            if p.weight.shape[2] != 3 or spec[name].kind != "conv":
                continue
            if spec[name].stride != 1:
                continue
            ci = p.weight.shape[1]
            x = rng.random((1, ci, 8, 8), dtype=np.float32)
            out = conv2d(x, p)
            for j in range(p.weight.shape[0]):
                np.testing.assert_array_equal(out[:, j], x[:, j % ci])

    def test_identity_init_stride2_subsamples(self):
        m = build(SMALL, seed=0)
        p = m.layers["down1.reduce"]
        ci = p.weight.shape[1]
        x = np.random.default_rng(4).random((1, ci, 8, 8), dtype=np.float32)
        out = conv2d(x, p)
        for j in range(p.weight.shape[0]):
            np.testing.assert_array_equal(out[0, j], x[0, j % ci, ::2, ::2])

    def test_xavier_bound(self):
        m = build(BitNetConfig(), seed=5)
        w = m.layers["msfi.3"].weight  # 1x1, 64 -> 16
        bound = np.sqrt(6.0 / (64 + 16))
        assert np.abs(w).max() <= bound
        assert np.abs(w).max() > 0.1 * bound


class TestForward:
    def test_default_output_shape(self):
        m = build(BitNetConfig(), seed=0)
        x = np.random.default_rng(0).random((1, 4, 64, 64), dtype=np.float32)
        assert forward(m, x).shape == (1, 3, 64, 64)

    def test_deterministic(self):
        m = build(SMALL, seed=0)
        x = np.random.default_rng(1).random((1, 4, 16, 16), dtype=np.float32)
        np.testing.assert_array_equal(forward(m, x), forward(m, x))

    def test_indivisible_size_raises(self):
        m = build(SMALL, seed=0)
        with pytest.raises(ValueError):
            forward(m, np.zeros((1, 4, 10, 16), np.float32))

    def test_channel_mismatch_raises(self):
        m = build(SMALL, seed=0)
        with pytest.raises(ValueError):
            forward(m, np.zeros((1, 3, 16, 16), np.float32))

    def test_spatial_dims_preserved(self):
        m = build(SMALL, seed=0)
        x = np.random.default_rng(2).random((2, 4, 24, 32), dtype=np.float32)
        assert forward(m, x).shape == (2, 3, 24, 32)

    def test_msfi_disconnect_all_equals_msfi_off(self):
        on = build(BitNetConfig(num_stages=2, widths=(4, 8),
                                msfi_disconnect_from_smallest=2), seed=9)
        off = build(BitNetConfig(num_stages=2, widths=(4, 8), use_msfi=False), seed=9)
        x = np.random.default_rng(3).random((1, 4, 16, 16), dtype=np.float32)
        np.testing.assert_array_equal(forward(on, x), forward(off, x))

    def test_msfi_changes_output(self):
        # xavier 1x1 projections are nonzero, so the integrated graph differs
        on = build(SMALL, seed=9)
        off = build(BitNetConfig(num_stages=2, widths=(4, 8), use_msfi=False), seed=9)
        x = np.random.default_rng(3).random((1, 4, 16, 16), dtype=np.float32)
        assert not np.array_equal(forward(on, x), forward(off, x))


class TestForwardChan:
    CFG = BitNetConfig(variant="chan", num_stages=2, widths=(4, 8))

    def test_channel_zero_matches_single_forward(self):
        m = build(self.CFG, seed=1)
        x = np.random.default_rng(5).random((1, 4, 16, 16), dtype=np.float32)
        full = forward_chan(m, x)
        single = forward(m, np.concatenate([x[:, 0:1], x[:, 3:4]], axis=1))
        np.testing.assert_array_equal(full[:, 0:1], single)

    def test_permutation_commutes(self):
        m = build(self.CFG, seed=1)
        x = np.random.default_rng(6).random((1, 4, 16, 16), dtype=np.float32)
        perm = [2, 0, 1]
        xp = np.concatenate([x[:, perm], x[:, 3:4]], axis=1)
        np.testing.assert_array_equal(forward_chan(m, xp), forward_chan(m, x)[:, perm])

    def test_gray_image_gives_equal_channels(self):
        m = build(self.CFG, seed=1)
        g = np.random.default_rng(7).random((1, 1, 16, 16), dtype=np.float32)
        x = np.concatenate([g, g, g, np.full_like(g, 0.2)], axis=1)
        out = forward_chan(m, x)
        np.testing.assert_array_equal(out[:, 0], out[:, 1])
        np.testing.assert_array_equal(out[:, 0], out[:, 2])

    def test_rgb_model_rejected(self):
        m = build(SMALL, seed=1)
        with pytest.raises(ValueError):
            forward_chan(m, np.zeros((1, 4, 16, 16), np.float32))


class TestPadCrop:
    def test_aligned_is_unchanged(self):
        x = np.random.default_rng(0).random((1, 3, 768, 512), dtype=np.float32)
        padded, spec = pad_to_multiple(x, 16)
        assert padded is x
        assert spec == (768, 512)

    def test_square_aligned(self):
        x = np.zeros((1, 1, 800, 800), np.float32)
        padded, _ = pad_to_multiple(x, 16)
        assert padded.shape == (1, 1, 800, 800)

    def test_roundtrip(self):
        x = np.random.default_rng(1).random((1, 2, 5, 7), dtype=np.float32)
        padded, spec = pad_to_multiple(x, 4)
        assert padded.shape == (1, 2, 8, 8)
        np.testing.assert_array_equal(crop(padded, spec), x)


class TestEndToEndGradient:
    def test_sampled_weights_match_finite_differences(self):
        from conftest import kink_signs
        model = build(SMALL, seed=3).astype(np.float64)
        rng = np.random.default_rng(7)
        x = rng.random((1, 4, 16, 16))
        # residuals held away from the l1 tie so the loss is locally smooth
        target = forward(model, x) - 0.25 - 0.1 * rng.random((1, 3, 16, 16))

        cache = {}
        loss, gp = l1_loss(forward(model, x, cache), target)
        grads = backward(model, cache, gp)
        h = 1e-4
        checked = 0
        for name in model.layers:
            params = model.layers[name]
            for arr, g in ((params.weight, grads[name][0]),
                           (params.bias, grads[name][1])):
                for _ in range(2):
                    idx = tuple(rng.integers(0, s) for s in arr.shape)
                    keep = arr[idx]
                    arr[idx] = keep + h
                    c_hi = {}
                    p_hi = forward(model, x, c_hi)
                    hi = l1_loss(p_hi, target)[0]
                    arr[idx] = keep - h
                    c_lo = {}
                    p_lo = forward(model, x, c_lo)
                    lo = l1_loss(p_lo, target)[0]
                    arr[idx] = keep
                    # a central difference that crosses a leaky-ReLU kink or
                    # an l1 tie is not a derivative estimate; skip it
                    if not np.array_equal(kink_signs(c_hi, p_hi, target),
                                          kink_signs(c_lo, p_lo, target)):
                        continue
                    fd = (hi - lo) / (2 * h)
                    rel = abs(fd - g[idx]) / max(abs(fd), abs(g[idx]), 1e-12)
                    checked += 1
                    assert rel < 1e-3, f"{name}[{idx}]: fd={fd} analytic={g[idx]}"
        assert checked >= 50
