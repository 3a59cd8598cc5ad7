"""Applying a trained network to integer images end to end."""

from __future__ import annotations

import numpy as np

from .expanders import BitDepthSpec, zero_pad
from .image import ImageBuffer
from .model import BitNetModel, crop, forward, forward_chan, pad_to_multiple
from .ops import concat_channels


def expand_image(model: BitNetModel, lbd: ImageBuffer, spec: BitDepthSpec) -> ImageBuffer:
    """ZP-expand, normalize, run the network, re-quantize to H bits.

    The coarse expansion is normalized by 2**H - 1, the bit-info channel
    (when the model uses one) is the constant 1/(2**q - 1), the spatial
    size is reflect-padded to the stage multiple, and the network output is
    clamped to [0, 1] before rounding half away from zero back to integers.
    """
    cfg = model.config
    if cfg.variant == "rgb" and lbd.channels != 3:
        raise ValueError("rgb model expects a 3-channel image")
    coarse = zero_pad(lbd, spec)
    peak = np.float32((1 << spec.H) - 1)
    x = coarse.pixels.transpose(2, 0, 1)[None].astype(np.float32) / peak
    if cfg.use_bit_info:
        info = np.full_like(x[:, :1], np.float32(1.0 / ((1 << spec.q) - 1)))
        x = concat_channels(x, info)
    x, spec_crop = pad_to_multiple(x, 1 << cfg.num_stages)
    if cfg.variant == "chan" and lbd.channels == 3:
        y = forward_chan(model, x)
    else:
        y = forward(model, x)
    y = crop(y, spec_crop)
    y = np.clip(y[0].transpose(1, 2, 0), 0.0, 1.0).astype(np.float64)
    px = np.floor(y * float(peak) + 0.5).astype(np.uint16)
    return ImageBuffer(np.minimum(px, (1 << spec.H) - 1), spec.H)


def network_expander(model: BitNetModel):
    """Wrap a model as an (ImageBuffer, BitDepthSpec) -> ImageBuffer callable."""
    def run(lbd: ImageBuffer, spec: BitDepthSpec) -> ImageBuffer:
        return expand_image(model, lbd, spec)
    return run
