"""Synthetic smooth-gradient + texture images for desk-scale experiments.

Quantizing these to a few bits produces pronounced banding over smooth
regions, which is exactly what the network is supposed to undo, while the
low-amplitude texture keeps the task from being trivially smooth.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .image import ImageBuffer, write_png
from .rng import RandomStream


def smooth_texture_image(stream: RandomStream, size: int = 128,
                         bit_depth: int = 8, channels: int = 3) -> ImageBuffer:
    """One random image: low-frequency color field plus faint texture."""
    coords = (np.arange(size, dtype=np.float64) + 0.5) / size
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    base = np.zeros((size, size))
    for _ in range(3):
        theta = stream.uniform(0.0, 2.0 * np.pi)
        freq = stream.uniform(0.3, 1.4)
        phase = stream.uniform(0.0, 2.0 * np.pi)
        amp = stream.uniform(0.4, 1.0)
        base += amp * np.cos(2.0 * np.pi * freq *
                             (np.cos(theta) * xx + np.sin(theta) * yy) + phase)
    cy, cx = stream.uniform(0.2, 0.8), stream.uniform(0.2, 0.8)
    radius = stream.uniform(0.2, 0.6)
    base += stream.uniform(-1.0, 1.0) * np.exp(
        -((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * radius * radius))

    planes = []
    for _ in range(channels):
        gain = stream.uniform(0.6, 1.0)
        tilt = (stream.uniform(-0.4, 0.4) * xx + stream.uniform(-0.4, 0.4) * yy)
        tfreq = stream.uniform(6.0, 14.0)
        tphase = stream.uniform(0.0, 2.0 * np.pi)
        texture = stream.uniform(0.01, 0.03) * (
            np.sin(2.0 * np.pi * tfreq * xx + tphase) *
            np.sin(2.0 * np.pi * tfreq * yy + tphase))
        planes.append(gain * base + tilt + texture)
    img = np.stack(planes, axis=-1)
    img -= img.min()
    peak = img.max()
    if peak > 0:
        img /= peak
    maxval = (1 << bit_depth) - 1
    px = np.floor(img * maxval + 0.5).astype(np.uint16)
    return ImageBuffer(px, bit_depth)


def synthetic_corpus(out_dir, count: int, size: int = 128, bit_depth: int = 8,
                     channels: int = 3, seed: int = 10_000) -> list[Path]:
    """Write `count` deterministic PNGs named synth_0000.png... into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stream = RandomStream(seed)
    paths = []
    for i in range(count):
        img = smooth_texture_image(stream, size, bit_depth, channels)
        path = out / f"synth_{i:04d}.png"
        write_png(path, img)
        paths.append(path)
    return paths
