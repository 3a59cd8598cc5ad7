"""Quantization data pipeline: HBD -> LBD pairs, augmentation, dataset stream.

A training pair is built by truncating a high-bit-depth image to q bits,
zero-padding it back to the target depth, normalizing to [0, 1] and
appending a constant bit-info channel of value 1/(2**q - 1) (the
normalized quantization step). Augmentation draws come from the package's
fixed xorshift64* stream, so a seed reproduces the identical sample
sequence everywhere.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .expanders import BitDepthSpec, zero_pad
from .image import ImageBuffer, read_png
from .ops import bilinear_resize
from .rng import RandomStream, mix64

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplePair:
    """One training unit: network input, target tensor and source depth q."""

    input: np.ndarray   # (1, c+1, h, w) float32 in [0, 1], bit-info last
    target: np.ndarray  # (1, c, h, w) float32 in [0, 1]
    q: int


@dataclass(frozen=True)
class AugmentConfig:
    hflip_prob: float = 0.5
    scale_range: tuple[float, float] = (0.5, 1.0)
    bit_depth_range: tuple[int, int] = (3, 6)
    patch_size: int = 128  # 0 disables patch cropping
    seed: int = 10_000

    def __post_init__(self):
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ValueError("hflip_prob must be in [0, 1]")
        if not 0.0 < self.scale_range[0] <= self.scale_range[1] <= 1.0:
            raise ValueError(f"bad scale_range {self.scale_range}")
        if not 1 <= self.bit_depth_range[0] <= self.bit_depth_range[1] <= 15:
            raise ValueError(f"bad bit_depth_range {self.bit_depth_range}")
        if self.patch_size < 0:
            raise ValueError("patch_size must be >= 0")


def quantize(img: ImageBuffer, q: int) -> ImageBuffer:
    """Truncate to the top q bits (y = x >> (b - q))."""
    if q >= img.bit_depth:
        raise ValueError(f"q={q} must be below the image bit-depth {img.bit_depth}")
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return ImageBuffer(img.pixels >> (img.bit_depth - q), q)


def _chw(img: ImageBuffer) -> np.ndarray:
    return img.pixels.transpose(2, 0, 1)[None].astype(np.float32)


def make_pair(hbd: ImageBuffer, q: int, target_bits: int) -> SamplePair:
    """Build the (ZP-expanded input + bit-info, normalized target, q) pair."""
    if not q < target_bits <= hbd.bit_depth:
        raise ValueError(
            f"need q < target_bits <= image depth, got q={q}, "
            f"target_bits={target_bits}, depth={hbd.bit_depth}")
    truth = quantize(hbd, target_bits) if target_bits < hbd.bit_depth else hbd
    lbd = quantize(truth, q)
    coarse = zero_pad(lbd, BitDepthSpec(q, target_bits))
    peak = np.float32((1 << target_bits) - 1)
    inp = _chw(coarse) / peak
    info = np.full_like(inp[:, :1], np.float32(1.0 / ((1 << q) - 1)))
    return SamplePair(input=np.concatenate([inp, info], axis=1),
                      target=_chw(truth) / peak,
                      q=q)


def hflip(img: ImageBuffer) -> ImageBuffer:
    return img.with_pixels(np.ascontiguousarray(img.pixels[:, ::-1]))


def rescale(img: ImageBuffer, factor: float) -> ImageBuffer:
    """Bilinear rescale of the raster (half-pixel convention), rounded back."""
    if factor == 1.0:
        return img
    out_h = max(1, int(round(img.height * factor)))
    out_w = max(1, int(round(img.width * factor)))
    resized = bilinear_resize(
        img.pixels.transpose(2, 0, 1).astype(np.float64), out_h, out_w)
    px = np.clip(np.floor(resized + 0.5), 0, img.max_value).astype(np.uint16)
    return img.with_pixels(px.transpose(1, 2, 0))


def augment(hbd: ImageBuffer, cfg: AugmentConfig, stream: RandomStream):
    """Apply flip/scale/bit-depth/patch draws, in that fixed order.

    Returns (image, q). Images smaller than the patch size skip the crop
    with a warning.
    """
    img = hbd
    if stream.uniform() < cfg.hflip_prob:
        img = hflip(img)
    img = rescale(img, stream.uniform(cfg.scale_range[0], cfg.scale_range[1]))
    q = stream.randint(cfg.bit_depth_range[0], cfg.bit_depth_range[1])
    if cfg.patch_size > 0:
        ps = cfg.patch_size
        if img.height < ps or img.width < ps:
            log.warning("image %dx%d smaller than patch %d, skipping crop",
                        img.width, img.height, ps)
        else:
            top = stream.randint(0, img.height - ps)
            left = stream.randint(0, img.width - ps)
            img = img.with_pixels(
                np.ascontiguousarray(img.pixels[top : top + ps, left : left + ps]))
    return img, q


def list_corpus(dir_path) -> list[Path]:
    """Filename-sorted PNG paths of a corpus directory."""
    root = Path(dir_path)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    return sorted(p for p in root.iterdir() if p.suffix.lower() == ".png")


def split_corpus(paths: list[Path], train_fraction: float):
    """Deterministic split by sorted index: first chunk train, rest eval."""
    n_train = int(len(paths) * train_fraction)
    return paths[:n_train], paths[n_train:]


def load_corpus_image(path: Path) -> ImageBuffer | None:
    """Read one corpus file; unusable files return None with a warning."""
    try:
        return read_png(path)
    except Exception as exc:
        log.warning("skipping %s: %s", path.name, exc)
        return None


def dataset_iter(dir_path, split_spec, cfg: AugmentConfig,
                 target_bits: int | None = None):
    """Yield one epoch of SamplePairs from a directory of PNGs.

    split_spec is ("train" | "eval" | "all", train_fraction); the split is
    over filename-sorted paths. Epoch order is a seeded shuffle of the
    selected files; each file then consumes its own augmentation draws, so
    the stream is reproducible from cfg.seed alone. target_bits defaults to
    each image's native depth.
    """
    role, fraction = split_spec
    paths = list_corpus(dir_path)
    if not paths:
        raise FileNotFoundError(f"no PNG files in {dir_path}")
    train, heldout = split_corpus(paths, fraction)
    selected = {"train": train, "eval": heldout, "all": paths}[role]
    stream = RandomStream(cfg.seed)
    order = list(selected)
    stream.shuffle(order)
    for path in order:
        img = load_corpus_image(path)
        if img is None:
            continue
        img, q = augment(img, cfg, stream)
        bits = target_bits if target_bits is not None else img.bit_depth
        yield make_pair(img, q, bits)


def epoch_seed(seed: int, epoch: int) -> int:
    """Substream seed for one training epoch."""
    return mix64(seed, epoch)
