"""Integer raster with an explicit bit-depth, plus PNG reading and writing.

Pixels live in a (height, width, channels) uint16 array; channels is 1 or 3
and every value is below 2**bit_depth. PNG files hold 8- or 16-bit samples,
so a buffer is stored in the smallest PNG depth that fits its bit-depth.
The codec underneath is OpenCV, wrapped here so the rest of the package
never sees BGR ordering or alpha planes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImageBuffer:
    pixels: np.ndarray  # (h, w, c) uint16
    bit_depth: int

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"pixels must be (h, w, 1|3), got shape {px.shape}")
        if px.dtype != np.uint16:
            raise ValueError(f"pixels must be uint16, got {px.dtype}")
        if not 1 <= self.bit_depth <= 16:
            raise ValueError(f"bit_depth must be in [1, 16], got {self.bit_depth}")
        if px.size and int(px.max()) >= (1 << self.bit_depth):
            raise ValueError(
                f"pixel value {int(px.max())} out of range for {self.bit_depth}-bit")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    def with_pixels(self, pixels: np.ndarray, bit_depth: int | None = None):
        return ImageBuffer(pixels, self.bit_depth if bit_depth is None else bit_depth)


def from_array(arr: np.ndarray, bit_depth: int) -> ImageBuffer:
    """Build an ImageBuffer from any integer array shaped (h, w) or (h, w, c)."""
    a = np.asarray(arr)
    if a.ndim == 2:
        a = a[:, :, None]
    return ImageBuffer(np.ascontiguousarray(a.astype(np.uint16)), bit_depth)


def png_depth_for(bit_depth: int) -> int:
    """Smallest PNG sample depth (8 or 16) that can hold bit_depth values."""
    return 8 if bit_depth <= 8 else 16


def read_png(path) -> ImageBuffer:
    """Read an 8- or 16-bit PNG as an ImageBuffer at the file's sample depth.

    Alpha channels are stripped with a warning; other sample depths raise.
    """
    path = Path(path)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IOError(f"cannot read PNG: {path}")
    if raw.dtype == np.uint8:
        depth = 8
    elif raw.dtype == np.uint16:
        depth = 16
    else:
        raise IOError(f"unsupported PNG sample depth ({raw.dtype}) in {path}")
    if raw.ndim == 2:
        px = raw[:, :, None]
    elif raw.shape[2] == 4:
        log.warning("stripping alpha channel from %s", path)
        px = raw[:, :, 2::-1]  # BGRA -> RGB
    elif raw.shape[2] == 3:
        px = raw[:, :, ::-1]  # BGR -> RGB
    elif raw.shape[2] == 2:
        log.warning("stripping alpha channel from %s", path)
        px = raw[:, :, :1]
    else:
        raise IOError(f"unsupported channel count {raw.shape[2]} in {path}")
    return ImageBuffer(np.ascontiguousarray(px).astype(np.uint16), depth)


def write_png(path, img: ImageBuffer) -> None:
    """Write the buffer to a PNG of depth png_depth_for(img.bit_depth)."""
    path = Path(path)
    depth = png_depth_for(img.bit_depth)
    px = img.pixels.astype(np.uint8 if depth == 8 else np.uint16)
    if img.channels == 3:
        px = px[:, :, ::-1]  # RGB -> BGR
    else:
        px = px[:, :, 0]
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), np.ascontiguousarray(px)):
        raise IOError(f"cannot write PNG: {path}")
