"""Bit-depth expansion toolkit.

Classical closed-form expanders (zero padding, multiplication by ideal
gain, bit replication), a trainable encoder-decoder expansion network on a
minimal numpy tensor engine, the quantization training pipeline, and
PSNR/SSIM evaluation. See the demos/ scripts for guided tours and the
`bitexpand` command for batch use.
"""

from .expanders import BitDepthSpec, bit_replicate, mig, zero_pad
from .image import ImageBuffer, from_array, read_png, write_png
from .inference import expand_image, network_expander
from .metrics import MetricReport, evaluate, psnr, ssim
from .model import (BitNetConfig, BitNetModel, build, crop, forward,
                    forward_chan, pad_to_multiple)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .optim import AdamState, adam_step
from .ops import (ConvParams, add, bilinear_resize, bilinear_upsample,
                  concat_channels, conv2d, l1_loss, leaky_relu,
                  transposed_conv2d)
from .pipeline import AugmentConfig, SamplePair, augment, dataset_iter, make_pair, quantize
from .rng import RandomStream

__version__ = "0.1.0"

__all__ = [
    "AdamState", "AugmentConfig", "BitDepthSpec", "BitNetConfig", "BitNetModel",
    "CheckpointError", "ConvParams", "ImageBuffer", "MetricReport", "RandomStream",
    "SamplePair", "adam_step", "add", "augment", "bilinear_resize",
    "bilinear_upsample", "bit_replicate", "build", "concat_channels", "conv2d",
    "crop", "dataset_iter", "evaluate", "expand_image", "forward", "forward_chan",
    "from_array", "l1_loss", "leaky_relu", "load_checkpoint", "make_pair", "mig",
    "network_expander", "pad_to_multiple", "psnr", "quantize", "read_png",
    "save_checkpoint", "ssim", "transposed_conv2d", "write_png", "zero_pad",
]
