"""Tour of the closed-form expanders: zero padding, ideal gain, bit replication.

Builds a smooth 8-bit ramp, truncates it to 3 bits, expands it back with
each method and compares the reconstructions. Run with:

    python3 demos/01_classical_expanders.py
"""

import numpy as np

from bitexpand import BitDepthSpec, ImageBuffer, bit_replicate, mig, psnr, zero_pad
from bitexpand.pipeline import quantize

# A horizontal ramp covering the full 8-bit range: the classic banding victim.
ramp = np.tile(np.arange(256, dtype=np.uint16), (64, 1))[:, :, None]
original = ImageBuffer(ramp, 8)

low = quantize(original, 3)
print(f"original: 8-bit, {original.width}x{original.height}")
print(f"quantized to 3 bits -> values in [0, {int(low.pixels.max())}]")

spec = BitDepthSpec(3, 8)
for name, expander in [("zero padding", zero_pad),
                       ("ideal gain", mig),
                       ("bit replication", bit_replicate)]:
    restored = expander(low, spec)
    row = restored.pixels[0, ::32, 0]
    print(f"\n{name}:")
    print(f"  sample row  {list(map(int, row))}")
    print(f"  PSNR vs original  {psnr(original, restored):.2f} dB")

# The three methods place the reconstructed levels differently inside each
# quantization bin: ZP sits at the bottom (biased dark), MIG and BR spread
# the levels so the endpoints map to 0 and 255.
print("\nper-value maps for the first 8 codes:")
print("  code  zp   mig  br")
for v in range(8):
    single = ImageBuffer(np.full((1, 1, 1), v, np.uint16), 3)
    zp_v = int(zero_pad(single, spec).pixels[0, 0, 0])
    mig_v = int(mig(single, spec).pixels[0, 0, 0])
    br_v = int(bit_replicate(single, spec).pixels[0, 0, 0])
    print(f"  {v:4d}  {zp_v:3d}  {mig_v:3d}  {br_v:3d}")
