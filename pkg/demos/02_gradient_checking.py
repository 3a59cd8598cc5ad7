"""Checking the tensor engine's backward passes with finite differences.

Every gradient the trainer uses is hand-derived; this script shows how the
test suite validates them. Feeding float64 tensors runs the entire engine
in float64, which keeps the finite-difference comparison clean. Run with:

    python3 demos/02_gradient_checking.py
"""

import numpy as np

from bitexpand import ConvParams, conv2d
from bitexpand.ops import conv2d_backward

rng = np.random.default_rng(0)

x = rng.standard_normal((1, 2, 6, 6))
params = ConvParams(weight=rng.standard_normal((3, 2, 3, 3)),
                    bias=rng.standard_normal(3),
                    stride=2, dilation=2)

# scalar objective: project the conv output onto a fixed random direction
proj = rng.standard_normal(conv2d(x, params).shape)


def objective():
    return float((conv2d(x, params) * proj).sum())


grad_x, grad_w, grad_b = conv2d_backward(x, params, proj)

h = 1e-3
print("central differences vs analytic gradient (stride 2, dilation 2)")
for label, arr, analytic in [("input", x, grad_x),
                             ("weight", params.weight, grad_w),
                             ("bias", params.bias, grad_b)]:
    worst = 0.0
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        keep = arr[idx]
        arr[idx] = keep + h
        hi = objective()
        arr[idx] = keep - h
        lo = objective()
        arr[idx] = keep
        fd = (hi - lo) / (2 * h)
        worst = max(worst, abs(fd - analytic[idx]) / max(abs(fd), 1e-9))
        it.iternext()
    print(f"  {label:6s}  {arr.size:3d} entries, max relative error {worst:.2e}")

print("\nanything above 1e-4 here would fail the test suite")
