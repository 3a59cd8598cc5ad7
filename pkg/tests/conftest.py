import numpy as np
import pytest

from bitexpand.image import ImageBuffer


@pytest.fixture
def rng():
    return np.random.default_rng(20_240_913)


def random_image(rng, h, w, channels=3, bit_depth=8) -> ImageBuffer:
    px = rng.integers(0, 1 << bit_depth, size=(h, w, channels), dtype=np.uint16)
    return ImageBuffer(px, bit_depth)


def finite_difference(fn, arr, h=1e-3):
    """Central-difference gradient of scalar fn() w.r.t. every entry of arr."""
    grad = np.zeros_like(arr, dtype=np.float64)
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        keep = arr[idx]
        arr[idx] = keep + h
        hi = fn()
        arr[idx] = keep - h
        lo = fn()
        arr[idx] = keep
        grad[idx] = (hi - lo) / (2.0 * h)
        it.iternext()
    return grad


def max_rel_err(a, b, floor=1e-12):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / scale))


def kink_signs(cache, pred, target):
    """Sign pattern of every non-smooth argument in one network evaluation.

    Central differences are only valid derivative estimates while no
    leaky-ReLU input and no l1 residual changes sign across the two
    evaluation points; comparing these patterns detects invalid samples.
    """
    parts = [np.sign(cache["a0"])]
    for cur, _, red, _ in cache["down"]:
        parts += [np.sign(cur), np.sign(red)]
    for cur, _, cd, _ in cache["up"]:
        parts += [np.sign(cur), np.sign(cd)]
    parts += [np.sign(g) for g in cache["ups"]]
    parts += [np.sign(cache["tsum"]), np.sign(cache["y0"]),
              np.sign(pred - target)]
    return np.concatenate([p.ravel() for p in parts])
