"""Dense tensor operations for the expansion network, forward and backward.

Tensors are numpy arrays of shape (batch, channels, height, width). Every
operation computes in the dtype of its input and returns that dtype, so
feeding float64 tensors runs the whole pipeline in float64; the
finite-difference tests rely on that. Loss sums and other scalar
reductions always accumulate in float64.

All functions are pure and deterministic; no global state.
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass


@dataclass(frozen=True)
class ConvParams:
    """Weights of one convolution layer.

    weight is (c_out, c_in, k, k) for `conv2d`. For `transposed_conv2d` the
    same layout is read as (op_input_channels, op_output_channels, k, k):
    the transposed op is the linear adjoint of `conv2d` with this weight,
    so its channel axes swap roles and its bias has weight.shape[1] entries.
    """

    weight: np.ndarray
    bias: np.ndarray
    stride: int = 1
    dilation: int = 1

    def __post_init__(self):
        w = self.weight
        if w.ndim != 4:
            raise ValueError(f"weight must be 4-D, got shape {w.shape}")
        if w.shape[2] != w.shape[3] or w.shape[2] % 2 == 0:
            raise ValueError(f"kernel must be square with odd size, got {w.shape[2:]}")
        if self.bias.ndim != 1:
            raise ValueError("bias must be a vector")
        if self.stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {self.stride}")
        if self.dilation not in (1, 2):
            raise ValueError(f"dilation must be 1 or 2, got {self.dilation}")


def _check_image(x: np.ndarray, name: str = "input") -> None:
    if x.ndim != 4:
        raise ValueError(f"{name} must be (n, c, h, w), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"{name} contains non-finite values")


def _work_dtype(*arrays) -> np.dtype:
    """float64 when any operand is float64, float32 otherwise."""
    if any(a.dtype == np.float64 for a in arrays):
        return np.dtype(np.float64)
    return np.dtype(np.float32)


def _pad_same(x: np.ndarray, ph: int, pw: int, dtype) -> np.ndarray:
    """Zero-pad height/width symmetrically in the working dtype."""
    n, c, h, w = x.shape
    out = np.zeros((n, c, h + 2 * ph, w + 2 * pw), dtype=dtype)
    out[:, :, ph : ph + h, pw : pw + w] = x
    return out


def _geometry(p: ConvParams):
    k = p.weight.shape[2]
    ek = (k - 1) * p.dilation + 1  # effective kernel extent
    pad = (ek - 1) // 2
    return k, pad


_BLOCK_BYTES = 1 << 22  # im2col blocks this size keep the GEMM operands cached


def conv2d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Dilated cross-correlation with symmetric same-zero padding.

    Output spatial size is ceil(h / stride) x ceil(w / stride); output
    channels come from weight.shape[0]. Implemented as an im2col matmul
    over blocks of output rows.
    """
    _check_image(x)
    co, ci, _, _ = p.weight.shape
    if x.shape[1] != ci:
        raise ValueError(f"input has {x.shape[1]} channels, weight expects {ci}")
    if p.bias.shape != (co,):
        raise ValueError(f"bias must have {co} entries, got {p.bias.shape}")
    n, _, h, w = x.shape
    k, pad = _geometry(p)
    s, d = p.stride, p.dilation
    oh = -(-h // s)
    ow = -(-w // s)
    work = _work_dtype(x, p.weight)
    xp = _pad_same(x, pad, pad, work)
    kern = p.weight.astype(work, copy=False)
    wmat = np.ascontiguousarray(kern.transpose(1, 2, 3, 0).reshape(ci * k * k, co))
    out = np.empty((n, co, oh, ow), dtype=work)
    block = max(1, min(oh, _BLOCK_BYTES // max(1, ow * ci * k * k * work.itemsize)))
    cols = np.empty((block, ow, ci, k, k), dtype=work)
    for b in range(n):
        for r0 in range(0, oh, block):
            r1 = min(r0 + block, oh)
            cb = cols[: r1 - r0]
            for i in range(k):
                for j in range(k):
                    taps = xp[b, :, i * d + r0 * s : i * d + (r1 - 1) * s + 1 : s,
                                    j * d : j * d + (ow - 1) * s + 1 : s]
                    cb[:, :, :, i, j] = taps.transpose(1, 2, 0)
            prod = cb.reshape((r1 - r0) * ow, ci * k * k) @ wmat
            out[b, :, r0:r1] = prod.reshape(r1 - r0, ow, co).transpose(2, 0, 1)
    out += p.bias.astype(work, copy=False)[None, :, None, None]
    return out.astype(x.dtype)


def conv2d_backward(x: np.ndarray, p: ConvParams, grad_out: np.ndarray):
    """Gradients of conv2d: returns (grad_x, grad_weight, grad_bias)."""
    _check_image(x)
    _check_image(grad_out, "grad_out")
    co, ci, _, _ = p.weight.shape
    n, _, h, w = x.shape
    k, pad = _geometry(p)
    s, d = p.stride, p.dilation
    oh = -(-h // s)
    ow = -(-w // s)
    if grad_out.shape != (n, co, oh, ow):
        raise ValueError(
            f"grad_out shape {grad_out.shape} does not match output {(n, co, oh, ow)}")
    work = _work_dtype(x, p.weight, grad_out)
    xp = _pad_same(x, pad, pad, work)
    go = grad_out.astype(work, copy=False)
    kern = p.weight.astype(work, copy=False)
    grad_w = np.zeros_like(kern)
    gxp = np.zeros_like(xp)
    for i in range(k):
        for j in range(k):
            hs = slice(i * d, i * d + (oh - 1) * s + 1, s)
            ws = slice(j * d, j * d + (ow - 1) * s + 1, s)
            grad_w[:, :, i, j] = np.tensordot(go, xp[:, :, hs, ws],
                                              axes=([0, 2, 3], [0, 2, 3]))
            spread = np.tensordot(go, kern[:, :, i, j], axes=([1], [0]))
            gxp[:, :, hs, ws] += spread.transpose(0, 3, 1, 2)
    grad_x = gxp[:, :, pad : pad + h, pad : pad + w]
    grad_b = grad_out.sum(axis=(0, 2, 3), dtype=np.float64)
    return (grad_x.astype(x.dtype), grad_w.astype(p.weight.dtype),
            grad_b.astype(p.bias.dtype))


def transposed_conv2d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Fractionally strided convolution: doubles height and width.

    Exact linear adjoint of the stride-2 `conv2d` with the same weight
    (plus a bias over the op's own output channels, weight.shape[1]).
    """
    _check_image(x)
    if p.stride != 2:
        raise ValueError("transposed_conv2d implements the upsampling-by-2 case only")
    cin_op, cout_op = p.weight.shape[0], p.weight.shape[1]
    if x.shape[1] != cin_op:
        raise ValueError(f"input has {x.shape[1]} channels, weight expects {cin_op}")
    if p.bias.shape != (cout_op,):
        raise ValueError(f"bias must have {cout_op} entries, got {p.bias.shape}")
    n, _, hy, wy = x.shape
    k, pad = _geometry(p)
    d, s = p.dilation, 2
    h2, w2 = 2 * hy, 2 * wy
    work = _work_dtype(x, p.weight)
    gxp = np.zeros((n, cout_op, h2 + 2 * pad, w2 + 2 * pad), dtype=work)
    xw = x.astype(work, copy=False)
    kern = p.weight.astype(work, copy=False)
    for i in range(k):
        for j in range(k):
            hs = slice(i * d, i * d + (hy - 1) * s + 1, s)
            ws = slice(j * d, j * d + (wy - 1) * s + 1, s)
            spread = np.tensordot(xw, kern[:, :, i, j], axes=([1], [0]))
            gxp[:, :, hs, ws] += spread.transpose(0, 3, 1, 2)
    out = gxp[:, :, pad : pad + h2, pad : pad + w2]
    out += p.bias.astype(work, copy=False)[None, :, None, None]
    return out.astype(x.dtype)


def transposed_conv2d_backward(x: np.ndarray, p: ConvParams, grad_out: np.ndarray):
    """Gradients of transposed_conv2d: (grad_x, grad_weight, grad_bias)."""
    _check_image(x)
    _check_image(grad_out, "grad_out")
    cin_op, cout_op = p.weight.shape[0], p.weight.shape[1]
    n, _, hy, wy = x.shape
    if grad_out.shape != (n, cout_op, 2 * hy, 2 * wy):
        raise ValueError(
            f"grad_out shape {grad_out.shape} does not match output "
            f"{(n, cout_op, 2 * hy, 2 * wy)}")
    k, pad = _geometry(p)
    d, s = p.dilation, 2
    work = _work_dtype(x, p.weight, grad_out)
    gp = _pad_same(grad_out, pad, pad, work)
    xw = x.astype(work, copy=False)
    grad_w = np.zeros(p.weight.shape, dtype=work)
    acc = np.zeros((n, hy, wy, cin_op), dtype=work)
    kern = p.weight.astype(work, copy=False)
    for i in range(k):
        for j in range(k):
            hs = slice(i * d, i * d + (hy - 1) * s + 1, s)
            ws = slice(j * d, j * d + (wy - 1) * s + 1, s)
            gs = gp[:, :, hs, ws]
            grad_w[:, :, i, j] = np.tensordot(xw, gs, axes=([0, 2, 3], [0, 2, 3]))
            acc += np.tensordot(gs, kern[:, :, i, j], axes=([1], [1]))
    grad_x = np.ascontiguousarray(acc.transpose(0, 3, 1, 2))
    grad_b = grad_out.sum(axis=(0, 2, 3), dtype=np.float64)
    return (grad_x.astype(x.dtype), grad_w.astype(p.weight.dtype),
            grad_b.astype(p.bias.dtype))


def leaky_relu(x: np.ndarray, slope: float = 0.2) -> np.ndarray:
    """y = x for x >= 0, slope * x otherwise."""
    return np.where(x >= 0, x, x * np.asarray(slope, dtype=x.dtype))


def leaky_relu_backward(x: np.ndarray, grad_out: np.ndarray,
                        slope: float = 0.2) -> np.ndarray:
    one = np.asarray(1, dtype=grad_out.dtype)
    return grad_out * np.where(x >= 0, one, np.asarray(slope, dtype=grad_out.dtype))


def _bilinear_axis_weights(src_len: int, dst_len: int):
    """Half-pixel-center sample positions for one axis.

    Returns (lo_index, hi_index, hi_weight) with src = (dst + 0.5) * scale - 0.5
    clamped to [0, src_len - 1].
    """
    if dst_len <= 0:
        raise ValueError("target size must be positive")
    scale = src_len / dst_len
    src = (np.arange(dst_len, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, src_len - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, src_len - 1)
    return lo, hi, src - lo


def bilinear_resize(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling of the trailing two axes, half-pixel convention.

    Works for any (..., h, w) array and either direction of scaling; the
    network upsampling path and the augmentation rescale share it.
    """
    h, w = x.shape[-2], x.shape[-1]
    work = _work_dtype(x)
    ylo, yhi, yf = _bilinear_axis_weights(h, out_h)
    xlo, xhi, xf = _bilinear_axis_weights(w, out_w)
    yf = yf.astype(work)
    xf = xf.astype(work)
    xw = x.astype(work, copy=False)
    rows = xw[..., ylo, :] * (1 - yf)[:, None] + xw[..., yhi, :] * yf[:, None]
    out = rows[..., :, xlo] * (1 - xf) + rows[..., :, xhi] * xf
    return out.astype(x.dtype)


def bilinear_upsample(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Enlarge a (n, c, h, w) tensor; target must not shrink either axis."""
    _check_image(x)
    if out_h < x.shape[2] or out_w < x.shape[3]:
        raise ValueError("bilinear_upsample target must be at least the input size")
    return bilinear_resize(x, out_h, out_w)


def bilinear_upsample_backward(grad_out: np.ndarray, in_h: int, in_w: int) -> np.ndarray:
    """Exact adjoint of bilinear_upsample: scatter of the interpolation weights."""
    _check_image(grad_out, "grad_out")
    n, c, oh, ow = grad_out.shape
    work = _work_dtype(grad_out)
    ylo, yhi, yf = _bilinear_axis_weights(in_h, oh)
    xlo, xhi, xf = _bilinear_axis_weights(in_w, ow)
    yf = yf.astype(work)
    xf = xf.astype(work)
    g = grad_out.astype(work, copy=False)
    # adjoint of the width interpolation
    rows = np.zeros((n, c, oh, in_w), dtype=work)
    np.add.at(rows, (slice(None), slice(None), slice(None), xlo), g * (1 - xf))
    np.add.at(rows, (slice(None), slice(None), slice(None), xhi), g * xf)
    # adjoint of the height interpolation
    out = np.zeros((n, c, in_h, in_w), dtype=work)
    np.add.at(out, (slice(None), slice(None), ylo), rows * (1 - yf)[:, None])
    np.add.at(out, (slice(None), slice(None), yhi), rows * yf[:, None])
    return out.astype(grad_out.dtype)


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise sum of two identically shaped tensors."""
    if a.shape != b.shape:
        raise ValueError(f"add requires equal shapes, got {a.shape} vs {b.shape}")
    return a + b


def concat_channels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Concatenate along the channel axis, argument order preserved."""
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ValueError(f"concat requires matching n, h, w, got {a.shape} vs {b.shape}")
    return np.concatenate([a, b], axis=1)


def l1_loss(pred: np.ndarray, target: np.ndarray):
    """Mean absolute error per element, batch-averaged.

    Returns (loss, grad_pred) with grad = sign(pred - target) / (B * N)
    where N counts the channels*height*width elements of one sample; the
    sign at exact ties is 0.
    """
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred.astype(np.float64, copy=False) - target.astype(np.float64, copy=False)
    loss = float(np.abs(diff).mean())
    grad = (np.sign(diff) / diff.size).astype(pred.dtype)
    return loss, grad
