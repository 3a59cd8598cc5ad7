"""The bit-depth expansion network: configuration, build, forward, backward.

The graph is an encoder-decoder over the ops module, read top to bottom:

  head      two 3x3 convs at full resolution (the very first conv is the
            only one without leaky-ReLU pre-activation)
  down k    3x3 stride-2 conv, then 3x3 conv with dilation r_d; the result
            is stashed as the skip feature of scale 1/2**k
  up k      3x3 conv with dilation r_u, then 3x3 transposed conv doubling
            the resolution, then addition of the matching skip feature
  msfi      each up-stage output is activated, bilinearly enlarged to full
            resolution, projected by a 1x1 conv and added into the
            full-resolution feature; dropping the j smallest scales is the
            gradual-disconnection ablation, and dropping all of them is
            exactly the plain no-integration graph
  tail      3x3 conv then 1x1 conv down to the output channels

All 3x3 kernels start as center-tap identities on the diagonal channel
mapping; 1x1 kernels are Xavier-uniform from a per-layer substream of the
build seed (so a layer's init does not depend on which other layers
exist); biases start at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import ops
from .ops import ConvParams
from .rng import RandomStream, fnv1a64, mix64


@dataclass(frozen=True)
class BitNetConfig:
    variant: str = "rgb"  # "rgb" or "chan"
    num_stages: int = 4
    widths: tuple[int, ...] = (16, 32, 64, 128)
    r_d: int = 2
    r_u: int = 2
    head_width: int | None = None  # defaults to widths[0]
    use_bit_info: bool = True
    use_msfi: bool = True
    msfi_disconnect_from_smallest: int = 0

    def __post_init__(self):
        if self.variant not in ("rgb", "chan"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.num_stages < 1:
            raise ValueError("num_stages must be >= 1")
        if len(self.widths) != self.num_stages:
            raise ValueError(
                f"widths must list {self.num_stages} entries, got {len(self.widths)}")
        if any(w <= 0 for w in self.widths):
            raise ValueError("widths must be positive")
        if self.r_d not in (1, 2) or self.r_u not in (1, 2):
            raise ValueError("dilation rates must be 1 or 2")
        if not 0 <= self.msfi_disconnect_from_smallest <= self.num_stages:
            raise ValueError("msfi_disconnect_from_smallest must be in [0, D]")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.head_width is not None:
            if self.head_width <= 0:
                raise ValueError("head_width must be positive")
            # canonical form: the default width is stored as None
            if self.head_width == self.widths[0]:
                object.__setattr__(self, "head_width", None)

    @property
    def image_channels(self) -> int:
        return 3 if self.variant == "rgb" else 1

    @property
    def in_channels(self) -> int:
        return self.image_channels + (1 if self.use_bit_info else 0)

    @property
    def out_channels(self) -> int:
        return self.image_channels

    @property
    def head_channels(self) -> int:
        return self.widths[0] if self.head_width is None else self.head_width


@dataclass
class LayerSpec:
    name: str
    kind: str      # "conv" or "tconv"
    weight_shape: tuple[int, int, int, int]
    stride: int
    dilation: int
    init: str      # "identity" or "xavier"

    @property
    def bias_len(self) -> int:
        return self.weight_shape[1] if self.kind == "tconv" else self.weight_shape[0]


def layer_table(cfg: BitNetConfig) -> list[LayerSpec]:
    """The ordered layer list; the single source of truth for shapes."""
    D = cfg.num_stages
    w = cfg.widths
    hc = cfg.head_channels
    table = [
        LayerSpec("head.0", "conv", (hc, cfg.in_channels, 3, 3), 1, 1, "identity"),
        LayerSpec("head.1", "conv", (hc, hc, 3, 3), 1, 1, "identity"),
    ]
    prev = hc
    for k in range(1, D + 1):
        wk = w[k - 1]
        table.append(LayerSpec(f"down{k}.reduce", "conv", (wk, prev, 3, 3),
                               2, 1, "identity"))
        table.append(LayerSpec(f"down{k}.dilated", "conv", (wk, wk, 3, 3),
                               1, cfg.r_d, "identity"))
        prev = wk
    for k in range(D, 0, -1):
        wk = w[k - 1]
        out_ch = w[k - 2] if k >= 2 else hc
        table.append(LayerSpec(f"up{k}.dilated", "conv", (wk, wk, 3, 3),
                               1, cfg.r_u, "identity"))
        # transposed layout: (op input channels, op output channels, k, k)
        table.append(LayerSpec(f"up{k}.expand", "tconv", (wk, out_ch, 3, 3),
                               2, 1, "identity"))
    if cfg.use_msfi:
        for k in range(D):
            src = hc if k == 0 else w[k - 1]
            table.append(LayerSpec(f"msfi.{k}", "conv", (hc, src, 1, 1),
                                   1, 1, "xavier"))
    table.append(LayerSpec("tail.0", "conv", (hc, hc, 3, 3), 1, 1, "identity"))
    table.append(LayerSpec("tail.1", "conv", (cfg.out_channels, hc, 1, 1),
                           1, 1, "xavier"))
    return table


@dataclass
class BitNetModel:
    config: BitNetConfig
    layers: dict[str, ConvParams] = field(default_factory=dict)
    seed: int = 0

    def parameter_names(self) -> list[str]:
        out = []
        for name in self.layers:
            out.append(f"{name}.weight")
            out.append(f"{name}.bias")
        return out

    def parameters(self) -> list[np.ndarray]:
        out = []
        for p in self.layers.values():
            out.append(p.weight)
            out.append(p.bias)
        return out

    def num_parameters(self) -> int:
        return sum(a.size for a in self.parameters())

    def astype(self, dtype) -> "BitNetModel":
        layers = {
            name: replace(p, weight=p.weight.astype(dtype), bias=p.bias.astype(dtype))
            for name, p in self.layers.items()
        }
        return BitNetModel(self.config, layers, self.seed)


def _identity_kernel(shape, transposed: bool) -> np.ndarray:
    """Center tap 1 on the diagonal channel mapping, everything else 0."""
    w = np.zeros(shape, dtype=np.float32)
    c = shape[2] // 2
    if transposed:
        cin_op, cout_op = shape[0], shape[1]
        for j in range(cout_op):
            w[j % cin_op, j, c, c] = 1.0
    else:
        cout, cin = shape[0], shape[1]
        for j in range(cout):
            w[j, j % cin, c, c] = 1.0
    return w


def _xavier_kernel(shape, stream: RandomStream) -> np.ndarray:
    cout, cin, kh, kw = shape
    fan_in = cin * kh * kw
    fan_out = cout * kh * kw
    bound = float(np.sqrt(6.0 / (fan_in + fan_out)))
    flat = [stream.uniform(-bound, bound) for _ in range(cout * cin * kh * kw)]
    return np.array(flat, dtype=np.float32).reshape(shape)


def build(cfg: BitNetConfig, seed: int) -> BitNetModel:
    """Instantiate all layer parameters for the given configuration."""
    layers: dict[str, ConvParams] = {}
    for spec in layer_table(cfg):
        if spec.init == "identity":
            weight = _identity_kernel(spec.weight_shape, spec.kind == "tconv")
        else:
            weight = _xavier_kernel(spec.weight_shape,
                                    RandomStream(mix64(seed, fnv1a64(spec.name))))
        bias = np.zeros(spec.bias_len, dtype=np.float32)
        layers[spec.name] = ConvParams(weight, bias, spec.stride, spec.dilation)
    return BitNetModel(cfg, layers, seed)


def pad_to_multiple(x: np.ndarray, m: int):
    """Reflect-pad right/bottom so height and width divide m.

    Returns (padded, crop_spec); crop() with the spec inverts exactly.
    """
    h, w = x.shape[2], x.shape[3]
    ph = (-h) % m
    pw = (-w) % m
    if ph == 0 and pw == 0:
        return x, (h, w)
    return np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)), mode="reflect"), (h, w)


def crop(x: np.ndarray, crop_spec) -> np.ndarray:
    h, w = crop_spec
    return x[:, :, :h, :w]


def _msfi_kept_scales(cfg: BitNetConfig) -> list[int]:
    if not cfg.use_msfi:
        return []
    return list(range(cfg.num_stages - cfg.msfi_disconnect_from_smallest))


def forward(model: BitNetModel, x: np.ndarray, cache: dict | None = None) -> np.ndarray:
    """Run the network; pass a dict as cache to keep what backward() needs."""
    cfg = model.config
    L = model.layers
    D = cfg.num_stages
    if x.ndim != 4 or x.shape[1] != cfg.in_channels:
        raise ValueError(
            f"input must be (n, {cfg.in_channels}, h, w), got {x.shape}")
    h, w = x.shape[2], x.shape[3]
    if h % (1 << D) or w % (1 << D):
        raise ValueError(
            f"spatial size {h}x{w} must divide {1 << D}; use pad_to_multiple")

    a0 = ops.conv2d(x, L["head.0"])
    h0 = ops.leaky_relu(a0)
    f0 = ops.conv2d(h0, L["head.1"])
    skips = [f0]
    cur = f0
    down = []
    for k in range(1, D + 1):
        pre1 = ops.leaky_relu(cur)
        red = ops.conv2d(pre1, L[f"down{k}.reduce"])
        pre2 = ops.leaky_relu(red)
        dil = ops.conv2d(pre2, L[f"down{k}.dilated"])
        down.append((cur, pre1, red, pre2))
        skips.append(dil)
        cur = dil
    ups: list = [None] * D
    up = []
    for k in range(D, 0, -1):
        pre3 = ops.leaky_relu(cur)
        cd = ops.conv2d(pre3, L[f"up{k}.dilated"])
        pre4 = ops.leaky_relu(cd)
        ex = ops.transposed_conv2d(pre4, L[f"up{k}.expand"])
        g = ops.add(ex, skips[k - 1])
        up.append((cur, pre3, cd, pre4))
        ups[k - 1] = g
        cur = g
    tsum = ups[0]
    taps = []
    for k in _msfi_kept_scales(cfg):
        mk = ops.leaky_relu(ups[k])
        fk = ops.bilinear_upsample(mk, h, w) if k > 0 else mk
        taps.append((mk.shape, fk))
        tsum = ops.add(tsum, ops.conv2d(fk, L[f"msfi.{k}"]))
    pre5 = ops.leaky_relu(tsum)
    y0 = ops.conv2d(pre5, L["tail.0"])
    pre6 = ops.leaky_relu(y0)
    y = ops.conv2d(pre6, L["tail.1"])
    if cache is not None:
        cache.update(x=x, a0=a0, h0=h0, skips=skips, down=down, up=up, ups=ups,
                     taps=taps, tsum=tsum, pre5=pre5, y0=y0, pre6=pre6)
    return y


def backward(model: BitNetModel, cache: dict, grad_y: np.ndarray) -> dict:
    """Gradients of every layer given d(loss)/d(output) and a forward cache.

    Returns {layer_name: (grad_weight, grad_bias)} in layer_table order.
    """
    cfg = model.config
    L = model.layers
    D = cfg.num_stages
    grads: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    g_pre6, gw, gb = ops.conv2d_backward(cache["pre6"], L["tail.1"], grad_y)
    grads["tail.1"] = (gw, gb)
    g_y0 = ops.leaky_relu_backward(cache["y0"], g_pre6)
    g_pre5, gw, gb = ops.conv2d_backward(cache["pre5"], L["tail.0"], g_y0)
    grads["tail.0"] = (gw, gb)
    g_tsum = ops.leaky_relu_backward(cache["tsum"], g_pre5)

    ups = cache["ups"]
    g_ups: list = [None] * D
    g_ups[0] = g_tsum.copy()
    for tap_idx, k in enumerate(_msfi_kept_scales(cfg)):
        mk_shape, fk = cache["taps"][tap_idx]
        g_fk, gw, gb = ops.conv2d_backward(fk, L[f"msfi.{k}"], g_tsum)
        grads[f"msfi.{k}"] = (gw, gb)
        if k > 0:
            g_mk = ops.bilinear_upsample_backward(g_fk, mk_shape[2], mk_shape[3])
        else:
            g_mk = g_fk
        contrib = ops.leaky_relu_backward(ups[k], g_mk)
        g_ups[k] = contrib if g_ups[k] is None else g_ups[k] + contrib

    g_skips: list = [None] * (D + 1)
    for k in range(1, D + 1):
        up_in, pre3, cd, pre4 = cache["up"][D - k]
        gout = g_ups[k - 1]
        g_skips[k - 1] = gout.copy()
        g_pre4, gw, gb = ops.transposed_conv2d_backward(pre4, L[f"up{k}.expand"], gout)
        grads[f"up{k}.expand"] = (gw, gb)
        g_cd = ops.leaky_relu_backward(cd, g_pre4)
        g_pre3, gw, gb = ops.conv2d_backward(pre3, L[f"up{k}.dilated"], g_cd)
        grads[f"up{k}.dilated"] = (gw, gb)
        g_in = ops.leaky_relu_backward(up_in, g_pre3)
        if k == D:
            g_skips[D] = g_in
        elif g_ups[k] is None:
            g_ups[k] = g_in
        else:
            g_ups[k] = g_ups[k] + g_in

    for k in range(D, 0, -1):
        down_in, pre1, red, pre2 = cache["down"][k - 1]
        gout = g_skips[k]
        g_pre2, gw, gb = ops.conv2d_backward(pre2, L[f"down{k}.dilated"], gout)
        grads[f"down{k}.dilated"] = (gw, gb)
        g_red = ops.leaky_relu_backward(red, g_pre2)
        g_pre1, gw, gb = ops.conv2d_backward(pre1, L[f"down{k}.reduce"], g_red)
        grads[f"down{k}.reduce"] = (gw, gb)
        g_skips[k - 1] = g_skips[k - 1] + ops.leaky_relu_backward(down_in, g_pre1)

    g_h0, gw, gb = ops.conv2d_backward(cache["h0"], L["head.1"], g_skips[0])
    grads["head.1"] = (gw, gb)
    g_a0 = ops.leaky_relu_backward(cache["a0"], g_h0)
    _, gw, gb = ops.conv2d_backward(cache["x"], L["head.0"], g_a0)
    grads["head.0"] = (gw, gb)
    return {name: grads[name] for name in model.layers}


def forward_chan(model: BitNetModel, x: np.ndarray) -> np.ndarray:
    """Channel-wise variant: run each color channel through the network.

    x carries the three color channels plus, when the model uses it, one
    shared bit-info channel appended last. Each channel is processed by an
    independent forward call, so output channel k equals
    forward(channels [k, bit-info]) exactly.
    """
    cfg = model.config
    if cfg.variant != "chan":
        raise ValueError("forward_chan requires a chan-variant model")
    expected = 3 + (1 if cfg.use_bit_info else 0)
    if x.ndim != 4 or x.shape[1] != expected:
        raise ValueError(f"input must be (n, {expected}, h, w), got {x.shape}")
    outs = []
    for k in range(3):
        xk = x[:, k : k + 1]
        if cfg.use_bit_info:
            xk = ops.concat_channels(xk, x[:, 3:4])
        outs.append(forward(model, xk))
    return np.concatenate(outs, axis=1)
