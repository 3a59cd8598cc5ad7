"""Batch command line: quantize, expand, train, eval, bench.

Options come from flags, falling back to a plain key=value config file
(`#` starts a comment), falling back to defaults; flags always win. The
thread count additionally falls back to the BITEXPAND_THREADS environment
variable. Exit code is 0 only when the command finished without a fatal
error; per-image eval failures are reported but nonfatal.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .expanders import EXPANDERS, BitDepthSpec
from .image import png_depth_for, read_png, write_png
from .inference import network_expander
from .metrics import bench, evaluate
from .model import BitNetConfig, build
from .pipeline import AugmentConfig, quantize
from .train import TrainSettings, resume_from, train

log = logging.getLogger(__name__)

NETWORK_METHODS = {"bitnet": "rgb", "bitnet-chan": "chan"}


def parse_config_file(path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        values[key.strip()] = value.strip()
    return values


class Options:
    """Flag/file/default resolution for one command invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file = parse_config_file(args.config) if args.config else {}

    def get(self, key: str, default=None, cast=str):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        if key in self.file:
            raw = self.file[key]
            if cast is bool:
                return raw.lower() in ("1", "true", "yes", "on")
            return cast(raw)
        return default

    def require(self, key: str, cast=str):
        value = self.get(key, None, cast)
        if value is None:
            raise SystemExit(f"error: missing required option --{key}")
        return value


def _model_config(opts: Options, variant: str) -> BitNetConfig:
    widths_raw = opts.get("widths", None)
    stages = opts.get("stages", None, int)
    widths = None
    if widths_raw is not None:
        widths = tuple(int(w) for w in str(widths_raw).split(",") if w)
    if widths is None and stages is not None:
        widths = tuple(16 * (1 << min(i, 3)) for i in range(stages))
    cfg = BitNetConfig(
        variant=variant,
        num_stages=stages if stages is not None else (len(widths) if widths else 4),
        widths=widths if widths is not None else (16, 32, 64, 128),
        r_d=opts.get("r_d", 2, int),
        r_u=opts.get("r_u", 2, int),
        use_bit_info=opts.get("use_bit_info", True, bool),
        use_msfi=opts.get("use_msfi", True, bool),
        msfi_disconnect_from_smallest=opts.get("msfi_disconnect", 0, int),
    )
    return cfg


def _expander_for(opts: Options, method: str, q: int, H: int):
    if method in EXPANDERS:
        return EXPANDERS[method]
    if method in NETWORK_METHODS:
        ckpt = opts.require("checkpoint")
        model = load_checkpoint(ckpt)
        if model.config.variant != NETWORK_METHODS[method]:
            raise SystemExit(f"error: checkpoint holds a {model.config.variant} "
                             f"model, method {method} needs {NETWORK_METHODS[method]}")
        return network_expander(model)
    raise SystemExit(f"error: unknown method {method!r}")


def cmd_quantize(opts: Options) -> int:
    src = Path(opts.require("in"))
    dst = Path(opts.require("out"))
    q = opts.require("q", int)
    img = read_png(src)
    low = quantize(img, q)
    store_bits = png_depth_for(q)
    write_png(dst, low.with_pixels(low.pixels, store_bits))
    sidecar = dst.with_name(dst.name + ".q")
    sidecar.write_text(f"q={q}\n")
    print(f"wrote {dst} ({q}-bit content in {store_bits}-bit PNG), sidecar {sidecar}")
    return 0


def cmd_expand(opts: Options) -> int:
    src = Path(opts.require("in"))
    dst = Path(opts.require("out"))
    q = opts.require("q", int)
    H = opts.require("H", int)
    method = opts.get("method", "zp")
    spec = BitDepthSpec(q, H)
    raw = read_png(src)
    lbd = raw.with_pixels(raw.pixels, q)  # validates the q-bit range
    expander = _expander_for(opts, method, q, H)
    write_png(dst, expander(lbd, spec))
    print(f"wrote {dst} ({method}, {q}->{H} bits)")
    return 0


def cmd_train(opts: Options) -> int:
    corpus = opts.require("in")
    out_dir = Path(opts.require("out"))
    method = opts.get("method", "bitnet")
    if method not in NETWORK_METHODS:
        raise SystemExit(f"error: train expects a network method, got {method!r}")
    settings = TrainSettings(
        epochs=opts.get("epochs", 100, int),
        base_lr=opts.get("lr", 1e-4, float),
        seed=opts.get("seed", 10_000, int),
        target_bits=opts.get("H", None, int),
        train_fraction=opts.get("train_fraction", 0.8, float),
    )
    if opts.get("batch_size", 1, int) != 1:
        raise SystemExit("error: only batch_size=1 is supported")
    q_lo = opts.get("q_min", opts.get("q", 3, int), int)
    q_hi = opts.get("q_max", opts.get("q", 6, int), int)
    augment = AugmentConfig(
        hflip_prob=opts.get("hflip_prob", 0.5, float),
        scale_range=(opts.get("scale_min", 0.5, float),
                     opts.get("scale_max", 1.0, float)),
        bit_depth_range=(q_lo, q_hi),
        patch_size=opts.get("patch_size", 128, int),
        seed=settings.seed,
    )
    resume = None
    ckpt = opts.get("checkpoint", None)
    if ckpt:
        model, resume = resume_from(ckpt)
        print(f"resuming from {ckpt} at epoch {resume[1]}")
    else:
        cfg = _model_config(opts, NETWORK_METHODS[method])
        model = build(cfg, settings.seed)
    final, steps = train(model, corpus, out_dir, settings, augment,
                         resume_state=resume, log_every=opts.get("log_every", 0, int))
    print(f"trained {steps} steps, final checkpoint {final}")
    return 0


def cmd_eval(opts: Options) -> int:
    corpus = opts.require("in")
    q = opts.require("q", int)
    H = opts.require("H", int)
    method = opts.get("method", "zp")
    threads = opts.get("threads", _env_threads(), int)
    report = evaluate(_expander_for(opts, method, q, H), corpus, q, H,
                      threads=threads)
    csv = report.to_csv()
    out = opts.get("out", None)
    if out:
        Path(out).write_text(csv)
        print(f"wrote {out}")
    else:
        sys.stdout.write(csv)
    print(f"{method} {q}->{H}: {report.summary()}")
    for name, reason in report.failures:
        print(f"  failed: {name}: {reason}")
    return 0


def cmd_bench(opts: Options) -> int:
    corpus = opts.require("in")
    q = opts.require("q", int)
    H = opts.require("H", int)
    method = opts.get("method", "zp")
    rows = bench(_expander_for(opts, method, q, H), corpus, q, H,
                 repeats=opts.get("repeats", 3, int))
    if not rows:
        print("error: no readable images to bench", file=sys.stderr)
        return 1
    print("name,megapixels,median_seconds,mp_per_second")
    for r in rows:
        print(f"{r.name},{r.megapixels:.3f},{r.median_seconds:.4f},"
              f"{r.mp_per_second:.3f}")
    total_mp = sum(r.megapixels for r in rows)
    total_s = sum(r.median_seconds for r in rows)
    print(f"all,{total_mp:.3f},{total_s:.4f},"
          f"{(total_mp / total_s) if total_s else float('inf'):.3f}")
    return 0


def _env_threads() -> int:
    try:
        return max(1, int(os.environ.get("BITEXPAND_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bitexpand",
        description="Bit-depth expansion: classical expanders and the trainable network")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("quantize", "truncate an HBD PNG to q bits"),
        ("expand", "expand a q-bit PNG to H bits"),
        ("train", "train a network on a directory of PNGs"),
        ("eval", "PSNR/SSIM of a method over a corpus"),
        ("bench", "wall-time of a method over a corpus"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--in", dest="in", help="input file or corpus directory")
        p.add_argument("--out", dest="out", help="output file or directory")
        p.add_argument("--method", choices=["zp", "mig", "br", "bitnet", "bitnet-chan"])
        p.add_argument("--q", type=int, help="source bit-depth")
        p.add_argument("--H", type=int, help="target bit-depth")
        p.add_argument("--checkpoint", help="model checkpoint path")
        p.add_argument("--seed", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--threads", type=int)
    return parser


COMMANDS = {
    "quantize": cmd_quantize,
    "expand": cmd_expand,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](Options(args))
    except SystemExit:
        raise
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
