"""PSNR and SSIM at arbitrary bit-depth, plus corpus evaluation reports."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .expanders import BitDepthSpec
from .image import ImageBuffer
from .pipeline import list_corpus, load_corpus_image, quantize

log = logging.getLogger(__name__)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_same(a: ImageBuffer, b: ImageBuffer) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"image shapes differ: {a.pixels.shape} vs {b.pixels.shape}")
    if a.bit_depth != b.bit_depth:
        raise ValueError(f"bit depths differ: {a.bit_depth} vs {b.bit_depth}")


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """10*log10(peak^2 / MSE) in dB; +inf for identical images."""
    _check_same(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    peak = float(a.max_value)
    return 10.0 * math.log10(peak * peak / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """1-D Gaussian taps normalized to sum 1."""
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(r * r) / (2.0 * sigma * sigma))
    return w / w.sum()


def _windowed_mean(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable Gaussian filtering cropped to fully interior windows."""
    half = len(taps) // 2
    y = correlate1d(x, taps, axis=0, mode="constant")
    y = correlate1d(y, taps, axis=1, mode="constant")
    return y[half:-half, half:-half]


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean local SSIM, Gaussian 11x11 window, channel-averaged."""
    _check_same(a, b)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise ValueError(
            f"image {a.width}x{a.height} smaller than the {SSIM_WINDOW}px SSIM window")
    taps = gaussian_window()
    peak = float(a.max_value)
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    scores = []
    for ch in range(a.channels):
        x = a.pixels[:, :, ch].astype(np.float64)
        y = b.pixels[:, :, ch].astype(np.float64)
        mx = _windowed_mean(x, taps)
        my = _windowed_mean(y, taps)
        sxx = _windowed_mean(x * x, taps) - mx * mx
        syy = _windowed_mean(y * y, taps) - my * my
        sxy = _windowed_mean(x * y, taps) - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * sxy + c2)
        den = (mx * mx + my * my + c1) * (sxx + syy + c2)
        scores.append(float(np.mean(num / den)))
    return float(np.mean(scores))


@dataclass(frozen=True)
class MetricRow:
    name: str
    psnr: float
    ssim: float
    seconds: float


@dataclass
class MetricReport:
    rows: list[MetricRow] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([r.psnr for r in self.rows])) if self.rows else math.nan

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([r.ssim for r in self.rows])) if self.rows else math.nan

    @property
    def mean_seconds(self) -> float:
        return float(np.mean([r.seconds for r in self.rows])) if self.rows else math.nan

    def to_csv(self) -> str:
        lines = ["name,psnr_db,ssim,seconds"]
        for r in self.rows:
            lines.append(f"{r.name},{r.psnr:.4f},{r.ssim:.6f},{r.seconds:.4f}")
        lines.append(f"mean,{self.mean_psnr:.4f},{self.mean_ssim:.6f},"
                     f"{self.mean_seconds:.4f}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        head = (f"{len(self.rows)} images | mean PSNR {self.mean_psnr:.3f} dB | "
                f"mean SSIM {self.mean_ssim:.4f} | mean time {self.mean_seconds:.3f} s")
        if self.failures:
            head += f" | {len(self.failures)} failed"
        return head


def _score_one(expander, path, q: int, H: int):
    original = load_corpus_image(path)
    if original is None:
        raise IOError("unreadable image")
    truth = quantize(original, H) if original.bit_depth > H else original
    if truth.bit_depth != H:
        raise ValueError(f"image depth {original.bit_depth} below target {H}")
    lbd = quantize(truth, q)
    start = time.perf_counter()
    restored = expander(lbd, BitDepthSpec(q, H))
    elapsed = time.perf_counter() - start
    return MetricRow(path.name, psnr(truth, restored), ssim(truth, restored), elapsed)


def evaluate(expander, corpus_dir, q: int, H: int, threads: int = 1) -> MetricReport:
    """Quantize every corpus image to q bits, expand to H, score vs truth.

    `expander` is any callable (ImageBuffer, BitDepthSpec) -> ImageBuffer.
    Per-image failures are recorded and skipped; rows stay filename-sorted.
    """
    paths = list_corpus(corpus_dir)
    if not paths:
        raise FileNotFoundError(f"no PNG files in {corpus_dir}")
    report = MetricReport()

    def run(path):
        return path, _score_one(expander, path, q, H)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {p: pool.submit(run, p) for p in paths}
            results = {}
            for p, fut in futures.items():
                try:
                    results[p] = fut.result()[1]
                except Exception as exc:
                    report.failures.append((p.name, str(exc)))
                    log.warning("evaluation failed for %s: %s", p.name, exc)
            for p in paths:
                if p in results:
                    report.rows.append(results[p])
    else:
        for p in paths:
            try:
                report.rows.append(run(p)[1])
            except Exception as exc:
                report.failures.append((p.name, str(exc)))
                log.warning("evaluation failed for %s: %s", p.name, exc)
    return report


@dataclass(frozen=True)
class BenchRow:
    name: str
    megapixels: float
    median_seconds: float

    @property
    def mp_per_second(self) -> float:
        return self.megapixels / self.median_seconds if self.median_seconds else math.inf


def bench(expander, corpus_dir, q: int, H: int, repeats: int = 3) -> list[BenchRow]:
    """Median-of-N wall time of the expand call per corpus image."""
    rows = []
    for path in list_corpus(corpus_dir):
        img = load_corpus_image(path)
        if img is None:
            continue
        truth = quantize(img, H) if img.bit_depth > H else img
        lbd = quantize(truth, q)
        times = []
        for _ in range(max(1, repeats)):
            start = time.perf_counter()
            expander(lbd, BitDepthSpec(q, H))
            times.append(time.perf_counter() - start)
        rows.append(BenchRow(path.name, img.width * img.height / 1e6,
                             float(np.median(times))))
    return rows
