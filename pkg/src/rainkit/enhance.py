"""Contrast enhancement, sharpening, and histogram-guided parameter tuning.

Gamma correction adjusts contrast pointwise (v -> v^gamma on the [0, 1]
scale), unsharp masking subtracts a Gaussian-blurred copy to emphasize
edges, and auto-tuning picks the parameter combination whose output
histogram sits closest to a reference histogram.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
from scipy.ndimage import convolve1d

from rainkit.sequence_io import _as_hwc, quantize_to_bytes

_CHI2_EPS = 1e-12

HISTOGRAM_METRICS = ("l1", "chi2", "wasserstein1")


@dataclass(frozen=True)
class EnhanceParams:
    """Enhancement settings: gamma exponent, unsharp weight, kernel size.

    sharpen_mode "standard" computes (1 + w) I - w G(I, k), the
    conventional unsharp mask; "literal" computes I - w G(I, k), which
    darkens by w * mean on flat regions but is kept for fidelity to the
    plain subtractive formula.
    """

    gamma: float = 1.0
    weight: float = 0.5
    kernel_size: int = 5
    sharpen_mode: str = "standard"

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("weight must be in [0, 1]")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be an odd positive integer")
        if self.sharpen_mode not in ("standard", "literal"):
            raise ValueError(f"unknown sharpen_mode {self.sharpen_mode!r}")


IDENTITY_PARAMS = EnhanceParams(gamma=1.0, weight=0.0, kernel_size=1)


def gamma_correct(image: np.ndarray, gamma: float) -> np.ndarray:
    """Pointwise power-law contrast adjustment v -> v^gamma."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    arr = _as_hwc(image)
    return np.power(np.clip(arr, 0.0, 1.0), gamma)


def gaussian_kernel(kernel_size: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian sampled at kernel_size integer taps."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError("kernel_size must be an odd positive integer")
    if kernel_size == 1:
        return np.array([1.0])
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    half = kernel_size // 2
    x = np.arange(-half, half + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(image: np.ndarray, kernel_size: int, sigma: Optional[float] = None) -> np.ndarray:
    """Separable Gaussian blur with reflected edges.

    sigma defaults to kernel_size / 6 so the taps span about +-3 sigma.
    """
    if sigma is None:
        sigma = kernel_size / 6.0
    kernel = gaussian_kernel(kernel_size, sigma)
    arr = _as_hwc(image)
    if kernel_size == 1:
        return arr.copy()
    out = convolve1d(arr, kernel, axis=0, mode="reflect")
    out = convolve1d(out, kernel, axis=1, mode="reflect")
    return out


def unsharp_mask(image: np.ndarray, params: EnhanceParams) -> np.ndarray:
    """Sharpen by subtracting a Gaussian-blurred copy; clamps to [0, 1]."""
    arr = _as_hwc(image)
    blurred = gaussian_blur(arr, params.kernel_size)
    if params.sharpen_mode == "literal":
        out = arr - params.weight * blurred
    else:
        out = (1.0 + params.weight) * arr - params.weight * blurred
    return np.clip(out, 0.0, 1.0)


def apply_enhancement(image: np.ndarray, params: EnhanceParams) -> np.ndarray:
    """Gamma correction followed by unsharp masking."""
    return unsharp_mask(gamma_correct(image, params.gamma), params)


@dataclass
class Histogram:
    """Per-channel distribution over the 256 quantized byte values."""

    bins: np.ndarray  # (channels, 256), each row sums to 1

    def __post_init__(self) -> None:
        self.bins = np.asarray(self.bins, dtype=float)
        if self.bins.ndim != 2 or self.bins.shape[1] != 256:
            raise ValueError(f"expected (channels, 256) bins, got {self.bins.shape}")
        if self.bins.shape[0] not in (1, 3):
            raise ValueError("channel_count must be 1 or 3")
        if np.any(self.bins < 0):
            raise ValueError("histogram bins must be nonnegative")
        sums = self.bins.sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-9):
            raise ValueError(f"each channel must sum to 1, got {sums}")

    @property
    def channel_count(self) -> int:
        return self.bins.shape[0]


def compute_histogram(image: np.ndarray) -> Histogram:
    """Histogram of the quantized byte values, normalized per channel."""
    data = quantize_to_bytes(image)
    channels = data.shape[2]
    bins = np.empty((channels, 256))
    n = data.shape[0] * data.shape[1]
    for c in range(channels):
        bins[c] = np.bincount(data[:, :, c].ravel(), minlength=256) / n
    return Histogram(bins)


def histogram_distance(a: Histogram, b: Histogram, metric: str = "wasserstein1") -> float:
    """Distance between two histograms, averaged over channels.

    l1 sums absolute bin differences (<= 2); chi2 is the symmetric
    chi-squared statistic; wasserstein1 is the 1-D earth mover's distance
    in byte-level units, computed from the CDF difference.
    """
    if a.channel_count != b.channel_count:
        raise ValueError(
            f"channel mismatch: {a.channel_count} vs {b.channel_count}"
        )
    diff = a.bins - b.bins
    if metric == "l1":
        per_channel = np.abs(diff).sum(axis=1)
    elif metric == "chi2":
        per_channel = (diff**2 / (a.bins + b.bins + _CHI2_EPS)).sum(axis=1)
    elif metric == "wasserstein1":
        per_channel = np.abs(np.cumsum(diff, axis=1)).sum(axis=1)
    else:
        raise ValueError(f"unknown metric {metric!r}; expected one of {HISTOGRAM_METRICS}")
    return float(per_channel.mean())


def save_histogram(hist: Histogram, path: str | Path) -> None:
    """Write a histogram as plain text: one line of 256 numbers per channel."""
    lines = [" ".join(repr(float(v)) for v in row) for row in hist.bins]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_histogram(path: str | Path) -> Histogram:
    """Read a histogram written by save_histogram."""
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            rows.append([float(v) for v in line.split()])
    return Histogram(np.array(rows))


@dataclass(frozen=True)
class TuningGrid:
    """Cartesian search space for auto_tune."""

    gammas: tuple[float, ...] = tuple(round(0.6 + 0.1 * i, 1) for i in range(9))
    weights: tuple[float, ...] = (0.0, 0.25, 0.5)
    kernel_sizes: tuple[int, ...] = (1, 3, 5, 7, 9)
    sharpen_mode: str = "standard"

    def __iter__(self) -> Iterator[EnhanceParams]:
        for g, w, k in itertools.product(self.gammas, self.weights, self.kernel_sizes):
            yield EnhanceParams(g, w, k, self.sharpen_mode)


DEFAULT_GRID = TuningGrid()


def auto_tune(
    image: np.ndarray,
    reference: Histogram,
    grid: TuningGrid = DEFAULT_GRID,
    metric: str = "wasserstein1",
) -> EnhanceParams:
    """Pick the grid parameters whose output histogram is closest to the reference.

    Evaluates every grid combination exhaustively; ties break toward the
    identity (smaller |gamma - 1|, then smaller weight, then smaller
    kernel), making the argmin independent of evaluation order.
    """
    best_key = None
    best_params = None
    for params in grid:
        candidate = compute_histogram(apply_enhancement(image, params))
        dist = histogram_distance(candidate, reference, metric)
        key = (dist, abs(params.gamma - 1.0), params.weight, params.kernel_size, params.gamma)
        if best_key is None or key < best_key:
            best_key = key
            best_params = params
    if best_params is None:
        raise ValueError("parameter grid is empty")
    return best_params
