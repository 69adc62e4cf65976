"""Self-contained full-reference image quality metrics.

PSNR is computed from the mean squared error on the [0, 1] scale, which
matches the usual 255-scale definition. SSIM follows the canonical
single-scale formulation: an 11x11 Gaussian window (sigma 1.5), stability
constants C1 = 0.01^2 and C2 = 0.03^2, map averaged over all fully valid
window positions, channels averaged for color images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import convolve1d

from rainkit.sequence_io import _as_hwc

PSNR_CAP_DB = 99.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
_C1 = 0.01**2
_C2 = 0.03**2


def _check_pair(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xa = _as_hwc(x)
    ya = _as_hwc(y)
    if xa.shape != ya.shape:
        raise ValueError(f"shape mismatch: {xa.shape} vs {ya.shape}")
    return xa, ya


def psnr(x: np.ndarray, y: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB, capped at 99 so reports stay sortable."""
    xa, ya = _check_pair(x, y)
    mse = float(np.mean((xa - ya) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(1.0 / mse))


def _ssim_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    t = np.arange(-half, half + 1, dtype=float)
    w = np.exp(-0.5 * (t / SSIM_SIGMA) ** 2)
    return w / w.sum()


def _valid_filter(a: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Separable windowed average over all fully interior window positions."""
    half = len(window) // 2
    out = convolve1d(a, window, axis=0, mode="reflect")
    out = convolve1d(out, window, axis=1, mode="reflect")
    return out[half:-half, half:-half]


def _ssim_channel(x: np.ndarray, y: np.ndarray, window: np.ndarray) -> float:
    mx = _valid_filter(x, window)
    my = _valid_filter(y, window)
    mxx = _valid_filter(x * x, window)
    myy = _valid_filter(y * y, window)
    mxy = _valid_filter(x * y, window)
    vx = mxx - mx * mx
    vy = myy - my * my
    cxy = mxy - mx * my
    num = (2.0 * mx * my + _C1) * (2.0 * cxy + _C2)
    den = (mx * mx + my * my + _C1) * (vx + vy + _C2)
    return float(np.mean(num / den))


def ssim(x: np.ndarray, y: np.ndarray) -> float:
    """Mean structural similarity over the local SSIM map, in [-1, 1]."""
    xa, ya = _check_pair(x, y)
    h, w, channels = xa.shape
    if min(h, w) < SSIM_WINDOW:
        raise ValueError(f"image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    window = _ssim_window()
    values = [_ssim_channel(xa[:, :, c], ya[:, :, c], window) for c in range(channels)]
    return float(np.mean(values))


@dataclass
class QualityReport:
    """PSNR/SSIM bundle for one prediction/ground-truth pair."""

    psnr_db: float
    ssim: float
    per_channel: Optional[dict] = None
    histogram_distance: Optional[float] = None

    def to_dict(self) -> dict:
        out = {"psnr_db": self.psnr_db, "ssim": self.ssim}
        if self.per_channel is not None:
            out["per_channel"] = self.per_channel
        if self.histogram_distance is not None:
            out["histogram_distance"] = self.histogram_distance
        return out

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "QualityReport":
        return cls(
            psnr_db=float(data["psnr_db"]),
            ssim=float(data["ssim"]),
            per_channel=data.get("per_channel"),
            histogram_distance=data.get("histogram_distance"),
        )

    @classmethod
    def from_json(cls, text: str) -> "QualityReport":
        return cls.from_dict(json.loads(text))


def quality_report(
    pred: np.ndarray,
    gt: np.ndarray,
    per_channel: bool = False,
    histogram_distance: Optional[float] = None,
) -> QualityReport:
    """Bundle PSNR and SSIM (optionally per channel) into a serializable report."""
    pa, ga = _check_pair(pred, gt)
    report = QualityReport(
        psnr_db=psnr(pa, ga),
        ssim=ssim(pa, ga),
        histogram_distance=histogram_distance,
    )
    if per_channel and pa.shape[2] > 1:
        report.per_channel = {
            "psnr_db": [psnr(pa[:, :, c], ga[:, :, c]) for c in range(pa.shape[2])],
            "ssim": [ssim(pa[:, :, c], ga[:, :, c]) for c in range(pa.shape[2])],
        }
    return report
