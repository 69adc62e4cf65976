"""PSNR/SSIM with the same definitions stage I reports.

Reimplemented here (the two components share only file formats): PSNR from
MSE on the [0, 1] scale capped at 99 dB; single-scale SSIM with an 11x11
Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2, averaged over all
fully interior window positions and over channels.
"""

from __future__ import annotations

import numpy as np

PSNR_CAP_DB = 99.0

_WINDOW = 11
_SIGMA = 1.5
_C1 = 0.01**2
_C2 = 0.03**2


def psnr(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(1.0 / mse))


def _window1d() -> np.ndarray:
    half = _WINDOW // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-0.5 * (t / _SIGMA) ** 2)
    return w / w.sum()


def _windowed_mean(a: np.ndarray, w1: np.ndarray) -> np.ndarray:
    # separable valid-mode correlation via cumulative stride tricks is
    # overkill at these sizes; two matmul passes keep it simple and exact
    half = len(w1) // 2
    n_rows = a.shape[0] - 2 * half
    n_cols = a.shape[1] - 2 * half
    rows = np.empty((n_rows, a.shape[1]))
    for i in range(n_rows):
        rows[i] = w1 @ a[i : i + len(w1)]
    out = np.empty((n_rows, n_cols))
    for j in range(n_cols):
        out[:, j] = rows[:, j : j + len(w1)] @ w1
    return out


def ssim(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.ndim == 2:
        x = x[:, :, None]
        y = y[:, :, None]
    if min(x.shape[0], x.shape[1]) < _WINDOW:
        raise ValueError(f"image smaller than the {_WINDOW}x{_WINDOW} window")
    w1 = _window1d()
    values = []
    for c in range(x.shape[2]):
        xc, yc = x[:, :, c], y[:, :, c]
        mx = _windowed_mean(xc, w1)
        my = _windowed_mean(yc, w1)
        vx = _windowed_mean(xc * xc, w1) - mx * mx
        vy = _windowed_mean(yc * yc, w1) - my * my
        cxy = _windowed_mean(xc * yc, w1) - mx * my
        num = (2 * mx * my + _C1) * (2 * cxy + _C2)
        den = (mx * mx + my * my + _C1) * (vx + vy + _C2)
        values.append(float(np.mean(num / den)))
    return float(np.mean(values))
