"""Low-rank + sparse decomposition of stacked frame sequences.

A sequence of a static scene, vectorized one frame per column, is
approximately the sum of a low-rank background matrix B and a sparse
dynamic rain matrix R. The solver minimizes ``||B||_* + lam * ||R||_1``
subject to ``D = B + R`` with an inexact augmented Lagrangian scheme:
alternating singular value thresholding and elementwise shrinkage under a
growing penalty mu.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from rainkit.sequence_io import FrameSequence, luminance

# Columns beyond this switch the SVT step to a randomized truncated SVD;
# frame counts are small so the exact path is the common case.
EXACT_SVD_MAX_COLS = 64

_OVERSAMPLE = 10
_MU_MAX_FACTOR = 1e7


class SolverError(RuntimeError):
    """Numerical failure inside the decomposition."""


@dataclass(frozen=True)
class RpcaConfig:
    """Solver settings.

    lam: sparsity weight; None picks 1/sqrt(max(m, n)).
    mu0: initial penalty; None picks 1.25 / sigma_1(D) via power iteration.
    rho: penalty growth factor per iteration (> 1).
    tol: relative feasibility tolerance ||D - B - R||_F / ||D||_F.
    frame_stride: temporal subsampling; None adapts to keep ~50 frames.
    nonneg_rain: project the rain component onto R >= 0.
    color_mode: "per_channel" decomposes each channel independently;
        "luminance" collapses to Rec.601 luminance first.
    """

    lam: Optional[float] = None
    mu0: Optional[float] = None
    rho: float = 1.5
    tol: float = 1e-7
    max_iter: int = 100
    frame_stride: Optional[int] = None
    nonneg_rain: bool = False
    color_mode: str = "per_channel"

    def __post_init__(self) -> None:
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.mu0 is not None and self.mu0 <= 0:
            raise ValueError("mu0 must be positive")
        if self.rho <= 1:
            raise ValueError("rho must be > 1")
        if not 0 < self.tol < 1:
            raise ValueError("tol must be in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.frame_stride is not None and self.frame_stride < 1:
            raise ValueError("frame_stride must be >= 1")
        if self.color_mode not in ("per_channel", "luminance"):
            raise ValueError(f"unknown color_mode {self.color_mode!r}")


@dataclass
class RpcaOutput:
    """Decomposition result with convergence diagnostics."""

    background: np.ndarray
    rain: np.ndarray
    iterations: int
    final_residual: float
    rank_estimate: int
    converged: bool


@dataclass
class PseudoGt:
    """Rain-free image aggregated from the background frames."""

    image: np.ndarray
    provenance: dict


def soft_threshold(x, tau: float):
    """Elementwise shrinkage sign(x) * max(|x| - tau, 0)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return out if out.ndim else float(out)


def _exact_svd(M: np.ndarray):
    try:
        return np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"SVD failed on {M.shape[0]}x{M.shape[1]} matrix: {exc}") from exc


def _randomized_svd(M: np.ndarray, rank: int, rng: np.random.Generator, n_power: int = 2):
    """Range-finder truncated SVD with Gaussian test matrix and power iterations."""
    n = M.shape[1]
    k = min(rank + _OVERSAMPLE, n)
    omega = rng.standard_normal((n, k))
    Q, _ = np.linalg.qr(M @ omega)
    for _ in range(n_power):
        Q, _ = np.linalg.qr(M.T @ Q)
        Q, _ = np.linalg.qr(M @ Q)
    U_small, s, Vt = _exact_svd(Q.T @ M)
    return Q @ U_small, s, Vt


def _svt_ranked(
    M: np.ndarray,
    tau: float,
    rank_hint: int = 10,
    rng: Optional[np.random.Generator] = None,
) -> tuple[np.ndarray, int]:
    """Singular value thresholding; returns (thresholded matrix, kept rank)."""
    m, n = M.shape
    if n <= EXACT_SVD_MAX_COLS or m <= EXACT_SVD_MAX_COLS:
        U, s, Vt = _exact_svd(M)
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        k = max(1, min(rank_hint, n))
        while True:
            U, s, Vt = _randomized_svd(M, k, rng)
            # smallest computed singular value below tau means nothing
            # above tau was truncated away
            if s[-1] < tau or len(s) >= min(m, n):
                break
            k = min(2 * k, min(m, n))
    kept = s[s > tau] - tau
    rank = kept.size
    if rank == 0:
        return np.zeros_like(M), 0
    return (U[:, :rank] * kept) @ Vt[:rank], rank


def svt(M: np.ndarray, tau: float, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Proximal operator of the nuclear norm: shrink singular values by tau."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("svt requires finite entries")
    out, _ = _svt_ranked(M, tau, rng=rng)
    return out


def _top_singular_value(D: np.ndarray, iters: int = 25) -> float:
    """Power-iteration estimate of sigma_1, floored by ||D||_F / sqrt(min(m, n))."""
    m, n = D.shape
    v = np.ones(n) / np.sqrt(n)
    s1 = 0.0
    for _ in range(iters):
        u = D @ v
        nu = np.linalg.norm(u)
        if nu == 0:
            break
        u /= nu
        v = D.T @ u
        s1 = np.linalg.norm(v)
        if s1 == 0:
            break
        v /= s1
    return max(s1, np.linalg.norm(D, "fro") / np.sqrt(min(m, n)))


def rpca_decompose(D: np.ndarray, config: Optional[RpcaConfig] = None, seed: int = 0) -> RpcaOutput:
    """Split D into a low-rank background and a sparse rain component.

    Iterates B <- svt(D - R + Y/mu, 1/mu), R <- shrink(D - B + Y/mu, lam/mu),
    Y <- Y + mu (D - B - R), mu <- min(rho mu, mu_max) until the relative
    feasibility residual drops below tol or max_iter is hit. Non-convergence
    is flagged in the output, not raised. Deterministic for a fixed config
    and seed.
    """
    if config is None:
        config = RpcaConfig()
    D = np.asarray(D, dtype=float)
    if D.ndim != 2:
        raise ValueError(f"expected 2-D matrix, got shape {D.shape}")
    m, n = D.shape
    if m < 1 or n < 2:
        raise ValueError(f"matrix must be at least 1x2, got {m}x{n}")
    if not np.all(np.isfinite(D)):
        raise ValueError("input matrix contains non-finite entries")

    lam = config.lam if config.lam is not None else 1.0 / np.sqrt(max(m, n))
    d_norm = np.linalg.norm(D, "fro")
    if d_norm == 0.0:
        return RpcaOutput(np.zeros_like(D), np.zeros_like(D), 1, 0.0, 0, True)

    mu = config.mu0 if config.mu0 is not None else 1.25 / _top_singular_value(D)
    mu_max = _MU_MAX_FACTOR * mu
    rng = np.random.default_rng(seed)

    B = np.zeros_like(D)
    R = np.zeros_like(D)
    Y = np.zeros_like(D)
    rank = 0
    rank_hint = 10
    residual = 1.0
    iterations = config.max_iter
    converged = False
    for it in range(1, config.max_iter + 1):
        B, rank = _svt_ranked(D - R + Y / mu, 1.0 / mu, rank_hint, rng)
        rank_hint = max(rank + 1, 10)
        R = soft_threshold(D - B + Y / mu, lam / mu)
        if config.nonneg_rain:
            np.maximum(R, 0.0, out=R)
        diff = D - B - R
        Y += mu * diff
        mu = min(config.rho * mu, mu_max)
        residual = np.linalg.norm(diff, "fro") / d_norm
        if residual <= config.tol:
            iterations = it
            converged = True
            break
    return RpcaOutput(B, R, iterations, float(residual), rank, converged)


def _effective_stride(config: RpcaConfig, n_frames: int) -> int:
    if config.frame_stride is not None:
        return config.frame_stride
    return max(1, n_frames // 50)


def derain_sequence(
    seq: FrameSequence, config: Optional[RpcaConfig] = None, seed: int = 0
) -> tuple[FrameSequence, FrameSequence, PseudoGt]:
    """Decompose a sequence and aggregate its backgrounds into a pseudo GT.

    Each channel is vectorized into an (H*W) x n_frames matrix and
    decomposed independently. Background columns become background frames,
    rain columns become rain frames (left unclamped; clamp only for
    display), and the pseudo GT is the per-pixel temporal median of the
    background frames, clamped to [0, 1].
    """
    if config is None:
        config = RpcaConfig()
    stride = _effective_stride(config, len(seq))
    frames = seq.frames[::stride]
    if len(frames) < 2:
        raise ValueError(
            f"frame_stride {stride} leaves {len(frames)} frame(s); need at least 2"
        )
    arr = np.stack(frames)  # (n, H, W, C)
    if config.color_mode == "luminance" and arr.shape[3] == 3:
        arr = np.stack([luminance(f)[:, :, None] for f in frames])
    n, h, w, channels = arr.shape

    bg = np.empty_like(arr)
    rain = np.empty_like(arr)
    diagnostics = []
    for c in range(channels):
        D = arr[:, :, :, c].reshape(n, h * w).T
        out = rpca_decompose(D, config, seed=seed)
        bg[:, :, :, c] = out.background.T.reshape(n, h, w)
        rain[:, :, :, c] = out.rain.T.reshape(n, h, w)
        diagnostics.append(
            {
                "channel": c,
                "iterations": out.iterations,
                "final_residual": out.final_residual,
                "rank_estimate": out.rank_estimate,
                "converged": out.converged,
            }
        )

    bg_frames = [bg[i] for i in range(n)]
    rain_frames = [rain[i] for i in range(n)]
    pseudo_image = np.clip(np.median(bg, axis=0), 0.0, 1.0)
    provenance = {
        "scene_id": seq.scene_id,
        "seed": seed,
        "frame_stride": stride,
        "frames_used": n,
        "config": asdict(config),
        "channels": diagnostics,
    }
    backgrounds = FrameSequence(bg_frames, f"{seq.scene_id}-background")
    rains = FrameSequence(rain_frames, f"{seq.scene_id}-rain")
    return backgrounds, rains, PseudoGt(pseudo_image, provenance)
