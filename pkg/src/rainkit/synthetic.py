"""Synthetic aligned rainy sequences with known clean ground truth.

Clean "photos" are procedural: smooth shading, a few blobs and rectangles
for structure, light texture. Rain is drawn as bright oriented line
segments (additive +0.4, clamped), independently re-sampled each frame,
plus a faint scatter glow around the streaks that mimics the veiling
effect of real rain. Streak pixels stay below a per-frame coverage cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from rainkit.sequence_io import FrameSequence, _as_hwc, save_image


@dataclass(frozen=True)
class RainParams:
    """Streak geometry and photometry for the generator."""

    coverage: float = 0.08  # max fraction of pixels on streaks per frame
    streak_value: float = 0.4
    length_range: tuple[float, float] = (8.0, 16.0)
    angle_range_deg: tuple[float, float] = (50.0, 80.0)
    glow_strength: float = 0.5
    glow_sigma: float = 6.0


def make_clean_image(
    seed: int, height: int = 64, width: int = 64, channels: int = 3
) -> np.ndarray:
    """Deterministic procedural photo with values kept inside [0.02, 0.98]."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    base = 0.35 + 0.25 * np.sin(2 * np.pi * xx / width * rng.uniform(0.5, 2.0)) * np.cos(
        2 * np.pi * yy / height * rng.uniform(0.5, 2.0)
    )
    for _ in range(6):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        radius = rng.uniform(5, 18)
        base += rng.uniform(-0.3, 0.45) * np.exp(
            -((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * radius**2)
        )
    for _ in range(3):
        y0 = int(rng.integers(0, max(1, height - 10)))
        x0 = int(rng.integers(0, max(1, width - 10)))
        dy = int(rng.integers(5, 20))
        dx = int(rng.integers(5, 20))
        base[y0 : y0 + dy, x0 : x0 + dx] += rng.uniform(-0.2, 0.3)
    base += 0.02 * rng.standard_normal((height, width))
    base = np.clip(base, 0.02, 0.98)
    if channels == 1:
        return base[:, :, None]
    # mild per-channel tint so color statistics are not degenerate
    tints = rng.uniform(0.85, 1.15, size=3)
    img = np.stack([np.clip(base * t, 0.02, 0.98) for t in tints], axis=2)
    return img


def streak_mask(shape: tuple[int, int], rng: np.random.Generator, params: RainParams) -> np.ndarray:
    """Boolean mask of oriented line segments, capped at the coverage fraction.

    The last segment is truncated pixel-by-pixel so the cap is never
    exceeded.
    """
    h, w = shape
    mask = np.zeros((h, w), dtype=bool)
    target = int(params.coverage * h * w)
    covered = 0
    while covered < target:
        length = rng.uniform(*params.length_range)
        theta = np.deg2rad(rng.uniform(*params.angle_range_deg)) * rng.choice([1.0, -1.0])
        y0 = rng.uniform(-length, h)
        x0 = rng.uniform(0, w)
        t = np.arange(0.0, length, 0.5)
        ys = np.round(y0 + t * np.cos(theta)).astype(int)
        xs = np.round(x0 + t * np.sin(theta)).astype(int)
        ok = (ys >= 0) & (ys < h) & (xs >= 0) & (xs < w)
        for y, x in zip(ys[ok], xs[ok]):
            if not mask[y, x]:
                mask[y, x] = True
                covered += 1
                if covered >= target:
                    return mask
    return mask


def rain_overlay(
    shape: tuple[int, int], rng: np.random.Generator, params: RainParams
) -> np.ndarray:
    """Additive rain field: bright streak cores plus a faint scatter glow."""
    mask = streak_mask(shape, rng, params)
    field = params.streak_value * mask.astype(float)
    if params.glow_strength > 0:
        field += params.glow_strength * gaussian_filter(mask.astype(float), params.glow_sigma)
    return field


def make_rainy_sequence(
    clean: np.ndarray,
    n_frames: int,
    seed: int,
    params: RainParams = RainParams(),
    scene_id: str = "synthetic",
) -> FrameSequence:
    """Replicate a clean image with independent rain overlays per frame."""
    rng = np.random.default_rng(seed)
    clean = _as_hwc(clean)
    h, w = clean.shape[:2]
    frames = []
    for _ in range(n_frames):
        overlay = rain_overlay((h, w), rng, params)
        frames.append(np.clip(clean + overlay[:, :, None], 0.0, 1.0))
    return FrameSequence(frames, scene_id)


def write_sequence(seq: FrameSequence, out_dir: str | Path) -> Path:
    """Write frames as PNGs plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for i, frame in enumerate(seq.frames):
        name = f"frame_{i:04d}.png"
        save_image(frame, out_dir / name)
        names.append(name)
    manifest = out_dir / "manifest.txt"
    manifest.write_text("\n".join(names) + "\n", encoding="utf-8")
    return manifest
