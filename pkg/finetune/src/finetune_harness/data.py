"""Paired datasets: pair-manifest loading, PNG I/O, synthetic rain pairs.

The pair manifest is the stage-I interchange format: UTF-8 text, one
``rainy_path<TAB>target_path<TAB>sequence_id`` row per frame, paths
relative to the manifest file. The same format doubles as the pretraining
input, so one loader serves both stages.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


class ManifestRowError(ValueError):
    """A pair-manifest row is malformed or references unreadable files."""


def load_png(path: str | Path) -> np.ndarray:
    """8-bit PNG as float64 (H, W, 3) in [0, 1]; grayscale is replicated."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def save_png(image: np.ndarray, path: str | Path) -> None:
    """Quantize [0, 1] floats to 8-bit PNG (round half away from zero)."""
    data = np.clip(np.floor(np.asarray(image) * 255.0 + 0.5), 0, 255).astype(np.uint8)
    if data.ndim == 2:
        data = np.stack([data] * 3, axis=2)
    Image.fromarray(data, mode="RGB").save(Path(path), format="PNG")


@dataclass
class PairDataset:
    """In-memory (input, target) image pairs with a shared minimum size."""

    inputs: list[np.ndarray]
    targets: list[np.ndarray]
    ids: list[str]

    def __post_init__(self) -> None:
        if not self.inputs:
            raise ValueError("dataset is empty")
        if not (len(self.inputs) == len(self.targets) == len(self.ids)):
            raise ValueError("inputs, targets, and ids must align")
        for x, y in zip(self.inputs, self.targets):
            if x.shape != y.shape:
                raise ValueError(f"pair shape mismatch: {x.shape} vs {y.shape}")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def min_side(self) -> int:
        return min(min(x.shape[0], x.shape[1]) for x in self.inputs)


def load_pair_manifest(path: str | Path) -> PairDataset:
    """Load the stage-I pair manifest; errors name the offending row."""
    path = Path(path)
    inputs: list[np.ndarray] = []
    targets: list[np.ndarray] = []
    ids: list[str] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ManifestRowError(
                f"{path}: row {lineno}: expected 3 tab-separated columns, got {len(parts)}"
            )
        rainy_rel, target_rel, seq_id = parts
        rainy = path.parent / rainy_rel
        target = path.parent / target_rel
        try:
            inputs.append(load_png(rainy))
        except Exception as exc:
            raise ManifestRowError(f"{path}: row {lineno}: cannot read {rainy}: {exc}") from exc
        try:
            targets.append(load_png(target))
        except Exception as exc:
            raise ManifestRowError(f"{path}: row {lineno}: cannot read {target}: {exc}") from exc
        ids.append(seq_id)
    if not inputs:
        raise ManifestRowError(f"{path}: manifest has no rows")
    return PairDataset(inputs, targets, ids)


def _smooth_field(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Band-limited random field in [0.05, 0.95] built from low-frequency cosines."""
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    field = np.zeros((h, w))
    for _ in range(4):
        fy, fx = rng.uniform(0.3, 2.0, 2)
        phase_y, phase_x = rng.uniform(0, 2 * np.pi, 2)
        field += rng.uniform(0.1, 0.3) * np.cos(
            2 * np.pi * fy * yy / h + phase_y
        ) * np.cos(2 * np.pi * fx * xx / w + phase_x)
    for _ in range(3):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        r = rng.uniform(4, h / 3)
        field += rng.uniform(-0.25, 0.35) * np.exp(
            -((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r)
        )
    field = 0.5 + field
    return np.clip(field, 0.05, 0.95)


def _streaks(rng: np.random.Generator, h: int, w: int, coverage: float) -> np.ndarray:
    mask = np.zeros((h, w), dtype=bool)
    target = int(coverage * h * w)
    while mask.sum() < target:
        length = rng.uniform(6, 14)
        theta = np.deg2rad(rng.uniform(55, 80)) * rng.choice([1.0, -1.0])
        y0, x0 = rng.uniform(-length, h), rng.uniform(0, w)
        t = np.arange(0, length, 0.5)
        ys = np.round(y0 + t * np.cos(theta)).astype(int)
        xs = np.round(x0 + t * np.sin(theta)).astype(int)
        ok = (ys >= 0) & (ys < h) & (xs >= 0) & (xs < w)
        mask[ys[ok], xs[ok]] = True
    return mask


def make_scene(rng: np.random.Generator, h: int = 64, w: int = 64) -> np.ndarray:
    """Procedural clean RGB scene in [0.02, 0.98]."""
    base = _smooth_field(rng, h, w)
    tints = rng.uniform(0.85, 1.1, 3)
    return np.clip(np.stack([base * t for t in tints], axis=2), 0.02, 0.98)


def apply_rain(
    clean: np.ndarray, rng: np.random.Generator, coverage: float = 0.06
) -> np.ndarray:
    """Overlay bright streaks plus a mild veil on a clean scene."""
    h, w = clean.shape[:2]
    mask = _streaks(rng, h, w, coverage)
    veil = rng.uniform(0.0, 0.05)
    return np.clip(clean + (0.4 * mask + veil)[:, :, None], 0.0, 1.0)


def rain_pair(
    rng: np.random.Generator, h: int = 64, w: int = 64, coverage: float = 0.06
) -> tuple[np.ndarray, np.ndarray]:
    """One synthetic (rainy, clean) pair with streaks and a mild veil."""
    clean = make_scene(rng, h, w)
    return apply_rain(clean, rng, coverage), clean


def synthetic_pairs(n_pairs: int, seed: int, h: int = 64, w: int = 64) -> PairDataset:
    """Deterministic synthetic pretraining dataset."""
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng(seed)
    inputs, targets, ids = [], [], []
    for i in range(n_pairs):
        rainy, clean = rain_pair(rng, h, w)
        inputs.append(rainy)
        targets.append(clean)
        ids.append(f"synthetic{i}")
    return PairDataset(inputs, targets, ids)


def write_pair_manifest(dataset: PairDataset, out_dir: str | Path) -> Path:
    """Materialize a dataset as PNGs plus a pair manifest (for the CLI)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, (x, y, pid) in enumerate(zip(dataset.inputs, dataset.targets, dataset.ids)):
        rainy_name = f"pair_{i:04d}_rainy.png"
        target_name = f"pair_{i:04d}_target.png"
        save_png(x, out_dir / rainy_name)
        save_png(y, out_dir / target_name)
        rows.append(f"{rainy_name}\t{target_name}\t{pid}")
    manifest = out_dir / "pairs.tsv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest
