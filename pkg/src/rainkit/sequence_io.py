"""Frame and sequence I/O plus the static-background alignment check.

Images are numpy float64 arrays of shape (H, W, C) with C in {1, 3} and
values in [0, 1]. 8-bit PNG is the on-disk format; conversion happens only
at the I/O boundary so repeated processing never accumulates quantization
drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

# Rec.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

DEFAULT_ALIGNMENT_THRESHOLD = 0.9

_CONST_EPS = 1e-12


class ManifestError(ValueError):
    """A sequence manifest or one of its referenced frames is unusable."""


def _as_hwc(image: np.ndarray) -> np.ndarray:
    """View a (H, W) or (H, W, C) array as (H, W, C)."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W) or (H, W, 1|3) image, got shape {arr.shape}")
    return arr


def load_image(path: str | Path) -> np.ndarray:
    """Load an 8-bit grayscale or RGB raster as float64 in [0, 1].

    Grayscale files come back as (H, W, 1), everything else as (H, W, 3).
    """
    with PILImage.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.float64)[:, :, None]
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def quantize_to_bytes(image: np.ndarray) -> np.ndarray:
    """Map [0, 1] values to uint8, rounding halves away from zero."""
    arr = _as_hwc(image)
    return np.clip(np.floor(arr * 255.0 + 0.5), 0, 255).astype(np.uint8)


def save_image(image: np.ndarray, path: str | Path) -> None:
    """Write an image as 8-bit PNG; values are quantized as round(v*255)."""
    data = quantize_to_bytes(image)
    if data.shape[2] == 1:
        pil = PILImage.fromarray(data[:, :, 0], mode="L")
    else:
        pil = PILImage.fromarray(data, mode="RGB")
    pil.save(Path(path), format="PNG")


@dataclass
class FrameSequence:
    """Ordered frames of one static scene, all sharing the same shape."""

    frames: list[np.ndarray]
    scene_id: str = "sequence"

    def __post_init__(self) -> None:
        if len(self.frames) < 2:
            raise ManifestError("sequence shorter than 2 frames")
        self.frames = [_as_hwc(f) for f in self.frames]
        shape = self.frames[0].shape
        for i, f in enumerate(self.frames):
            if f.shape != shape:
                raise ManifestError(
                    f"frame {i} has shape {f.shape}, expected {shape}"
                )

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.frames[0].shape


def load_manifest(path: str | Path, scene_id: str | None = None) -> FrameSequence:
    """Load the sequence listed in a manifest file.

    The manifest is UTF-8 text with one frame path per line, relative to
    the manifest's directory; blank lines and ``#`` comments are skipped.
    Any missing, undecodable, or shape-mismatched frame raises a
    ManifestError naming the offending line.
    """
    path = Path(path)
    if scene_id is None:
        scene_id = path.parent.name if path.stem == "manifest" else path.stem
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc

    frames: list[np.ndarray] = []
    paths: list[Path] = []
    shape: tuple[int, ...] | None = None
    for lineno, raw in enumerate(lines, start=1):
        entry = raw.strip()
        if not entry or entry.startswith("#"):
            continue
        frame_path = Path(entry)
        if not frame_path.is_absolute():
            frame_path = path.parent / frame_path
        try:
            frame = load_image(frame_path)
        except FileNotFoundError as exc:
            raise ManifestError(f"{path}:{lineno}: missing file {frame_path}") from exc
        except Exception as exc:
            raise ManifestError(f"{path}:{lineno}: cannot decode {frame_path}: {exc}") from exc
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise ManifestError(
                f"{path}:{lineno}: frame shape {frame.shape} does not match {shape}"
            )
        frames.append(frame)
        paths.append(frame_path)

    if len(frames) < 2:
        raise ManifestError(f"{path}: sequence shorter than 2 frames")
    seq = FrameSequence(frames, scene_id)
    seq.frame_paths = paths  # type: ignore[attr-defined]
    return seq


def luminance(image: np.ndarray) -> np.ndarray:
    """Rec.601 luminance as a 2-D array; grayscale passes through."""
    arr = _as_hwc(image)
    if arr.shape[2] == 1:
        return arr[:, :, 0]
    r, g, b = LUMA_WEIGHTS
    return r * arr[:, :, 0] + g * arr[:, :, 1] + b * arr[:, :, 2]


@dataclass
class AlignmentReport:
    """Diagnostic correlations of each frame against the temporal median."""

    per_frame_correlation: list[float]
    flagged_frames: list[int]
    threshold: float


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation with the constant-image convention.

    A zero-variance input makes the usual formula 0/0; by convention two
    constant-equal images correlate at 1.0 and any other degenerate pair
    at 0.0.
    """
    a = a.ravel()
    b = b.ravel()
    sa = a.std()
    sb = b.std()
    if sa < _CONST_EPS or sb < _CONST_EPS:
        if sa < _CONST_EPS and sb < _CONST_EPS and abs(a.mean() - b.mean()) < _CONST_EPS:
            return 1.0
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def validate_alignment(
    seq: FrameSequence, threshold: float = DEFAULT_ALIGNMENT_THRESHOLD
) -> AlignmentReport:
    """Check the aligned-static-background assumption.

    Computes the Pearson correlation between each frame's luminance and
    the luminance of the per-pixel temporal median frame; frames below
    ``threshold`` are flagged. Purely diagnostic, never mutates frames.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    stack = np.stack(seq.frames)
    median_luma = luminance(np.median(stack, axis=0))
    correlations = [ _pearson(luminance(f), median_luma) for f in seq.frames ]
    flagged = [i for i, c in enumerate(correlations) if c < threshold]
    return AlignmentReport(correlations, flagged, threshold)
