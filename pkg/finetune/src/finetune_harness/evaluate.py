"""Full-frame evaluation producing stage-I-compatible JSON reports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from finetune_harness.data import PairDataset
from finetune_harness.metrics import psnr, ssim
from finetune_harness.model import SmallUNet
from finetune_harness.train import model_from_checkpoint, _to_tensor


def restore_image(model: SmallUNet, image: np.ndarray) -> np.ndarray:
    """Run one (H, W, 3) float image through the network."""
    out = model.restore(_to_tensor(image))
    return out.numpy().transpose(1, 2, 0).astype(np.float64)


def evaluate(checkpoint: dict, pairs: PairDataset) -> dict:
    """Score a checkpoint over full frames.

    Returns a dict whose top-level keys (psnr_db, ssim) follow the stage-I
    report schema, plus a per_image breakdown.
    """
    if len(pairs) == 0:
        raise ValueError("no pairs to evaluate")
    model = model_from_checkpoint(checkpoint)
    per_image = []
    for x, y, pid in zip(pairs.inputs, pairs.targets, pairs.ids):
        restored = restore_image(model, x)
        per_image.append(
            {"id": pid, "psnr_db": psnr(restored, y), "ssim": ssim(restored, y)}
        )
    return {
        "psnr_db": float(np.mean([r["psnr_db"] for r in per_image])),
        "ssim": float(np.mean([r["ssim"] for r in per_image])),
        "per_image": per_image,
    }


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
