"""Training loops: pretrain on synthetic pairs, fine-tune on pseudo-GT pairs.

The optimizer minimizes a Charbonnier-smoothed L1, sqrt(e^2 + eps^2) - eps
with eps = 0.1: plain L1 + Adam stalls when the residual is a sparse set
of streak pixels (the 95% zero-error pixels emit constant-magnitude sign
gradients that cancel localized progress), while the smoothed form behaves
like L2 near zero and L1 on outliers. Both the smoothed loss and plain L1
are logged per epoch.

Runs are deterministic for a fixed config: sample order, crop positions,
and weight init all derive from the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from finetune_harness.data import PairDataset, load_pair_manifest
from finetune_harness.model import SmallUNet

CHARBONNIER_EPS = 0.1

# paper-scale schedule for reference: 200 pretrain epochs, 100 fine-tune
# epochs, batch 48; the defaults below are the desk-scale (~10x down) run


@dataclass(frozen=True)
class TrainConfig:
    """Desk-scale training settings."""

    learning_rate: float = 2e-4
    batch_size: int = 8
    pretrain_epochs: int = 20
    finetune_epochs: int = 10
    patch_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        for name in ("batch_size", "pretrain_epochs", "patch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.finetune_epochs < 0:  # 0 epochs = no-op fine-tune
            raise ValueError("finetune_epochs must be nonnegative")


@dataclass
class CheckpointMeta:
    """Summary of a checkpoint: stage, final epoch/loss, config, lineage."""

    stage: str  # "pretrained" | "finetuned"
    epoch: int
    train_loss: float
    config: dict
    parent: Optional[dict] = None

    def __post_init__(self) -> None:
        if self.stage not in ("pretrained", "finetuned"):
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.stage == "finetuned" and self.parent is None:
            raise ValueError("a finetuned checkpoint must record its pretrained ancestor")


def _charbonnier(err: torch.Tensor) -> torch.Tensor:
    return (torch.sqrt(err * err + CHARBONNIER_EPS**2) - CHARBONNIER_EPS).mean()


def _to_tensor(img: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(img.transpose(2, 0, 1))).float()


def _crop_batch(
    dataset: PairDataset, indices: np.ndarray, patch: int, rng: np.random.Generator
) -> tuple[torch.Tensor, torch.Tensor]:
    xs, ys = [], []
    for idx in indices:
        x = dataset.inputs[idx]
        y = dataset.targets[idx]
        h, w = x.shape[:2]
        top = int(rng.integers(0, h - patch + 1))
        left = int(rng.integers(0, w - patch + 1))
        xs.append(_to_tensor(x[top : top + patch, left : left + patch]))
        ys.append(_to_tensor(y[top : top + patch, left : left + patch]))
    return torch.stack(xs), torch.stack(ys)


def _train(
    model: SmallUNet,
    dataset: PairDataset,
    cfg: TrainConfig,
    epochs: int,
) -> list[dict]:
    if cfg.patch_size > dataset.min_side:
        raise ValueError(
            f"patch_size {cfg.patch_size} exceeds smallest image side {dataset.min_side}"
        )
    rng = np.random.default_rng(cfg.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    history: list[dict] = []
    model.train()
    n = len(dataset)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        epoch_l1 = 0.0
        steps = 0
        for start in range(0, n, cfg.batch_size):
            indices = order[start : start + cfg.batch_size]
            x, y = _crop_batch(dataset, indices, min(cfg.patch_size, dataset.min_side), rng)
            optimizer.zero_grad()
            err = model(x) - y
            loss = _charbonnier(err)
            loss.backward()
            optimizer.step()
            epoch_loss += loss.item()
            epoch_l1 += err.abs().mean().item()
            steps += 1
        history.append(
            {"epoch": epoch, "loss": epoch_loss / steps, "l1": epoch_l1 / steps}
        )
    return history


def _new_model(seed: int, channels: int = 3) -> SmallUNet:
    torch.manual_seed(seed)
    return SmallUNet(channels=channels)


def pretrain(pairs: PairDataset, cfg: TrainConfig) -> dict:
    """Train a fresh model on (degraded, clean) pairs; returns a checkpoint dict."""
    model = _new_model(cfg.seed)
    history = _train(model, pairs, cfg, cfg.pretrain_epochs)
    meta = CheckpointMeta(
        stage="pretrained",
        epoch=cfg.pretrain_epochs,
        train_loss=history[-1]["loss"] if history else float("nan"),
        config=asdict(cfg),
    )
    return {"state_dict": model.state_dict(), "meta": asdict(meta), "history": history}


def finetune(checkpoint: dict, manifest: str | Path | PairDataset, cfg: TrainConfig) -> dict:
    """Continue training a checkpoint on a stage-I pair manifest.

    Accepts a manifest path (the normal cross-component route) or an
    in-memory PairDataset. Zero fine-tune epochs return a checkpoint that
    evaluates identically to the input.
    """
    dataset = manifest if isinstance(manifest, PairDataset) else load_pair_manifest(manifest)
    model = _new_model(cfg.seed)
    model.load_state_dict(checkpoint["state_dict"])
    history = _train(model, dataset, cfg, cfg.finetune_epochs)
    parent_meta = dict(checkpoint["meta"])
    parent_meta.pop("parent", None)
    last_loss = history[-1]["loss"] if history else checkpoint["meta"]["train_loss"]
    meta = CheckpointMeta(
        stage="finetuned",
        epoch=cfg.finetune_epochs,
        train_loss=last_loss,
        config=asdict(cfg),
        parent=parent_meta,
    )
    return {"state_dict": model.state_dict(), "meta": asdict(meta), "history": history}


def save_checkpoint(checkpoint: dict, path: str | Path) -> None:
    torch.save(checkpoint, Path(path))


def load_checkpoint(path: str | Path) -> dict:
    checkpoint = torch.load(Path(path), map_location="cpu", weights_only=True)
    meta = checkpoint["meta"]
    CheckpointMeta(**meta)  # re-validate stage/lineage invariants
    return checkpoint


def model_from_checkpoint(checkpoint: dict) -> SmallUNet:
    model = SmallUNet()
    model.load_state_dict(checkpoint["state_dict"])
    model.eval()
    return model
