"""Stage-II fine-tuning harness.

Pretrains a small U-shaped restoration network on synthetic rain pairs,
then fine-tunes it on the (rainy frame, pseudo ground truth) pairs the
stage-I pipeline emits as a tab-separated pair manifest. Couples to stage
I only through files: the pair-manifest format, 8-bit PNG rasters, and the
JSON report schema.
"""

from finetune_harness.data import PairDataset, load_pair_manifest, synthetic_pairs
from finetune_harness.metrics import psnr, ssim
from finetune_harness.model import SmallUNet
from finetune_harness.train import (
    CheckpointMeta,
    TrainConfig,
    finetune,
    load_checkpoint,
    pretrain,
    save_checkpoint,
)
from finetune_harness.evaluate import evaluate

__version__ = "0.1.0"

__all__ = [
    "CheckpointMeta",
    "PairDataset",
    "SmallUNet",
    "TrainConfig",
    "evaluate",
    "finetune",
    "load_checkpoint",
    "load_pair_manifest",
    "pretrain",
    "psnr",
    "save_checkpoint",
    "ssim",
    "synthetic_pairs",
]
