"""Batch image deraining toolkit.

Collapses temporally aligned rainy sequences of a static scene into a
rain-free pseudo ground-truth image: low-rank + sparse decomposition
separates the static background from dynamic rain streaks, and a
histogram-guided enhancement step restores contrast and sharpness.
"""

from rainkit.sequence_io import (
    AlignmentReport,
    FrameSequence,
    ManifestError,
    load_image,
    load_manifest,
    save_image,
    validate_alignment,
)
from rainkit.temporal import temporal_mean, temporal_median
from rainkit.rpca import (
    PseudoGt,
    RpcaConfig,
    RpcaOutput,
    SolverError,
    derain_sequence,
    rpca_decompose,
    soft_threshold,
    svt,
)
from rainkit.enhance import (
    DEFAULT_GRID,
    EnhanceParams,
    Histogram,
    TuningGrid,
    apply_enhancement,
    auto_tune,
    compute_histogram,
    gamma_correct,
    gaussian_blur,
    histogram_distance,
    load_histogram,
    save_histogram,
    unsharp_mask,
)
from rainkit.metrics import QualityReport, psnr, quality_report, ssim
from rainkit.pipeline import PipelineConfig, compare_methods, run_stage1

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "DEFAULT_GRID",
    "EnhanceParams",
    "FrameSequence",
    "Histogram",
    "ManifestError",
    "PipelineConfig",
    "PseudoGt",
    "QualityReport",
    "RpcaConfig",
    "RpcaOutput",
    "SolverError",
    "TuningGrid",
    "apply_enhancement",
    "auto_tune",
    "compare_methods",
    "compute_histogram",
    "derain_sequence",
    "gamma_correct",
    "gaussian_blur",
    "histogram_distance",
    "load_histogram",
    "load_image",
    "load_manifest",
    "psnr",
    "quality_report",
    "rpca_decompose",
    "run_stage1",
    "save_histogram",
    "save_image",
    "soft_threshold",
    "ssim",
    "svt",
    "temporal_mean",
    "temporal_median",
    "unsharp_mask",
    "validate_alignment",
]
