"""Stage-I orchestration: sequences -> pseudo ground truth + training pairs.

Each input sequence is collapsed by the configured method (average, median,
or low-rank decomposition), enhanced (fixed parameters, a per-sequence
parameter file, or histogram-guided auto-tuning), and written out as an
8-bit pseudo-GT raster. Every original frame is paired with its sequence's
pseudo GT in a tab-separated pair manifest for downstream fine-tuning, and
a JSON run report captures configuration, solver diagnostics, and chosen
enhancement parameters. Runs are deterministic for a fixed config and seed
at any worker count.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Union

import numpy as np

from rainkit.metrics import psnr, ssim
from rainkit.enhance import (
    DEFAULT_GRID,
    EnhanceParams,
    Histogram,
    TuningGrid,
    apply_enhancement,
    auto_tune,
    compute_histogram,
    histogram_distance,
    load_histogram,
)
from rainkit.rpca import RpcaConfig, derain_sequence
from rainkit.sequence_io import (
    DEFAULT_ALIGNMENT_THRESHOLD,
    FrameSequence,
    load_image,
    load_manifest,
    save_image,
    validate_alignment,
)
from rainkit.temporal import temporal_mean, temporal_median

METHODS = ("average", "median", "lowrank")

PAIR_MANIFEST_NAME = "pair_manifest.tsv"
RUN_REPORT_NAME = "run_report.json"


@dataclass
class PipelineConfig:
    """Batch run settings.

    enhance is either fixed EnhanceParams, the string "auto" (requires
    reference_histogram), or a per-scene mapping scene_id -> EnhanceParams.
    """

    manifests: list[Path] = field(default_factory=list)
    method: str = "lowrank"
    rpca: RpcaConfig = field(default_factory=RpcaConfig)
    enhance: Union[EnhanceParams, str, dict] = field(
        default_factory=lambda: EnhanceParams(gamma=1.0, weight=0.0, kernel_size=1)
    )
    reference_histogram: Optional[Path] = None
    grid: TuningGrid = DEFAULT_GRID
    metric: str = "wasserstein1"
    out_dir: Path = Path("out")
    seed: int = 0
    workers: int = 1
    alignment_threshold: float = DEFAULT_ALIGNMENT_THRESHOLD

    def __post_init__(self) -> None:
        self.manifests = [Path(p) for p in self.manifests]
        self.out_dir = Path(self.out_dir)
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.enhance == "auto" and self.reference_histogram is None:
            raise ValueError('enhance "auto" requires a reference_histogram path')
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def _sequence_seed(seed: int, scene_id: str) -> int:
    """Stable per-sequence seed independent of manifest order and workers."""
    digest = hashlib.sha256(f"{seed}:{scene_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _config_echo(config: PipelineConfig) -> dict:
    # workers is deliberately not echoed: it cannot affect results, and
    # reports must be byte-identical at any worker count
    echo = {
        "manifests": [str(p) for p in config.manifests],
        "method": config.method,
        "rpca": asdict(config.rpca),
        "metric": config.metric,
        "out_dir": str(config.out_dir),
        "seed": config.seed,
        "alignment_threshold": config.alignment_threshold,
    }
    if isinstance(config.enhance, EnhanceParams):
        echo["enhance"] = asdict(config.enhance)
    elif isinstance(config.enhance, dict):
        echo["enhance"] = {k: asdict(v) for k, v in config.enhance.items()}
    else:
        echo["enhance"] = config.enhance
        echo["reference_histogram"] = str(config.reference_histogram)
        echo["grid"] = {
            "gammas": list(config.grid.gammas),
            "weights": list(config.grid.weights),
            "kernel_sizes": list(config.grid.kernel_sizes),
            "sharpen_mode": config.grid.sharpen_mode,
        }
    return echo


@dataclass
class SequenceResult:
    scene_id: str
    status: str  # "ok" | "failed"
    record: dict
    pseudo_gt: Optional[np.ndarray] = None
    pseudo_gt_path: Optional[Path] = None
    frame_paths: list[Path] = field(default_factory=list)


def _collapse(seq: FrameSequence, config: PipelineConfig, seed: int):
    """Collapse a sequence by the configured method.

    Returns (raw pseudo-GT image, rpca diagnostics or None, warnings).
    """
    warnings: list[str] = []
    if config.method == "average":
        return np.clip(temporal_mean(seq), 0.0, 1.0), None, warnings
    if config.method == "median":
        return np.clip(temporal_median(seq), 0.0, 1.0), None, warnings
    _, _, pseudo = derain_sequence(seq, config.rpca, seed=seed)
    diagnostics = pseudo.provenance["channels"]
    for entry in diagnostics:
        if not entry["converged"]:
            warnings.append(
                "rpca channel {channel} did not converge: residual {final_residual:.3e} "
                "after {iterations} iterations".format(**entry)
            )
    return pseudo.image, diagnostics, warnings


def _load_reference(config: PipelineConfig, scene_id: str) -> Optional[Histogram]:
    """Reference histogram for auto mode: one file, or a directory of
    per-scene <scene_id>.hist files."""
    if config.enhance != "auto":
        return None
    path = Path(config.reference_histogram)
    if path.is_dir():
        candidate = path / f"{scene_id}.hist"
        if not candidate.exists():
            raise FileNotFoundError(f"no reference histogram {candidate}")
        return load_histogram(candidate)
    return load_histogram(path)


def _pick_enhancement(
    image: np.ndarray,
    scene_id: str,
    config: PipelineConfig,
    reference: Optional[Histogram],
) -> tuple[EnhanceParams, Optional[float]]:
    if config.enhance == "auto":
        params = auto_tune(image, reference, config.grid, config.metric)
        dist = histogram_distance(
            compute_histogram(apply_enhancement(image, params)), reference, config.metric
        )
        return params, dist
    if isinstance(config.enhance, dict):
        if scene_id not in config.enhance:
            raise KeyError(f"no enhancement parameters for sequence {scene_id!r}")
        return config.enhance[scene_id], None
    return config.enhance, None


def _process_sequence(manifest: Path, config: PipelineConfig) -> SequenceResult:
    seq = load_manifest(manifest)
    scene_id = seq.scene_id
    reference = _load_reference(config, scene_id)
    seed = _sequence_seed(config.seed, scene_id)
    record: dict = {"scene_id": scene_id, "manifest": str(manifest), "frames": len(seq)}

    alignment = validate_alignment(seq, config.alignment_threshold)
    record["alignment"] = {
        "correlations": [round(c, 6) for c in alignment.per_frame_correlation],
        "flagged_frames": alignment.flagged_frames,
        "threshold": alignment.threshold,
    }
    warnings = []
    if alignment.flagged_frames:
        warnings.append(f"frames {alignment.flagged_frames} fall below alignment threshold")

    raw, diagnostics, collapse_warnings = _collapse(seq, config, seed)
    warnings.extend(collapse_warnings)
    if diagnostics is not None:
        record["rpca"] = diagnostics

    params, dist = _pick_enhancement(raw, scene_id, config, reference)
    enhanced = apply_enhancement(raw, params)
    record["enhancement"] = asdict(params)
    if dist is not None:
        record["enhancement"]["distance"] = dist
    record["warnings"] = warnings
    record["status"] = "ok"

    return SequenceResult(
        scene_id=scene_id,
        status="ok",
        record=record,
        pseudo_gt=enhanced,
        frame_paths=list(getattr(seq, "frame_paths", [])),
    )


@dataclass
class Stage1Result:
    """Artifacts of one batch run."""

    results: list[SequenceResult]
    pair_manifest_path: Path
    report_path: Path
    report: dict

    @property
    def failed(self) -> list[SequenceResult]:
        return [r for r in self.results if r.status != "ok"]

    @property
    def ok(self) -> bool:
        return not self.failed


def run_stage1(config: PipelineConfig) -> Stage1Result:
    """Run stage I over all configured sequences.

    A failing sequence is logged in the report and skipped; the remaining
    sequences still run. Output files: pseudo_gt/<scene>.png per sequence,
    pair_manifest.tsv, run_report.json.
    """
    out_dir = config.out_dir
    (out_dir / "pseudo_gt").mkdir(parents=True, exist_ok=True)

    def worker(manifest: Path) -> SequenceResult:
        scene_id = manifest.parent.name if manifest.stem == "manifest" else manifest.stem
        try:
            return _process_sequence(manifest, config)
        except Exception as exc:
            record = {
                "scene_id": scene_id,
                "manifest": str(manifest),
                "status": "failed",
                "error": f"{type(exc).__name__}: {exc}",
            }
            return SequenceResult(scene_id=scene_id, status="failed", record=record)

    if config.workers == 1:
        results = [worker(m) for m in config.manifests]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(worker, config.manifests))

    # deterministic emission order regardless of completion order
    results.sort(key=lambda r: r.scene_id)

    pair_rows: list[str] = []
    for result in results:
        if result.status != "ok":
            continue
        png_path = out_dir / "pseudo_gt" / f"{result.scene_id}.png"
        save_image(result.pseudo_gt, png_path)
        result.pseudo_gt_path = png_path
        result.record["pseudo_gt"] = png_path.relative_to(out_dir).as_posix()
        for frame_path in result.frame_paths:
            rainy_rel = Path(os.path.relpath(frame_path, out_dir)).as_posix()
            gt_rel = png_path.relative_to(out_dir).as_posix()
            pair_rows.append(f"{rainy_rel}\t{gt_rel}\t{result.scene_id}")

    pair_manifest_path = out_dir / PAIR_MANIFEST_NAME
    pair_manifest_path.write_text(
        "\n".join(pair_rows) + ("\n" if pair_rows else ""), encoding="utf-8"
    )

    report = {
        "config": _config_echo(config),
        "sequences": [r.record for r in results],
        "failed_sequences": [r.scene_id for r in results if r.status != "ok"],
    }
    report_path = out_dir / RUN_REPORT_NAME
    report_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return Stage1Result(results, pair_manifest_path, report_path, report)


# --- method comparison (synthetic runs with known ground truth) ---

COMPARISON_ROWS = ("Average", "Median", "Low-rank", "Pseudo GT")


@dataclass
class ComparisonTable:
    """PSNR/SSIM of each collapse method, per sequence and averaged."""

    per_sequence: dict  # scene_id -> {row -> {"psnr_db": x, "ssim": y}}
    aggregate: dict  # row -> {"psnr_db": x, "ssim": y}

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(
            {"per_sequence": self.per_sequence, "aggregate": self.aggregate}, indent=indent
        )

    @classmethod
    def from_json(cls, text: str) -> "ComparisonTable":
        data = json.loads(text)
        return cls(per_sequence=data["per_sequence"], aggregate=data["aggregate"])

    def to_text(self) -> str:
        lines = [f"{'method':<12} {'PSNR':>8} {'SSIM':>8}"]
        for row in COMPARISON_ROWS:
            entry = self.aggregate[row]
            lines.append(f"{row:<12} {entry['psnr_db']:>8.3f} {entry['ssim']:>8.4f}")
        return "\n".join(lines)


def compare_methods(config: PipelineConfig, gt_images: dict[str, np.ndarray]) -> ComparisonTable:
    """Score every collapse method against known clean images.

    gt_images maps scene_id to the clean ground truth; every configured
    manifest must have one. "Pseudo GT" is the low-rank collapse followed
    by the configured enhancement.
    """
    per_sequence: dict[str, dict] = {}
    for manifest in sorted(config.manifests, key=lambda p: str(p)):
        seq = load_manifest(manifest)
        if seq.scene_id not in gt_images:
            raise KeyError(f"no ground truth for sequence {seq.scene_id!r}")
        gt = gt_images[seq.scene_id]
        reference = _load_reference(config, seq.scene_id)
        seed = _sequence_seed(config.seed, seq.scene_id)
        _, _, pseudo = derain_sequence(seq, config.rpca, seed=seed)
        lowrank = pseudo.image
        params, _ = _pick_enhancement(lowrank, seq.scene_id, config, reference)
        enhanced = apply_enhancement(lowrank, params)
        outputs = {
            "Average": np.clip(temporal_mean(seq), 0.0, 1.0),
            "Median": np.clip(temporal_median(seq), 0.0, 1.0),
            "Low-rank": lowrank,
            "Pseudo GT": enhanced,
        }
        per_sequence[seq.scene_id] = {
            row: {
                "psnr_db": round(psnr(img, gt), 6),
                "ssim": round(ssim(img, gt), 6),
            }
            for row, img in outputs.items()
        }
    aggregate = {
        row: {
            "psnr_db": round(
                float(np.mean([per_sequence[s][row]["psnr_db"] for s in per_sequence])), 6
            ),
            "ssim": round(
                float(np.mean([per_sequence[s][row]["ssim"] for s in per_sequence])), 6
            ),
        }
        for row in COMPARISON_ROWS
    }
    return ComparisonTable(per_sequence=per_sequence, aggregate=aggregate)


# --- plain-text key/value config files ---

def _parse_scalar(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("none", "auto"):
        return None
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def parse_config_file(path: str | Path) -> dict:
    """Parse a plain-text key/value config: one `key = value` per line.

    `#` starts a comment; repeated keys collect into a list. Values are
    coerced to bool/int/float where possible; "none"/"auto" become None.
    """
    data: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in data:
            if not isinstance(data[key], list):
                data[key] = [data[key]]
            data[key].append(value)
        else:
            data[key] = value
    return data


def _parse_float_tuple(value: str) -> tuple[float, ...]:
    return tuple(float(v) for v in value.replace(",", " ").split())


def _parse_int_tuple(value: str) -> tuple[int, ...]:
    return tuple(int(v) for v in value.replace(",", " ").split())


def load_params_file(path: str | Path) -> dict[str, EnhanceParams]:
    """Per-sequence enhancement parameters, one TSV row per scene.

    Columns: scene_id, gamma, weight, kernel_size[, sharpen_mode].
    """
    table: dict[str, EnhanceParams] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) not in (4, 5):
            raise ValueError(f"{path}:{lineno}: expected 4 or 5 columns, got {len(parts)}")
        scene, gamma, weight, kernel = parts[:4]
        mode = parts[4] if len(parts) == 5 else "standard"
        table[scene] = EnhanceParams(float(gamma), float(weight), int(kernel), mode)
    return table


def config_from_file(path: str | Path, **overrides) -> PipelineConfig:
    """Build a PipelineConfig from a key/value file plus keyword overrides.

    Recognized keys: manifest (repeatable), method, seed, workers, out,
    metric, alignment_threshold, enhance (auto|fixed), enhance.gamma,
    enhance.weight, enhance.kernel_size, enhance.sharpen_mode,
    enhance.params_file, reference_histogram, grid.gammas, grid.weights,
    grid.kernel_sizes, grid.sharpen_mode, and rpca.<field> for every
    RpcaConfig field.
    """
    path = Path(path)
    data = parse_config_file(path)

    def pop(key, default=None):
        return data.pop(key, default)

    base = path.parent

    def as_path(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    manifests = pop("manifest", [])
    if isinstance(manifests, str):
        manifests = [manifests]
    config_kwargs: dict = {"manifests": [as_path(m) for m in manifests]}

    if (v := pop("method")) is not None:
        config_kwargs["method"] = v
    if (v := pop("seed")) is not None:
        config_kwargs["seed"] = int(v)
    if (v := pop("workers")) is not None:
        config_kwargs["workers"] = int(v)
    if (v := pop("out")) is not None:
        config_kwargs["out_dir"] = as_path(v)
    if (v := pop("metric")) is not None:
        config_kwargs["metric"] = v
    if (v := pop("alignment_threshold")) is not None:
        config_kwargs["alignment_threshold"] = float(v)

    rpca_kwargs: dict = {}
    for fname in (
        "lam", "mu0", "rho", "tol", "max_iter", "frame_stride", "nonneg_rain", "color_mode",
    ):
        if (v := pop(f"rpca.{fname}")) is not None:
            parsed = _parse_scalar(v)
            if fname in ("max_iter", "frame_stride") and parsed is not None:
                parsed = int(parsed)
            rpca_kwargs[fname] = parsed
    if rpca_kwargs:
        config_kwargs["rpca"] = RpcaConfig(**rpca_kwargs)

    grid_kwargs: dict = {}
    if (v := pop("grid.gammas")) is not None:
        grid_kwargs["gammas"] = _parse_float_tuple(v)
    if (v := pop("grid.weights")) is not None:
        grid_kwargs["weights"] = _parse_float_tuple(v)
    if (v := pop("grid.kernel_sizes")) is not None:
        grid_kwargs["kernel_sizes"] = _parse_int_tuple(v)
    if (v := pop("grid.sharpen_mode")) is not None:
        grid_kwargs["sharpen_mode"] = v
    if grid_kwargs:
        config_kwargs["grid"] = TuningGrid(**grid_kwargs)

    if (v := pop("reference_histogram")) is not None:
        config_kwargs["reference_histogram"] = as_path(v)

    enhance_mode = pop("enhance", "fixed")
    params_file = pop("enhance.params_file")
    if params_file is not None:
        config_kwargs["enhance"] = load_params_file(as_path(params_file))
    elif enhance_mode == "auto" or enhance_mode is None:
        config_kwargs["enhance"] = "auto"
    else:
        params_kwargs: dict = {}
        if (v := pop("enhance.gamma")) is not None:
            params_kwargs["gamma"] = float(v)
        if (v := pop("enhance.weight")) is not None:
            params_kwargs["weight"] = float(v)
        if (v := pop("enhance.kernel_size")) is not None:
            params_kwargs["kernel_size"] = int(v)
        if (v := pop("enhance.sharpen_mode")) is not None:
            params_kwargs["sharpen_mode"] = v
        config_kwargs["enhance"] = (
            EnhanceParams(**params_kwargs)
            if params_kwargs
            else EnhanceParams(gamma=1.0, weight=0.0, kernel_size=1)
        )

    for key in ("enhance.gamma", "enhance.weight", "enhance.kernel_size", "enhance.sharpen_mode"):
        data.pop(key, None)
    if data:
        raise ValueError(f"{path}: unknown config keys {sorted(data)}")

    config_kwargs.update(overrides)
    return PipelineConfig(**config_kwargs)


def load_gt_images(path: str | Path, scene_ids: list[str]) -> dict[str, np.ndarray]:
    """Ground-truth images for comparison: a directory of <scene_id>.png files.

    A single image file is accepted when there is exactly one sequence.
    """
    path = Path(path)
    if path.is_file():
        if len(scene_ids) != 1:
            raise ValueError("a single GT file needs exactly one sequence")
        return {scene_ids[0]: load_image(path)}
    table = {}
    for scene in scene_ids:
        candidate = path / f"{scene}.png"
        if not candidate.exists():
            raise FileNotFoundError(f"missing ground truth {candidate}")
        table[scene] = load_image(candidate)
    return table
