"""Command-line interface.

Subcommands:
    pipeline run      batch stage-I run from a config file
    pipeline compare  score collapse methods against known ground truth
    derain            decompose one sequence manifest into a pseudo GT
    enhance           apply (or auto-tune) enhancement on one image
    metrics           PSNR/SSIM report for a prediction/GT pair
    hist              compute and store an image histogram
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from rainkit.enhance import (
    DEFAULT_GRID,
    EnhanceParams,
    apply_enhancement,
    auto_tune,
    compute_histogram,
    histogram_distance,
    load_histogram,
    save_histogram,
)
from rainkit.metrics import quality_report
from rainkit.pipeline import (
    PipelineConfig,
    compare_methods,
    config_from_file,
    load_gt_images,
    run_stage1,
)
from rainkit.rpca import RpcaConfig, derain_sequence
from rainkit.sequence_io import load_image, load_manifest, save_image


def _add_common_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="run seed")
    parser.add_argument("--workers", type=int, default=None, help="concurrent sequences")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument(
        "--method", choices=("average", "median", "lowrank"), default=None,
        help="sequence collapse method",
    )


def _overrides(args: argparse.Namespace) -> dict:
    table = {}
    if args.seed is not None:
        table["seed"] = args.seed
    if args.workers is not None:
        table["workers"] = args.workers
    if args.out is not None:
        table["out_dir"] = args.out
    if args.method is not None:
        table["method"] = args.method
    return table


def _cmd_pipeline_run(args: argparse.Namespace) -> int:
    config = config_from_file(args.config, **_overrides(args))
    result = run_stage1(config)
    for res in result.results:
        if res.status == "ok":
            print(f"[ok] {res.scene_id}: {res.record['pseudo_gt']}")
        else:
            print(f"[failed] {res.scene_id}: {res.record['error']}", file=sys.stderr)
    print(f"pair manifest: {result.pair_manifest_path}")
    print(f"run report:    {result.report_path}")
    return 0 if result.ok else 1


def _cmd_pipeline_compare(args: argparse.Namespace) -> int:
    config = config_from_file(args.config, **_overrides(args))
    scene_ids = []
    for manifest in config.manifests:
        m = Path(manifest)
        scene_ids.append(m.parent.name if m.stem == "manifest" else m.stem)
    gt_images = load_gt_images(args.gt, scene_ids)
    table = compare_methods(config, gt_images)
    print(table.to_text())
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "comparison.json"
    json_path.write_text(table.to_json() + "\n", encoding="utf-8")
    text_path = out_dir / "comparison.txt"
    text_path.write_text(table.to_text() + "\n", encoding="utf-8")
    print(f"written: {json_path}")
    return 0


def _cmd_derain(args: argparse.Namespace) -> int:
    seq = load_manifest(args.manifest)
    rpca_config = RpcaConfig(frame_stride=args.frame_stride)
    backgrounds, rains, pseudo = derain_sequence(seq, rpca_config, seed=args.seed)
    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    gt_path = out_dir / f"{seq.scene_id}_pseudo_gt.png"
    save_image(pseudo.image, gt_path)
    print(f"pseudo GT: {gt_path}")
    for entry in pseudo.provenance["channels"]:
        status = "converged" if entry["converged"] else "NOT CONVERGED"
        print(
            f"channel {entry['channel']}: {entry['iterations']} iterations, "
            f"residual {entry['final_residual']:.3e}, rank {entry['rank_estimate']} ({status})"
        )
    if args.dump:
        dump_dir = out_dir / f"{seq.scene_id}_debug"
        dump_dir.mkdir(exist_ok=True)
        for i, (bg, rain) in enumerate(zip(backgrounds.frames, rains.frames)):
            save_image(np.clip(bg, 0.0, 1.0), dump_dir / f"background_{i:04d}.png")
            save_image(np.clip(rain + 0.5, 0.0, 1.0), dump_dir / f"rain_{i:04d}.png")
        print(f"debug frames: {dump_dir}")
    return 0


def _cmd_enhance(args: argparse.Namespace) -> int:
    image = load_image(args.image)
    if args.auto:
        if args.reference is None:
            print("--auto requires --reference <histogram file>", file=sys.stderr)
            return 2
        reference = load_histogram(args.reference)
        params = auto_tune(image, reference, DEFAULT_GRID, args.metric)
        print(
            f"auto-tuned: gamma={params.gamma} weight={params.weight} "
            f"kernel_size={params.kernel_size} mode={params.sharpen_mode}"
        )
    else:
        params = EnhanceParams(args.gamma, args.weight, args.kernel, args.mode)
    out = apply_enhancement(image, params)
    out_path = args.out or Path(args.image).with_suffix(".enhanced.png")
    save_image(out, out_path)
    print(f"written: {out_path}")
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    pred = load_image(args.pred)
    gt = load_image(args.gt)
    hist_dist = None
    if args.reference is not None:
        hist_dist = histogram_distance(
            compute_histogram(pred), load_histogram(args.reference), args.metric
        )
    report = quality_report(pred, gt, per_channel=args.per_channel, histogram_distance=hist_dist)
    text = report.to_json()
    print(text)
    if args.out is not None:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def _cmd_hist(args: argparse.Namespace) -> int:
    hist = compute_histogram(load_image(args.image))
    if args.out is not None:
        save_histogram(hist, args.out)
        print(f"written: {args.out}")
    else:
        for row in hist.bins:
            print(" ".join(f"{v:.8f}" for v in row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rainkit", description="Batch image deraining toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pipe = sub.add_parser("pipeline", help="batch stage-I operations")
    pipe_sub = pipe.add_subparsers(dest="pipeline_command", required=True)

    run_p = pipe_sub.add_parser("run", help="run stage I over configured sequences")
    run_p.add_argument("--config", type=Path, required=True, help="key/value config file")
    _add_common_overrides(run_p)
    run_p.set_defaults(func=_cmd_pipeline_run)

    cmp_p = pipe_sub.add_parser("compare", help="compare collapse methods against GT")
    cmp_p.add_argument("--config", type=Path, required=True)
    cmp_p.add_argument("--gt", type=Path, required=True, help="GT image file or directory")
    _add_common_overrides(cmp_p)
    cmp_p.set_defaults(func=_cmd_pipeline_compare)

    der_p = sub.add_parser("derain", help="derain one sequence manifest")
    der_p.add_argument("manifest", type=Path)
    der_p.add_argument("--out", type=Path, default=Path("derained"))
    der_p.add_argument("--seed", type=int, default=0)
    der_p.add_argument("--frame-stride", type=int, default=None)
    der_p.add_argument("--dump", action="store_true", help="write background/rain frames")
    der_p.set_defaults(func=_cmd_derain)

    enh_p = sub.add_parser("enhance", help="enhance a single image")
    enh_p.add_argument("image", type=Path)
    enh_p.add_argument("--gamma", type=float, default=1.0)
    enh_p.add_argument("--weight", type=float, default=0.5)
    enh_p.add_argument("--kernel", type=int, default=5)
    enh_p.add_argument("--mode", choices=("standard", "literal"), default="standard")
    enh_p.add_argument("--auto", action="store_true", help="histogram-guided auto-tune")
    enh_p.add_argument("--reference", type=Path, default=None, help="reference histogram")
    enh_p.add_argument("--metric", choices=("l1", "chi2", "wasserstein1"), default="wasserstein1")
    enh_p.add_argument("--out", type=Path, default=None)
    enh_p.set_defaults(func=_cmd_enhance)

    met_p = sub.add_parser("metrics", help="PSNR/SSIM report for a pair of images")
    met_p.add_argument("pred", type=Path)
    met_p.add_argument("gt", type=Path)
    met_p.add_argument("--per-channel", action="store_true")
    met_p.add_argument("--reference", type=Path, default=None, help="reference histogram")
    met_p.add_argument("--metric", choices=("l1", "chi2", "wasserstein1"), default="wasserstein1")
    met_p.add_argument("--out", type=Path, default=None, help="also write JSON here")
    met_p.set_defaults(func=_cmd_metrics)

    hist_p = sub.add_parser("hist", help="compute an image histogram")
    hist_p.add_argument("image", type=Path)
    hist_p.add_argument("--out", type=Path, default=None)
    hist_p.set_defaults(func=_cmd_hist)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
