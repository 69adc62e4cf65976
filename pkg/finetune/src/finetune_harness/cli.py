"""Command-line interface: pretrain, finetune, evaluate.

Each subcommand reads a plain-text key/value config (``--config``) with
TrainConfig fields plus the data paths it needs:

    pretrain: manifest = pairs.tsv   (or synthetic_pairs = N for generated data)
    finetune: manifest = <stage-I pair_manifest.tsv>, checkpoint = in.pt
    evaluate: manifest = pairs.tsv, checkpoint = model.pt
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from finetune_harness.data import load_pair_manifest, synthetic_pairs
from finetune_harness.evaluate import evaluate, write_report
from finetune_harness.train import (
    TrainConfig,
    finetune,
    load_checkpoint,
    pretrain,
    save_checkpoint,
)

_CONFIG_FIELDS = (
    "learning_rate",
    "batch_size",
    "pretrain_epochs",
    "finetune_epochs",
    "patch_size",
    "seed",
)


def parse_config(path: str | Path) -> dict:
    """key = value lines; # comments; later keys override earlier ones."""
    data: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        data[key.strip()] = value.strip()
    return data


def _train_config(data: dict, overrides: dict) -> TrainConfig:
    kwargs = {}
    for name in _CONFIG_FIELDS:
        if name in data:
            raw = data[name]
            kwargs[name] = float(raw) if name == "learning_rate" else int(raw)
    kwargs.update(overrides)
    return TrainConfig(**kwargs)


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def _cmd_pretrain(args: argparse.Namespace) -> int:
    data = parse_config(args.config)
    base = Path(args.config).parent
    overrides = {"seed": args.seed} if args.seed is not None else {}
    cfg = _train_config(data, overrides)
    if "manifest" in data:
        pairs = load_pair_manifest(_resolve(base, data["manifest"]))
    elif "synthetic_pairs" in data:
        pairs = synthetic_pairs(int(data["synthetic_pairs"]), seed=cfg.seed)
    else:
        print("config needs 'manifest' or 'synthetic_pairs'", file=sys.stderr)
        return 2
    checkpoint = pretrain(pairs, cfg)
    out = args.out or Path("pretrained.pt")
    save_checkpoint(checkpoint, out)
    last = checkpoint["history"][-1]
    print(f"pretrained {cfg.pretrain_epochs} epochs on {len(pairs)} pairs, "
          f"loss {last['loss']:.4e} (l1 {last['l1']:.4e}) -> {out}")
    return 0


def _cmd_finetune(args: argparse.Namespace) -> int:
    data = parse_config(args.config)
    base = Path(args.config).parent
    overrides = {"seed": args.seed} if args.seed is not None else {}
    cfg = _train_config(data, overrides)
    checkpoint = load_checkpoint(_resolve(base, data["checkpoint"]))
    manifest = _resolve(base, data["manifest"])
    tuned = finetune(checkpoint, manifest, cfg)
    out = args.out or Path("finetuned.pt")
    save_checkpoint(tuned, out)
    print(f"finetuned {cfg.finetune_epochs} epochs on {manifest} -> {out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    data = parse_config(args.config)
    base = Path(args.config).parent
    checkpoint = load_checkpoint(_resolve(base, data["checkpoint"]))
    pairs = load_pair_manifest(_resolve(base, data["manifest"]))
    report = evaluate(checkpoint, pairs)
    text = json.dumps({"psnr_db": report["psnr_db"], "ssim": report["ssim"]}, indent=2)
    print(text)
    if args.out is not None:
        write_report(report, args.out)
        print(f"written: {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rainkit-finetune", description="Pretrain/fine-tune restoration harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in (
        ("pretrain", _cmd_pretrain),
        ("finetune", _cmd_finetune),
        ("evaluate", _cmd_evaluate),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=True, help="key/value config file")
        p.add_argument("--out", type=Path, default=None)
        if name != "evaluate":
            p.add_argument("--seed", type=int, default=None)
        p.set_defaults(func=func)
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
