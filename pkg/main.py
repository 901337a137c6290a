"""mattekit command-line entry point.

Subcommands:
    compose    manifest -> composite/ + alpha/ PNGs (optionally harmonized)
    eval       manifest + prediction dir -> metrics report
    harmonize  composite + mask -> harmonized composite
    trimap     alpha -> trimap
    fuse       high-res + low-res mattes -> fused matte
    loss       one loss between two mattes, printed as a JSON record
    forward    run a reference block from .npz weights and inputs

Exit codes: 0 success, 1 data error or failed records, 2 usage error.
Configuration: --config FILE (or $MATTEKIT_CONFIG), flags override the file.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import ValidationError

import losses
from compose_service import ComposeOptions, compose_corpus
from compositor import binarize_alpha, make_trimap
from config import RegionMode, Settings, load_settings
from data_loader import load_manifest
from errors import MattingError
from evaluation_service import evaluate_corpus, write_report
from file_storage import read_image, read_matte, write_png, write_text_atomic
from fusion import edge_mask, fuse
from harmony import harmonize
from models import ConvWeights, Split, Tensor
from netref import (
    FusionParams,
    GateParams,
    channel_gate,
    head_attention,
    load_arrays,
    multiplicative_fusion,
    save_arrays,
)
from raster_utils import resize_policy

logger = logging.getLogger(__name__)

LOSS_KINDS = ("bce", "l1", "composition", "laplacian", "refine")
BLOCKS = ("head_attention", "channel_gate", "fusion")


# --- Argument helpers ---

def policy_arg(token: str) -> str:
    """argparse type for --resize tokens."""
    try:
        resize_policy(1, 1, token)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
    return token


def positive_int(token: str) -> int:
    try:
        value = int(token)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not an integer: {token!r}") from e
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _set(tree: dict, dotted: str, value: Any) -> None:
    section, _, key = dotted.partition(".")
    if key:
        tree.setdefault(section, {})[key] = value
    else:
        tree[section] = value


# Flag destination -> config key
FLAG_KEYS = {
    "epsilon": "harmony.epsilon",
    "literal_affine": "harmony.literal_affine",
    "quantize": "fusion.quantize",
    "quant_lo": "fusion.quant_lo",
    "quant_hi": "fusion.quant_hi",
    "no_resize": "fusion.resize",
    "radius": "trimap.radius",
    "region": "metrics.region",
    "workers": "batch.workers",
    "seed": "batch.seed",
    "bit_depth": "io.bit_depth",
}


def settings_from_args(args: argparse.Namespace) -> Settings:
    """Flags > config file > defaults."""
    overrides: dict[str, Any] = {}
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if dest == "no_resize":
            value = not value
        _set(overrides, key, value)
    return load_settings(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (default: $MATTEKIT_CONFIG)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("--bit-depth", type=int, choices=(8, 16), default=None)

    parser = argparse.ArgumentParser(prog="mattekit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", parents=[common], help="composite a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("out_dir", type=Path)
    p.add_argument("--harmonize", action="store_true", help="harmonize each composite")
    p.add_argument("--flip", action="store_true", help="random horizontal flips (seeded)")
    p.add_argument("--crop", type=positive_int, default=None, metavar="N",
                   help="seeded NxN patch of foreground + alpha (before --resize)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--resize", type=policy_arg, default=None,
                   help="original | relative:<f> | absolute:<n>")
    p.add_argument("--split", choices=[s.value for s in Split], default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--literal-affine", action="store_true", default=None)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("eval", parents=[common], help="evaluate predictions")
    p.add_argument("manifest", type=Path)
    p.add_argument("pred_dir", type=Path)
    p.add_argument("--region", choices=[m.value for m in RegionMode], default=None)
    p.add_argument("--report", type=Path, default=None, help="report directory")
    p.add_argument("--radius", type=int, default=None, help="unknown-band radius")
    p.add_argument("--resize", type=policy_arg, default=None)
    p.add_argument("--split", choices=[s.value for s in Split], default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("harmonize", parents=[common], help="harmonize one composite")
    p.add_argument("composite", type=Path)
    p.add_argument("mask", type=Path, help="foreground mask or alpha (> 0 is foreground)")
    p.add_argument("out", type=Path)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--literal-affine", action="store_true", default=None)
    p.set_defaults(func=cmd_harmonize)

    p = sub.add_parser("trimap", parents=[common], help="trimap from an alpha matte")
    p.add_argument("alpha", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--radius", type=int, default=None)
    p.set_defaults(func=cmd_trimap)

    p = sub.add_parser("fuse", parents=[common], help="fuse high- and low-resolution mattes")
    p.add_argument("alpha_h", type=Path)
    p.add_argument("alpha_l", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--quantize", action="store_true", default=None,
                   help="use (quant_lo, quant_hi) instead of (0, 1) for the edge mask")
    p.add_argument("--quant-lo", type=float, default=None)
    p.add_argument("--quant-hi", type=float, default=None)
    p.add_argument("--no-resize", action="store_true", default=None)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("loss", parents=[common], help="compute one loss")
    p.add_argument("kind", choices=LOSS_KINDS)
    p.add_argument("pred", type=Path)
    p.add_argument("gt", type=Path)
    p.add_argument("--mask", type=Path, default=None, help="unknown mask (default: edge mask of pred)")
    p.add_argument("--fg", type=Path, default=None)
    p.add_argument("--bg", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None, help="also write the record here")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("forward", parents=[common], help="run a reference block")
    p.add_argument("block", choices=BLOCKS)
    p.add_argument("weights", type=Path, help=".npz of named parameters")
    p.add_argument("inputs", type=Path, help=".npz with x (or low/high/context)")
    p.add_argument("out", type=Path)
    p.set_defaults(func=cmd_forward)

    return parser


def _print_record(record: dict, out: Optional[Path] = None) -> None:
    line = json.dumps(record, sort_keys=True)
    print(line)
    if out is not None:
        write_text_atomic(out, line + "\n")


# --- Commands ---

def cmd_compose(args: argparse.Namespace, settings: Settings) -> int:
    manifest = load_manifest(args.manifest).by_split(Split(args.split) if args.split else None)
    options = ComposeOptions(harmonize=args.harmonize, flip=args.flip, crop=args.crop, resize=args.resize)
    result = compose_corpus(manifest, args.manifest.parent, args.out_dir, settings, options)
    print(result.summary())
    return 1 if result.failures else 0


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    manifest = load_manifest(args.manifest).by_split(Split(args.split) if args.split else None)
    report = evaluate_corpus(
        manifest,
        args.manifest.parent,
        args.pred_dir,
        settings.metrics.region,
        settings,
        args.resize,
    )
    if args.report is not None:
        write_report(report, args.report)
    a = report.aggregate
    print(f"SAD {a.mean_sad:.3f}  MSE {a.mean_mse:.3f}  Grad {a.mean_grad:.3f}  Conn {a.mean_conn:.3f}")
    print(f"evaluated {report.count} records ({len(report.failures)} failed)")
    return 1 if report.failures else 0


def cmd_harmonize(args: argparse.Namespace, settings: Settings) -> int:
    image = read_image(args.composite)
    mask = binarize_alpha(read_matte(args.mask))
    write_png(args.out, harmonize(image, mask, settings.harmony), settings.io.bit_depth)
    return 0


def cmd_trimap(args: argparse.Namespace, settings: Settings) -> int:
    trimap = make_trimap(read_matte(args.alpha), settings.trimap.radius)
    write_png(args.out, trimap, settings.io.bit_depth)
    return 0


def cmd_fuse(args: argparse.Namespace, settings: Settings) -> int:
    fused = fuse(read_matte(args.alpha_h), read_matte(args.alpha_l), settings.fusion)
    write_png(args.out, fused, settings.io.bit_depth)
    return 0


def cmd_loss(args: argparse.Namespace, settings: Settings) -> int:
    pred = read_matte(args.pred)
    gt = read_matte(args.gt)
    if args.mask is not None:
        g = binarize_alpha(read_matte(args.mask))
    else:
        g = edge_mask(pred, *settings.fusion.bounds)

    if args.kind == "bce":
        value = losses.bce(pred, binarize_alpha(gt), settings.losses.bce_clamp)
    elif args.kind == "l1":
        value = losses.l1_loss(pred, gt, g)
    elif args.kind == "laplacian":
        value = losses.laplacian_loss(pred, gt, g, settings.losses.pyramid_levels)
    else:
        fg, bg = read_image(args.fg), read_image(args.bg)
        if args.kind == "composition":
            value = losses.composition_loss(pred, gt, fg, bg, g)
        else:
            value = losses.refine_loss(pred, gt, fg, bg, g, settings.losses)

    _print_record(
        {"kind": args.kind, "pred": str(args.pred), "gt": str(args.gt),
         "unknown_pixels": g.count, "value": value},
        args.out,
    )
    return 0


def cmd_forward(args: argparse.Namespace, settings: Settings) -> int:
    weights = load_arrays(args.weights)
    inputs = load_arrays(args.inputs)
    if args.block == "head_attention":
        out = head_attention(
            Tensor(data=inputs["x"]),
            ConvWeights.from_arrays(weights, "conv1"),
            ConvWeights.from_arrays(weights, "conv2"),
        )
    elif args.block == "channel_gate":
        params = GateParams(weight=weights["gate.weight"], bias=weights["gate.bias"])
        out = channel_gate(Tensor(data=inputs["x"]), params)
    else:
        out = multiplicative_fusion(
            Tensor(data=inputs["low"]),
            Tensor(data=inputs["high"]),
            Tensor(data=inputs["context"]),
            FusionParams.from_arrays(weights),
        )
    save_arrays(args.out, {"out": out.data})
    logger.info("%s output shape %s", args.block, out.shape)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "loss" and args.kind in ("composition", "refine"):
        if args.fg is None or args.bg is None:
            parser.error(f"loss {args.kind} needs --fg and --bg")

    try:
        settings = settings_from_args(args)
    except (ValidationError, OSError, ValueError) as e:
        parser.exit(2, f"mattekit: error: invalid configuration: {e}\n")

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else settings.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return args.func(args, settings)
    except (MattingError, ValidationError, OSError, KeyError) as e:
        logger.debug("Command failed", exc_info=True)
        print(f"mattekit: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
