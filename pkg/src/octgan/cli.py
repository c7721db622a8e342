"""Command-line driver.

Subcommands::

    octgan train     [--config FILE] [key=value ...]
    octgan generate  CHECKPOINT [-n N] [--out DIR] [--grid]
    octgan fid       SOURCE_A SOURCE_B [--size S] [--seed K]
    octgan spectrum  SOURCE_A [SOURCE_B] [--out DIR] [--size S] [--seed K]
    octgan gradcheck [--instances N] [--tol T] [--seed K]

An image *source* is either a directory of PPM/PGM files or a synthetic
spec such as ``shapes:2048:1``.  Exit codes: 0 success, 1 usage error,
2 runtime error, 3 training divergence.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import GanConfig, apply_overrides, load_config
from .data import SyntheticSpec, load_image_directory, load_synthetic
from .errors import ConfigError, DivergenceError, OctganError
from .fid import fid_from_images
from .gradcheck import main_report
from .ppm import save_image_dir, save_image_grid
from .spectrum import (band_power, power_spectrum_1d, profile_to_csv,
                       spectrum_distance)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_DIVERGENCE = 3


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage failures exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _load_source(text: str, size: int, seed: int) -> np.ndarray:
    """Images from a directory path or a synthetic spec string."""
    if text.startswith("shapes:"):
        return load_synthetic(SyntheticSpec.parse(text), size).images
    dataset, _ = load_image_directory(text, size, seed)
    return dataset.images


def _build_config(args) -> GanConfig:
    cfg = load_config(args.config) if args.config else GanConfig()
    return apply_overrides(cfg, args.overrides)


def _cmd_train(args) -> int:
    from .train import run_training
    cfg = _build_config(args)
    state, csv_path = run_training(cfg)
    print(f"trained {state.epoch} epochs; metrics in {csv_path}")
    return EXIT_OK


def _cmd_generate(args) -> int:
    from .checkpoint import load_checkpoint
    from .train import generate_images
    state = load_checkpoint(args.checkpoint)
    images = generate_images(state, args.n, "generate")
    if args.grid:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "grid.ppm")
        save_image_grid(path, images, cols=8)
        print(f"wrote {path}")
    else:
        paths = save_image_dir(args.out, images, prefix="sample")
        print(f"wrote {len(paths)} images to {args.out}")
    return EXIT_OK


def _cmd_fid(args) -> int:
    a = _load_source(args.source_a, args.size, args.seed)
    b = _load_source(args.source_b, args.size, args.seed)
    value = fid_from_images(a, b)
    print(f"fid_proxy={value!r}")
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    profile_a = power_spectrum_1d(_load_source(args.source_a, args.size, args.seed))
    path_a = os.path.join(args.out, "spectrum_a.csv")
    with open(path_a, "w", encoding="utf-8") as fh:
        fh.write(profile_to_csv(profile_a))
    print(f"wrote {path_a}")

    if args.source_b is None:
        dc = float(profile_a.power[0])
        high = band_power(profile_a, "high")
        rel_db = float(10.0 * np.log10(max(high, 1e-300) / max(dc, 1e-300)))
        print(f"high_band_power={high!r}")
        print(f"high_band_rel_dc_db={rel_db!r}")
        return EXIT_OK

    profile_b = power_spectrum_1d(_load_source(args.source_b, args.size, args.seed))
    path_b = os.path.join(args.out, "spectrum_b.csv")
    with open(path_b, "w", encoding="utf-8") as fh:
        fh.write(profile_to_csv(profile_b))
    print(f"wrote {path_b}")
    print(f"spectrum_distance_high={spectrum_distance(profile_a, profile_b, 'high')!r}")
    print(f"spectrum_distance_full={spectrum_distance(profile_a, profile_b, 'full')!r}")
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    ok = main_report(instances=args.instances, tol=args.tol, seed=args.seed)
    return EXIT_OK if ok else EXIT_RUNTIME


def build_parser() -> _Parser:
    parser = _Parser(prog="octgan", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_train = sub.add_parser("train", help="run a training job")
    p_train.add_argument("--config", help="flat key=value config file")
    p_train.add_argument("overrides", nargs="*", metavar="key=value",
                         help="config overrides")
    p_train.set_defaults(fn=_cmd_train)

    p_gen = sub.add_parser("generate", help="sample images from a checkpoint")
    p_gen.add_argument("checkpoint")
    p_gen.add_argument("-n", type=int, default=64, help="number of samples")
    p_gen.add_argument("--out", default="generated", help="output directory")
    p_gen.add_argument("--grid", action="store_true",
                       help="write one 8-wide grid instead of individual files")
    p_gen.set_defaults(fn=_cmd_generate)

    p_fid = sub.add_parser("fid", help="FID-proxy between two image sources")
    p_fid.add_argument("source_a")
    p_fid.add_argument("source_b")
    p_fid.add_argument("--size", type=int, default=32, help="image side length")
    p_fid.add_argument("--seed", type=int, default=0, help="directory-loading seed")
    p_fid.set_defaults(fn=_cmd_fid)

    p_spec = sub.add_parser("spectrum", help="1D power-spectrum profiles and distances")
    p_spec.add_argument("source_a")
    p_spec.add_argument("source_b", nargs="?", default=None)
    p_spec.add_argument("--out", default="spectrum_out", help="output directory")
    p_spec.add_argument("--size", type=int, default=32, help="image side length")
    p_spec.add_argument("--seed", type=int, default=0, help="directory-loading seed")
    p_spec.set_defaults(fn=_cmd_spectrum)

    p_gc = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p_gc.add_argument("--instances", type=int, default=20)
    p_gc.add_argument("--tol", type=float, default=1e-5)
    p_gc.add_argument("--seed", type=int, default=0)
    p_gc.set_defaults(fn=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (OctganError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
