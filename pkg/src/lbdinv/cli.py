"""Command-line interface.

Subcommands::

    lbdinv pattern  --kind freak --side 32 --m 512 --seed 0 --out pattern.json
    lbdinv describe image.pgm --pattern pattern.json --mode grid --offset 32 --out desc.lbd
    lbdinv invert   desc.lbd --pattern pattern.json --solver biht --out recon.pgm
    lbdinv eval     original.pgm recon.pgm

Exit codes: 0 success, 2 usage or parameter error, 3 descriptor/pattern
mismatch or corrupted file, 4 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import descfile, imageio, pipeline
from .exceptions import DescriptorTypeError, FormatError, ParameterError, PatternMismatchError, ShapeError
from .sensing import Pattern, PatternKind, make_pattern
from .solver_biht import BihtConfig, default_k
from .solver_pd import PdConfig

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_IO = 0, 2, 3, 4

KINDS = {"brief": PatternKind.BRIEF, "freak": PatternKind.FREAK,
         "ra-freak": PatternKind.RA_FREAK, "ex-freak": PatternKind.EX_FREAK}


def _load_pattern(path) -> Pattern:
    return Pattern.from_json(Path(path).read_text(encoding="utf-8"))


def cmd_pattern(args) -> int:
    pattern = make_pattern(KINDS[args.kind], args.side, args.m, args.seed)
    text = pattern.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    print(f"pattern_id={pattern.pattern_id} m={pattern.m}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_describe(args) -> int:
    pattern = _load_pattern(args.pattern)
    image = imageio.read_image(args.image)
    if args.mode == "grid":
        mode = pipeline.GridMode(args.offset if args.offset is not None else pattern.patch_side)
    else:
        mode = pipeline.KeypointMode(args.fast_threshold)
    dset = pipeline.describe_image(image, pattern, mode, binary=args.binary)
    descfile.write_descriptors(args.out, dset)
    print(f"records={len(dset.centers)} pattern_id={pattern.pattern_id}")
    return EXIT_OK


def cmd_invert(args) -> int:
    pattern = _load_pattern(args.pattern)
    dset = descfile.read_descriptors(args.descfile)
    if dset.descriptor.pattern_id != pattern.pattern_id:
        raise PatternMismatchError("descriptor/pattern mismatch")
    if args.solver == "biht":
        cfg = BihtConfig(k=default_k(pattern.n, args.k_frac),
                         iterations=200 if args.iters is None else args.iters)
    else:
        cfg = PdConfig(lam=args.lam, iterations=1000 if args.iters is None else args.iters)
    image, stats = pipeline.invert_descriptors(dset, pattern, args.solver, cfg,
                                               force_real=args.force_real)
    imageio.write_pgm(args.out, image)
    print(f"patches={stats['patches']}")
    if "consistency" in stats and len(stats["consistency"]):
        print(f"mean_consistency={float(np.mean(stats['consistency'])):.6f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    a = imageio.read_image(args.image_a)
    b = imageio.read_image(args.image_b)
    if a.shape != b.shape:
        raise ShapeError(f"image sizes differ: {a.shape[::-1]} vs {b.shape[::-1]}")
    # covered region of the reconstruction; a fully black one means "use everything"
    mask = b > 0
    if not mask.any():
        mask = None
    value = pipeline.psnr(a, b, mask)
    print("psnr_db=inf" if np.isinf(value) else f"psnr_db={value:.3f}")
    print(f"edge_corr={pipeline.edge_correlation(a, b, mask):.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lbdinv", description="Local binary descriptor inversion")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="generate a measurement pattern")
    p.add_argument("--kind", choices=sorted(KINDS), default="freak")
    p.add_argument("--side", type=int, default=32)
    p.add_argument("--m", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("describe", help="compute descriptors of an image")
    p.add_argument("image")
    p.add_argument("--pattern", required=True)
    p.add_argument("--mode", choices=("grid", "fast"), default="grid")
    p.add_argument("--offset", type=int, help="grid step in pixels (default: patch side)")
    p.add_argument("--fast-threshold", type=float, default=0.08)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--binary", dest="binary", action="store_true", default=True)
    g.add_argument("--real", dest="binary", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("invert", help="reconstruct an image from a descriptor file")
    p.add_argument("descfile")
    p.add_argument("--pattern", required=True)
    p.add_argument("--solver", choices=("pd", "biht"), default="biht")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--iters", type=int)
    p.add_argument("--k-frac", type=float, default=0.4)
    p.add_argument("--force-real", action="store_true",
                   help="let the primal-dual solver treat sign payloads as real values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("eval", help="compare an original and a reconstruction")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PatternMismatchError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (ParameterError, ShapeError, DescriptorTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
