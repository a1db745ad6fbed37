"""Command-line frontend: ``ewwt <command> ...``.

Exit codes: 0 ok, 2 invalid input, 3 empty partition, 4 pairing or frame
failure, 5 divergence, 6 file I/O.
"""
import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import imageio
from .deconv import DeconvConfig, deconvolve, gaussian_blur_kernel, kernel_from_taps, ssim
from .errors import ArtifactIOError, EWWTError, InvalidInputError
from .filterbank import DEFAULT_TAU, build_filter_bank, frame_bounds
from .partition import assign_boundary_pixels, marker_watershed, symmetrize_regions
from .scalespace import ScaleSpaceConfig, select_persistent, track_persistence, write_tracks_csv
from .spectrum import as_image, forward_fft, magnitude_spectrum
from .synthetic import make_texture, make_toy_image
from .transform import Coefficients, ewwt_forward, ewwt_inverse

log = logging.getLogger("ewwt")


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a base-10 number: {text!r}")
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return value

    return parse


def _nonnegative_int(text):
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a base-10 integer: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return value


def _period(text):
    if text.lower() in ("inf", "never"):
        return math.inf
    return _positive(lambda t: int(t, 10))(text)


def _add_detection_flags(p):
    p.add_argument("--s0", type=_positive(float), default=1.0, help="scale step (default 1)")
    p.add_argument("--alpha", type=_positive(float), default=1.0, help="kernel scale factor (default 1)")
    p.add_argument("--edge-exclusion", type=_nonnegative_int, default=0, help="ignore maxima this close to the border")
    p.add_argument("--max-scale", type=_positive(float), default=None, help="override the automatic largest scale")


def _add_tau(p):
    p.add_argument("--tau", type=_positive(float), default=DEFAULT_TAU, help="transition half-width (default 0.1)")


def _scale_config(args):
    return ScaleSpaceConfig(
        s0=args.s0, alpha=args.alpha, edge_exclusion=args.edge_exclusion, max_scale_override=args.max_scale
    )


def _detect(image, config):
    """Partition pipeline that also hands back the maxima tracks for export."""
    config.check_dims(image.shape)
    mag = magnitude_spectrum(image)
    mag[mag < config.relative_floor * mag.max()] = 0.0
    tracks = track_persistence(mag, config)
    markers = select_persistent(tracks, image.shape, config)
    partition = symmetrize_regions(assign_boundary_pixels(marker_watershed(image, markers)), markers)
    return partition, tracks


def _describe_bank(bank):
    lo, hi = frame_bounds(bank)
    return {"n_filters": bank.n_filters, "frame_lower": lo, "frame_upper": hi, "bank_ref": bank.ref}


def cmd_decompose(args):
    image = as_image(imageio.read_image(args.image))
    config = _scale_config(args)
    outdir = imageio.ensure_dir(args.out)
    partition, tracks = _detect(image, config)
    bank = build_filter_bank(partition, args.tau)
    coeffs = ewwt_forward(image, bank)
    imageio.save_filters(outdir, bank)
    imageio.save_partition(outdir, partition)
    write_tracks_csv(tracks, outdir / "tracks.csv")
    if args.spectrum:
        imageio.write_raw_complex(forward_fft(image), outdir / "spectrum.c128")
    imageio.save_coefficients(
        outdir, coeffs, bank, s0=config.s0, alpha=config.alpha, source=str(args.image), energies=coeffs.energies().tolist()
    )
    return {"out": str(outdir), "n_planes": coeffs.n_planes, **_describe_bank(bank)}


def cmd_reconstruct(args):
    coeffs, meta = imageio.load_coefficients(args.run)
    bank = imageio.load_filters(args.run)
    image = ewwt_inverse(coeffs, bank)
    imageio.write_image(args.out, image)
    return {"out": str(args.out), "sidecar": str(Path(args.out).with_suffix(".f64"))}


def cmd_partition(args):
    image = as_image(imageio.read_image(args.image))
    outdir = imageio.ensure_dir(args.out)
    partition, tracks = _detect(image, _scale_config(args))
    imageio.save_partition(outdir, partition)
    write_tracks_csv(tracks, outdir / "tracks.csv")
    return {"out": str(outdir), "n_regions": partition.n_regions, "markers": [list(m) for m in partition.markers]}


def cmd_filters(args):
    image = as_image(imageio.read_image(args.image))
    outdir = imageio.ensure_dir(args.out)
    partition, _ = _detect(image, _scale_config(args))
    bank = build_filter_bank(partition, args.tau)
    imageio.save_partition(outdir, partition)
    imageio.save_filters(outdir, bank)
    return {"out": str(outdir), **_describe_bank(bank)}


def _kernel(args, dims):
    if args.kernel_file:
        return kernel_from_taps(imageio.read_image(args.kernel_file), dims)
    spec = args.kernel
    name, _, value = spec.partition(":")
    if name != "gaussian" or not value:
        raise InvalidInputError(f"unknown kernel spec {spec!r} (expected gaussian:<variance>)")
    try:
        variance = float(value)
    except ValueError:
        raise InvalidInputError(f"bad kernel variance {value!r}")
    return gaussian_blur_kernel(variance, dims)


def cmd_blur(args):
    image = as_image(imageio.read_image(args.image))
    blurred = _kernel(args, image.shape).apply(image)
    if args.noise > 0:
        blurred = blurred + np.random.default_rng(args.seed).normal(0.0, args.noise, blurred.shape)
    imageio.write_image(args.out, blurred)
    return {"out": str(args.out), "noise": args.noise, "seed": args.seed}


def cmd_deconvolve(args):
    f = as_image(imageio.read_image(args.image))
    kernel = _kernel(args, f.shape)
    if args.noise > 0:
        f = f + np.random.default_rng(args.seed).normal(0.0, args.noise, f.shape)
    config = DeconvConfig(
        lam=args.lam,
        sigma=args.sigma,
        nu=args.nu,
        theta=args.theta,
        tol=args.tol,
        max_iter=args.max_iter,
        mode=args.mode,
        refresh_period=args.refresh,
    )
    result = deconvolve(f, kernel, config, _scale_config(args), args.tau)
    imageio.write_image(args.out, result.u)
    report = {
        "out": str(args.out),
        "mode": args.mode,
        "iterations": result.iterations,
        "final_rel_change": result.rel_change,
        "converged": result.converged,
        "bank_updates": result.bank_updates,
        "n_filters": result.bank.n_filters,
        "ssim_vs_ref": None,
    }
    if args.ref:
        report["ssim_vs_ref"] = ssim(result.u, imageio.read_image(args.ref))
    imageio.write_json(Path(args.out).with_suffix(".report.json"), report)
    return report


def cmd_toy(args):
    if args.kind == "toy":
        toy = make_toy_image((args.size, args.size), args.seed)
        image, meta = toy.image, toy.manifest()
    else:
        image = make_texture((args.size, args.size), args.seed)
        meta = {"height": args.size, "width": args.size, "seed": args.seed}
    imageio.write_image(args.out, image)
    imageio.write_json(Path(args.out).with_suffix(".manifest.json"), {"kind": args.kind, **meta})
    return {"out": str(args.out), **meta}


def build_parser():
    parser = argparse.ArgumentParser(prog="ewwt", description="Empirical watershed wavelet transform tools.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="detect a filter bank and write coefficient planes")
    p.add_argument("image")
    _add_detection_flags(p)
    _add_tau(p)
    p.add_argument("--spectrum", action="store_true", help="also dump the centered complex spectrum")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("reconstruct", help="invert a decomposition directory")
    p.add_argument("run", help="directory written by 'decompose'")
    p.add_argument("--out", required=True, help="output image (PNG or PGM); a .f64 copy is written alongside")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("partition", help="write the paired spectral partition")
    p.add_argument("image")
    _add_detection_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("filters", help="write the detected filter bank")
    p.add_argument("image")
    _add_detection_flags(p)
    _add_tau(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_filters)

    for name, func, text in (
        ("deconvolve", cmd_deconvolve, "deblur with the primal-dual solver"),
        ("blur", cmd_blur, "apply a blur kernel (and optional noise)"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("image")
        k = p.add_mutually_exclusive_group()
        k.add_argument("--kernel", default="gaussian:2", help="gaussian:<variance> (default gaussian:2)")
        k.add_argument("--kernel-file", help="centered kernel taps image with odd sides")
        p.add_argument("--noise", type=float, default=0.0, help="std of added Gaussian noise")
        p.add_argument("--seed", type=_nonnegative_int, default=0)
        p.add_argument("--out", required=True, help="output image")
        p.set_defaults(func=func)
        if name == "deconvolve":
            _add_detection_flags(p)
            _add_tau(p)
            p.add_argument("--lambda", dest="lam", type=_positive(float), default=5000.0)
            p.add_argument("--sigma", type=_positive(float), default=0.1)
            p.add_argument("--nu", type=_positive(float), default=0.1)
            p.add_argument("--theta", type=float, choices=(0.0, 1.0), default=1.0)
            p.add_argument("--tol", type=_positive(float), default=2e-4)
            p.add_argument("--max-iter", type=_positive(lambda t: int(t, 10)), default=200)
            p.add_argument("--mode", choices=("fixed", "adaptive"), default="fixed")
            p.add_argument("--refresh", type=_period, default=1, help="iterations between bank updates, or 'inf'")
            p.add_argument("--ref", help="ground-truth image for an SSIM score")

    p = sub.add_parser("toy", help="write a deterministic synthetic test image")
    p.add_argument("--kind", choices=("toy", "texture"), default="toy")
    p.add_argument("--size", type=_positive(lambda t: int(t, 10)), default=128)
    p.add_argument("--seed", type=_nonnegative_int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_toy)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="ewwt: %(message)s")
    try:
        summary = args.func(args)
    except EWWTError as exc:
        print(f"ewwt {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        err = ArtifactIOError(str(exc))
        print(f"ewwt {args.command}: {type(err).__name__}: {exc}", file=sys.stderr)
        return err.exit_code
    print(json.dumps(summary, indent=2, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
