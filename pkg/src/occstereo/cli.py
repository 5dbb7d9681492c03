"""Command-line entry point: ``occstereo <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or format error.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, fields

import numpy as np

from . import geometry, imgio, metrics, synth
from .goapp import DEFAULT_NEIGHBORS, goapp
from .goat import GoatConfig, goat_optimize
from .loss import LossParams
from .warp import reconstruct_left, reconstruction_error_map

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _kv(**items):
    for key, value in items.items():
        if isinstance(value, float):
            value = f"{value:.6f}"
        print(f"{key}={value}")


def _read_disp(path, fmt=None):
    return imgio.read_disparity(path, fmt)


def cmd_occlusion(args):
    disp = _read_disp(args.disparity, args.format)
    mask = geometry.occlusion_mask(disp, args.tol)
    geometry.write_mask_png(mask, args.out)
    _kv(visible=int(mask.visible.sum()), occluded=int(mask.occluded.sum()),
        exclusive=int(mask.exclusive.sum()))


def cmd_goapp(args):
    disp = _read_disp(args.disparity, args.format)
    if args.mask:
        mask = geometry.read_mask_png(args.mask)
        if mask.shape != disp.shape:
            raise ValueError("mask and disparity differ in shape")
    else:
        mask = geometry.occlusion_mask(disp, args.tol)
    out = goapp(disp, mask, args.n)
    imgio.write_disparity(out, args.out, args.out_format)
    changed = int(np.sum(out.filled(np.nan) != disp.filled(np.nan)))
    _kv(filled=changed, n=args.n)


def cmd_evaluate(args):
    pred = _read_disp(args.pred, args.format)
    gt = _read_disp(args.gt, args.format)
    calib = imgio.CameraCalib(args.focal, args.baseline)
    region_mask = None
    if args.region != "all":
        region_mask = (geometry.read_mask_png(args.mask) if args.mask
                       else geometry.occlusion_mask(gt, args.tol))
    cap = None if args.cap <= 0 else args.cap
    report = metrics.evaluate(pred, gt, calib, cap=cap, region_mask=region_mask,
                              region=args.region)
    if args.table:
        print(report.to_text())
    print(report.to_kv())


def cmd_reconstruct(args):
    left = imgio.read_image(args.left)
    right = imgio.read_image(args.right)
    disp = _read_disp(args.disparity, args.format)
    if not (left.shape == right.shape == disp.shape):
        raise ValueError(f"shape mismatch: left {left.shape}, right {right.shape}, "
                         f"disparity {disp.shape}")
    rec = reconstruct_left(right, disp)
    err = reconstruction_error_map(left, rec.image)
    _write_float_image(rec.image, args.out_image)
    _write_float_image(err, args.out_error)
    _kv(mean_error=float(err.mean()), out_of_bounds=int((~rec.in_bounds).sum()))


def _write_float_image(img, path):
    if str(path).lower().endswith(".pfm"):
        imgio.write_pfm(img, path)
    else:
        imgio.write_image(img, path)


def load_goat_config(path):
    """JSON object with GoatConfig field names; ``loss`` is a nested object."""
    if path is None:
        return GoatConfig()
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise ValueError("GOAT config must be a JSON object")
    known = {f.name for f in fields(GoatConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown GOAT config keys: {sorted(unknown)}")
    if "loss" in raw:
        raw["loss"] = LossParams(**raw["loss"])
    return GoatConfig(**raw)


def cmd_goat(args):
    config = load_goat_config(args.config)
    left = imgio.read_image(args.left)
    right = imgio.read_image(args.right)
    gt = _read_disp(args.gt) if args.gt else None
    snapshot_every = 1 if args.snapshots else 0
    disp, mask, trace = goat_optimize(left, right, config, gt=gt,
                                      snapshot_every=snapshot_every)
    imgio.write_disparity(disp, args.out_disp)
    geometry.write_mask_png(mask, args.out_mask)
    with open(args.out_trace, "w") as f:
        f.write(trace.to_text())
    if args.snapshots:
        os.makedirs(args.snapshots, exist_ok=True)
        for epoch, d, m in trace.snapshots:
            imgio.write_pfm(d, os.path.join(args.snapshots, f"disp_{epoch:03d}.pfm"))
            geometry.write_mask_png(m, os.path.join(args.snapshots, f"mask_{epoch:03d}.png"))
    last = trace.epochs[-1]
    _kv(epochs=len(trace.epochs), loss=last.loss, masked_fraction=last.masked_fraction)


def cmd_synth(args):
    spec = synth.load_scene(args.spec)
    scene = synth.render(spec, args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    # the float images keep the exact values; the PNGs are for viewing
    imgio.write_pfm(scene.left, os.path.join(args.out_dir, "left.pfm"))
    imgio.write_pfm(scene.right, os.path.join(args.out_dir, "right.pfm"))
    imgio.write_image(scene.left, os.path.join(args.out_dir, "left.png"))
    imgio.write_image(scene.right, os.path.join(args.out_dir, "right.png"))
    imgio.write_pfm(scene.gt_disp, os.path.join(args.out_dir, "disp.pfm"))
    geometry.write_mask_png(scene.gt_mask, os.path.join(args.out_dir, "mask.png"))
    _kv(width=spec.width, height=spec.height, layers=len(spec.layers),
        occluded=int(scene.gt_mask.occluded.sum()))


def cmd_stats(args):
    pred = _read_disp(args.pred, args.format)
    gt = _read_disp(args.gt, args.format)
    mask = (geometry.read_mask_png(args.mask) if args.mask
            else geometry.occlusion_mask(gt, args.tol))
    stats = geometry.occlusion_stats(pred, gt, mask)
    _kv(**asdict(stats))


def build_parser():
    p = _Parser(prog="occstereo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def disp_format(sp):
        sp.add_argument("--format", choices=("pfm", "png"),
                        help="disparity format (default: from extension)")

    sp = sub.add_parser("occlusion", help="occlusion mask from a left disparity map")
    sp.add_argument("disparity")
    sp.add_argument("out", help="mask PNG: 255 visible, 128 exclusive, 0 occluded")
    sp.add_argument("--tol", type=float, default=1.0, help="target bin width in px")
    disp_format(sp)
    sp.set_defaults(func=cmd_occlusion)

    sp = sub.add_parser("goapp", help="occlusion-aware post-processing")
    sp.add_argument("disparity")
    sp.add_argument("out")
    sp.add_argument("--mask", help="mask PNG (default: computed from the disparity)")
    sp.add_argument("--n", type=int, default=DEFAULT_NEIGHBORS, help="neighbour count")
    sp.add_argument("--tol", type=float, default=1.0)
    sp.add_argument("--out-format", choices=("pfm", "png"))
    disp_format(sp)
    sp.set_defaults(func=cmd_goapp)

    sp = sub.add_parser("evaluate", help="disparity and depth metrics")
    sp.add_argument("pred")
    sp.add_argument("gt")
    sp.add_argument("--focal", type=float, default=721.0, help="focal length in px")
    sp.add_argument("--baseline", type=float, default=0.54, help="baseline in m")
    sp.add_argument("--cap", type=float, default=geometry.DEFAULT_DEPTH_CAP,
                    help="depth cap in m, <= 0 disables")
    sp.add_argument("--region", choices=metrics.REGIONS, default="all")
    sp.add_argument("--mask", help="mask PNG for --region (default: from ground truth)")
    sp.add_argument("--tol", type=float, default=1.0)
    sp.add_argument("--table", action="store_true", help="also print an aligned table")
    disp_format(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("reconstruct", help="warp the right image into the left view")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("disparity")
    sp.add_argument("out_image")
    sp.add_argument("out_error")
    disp_format(sp)
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("goat", help="occlusion-aware disparity optimisation")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("out_disp")
    sp.add_argument("out_mask")
    sp.add_argument("out_trace")
    sp.add_argument("--config", help="JSON file with optimiser settings")
    sp.add_argument("--gt", help="ground-truth disparity, adds EPE to the trace")
    sp.add_argument("--snapshots", help="directory for per-epoch disparity and mask")
    sp.set_defaults(func=cmd_goat)

    sp = sub.add_parser("synth", help="render a synthetic scene")
    sp.add_argument("spec", help="scene description file")
    sp.add_argument("out_dir")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("stats", help="error split between occluded and visible pixels")
    sp.add_argument("pred")
    sp.add_argument("gt")
    sp.add_argument("--mask", help="mask PNG (default: computed from ground truth)")
    sp.add_argument("--tol", type=float, default=1.0)
    disp_format(sp)
    sp.set_defaults(func=cmd_stats)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (OSError, ValueError) as exc:
        print(f"occstereo {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
