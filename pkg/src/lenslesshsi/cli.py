"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 format/data error, 3 numerical failure.
Every failure prints one line ``error kind=<kind> code=<n> reason=<text>`` to
standard error.
"""

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import io
from .analysis import (
    GOOD_CONDITION,
    autocorr_resolution,
    condition_sweep,
    two_point_sweep,
)
from .config import ConfigError, RunConfig
from .core import SystemModel, forward
from .experiments import resolution_target_comparison
from .simkit import (
    BarGroup,
    FilterArraySpec,
    add_gaussian_noise,
    filter_center_wavelengths,
    generate_diffuser_psf,
    generate_filter_function,
    generate_lens_psf,
    make_point_scene,
    make_resolution_target,
)
from .solver import fista_reconstruct
from .validation import NumericalError, ShapeMismatchError

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_NUMERICAL = 0, 1, 2, 3

COND_HEADER = ["num_points", "separation_px", "separation_superpx", "condition_number"]
TWO_POINT_HEADER = ["separation_px", "separation_superpx", "resolved", "valley_ratio"]
SPECTRUM_HEADER = ["wavelength_nm", "value"]
OBJECTIVE_HEADER = ["iteration", "objective", "data_fidelity"]
TARGET_HEADER = ["architecture", "psnr_db", "groups_resolved", "group_channels"]

logger = logging.getLogger("lenslesshsi")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _shape(text):
    try:
        ny, nx = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"shape must look like 64x64, got {text!r}") from None
    if ny < 1 or nx < 1:
        raise argparse.ArgumentTypeError("shape entries must be positive")
    return ny, nx


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fmt(x):
    return "inf" if x == math.inf else ("nan" if x != x else repr(float(x)))


def cmd_gen_psf(args):
    if args.kind == "diffuser":
        psf = generate_diffuser_psf(args.seed, args.shape, args.feature_px)
    else:
        psf = generate_lens_psf(args.kind, args.shape, args.superpixel_px)
    io.write_image(args.out, psf)
    if args.preview:
        io.write_png_preview(args.preview, psf)


def cmd_gen_filter(args):
    cfg = RunConfig.load(args.config)
    filt = generate_filter_function(args.shape, cfg.filter_spec())
    io.write_cube(args.out, filt)


def _scene_wavelengths(spec):
    if "wavelengths_nm" in spec:
        return spec["wavelengths_nm"]
    if "filter" in spec:
        return filter_center_wavelengths(FilterArraySpec(**{
            k: (tuple(v) if k == "grid" else v) for k, v in spec["filter"].items()}))
    if "n_lambda" in spec:
        return filter_center_wavelengths(FilterArraySpec(grid=(1, spec["n_lambda"])))
    return filter_center_wavelengths(FilterArraySpec())


def cmd_gen_scene(args):
    try:
        with open(args.spec) as fh:
            spec = json.load(fh)
        shape = tuple(spec.get("shape", (64, 64)))
        wl = _scene_wavelengths(spec)
        if args.kind == "points":
            cube = make_point_scene(shape, [tuple(p) for p in spec["points"]], wavelengths_nm=wl)
        else:
            groups = [BarGroup(**{**g, "position": tuple(g["position"])}) for g in spec["bar_groups"]]
            cube = make_resolution_target(shape, groups, wavelengths_nm=wl)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise io.FormatError(f"{args.spec}: bad scene spec: {exc}") from exc
    io.write_cube(args.out, cube)


def _model(psf_path, filter_path, scene_shape):
    psf = io.read_psf(psf_path)
    filt = io.read_filter(filter_path)
    return SystemModel(psf, filt, scene_shape)


def cmd_forward(args):
    scene = io.read_cube(args.scene)
    model = _model(args.psf, args.filter, scene.data.shape[1:])
    if not np.allclose(scene.wavelengths_nm, model.wavelengths_nm, rtol=1e-6):
        raise ShapeMismatchError("scene and filter wavelengths differ")
    meas = forward(model, scene.data)
    if args.noise_var:
        meas = add_gaussian_noise(meas, args.noise_var, args.seed)
    io.write_image(args.out, meas)


def cmd_reconstruct(args):
    cfg = RunConfig.load(args.config)
    meas = io.read_image(args.meas)
    model = _model(args.psf, args.filter, args.scene_shape)
    if meas.shape != model.sensor_shape:
        raise ShapeMismatchError(
            f"measurement {meas.shape} does not match filter {model.sensor_shape}")
    recon, diag = fista_reconstruct(model, meas, cfg.solver_config())
    io.write_cube(args.out, recon)
    if args.log:
        rows = [(i, _fmt(o), _fmt(f)) for i, (o, f) in
                enumerate(zip(diag.objective_history, diag.data_fidelity_history), start=1)]
        io.write_csv(args.log, OBJECTIVE_HEADER, rows)


def cmd_analyze_autocorr(args):
    psf = io.read_psf(args.psf)
    width = autocorr_resolution(psf)
    print(f"half_width_px={width:.4f} half_width_superpx={width / args.superpixel_px:.4f}")


def _config_model(cfg, shape):
    filt = generate_filter_function(shape, cfg.filter_spec())
    psf_shape = shape
    if cfg.psf["kind"] != "diffuser":
        psf_shape = tuple(n if n % 2 else n - 1 for n in shape)
    return SystemModel(cfg.make_psf(psf_shape), filt)


def cmd_analyze_cond(args):
    cfg = RunConfig.load(args.config)
    model = _config_model(cfg, args.shape)
    rows = condition_sweep(model, args.max_points, args.separations, args.mode,
                           superpixel_px=cfg.filter_spec().superpixel_px)
    io.write_csv(args.out, COND_HEADER, [
        (r.num_points, _fmt(r.separation_px), _fmt(r.separation_superpx),
         _fmt(r.condition_number)) for r in rows])
    good = sum(1 for r in rows if r.condition_number < GOOD_CONDITION)
    print(f"rows={len(rows)} below_{GOOD_CONDITION:g}={good}")


def cmd_two_point(args):
    cfg = RunConfig.load(args.config)
    model = _config_model(cfg, args.shape)
    rows = two_point_sweep(model, cfg.solver_config(), args.channel, args.separations,
                           cfg.noise_variance, cfg.seed,
                           superpixel_px=cfg.filter_spec().superpixel_px)
    io.write_csv(args.out, TWO_POINT_HEADER, [
        (r.separation_px, _fmt(r.separation_superpx), int(r.resolved), _fmt(r.valley_ratio))
        for r in rows])
    resolved = [r.separation_px for r in rows if r.resolved]
    print(f"smallest_resolved_px={resolved[0] if resolved else 'none'}")


def cmd_res_target(args):
    cfg = RunConfig.load(args.config)
    results = resolution_target_comparison(
        cfg.solver_config(), cfg.noise_variance, cfg.seed, args.bar_width,
        shape=args.shape, spec=cfg.filter_spec(), psf_seed=cfg.psf["seed"],
        feature_px=cfg.psf["feature_px"])
    io.write_csv(args.out, TARGET_HEADER, [
        (r.architecture, _fmt(r.psnr_db), "".join("1" if g else "0" for g in r.groups_resolved),
         "634nm;570nm;474nm;broadband") for r in results])
    for r in results:
        print(f"{r.architecture} psnr_db={r.psnr_db:.3f} groups_resolved={r.groups_resolved}")
        if args.out_dir:
            io.write_cube(f"{args.out_dir}/{r.architecture}_recon.hsc", r.recon)


def cmd_spectra(args):
    cube = io.read_cube(args.cube)
    if not (0 <= args.x < cube.nx and 0 <= args.y < cube.ny):
        raise UsageError(f"pixel ({args.x}, {args.y}) outside {cube.nx}x{cube.ny} cube")
    spectrum = cube.data[:, args.y, args.x]
    io.write_csv(args.out, SPECTRUM_HEADER,
                 [(_fmt(w), _fmt(v)) for w, v in zip(cube.wavelengths_nm, spectrum)])


def build_parser():
    p = _Parser(prog="lenslesshsi", description="Lensless snapshot hyperspectral simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen-psf", help="generate a diffuser or lens PSF (IMG1)")
    s.add_argument("--kind", required=True, choices=["diffuser", "high-na", "low-na"])
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--feature-px", type=float, default=2.75)
    s.add_argument("--shape", type=_shape, default=(64, 64))
    s.add_argument("--superpixel-px", type=int, default=16)
    s.add_argument("--preview", help="optional PNG preview path")
    s.set_defaults(func=cmd_gen_psf)

    s = sub.add_parser("gen-filter", help="tile a filter array over the sensor (HSC1)")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--shape", type=_shape, default=(64, 64))
    s.set_defaults(func=cmd_gen_filter)

    s = sub.add_parser("gen-scene", help="build a point or bar-target scene (HSC1)")
    s.add_argument("--kind", required=True, choices=["points", "res-target"])
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_scene)

    s = sub.add_parser("forward", help="simulate a measurement (IMG1)")
    s.add_argument("--psf", required=True)
    s.add_argument("--filter", required=True)
    s.add_argument("--scene", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--noise-var", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_forward)

    s = sub.add_parser("reconstruct", help="FISTA reconstruction (HSC1)")
    s.add_argument("--psf", required=True)
    s.add_argument("--filter", required=True)
    s.add_argument("--meas", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--log")
    s.add_argument("--scene-shape", type=_shape, default=None)
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("analyze-autocorr", help="PSF autocorrelation half-width")
    s.add_argument("--psf", required=True)
    s.add_argument("--superpixel-px", type=int, default=16)
    s.set_defaults(func=cmd_analyze_autocorr)

    s = sub.add_parser("analyze-cond", help="local condition-number sweep (CSV)")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--shape", type=_shape, default=(64, 64))
    s.add_argument("--max-points", type=int, default=9)
    s.add_argument("--separations", type=_int_list, default=[3, 4, 5, 6, 8, 10, 12, 14, 16])
    s.add_argument("--mode", choices=["spatial_2d", "spectral_3d"], default="spatial_2d")
    s.set_defaults(func=cmd_analyze_cond)

    s = sub.add_parser("two-point", help="two-point resolution sweep (CSV)")
    s.add_argument("--config", required=True)
    s.add_argument("--channel", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--shape", type=_shape, default=(64, 64))
    s.add_argument("--separations", type=_int_list, default=[1, 2, 3, 4, 5, 6, 8])
    s.set_defaults(func=cmd_two_point)

    s = sub.add_parser("res-target", help="bar-target comparison of the three architectures")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--shape", type=_shape, default=(64, 64))
    s.add_argument("--bar-width", type=int, default=3)
    s.add_argument("--out-dir", help="also write each reconstruction here")
    s.set_defaults(func=cmd_res_target)

    s = sub.add_parser("spectra", help="spectrum at one pixel (CSV)")
    s.add_argument("--cube", required=True)
    s.add_argument("--x", type=int, required=True)
    s.add_argument("--y", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_spectra)
    return p


def _fail(kind, code, exc):
    reason = " ".join(str(exc).split())
    print(f"error kind={kind} code={code} reason={reason}", file=sys.stderr)
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", EXIT_USAGE, exc)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except UsageError as exc:
        return _fail("usage", EXIT_USAGE, exc)
    except io.FormatError as exc:
        return _fail(exc.code, EXIT_FORMAT, exc)
    except ConfigError as exc:
        return _fail("config", EXIT_FORMAT, exc)
    except ShapeMismatchError as exc:
        return _fail("shape_mismatch", EXIT_FORMAT, exc)
    except OSError as exc:
        return _fail("io", EXIT_FORMAT, exc)
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail("numerical", EXIT_NUMERICAL, exc)
    except ValueError as exc:
        return _fail("invalid_value", EXIT_USAGE, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
