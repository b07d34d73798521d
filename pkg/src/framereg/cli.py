"""Command-line interface: match two frame-set files, generate synthetic
scenes, and run the outlier-robustness benchmark sweep."""

import argparse
import csv
import sys

from .engine import MODEL_KINDS, EngineConfig, register
from .fileio import (FormatError, ResultRecord, read_frameset, write_frameset,
                     write_result, write_truth)
from .metrics import run_batch
from .synth import InvalidSpec, SceneSpec, WarpField, generate

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_MAX_ITERS = 2
EXIT_DEGENERATE = 3

BENCH_COLUMNS = ("ratio", "f1_mean", "f1_var", "precision_mean", "recall_mean",
                 "iters_mean", "iters_var", "time_mean", "mode", "failures")


def _add_engine_flags(p):
    p.add_argument("--model", choices=MODEL_KINDS, default="rigid")
    p.add_argument("--omega", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=3.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iters", type=int, default=150)
    p.add_argument("--omega-burn-in", type=int, default=5,
                   help="iterations before the outlier weight is re-estimated")
    p.add_argument("--location-only", action="store_true")
    p.add_argument("--one-to-one", action="store_true")
    p.add_argument("--kernel-mode", choices=("per_block", "spatial_shared"),
                   default="per_block")


def _engine_config(args):
    return EngineConfig(model_kind=args.model, omega_init=args.omega,
                        lam=args.lam, beta=args.beta,
                        match_threshold=args.threshold, tol=args.tol,
                        max_iters=args.max_iters,
                        omega_burn_in=args.omega_burn_in,
                        location_only=args.location_only,
                        one_to_one=args.one_to_one,
                        kernel_mode=args.kernel_mode)


def _add_scene_flags(p):
    p.add_argument("--n", type=int, default=100, help="number of inlier frames")
    p.add_argument("--outliers", type=float, default=0.0,
                   help="outlier ratio in [0, 1)")
    p.add_argument("--kind", choices=MODEL_KINDS, default="rigid",
                   help="ground-truth transform family")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0,
                   help="per-block Gaussian noise sigma")
    p.add_argument("--extent", type=float, default=100.0)
    p.add_argument("--theta", type=float, default=0.3,
                   help="rigid rotation angle (radians)")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--tx", type=float, default=0.0)
    p.add_argument("--ty", type=float, default=0.0)
    p.add_argument("--affine", type=float, nargs=4,
                   metavar=("B11", "B21", "B12", "B22"),
                   default=[1.2, 0.1, -0.1, 0.9],
                   help="affine map entries, column-major")
    p.add_argument("--warp-amplitude", type=float, default=2.0)
    p.add_argument("--warp-wavelength", type=float, default=50.0)
    p.add_argument("--warp-gain", type=float, default=0.0)


def _scene_spec(args, seed=None, outlier_ratio=None):
    b = args.affine
    return SceneSpec(
        n_inliers=args.n,
        outlier_ratio=args.outliers if outlier_ratio is None else outlier_ratio,
        transform_kind=args.kind, theta=args.theta, scale=args.scale,
        translation=(args.tx, args.ty),
        affine_b=((b[0], b[2]), (b[1], b[3])),
        warp=WarpField(amplitude=args.warp_amplitude,
                       wavelength=args.warp_wavelength, gain=args.warp_gain),
        noise_sigma=(args.noise,) * 3,
        seed=args.seed if seed is None else seed,
        spatial_extent=args.extent)


def cmd_match(args):
    try:
        data, _ = read_frameset(args.data)
        model, _ = read_frameset(args.model_path)
        cfg = _engine_config(args)
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    result = register(data, model, cfg)
    write_result(ResultRecord.from_match(result, cfg), args.out)
    print(f"iterations={result.iterations} converged={result.converged} "
          f"matches={len(result.correspondences)} -> {args.out}")
    if result.degenerate:
        return EXIT_DEGENERATE
    if not result.converged:
        return EXIT_MAX_ITERS
    return EXIT_OK


def cmd_synth(args):
    try:
        spec = _scene_spec(args)
        scene = generate(spec)
    except InvalidSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    write_frameset(scene.model, args.model_out)
    write_frameset(scene.data, args.data_out)
    write_truth(scene.ground_truth, args.truth_out)
    print(f"seed={spec.seed} frames_per_set={scene.model.count} "
          f"truth_pairs={len(scene.ground_truth)}")
    return EXIT_OK


def cmd_bench_outliers(args):
    try:
        ratios = [float(r) for r in args.ratios.split(",")]
        if any(not 0.0 <= r < 1.0 for r in ratios) or args.trials < 1:
            raise InvalidSpec("ratios must be in [0, 1) and trials >= 1")
        cfg = _engine_config(args)
    except (InvalidSpec, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    modes = [("full", cfg)]
    if args.both_modes:
        from dataclasses import replace
        modes.append(("location_only", replace(cfg, location_only=True)))

    rows = []
    for ratio in ratios:
        for mode_name, mode_cfg in modes:
            spec = _scene_spec(args, outlier_ratio=ratio)
            summary = run_batch(spec, mode_cfg, args.trials)
            rows.append({"ratio": ratio, "f1_mean": summary.f1_mean,
                         "f1_var": summary.f1_var,
                         "precision_mean": summary.precision_mean,
                         "recall_mean": summary.recall_mean,
                         "iters_mean": summary.iters_mean,
                         "iters_var": summary.iters_var,
                         "time_mean": summary.time_mean,
                         "mode": mode_name, "failures": summary.failures})
            print(f"ratio={ratio:.2f} mode={mode_name} "
                  f"f1={summary.f1_mean:.3f} iters={summary.iters_mean:.1f}")

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    if args.plot:
        from .report import render_outlier_figure
        render_outlier_figure(rows, args.plot)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="framereg",
        description="Feature-frame registration: GMM/EM alignment of affine "
                    "co-variant frames with rigid, affine and non-rigid models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="align two frame-set files")
    p.add_argument("data", help="data frame-set file")
    p.add_argument("model_path", metavar="model", help="model frame-set file")
    _add_engine_flags(p)
    p.add_argument("--out", default="result.json", help="result file path")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("synth", help="generate a synthetic scene with truth")
    _add_scene_flags(p)
    p.add_argument("--model-out", default="model.frames")
    p.add_argument("--data-out", default="data.frames")
    p.add_argument("--truth-out", default="truth.pairs")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench-outliers",
                       help="F1-vs-outlier-ratio sweep over seeded trials")
    _add_scene_flags(p)
    _add_engine_flags(p)
    p.add_argument("--ratios", default="0.15,0.25,0.35,0.45,0.50",
                   help="comma-separated outlier ratios")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--both-modes", action="store_true",
                   help="also run the location-only baseline")
    p.add_argument("--out", default="bench.csv", help="CSV output path")
    p.add_argument("--plot", default=None, help="optional figure output path")
    p.set_defaults(func=cmd_bench_outliers)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
