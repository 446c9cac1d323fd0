"""Command-line surface: single estimations from a matches file, batch
benchmark grids, and per-iteration error traces.

Exit codes: 0 success, 2 matches-file parse error, 3 estimation failure,
4 invalid run specification.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import benchmark
from .aggregation import predefined_source_points
from .benchmark import (
    METHODS,
    BenchCell,
    make_scenario,
    preset_cells,
    run_experiment,
    run_method,
    trace_iteration_errors,
    write_report_csv,
    write_trace_csv,
)
from .errors import ParseError, RansaacError
from .geometry import Homography, ImageExtents, MatchSet, symmetric_transfer_errors
from .local_opt import LoConfig
from .robust import chi2_threshold

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_ESTIMATION = 3
EXIT_SPEC = 4


class _SpecError(Exception):
    """Invalid run specification (flag combination, unknown method, ...)."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; spec errors must exit 4.
    def error(self, message):
        raise _SpecError(message)


def parse_matches_file(path: str) -> MatchSet:
    """Read ``x1 y1 x2 y2`` rows; '#' starts a comment, blank lines are
    skipped. Raises ParseError with the offending 1-based line number."""
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(lineno, f"expected 4 numbers, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from None
    if not rows:
        raise ParseError(0, "no matches in file")
    return MatchSet.from_rows(np.array(rows))


def _add_common_estimation_flags(p: argparse.ArgumentParser):
    p.add_argument(
        "--method",
        default="lo-ransaac-wgmed",
        help=f"estimator id, one of: {', '.join(sorted(METHODS))}",
    )
    p.add_argument("--sigma", type=float, default=None, help="noise level in pixels; sets the inlier threshold")
    p.add_argument("--delta-d", type=float, default=None, help="raw squared-pixel threshold override")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--eta0", type=float, default=0.99, help="adaptive-termination confidence")
    p.add_argument("--adaptive", action="store_true", help="stop once the theoretical bound is met")
    p.add_argument(
        "--adaptive-multiplier", type=float, default=1.0,
        help="scale the theoretical bound (practical budgets are often 2-3x)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=None, help="aggregation weight exponent")
    p.add_argument("--lo-reps", type=int, default=10)
    p.add_argument("--lo-ls-iters", type=int, default=4)
    p.add_argument("--lo-m-delta", type=float, default=4.0)
    p.add_argument("--lo-sample-size", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ransaac", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)

    est = sub.add_parser("estimate", help="estimate a homography from a matches file")
    est.add_argument("matches", help="text file of 'x1 y1 x2 y2' rows")
    est.add_argument("--out", default=None, help="write the 9-number homography line here")
    est.add_argument("--width", type=float, default=None, help="first-image width (basis placement)")
    est.add_argument("--height", type=float, default=None, help="first-image height")
    est.add_argument("--dump-cloud", default=None, help="write the estimate cloud CSV here")
    _add_common_estimation_flags(est)

    ben = sub.add_parser("bench", help="run a benchmark grid and emit a report CSV")
    ben.add_argument("--paper-table", choices=benchmark.PRESETS, default=None,
                     help="preset experiment grid")
    ben.add_argument("--trials", type=int, default=100)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--out", default=None, help="report CSV path (default stdout)")
    ben.add_argument("--workers", type=int, default=1)
    ben.add_argument("--measure-runtime", action="store_true",
                     help="fill the runtime column (output no longer byte-deterministic)")
    ben.add_argument("--emit-matches", default=None, metavar="PREFIX",
                     help="also write trial-0 matches and ground truth of the first cell")
    ben.add_argument("--only-sigma", type=float, default=None, help="restrict a preset grid")
    ben.add_argument("--only-ratio", type=float, default=None)
    ben.add_argument("--only-inliers", type=int, default=None)
    ben.add_argument("--only-iters", type=int, default=None)
    ben.add_argument("--only-method", default=None)
    ben.add_argument("--sigma", type=float, default=5.0, help="custom grid: noise level")
    ben.add_argument("--n-inliers", type=int, default=1000)
    ben.add_argument("--outlier-ratio", type=float, default=0.5)
    ben.add_argument("--iterations", type=int, default=1000)
    ben.add_argument("--adaptive", action="store_true")
    ben.add_argument("--methods", default="ransac,lo-ransaac-wgmed",
                     help="custom grid: comma-separated method ids")

    tra = sub.add_parser("trace", help="per-iteration mean error curves (paired run)")
    tra.add_argument("--trials", type=int, default=200)
    tra.add_argument("--iterations", type=int, default=20000)
    tra.add_argument("--sigma", type=float, default=5.0)
    tra.add_argument("--n-inliers", type=int, default=100)
    tra.add_argument("--outlier-ratio", type=float, default=0.5)
    tra.add_argument("--seed", type=int, default=0)
    tra.add_argument("--workers", type=int, default=1)
    tra.add_argument("--dense-until", type=int, default=500)
    tra.add_argument("--sparse-every", type=int, default=50)
    tra.add_argument("--out", default=None, help="trace CSV path (default stdout)")
    return parser


def _resolve_delta(args) -> float:
    if args.delta_d is not None:
        if args.delta_d <= 0:
            raise _SpecError("--delta-d must be positive")
        return args.delta_d
    if args.sigma is None:
        raise _SpecError("provide --sigma or --delta-d")
    if args.sigma <= 0:
        raise _SpecError("--sigma must be positive")
    return chi2_threshold(args.sigma, 0.99, 4)


def _lo_config(args) -> LoConfig:
    return LoConfig(
        s_is=args.lo_sample_size,
        m_delta=args.lo_m_delta,
        reps=args.lo_reps,
        ls_iters=args.lo_ls_iters,
    )


def cmd_estimate(args) -> int:
    if args.method not in METHODS:
        raise _SpecError(f"unknown method {args.method!r}")
    if args.method == "oracle":
        raise _SpecError("the oracle method needs ground truth; use bench mode")
    matches = parse_matches_file(args.matches)

    if (args.width is None) != (args.height is None):
        raise _SpecError("--width and --height must be given together")
    if args.width is not None:
        extents = ImageExtents(args.width, args.height)
    else:
        # Basis placement only needs a box covering the source points.
        hi = matches.src.max(axis=0)
        extents = ImageExtents(max(hi[0], 1.0), max(hi[1], 1.0))
    basis = predefined_source_points(extents)
    base_delta = _resolve_delta(args)

    model, iters_used = run_method(
        args.method,
        matches,
        base_delta=base_delta,
        iterations=args.iterations,
        seed=args.seed,
        eta0=args.eta0,
        adaptive=args.adaptive,
        adaptive_multiplier=args.adaptive_multiplier,
        lo_cfg=_lo_config(args),
        p=args.p,
        basis=basis,
    )

    line = model.to_line()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(line + "\n")
    else:
        print(line)

    spec = METHODS[args.method]
    e = symmetric_transfer_errors(model, matches)
    mask = e <= base_delta * spec.delta_factor
    n_inl = int(mask.sum())
    print(f"inliers: {n_inl}/{len(matches)}")
    print(f"iterations: {iters_used}")
    if n_inl:
        e_in = e[mask]
        print(f"inlier residual (squared px): mean {e_in.mean():.6g}, max {e_in.max():.6g}")

    if args.dump_cloud:
        if spec.agg_method is None:
            raise _SpecError("--dump-cloud needs an aggregating method")
        # Re-run through the aggregating estimator to expose the cloud.
        from .aggregation import AggConfig, lo_ransaac_estimate, ransaac_estimate
        from .robust import RobustConfig

        cfg = RobustConfig(
            iterations=args.iterations,
            delta_d=base_delta * spec.delta_factor,
            eta0=args.eta0,
            adaptive=args.adaptive,
            seed=args.seed,
            adaptive_multiplier=args.adaptive_multiplier,
        )
        agg = AggConfig(spec.agg_method, p=args.p)
        if spec.kind == "lo-ransaac":
            res = lo_ransaac_estimate(matches, cfg, _lo_config(args), agg, basis)
        else:
            res = ransaac_estimate(matches, cfg, agg, basis)
        with open(args.dump_cloud, "w", encoding="utf-8") as f:
            res.cloud.write_csv(f)
    return EXIT_OK


def _filtered_preset(args) -> list[BenchCell]:
    cells = preset_cells(args.paper_table)
    if args.only_sigma is not None:
        cells = [c for c in cells if c.scenario.sigma == args.only_sigma]
    if args.only_ratio is not None:
        cells = [c for c in cells if c.scenario.outlier_ratio == args.only_ratio]
    if args.only_inliers is not None:
        cells = [c for c in cells if c.scenario.n_inliers == args.only_inliers]
    if args.only_iters is not None:
        cells = [c for c in cells if c.iterations == args.only_iters]
    if args.only_method is not None:
        cells = [c for c in cells if c.method == args.only_method]
    if not cells:
        raise _SpecError("the preset filters selected no cells")
    return cells


def cmd_bench(args) -> int:
    if args.trials < 1:
        raise _SpecError("--trials must be >= 1")
    if args.paper_table == "periter":
        # The per-iteration preset emits the trace CSV schema.
        scen = make_scenario(100, 0.5, 5.0)
        checkpoints, curves = trace_iteration_errors(
            scen,
            20000,
            args.trials,
            master_seed=args.seed,
            workers=args.workers,
        )
        curves = {"ransac": curves["ransac"], "ransaac-wmean": curves["ransaac"]}
        return _write_out(args.out, lambda f: write_trace_csv(checkpoints, curves, f))

    if args.paper_table is not None:
        cells = _filtered_preset(args)
    else:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        for m in methods:
            if m not in METHODS:
                raise _SpecError(f"unknown method {m!r}")
        if not 0.0 <= args.outlier_ratio < 1.0:
            raise _SpecError("--outlier-ratio must be in [0, 1)")
        scen = make_scenario(args.n_inliers, args.outlier_ratio, args.sigma)
        sid = (
            f"custom/sigma={args.sigma}/in={args.n_inliers}/out={args.outlier_ratio}"
        )
        cells = [
            BenchCell(sid, scen, m, args.iterations, adaptive=args.adaptive)
            for m in methods
        ]

    if args.emit_matches:
        _emit_matches(cells[0], args.seed, args.emit_matches)

    reports = run_experiment(
        cells,
        trials=args.trials,
        master_seed=args.seed,
        workers=args.workers,
        measure_runtime=args.measure_runtime,
    )
    return _write_out(
        args.out,
        lambda f: write_report_csv(reports, f, include_runtime=args.measure_runtime),
    )


def _emit_matches(cell: BenchCell, master_seed: int, prefix: str) -> None:
    from dataclasses import replace

    scen_seed, _ = benchmark._trial_seeds(master_seed, 0, 0)
    scenario = replace(cell.scenario, seed=scen_seed)
    matches, _, _ = benchmark.generate_scenario(scenario)
    with open(f"{prefix}_matches.txt", "w", encoding="utf-8") as f:
        f.write("# x1 y1 x2 y2\n")
        for (x1, y1), (x2, y2) in zip(matches.src, matches.dst):
            f.write(f"{x1:.12g} {y1:.12g} {x2:.12g} {y2:.12g}\n")
    with open(f"{prefix}_gt.txt", "w", encoding="utf-8") as f:
        f.write(scenario.gt.to_line() + "\n")


def cmd_trace(args) -> int:
    if not 0.0 <= args.outlier_ratio < 1.0:
        raise _SpecError("--outlier-ratio must be in [0, 1)")
    scen = make_scenario(args.n_inliers, args.outlier_ratio, args.sigma)
    checkpoints = benchmark.default_checkpoints(
        args.iterations, args.dense_until, args.sparse_every
    )
    checkpoints, curves = trace_iteration_errors(
        scen,
        args.iterations,
        args.trials,
        checkpoints=checkpoints,
        master_seed=args.seed,
        workers=args.workers,
    )
    curves = {"ransac": curves["ransac"], "ransaac-wmean": curves["ransaac"]}
    return _write_out(args.out, lambda f: write_trace_csv(checkpoints, curves, f))


def _write_out(path, writer) -> int:
    if path:
        with open(path, "w", encoding="utf-8") as f:
            writer(f)
    else:
        writer(sys.stdout)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    try:
        if args.mode == "estimate":
            return cmd_estimate(args)
        if args.mode == "bench":
            return cmd_bench(args)
        return cmd_trace(args)
    except _SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RansaacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
