"""Synthetic ground-truth scenarios, the mean inlier error metric,
Monte-Carlo experiment execution, and CSV report emission."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .aggregation import (
    AggConfig,
    AggMethod,
    CloudCollection,
    EstimateCloud,
    SourceBasis,
    _BasisProjector,
    _finish,
    aggregate_cloud,
    collect_cloud,
    predefined_source_points,
)
from .errors import (
    DegenerateSample,
    GenerationFailed,
    HorizonDegenerate,
    InsufficientData,
    NoValidHypothesis,
    SingularModel,
)
from .geometry import (
    Homography,
    ImageExtents,
    MatchSet,
    dlt_fit,
    fit_homography_arrays,
    project_points,
    symmetric_transfer_errors,
)
from .local_opt import LoConfig, lo_ransac_estimate
from .robust import (
    RobustConfig,
    ScoringVariant,
    chi2_threshold,
    derive_rngs,
    draw_minimal_sample,
    ransac_estimate,
    refit_on_inliers,
)

FAILED_TRIAL_ERROR = float("inf")

_ESTIMATION_ERRORS = (
    NoValidHypothesis,
    HorizonDegenerate,
    SingularModel,
    DegenerateSample,
    InsufficientData,
)


@dataclass(frozen=True)
class Scenario:
    """Synthetic ground-truth configuration.

    The outlier count is derived from the ratio so the stated proportions
    are met exactly at the usual inlier counts: round(n * r / (1 - r)).
    """

    gt: Homography
    extents_src: ImageExtents
    extents_dst: ImageExtents
    n_inliers: int
    outlier_ratio: float
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.n_inliers < 1:
            raise ValueError("n_inliers must be >= 1")
        if not 0.0 <= self.outlier_ratio < 1.0:
            raise ValueError("outlier_ratio must be in [0, 1)")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @property
    def n_outliers(self) -> int:
        r = self.outlier_ratio
        return int(round(self.n_inliers * r / (1.0 - r)))


def _draw_offhorizon_sources(gt, extents, count, rng, max_rounds=100):
    # Uniform draws over the image, redrawing any point too close to the
    # ground-truth horizon (where its projection would be undefined).
    row = gt.m[2]
    pts = np.empty((count, 2))
    pending = np.arange(count)
    for _ in range(max_rounds):
        draws = rng.uniform(
            (0.0, 0.0), (extents.width, extents.height), size=(pending.size, 2)
        )
        pts[pending] = draws
        w = row[0] * pts[pending, 0] + row[1] * pts[pending, 1] + row[2]
        norms = np.sqrt(pts[pending, 0] ** 2 + pts[pending, 1] ** 2 + 1.0)
        bad = np.abs(w) <= 1e-6 * norms
        pending = pending[bad]
        if pending.size == 0:
            return pts
    raise GenerationFailed("could not place inlier sources away from the horizon")


def generate_scenario(
    scenario: Scenario, rng: np.random.Generator | None = None
) -> tuple[MatchSet, MatchSet, np.ndarray]:
    """Generate one dataset: (noisy matches, noiseless inlier matches,
    inlier index array).

    Inlier sources are uniform over the source extents and paired through
    the ground truth; outliers pair uniform sources with uniform random
    destinations. Gaussian noise of the configured sigma is then added per
    coordinate to both endpoints of every match. Inliers occupy the leading
    indices.
    """
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    src_in = _draw_offhorizon_sources(
        scenario.gt, scenario.extents_src, scenario.n_inliers, rng
    )
    dst_in = project_points(scenario.gt, src_in)
    n_out = scenario.n_outliers
    ext_s, ext_d = scenario.extents_src, scenario.extents_dst
    src_out = rng.uniform((0.0, 0.0), (ext_s.width, ext_s.height), size=(n_out, 2))
    dst_out = rng.uniform((0.0, 0.0), (ext_d.width, ext_d.height), size=(n_out, 2))
    src = np.vstack([src_in, src_out])
    dst = np.vstack([dst_in, dst_out])
    src = src + rng.normal(0.0, scenario.sigma, size=src.shape)
    dst = dst + rng.normal(0.0, scenario.sigma, size=dst.shape)
    return (
        MatchSet(src, dst),
        MatchSet(src_in, dst_in),
        np.arange(scenario.n_inliers),
    )


def random_homography(
    extents: ImageExtents,
    rng: np.random.Generator,
    difficulty: float = 1.0,
    max_attempts: int = 100,
) -> Homography:
    """Random plausible homography: rotation, anisotropic scale in
    [0.7, 1.4], translation within 20% of the extents, and small projective
    terms, all deviations scaled by ``difficulty`` (0 gives the identity).
    Resampled until the horizon clears twice the image box."""
    if difficulty < 0:
        raise ValueError("difficulty must be >= 0")
    w, h = extents.width, extents.height
    box_x = (-0.5 * w, 1.5 * w)
    box_y = (-0.5 * h, 1.5 * h)
    for _ in range(max_attempts):
        theta = difficulty * rng.uniform(-np.pi / 8, np.pi / 8)
        sx = 1.0 + difficulty * (rng.uniform(0.7, 1.4) - 1.0)
        sy = 1.0 + difficulty * (rng.uniform(0.7, 1.4) - 1.0)
        tx = difficulty * rng.uniform(-0.2 * w, 0.2 * w)
        ty = difficulty * rng.uniform(-0.2 * h, 0.2 * h)
        h31 = difficulty * rng.uniform(-1e-4, 1e-4)
        h32 = difficulty * rng.uniform(-1e-4, 1e-4)
        c, s = np.cos(theta), np.sin(theta)
        m = np.array(
            [
                [sx * c, -sy * s, tx],
                [sx * s, sy * c, ty],
                [h31, h32, 1.0],
            ]
        )
        # Horizon h31*x + h32*y + 1 = 0 must stay outside 2x the image box:
        # the w-component is affine, so checking the box corners suffices.
        corners_w = [
            h31 * x + h32 * y + 1.0 for x in box_x for y in box_y
        ]
        if min(corners_w) <= 1e-3:
            continue
        try:
            return Homography(m)
        except SingularModel:
            continue
    raise GenerationFailed("could not sample a homography with a clear horizon")


def mean_inlier_error(phi: Homography, gt_inliers: MatchSet) -> float:
    """Mean of the halved sum of forward and backward transfer distances
    (unsquared, in pixels) over the noiseless inlier correspondences."""
    fwd = project_points(phi, gt_inliers.src)
    bwd = project_points(phi.inverse(), gt_inliers.dst)
    d_f = np.linalg.norm(fwd - gt_inliers.dst, axis=1)
    d_b = np.linalg.norm(bwd - gt_inliers.src, axis=1)
    return float(np.mean((d_f + d_b) / 2.0))


# --------------------------------------------------------------------------
# Method registry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodSpec:
    kind: str  # ransac | lo-ransac | ransaac | lo-ransaac | oracle
    scoring: ScoringVariant = ScoringVariant.RANSAC_BINARY
    refit: bool = False
    agg_method: AggMethod | None = None
    delta_factor: float = 1.0  # aggregated methods tolerate a wider threshold


METHODS: dict[str, MethodSpec] = {
    "ransac": MethodSpec("ransac"),
    "ransac+m": MethodSpec("ransac", refit=True),
    "msac": MethodSpec("ransac", scoring=ScoringVariant.MSAC),
    "lmeds": MethodSpec("ransac", scoring=ScoringVariant.LMEDS),
    "lo-ransac": MethodSpec("lo-ransac"),
    "ransaac-wmean": MethodSpec("ransaac", agg_method=AggMethod.WMEAN, delta_factor=2.0),
    "ransaac-wgmed": MethodSpec("ransaac", agg_method=AggMethod.WGMED, delta_factor=2.0),
    "lo-ransaac-wmean": MethodSpec(
        "lo-ransaac", agg_method=AggMethod.WMEAN, delta_factor=2.0
    ),
    "lo-ransaac-wgmed": MethodSpec(
        "lo-ransaac", agg_method=AggMethod.WGMED, delta_factor=2.0
    ),
    "oracle": MethodSpec("oracle"),
}


def run_method(
    method: str,
    matches: MatchSet,
    *,
    base_delta: float,
    iterations: int,
    seed: int,
    eta0: float = 0.99,
    adaptive: bool = False,
    adaptive_multiplier: float = 1.0,
    lo_cfg: LoConfig | None = None,
    p: float | None = None,
    basis: SourceBasis | None = None,
    oracle_inliers: MatchSet | None = None,
    _cache: dict | None = None,
) -> tuple[Homography, int]:
    """Run one registered estimator; returns (model, iterations used).

    base_delta is the squared-pixel threshold before the per-method factor.
    Within one trial a shared _cache lets method variants that differ only
    in the aggregation rule reuse the same sampling run (they consume
    identical sample streams by construction).
    """
    try:
        spec = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None

    if spec.kind == "oracle":
        if oracle_inliers is None:
            raise ValueError("oracle method requires the ground-truth inliers")
        return dlt_fit(oracle_inliers), 0

    cfg = RobustConfig(
        iterations=iterations,
        delta_d=base_delta * spec.delta_factor,
        eta0=eta0,
        adaptive=adaptive,
        seed=seed,
        scoring=spec.scoring,
        adaptive_multiplier=adaptive_multiplier,
    )

    if spec.kind == "ransac":
        key = ("ransac", cfg.delta_d, cfg.scoring)
        result = _cache.get(key) if _cache is not None else None
        if result is None:
            result = ransac_estimate(matches, cfg)
            if _cache is not None:
                _cache[key] = result
        if spec.refit:
            try:
                return refit_on_inliers(matches, result.best), result.iterations
            except (DegenerateSample, InsufficientData):
                return result.best.model, result.iterations
        return result.best.model, result.iterations

    if spec.kind == "lo-ransac":
        result = lo_ransac_estimate(matches, cfg, lo_cfg)
        return result.model, result.iterations

    # Aggregated methods: collect the cloud once per (delta, lo) signature,
    # then apply the requested aggregation rule.
    if basis is None:
        raise ValueError(f"method {method!r} requires a source basis")
    agg = AggConfig(spec.agg_method, p=p)
    use_lo = spec.kind == "lo-ransaac"
    key = ("cloud", cfg.delta_d, use_lo)
    collection = _cache.get(key) if _cache is not None else None
    if collection is None:
        collection = collect_cloud(
            matches,
            cfg,
            basis,
            lo_cfg=(lo_cfg if lo_cfg is not None else LoConfig()) if use_lo else None,
            sanity_box_factor=agg.sanity_box_factor,
        )
        if _cache is not None:
            _cache[key] = collection
    result = _finish(collection, agg, basis)
    return result.model, result.iterations


# --------------------------------------------------------------------------
# Experiment execution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchCell:
    """One grid point: a scenario, one method, and the loop configuration."""

    scenario_id: str
    scenario: Scenario
    method: str
    iterations: int
    adaptive: bool = False
    adaptive_multiplier: float = 1.0
    p: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class TrialReport:
    method: str
    error: float
    iterations_used: int
    wall_time: float

    @property
    def failed(self) -> bool:
        return not math.isfinite(self.error)


@dataclass
class ExperimentReport:
    """Aggregates over the retained per-trial reports for one cell."""

    cell: BenchCell
    trials: list[TrialReport] = field(default_factory=list)

    def _errors(self):
        return [t.error for t in self.trials if not t.failed]

    @property
    def failures(self) -> int:
        return sum(1 for t in self.trials if t.failed)

    @property
    def mean_error(self) -> float:
        errs = self._errors()
        return float(np.mean(errs)) if errs else float("nan")

    @property
    def std_error(self) -> float:
        errs = self._errors()
        return float(np.std(errs)) if errs else float("nan")

    @property
    def mean_runtime(self) -> float:
        return float(np.mean([t.wall_time for t in self.trials])) if self.trials else 0.0


def _base_delta(sigma: float) -> float:
    # Threshold for the symmetric transfer error at 99% inlier capture.
    return chi2_threshold(sigma, 0.99, 4) if sigma > 0 else 1e-6


def _group_key(cell: BenchCell):
    s = cell.scenario
    return (
        cell.scenario_id,
        s.gt.to_line(),
        s.extents_src,
        s.extents_dst,
        s.n_inliers,
        s.outlier_ratio,
        s.sigma,
        cell.iterations,
        cell.adaptive,
        cell.adaptive_multiplier,
    )


def _trial_seeds(master_seed: int, group_index: int, trial: int) -> tuple[int, int]:
    ss = np.random.SeedSequence([master_seed, group_index, trial])
    state = ss.generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def _run_group_trial(
    cells: list[BenchCell],
    master_seed: int,
    group_index: int,
    trial: int,
    measure_runtime: bool,
) -> list[TrialReport]:
    """Execute every method of one grid group on one trial's dataset.

    All methods see the same dataset and the same estimator seed, so they
    consume identical sample streams. Unless runtimes are being measured,
    methods differing only in the aggregation rule share one sampling run.
    """
    scen_seed, est_seed = _trial_seeds(master_seed, group_index, trial)
    lead = cells[0]
    scenario = replace(lead.scenario, seed=scen_seed)
    matches, gt_inliers, _ = generate_scenario(scenario)
    basis = predefined_source_points(scenario.extents_src)
    base_delta = _base_delta(scenario.sigma)
    cache: dict | None = {} if not measure_runtime else None
    reports = []
    for cell in cells:
        t0 = time.perf_counter()
        try:
            model, iters_used = run_method(
                cell.method,
                matches,
                base_delta=base_delta,
                iterations=cell.iterations,
                seed=est_seed,
                adaptive=cell.adaptive,
                adaptive_multiplier=cell.adaptive_multiplier,
                p=cell.p,
                basis=basis,
                oracle_inliers=matches.subset(np.arange(scenario.n_inliers)),
                _cache=cache,
            )
            error = mean_inlier_error(model, gt_inliers)
        except _ESTIMATION_ERRORS:
            error = FAILED_TRIAL_ERROR
            iters_used = cell.iterations
        reports.append(
            TrialReport(cell.method, error, iters_used, time.perf_counter() - t0)
        )
    return reports


def run_experiment(
    cells: list[BenchCell],
    trials: int,
    master_seed: int = 0,
    workers: int = 1,
    measure_runtime: bool = False,
) -> list[ExperimentReport]:
    """Run every cell for ``trials`` Monte-Carlo trials.

    Cells sharing a scenario and loop configuration are grouped so their
    methods run on identical datasets and sample streams. Trials are
    independent and may run in parallel; results are merged by trial index,
    so the output is identical for any worker count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    groups: dict[tuple, list[BenchCell]] = {}
    for cell in cells:
        groups.setdefault(_group_key(cell), []).append(cell)
    group_list = list(groups.values())

    results: dict[tuple[int, int], list[TrialReport]] = {}
    tasks = [(gi, t) for gi in range(len(group_list)) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                (gi, t): pool.submit(
                    _run_group_trial, group_list[gi], master_seed, gi, t, measure_runtime
                )
                for gi, t in tasks
            }
            for key, fut in futures.items():
                results[key] = fut.result()
    else:
        for gi, t in tasks:
            results[(gi, t)] = _run_group_trial(
                group_list[gi], master_seed, gi, t, measure_runtime
            )

    reports = []
    for gi, group in enumerate(group_list):
        per_cell = [ExperimentReport(cell) for cell in group]
        for t in range(trials):
            for rep, trial_report in zip(per_cell, results[(gi, t)]):
                rep.trials.append(trial_report)
        reports.extend(per_cell)
    return reports


# --------------------------------------------------------------------------
# Per-iteration error tracing
# --------------------------------------------------------------------------


def default_checkpoints(iterations: int, dense_until: int = 500, sparse_every: int = 50):
    """1..dense_until at unit spacing, then every sparse_every iterations."""
    dense = np.arange(1, min(dense_until, iterations) + 1)
    if iterations <= dense_until:
        return dense
    sparse = np.arange(dense_until + sparse_every, iterations + 1, sparse_every)
    if sparse.size == 0 or sparse[-1] != iterations:
        sparse = np.append(sparse, iterations)
    return np.concatenate([dense, sparse])


def _trace_single(scenario, iterations, checkpoints, agg, ransaac_delta_factor):
    """One trial's per-iteration error curves for plain consensus and the
    aggregated estimate (same hypothesis stream for both)."""
    matches, gt_inliers, _ = generate_scenario(scenario)
    basis = predefined_source_points(scenario.extents_src)
    base_delta = _base_delta(scenario.sigma)
    cfg = RobustConfig(
        iterations=iterations, delta_d=base_delta, seed=scenario.seed
    )
    delta_agg = base_delta * ransaac_delta_factor

    projector = _BasisProjector(basis, agg.sanity_box_factor)
    cloud = EstimateCloud(len(basis))
    sample_rng, _ = derive_rngs(cfg.seed)

    best_model = None
    best_count = -1
    curves = {
        "ransac": np.full(len(checkpoints), np.nan),
        "ransaac": np.full(len(checkpoints), np.nan),
    }
    ci = 0
    checkpoints = np.asarray(checkpoints)
    for it in range(1, iterations + 1):
        idx = np.sort(draw_minimal_sample(sample_rng, len(matches), cfg.mss))
        try:
            model = fit_homography_arrays(matches.src[idx], matches.dst[idx])
        except DegenerateSample:
            model = None
        if model is not None:
            # Residuals are threshold-independent: evaluate once and count
            # inliers at both the plain and the wider aggregation threshold.
            e = symmetric_transfer_errors(model, matches)
            n_inl = int((e <= base_delta).sum())
            if n_inl > best_count:
                best_count = n_inl
                best_model = model
            count_agg = int((e <= delta_agg).sum())
            if count_agg > cfg.mss:
                pts = projector.project(model)
                if pts is not None:
                    cloud.append(pts, float(count_agg))
        while ci < len(checkpoints) and checkpoints[ci] == it:
            if best_model is not None:
                try:
                    curves["ransac"][ci] = mean_inlier_error(best_model, gt_inliers)
                except (HorizonDegenerate, SingularModel):
                    pass
                agg_model = aggregate_cloud(cloud, agg, basis)
                model = agg_model if agg_model is not None else best_model
                try:
                    curves["ransaac"][ci] = mean_inlier_error(model, gt_inliers)
                except (HorizonDegenerate, SingularModel):
                    pass
            ci += 1
    return curves


def _trace_trial_task(scenario, iterations, checkpoints, agg, factor, seed):
    return _trace_single(
        replace(scenario, seed=seed), iterations, checkpoints, agg, factor
    )


def trace_iteration_errors(
    scenario: Scenario,
    iterations: int,
    trials: int,
    checkpoints=None,
    agg: AggConfig | None = None,
    master_seed: int = 0,
    workers: int = 1,
    ransaac_delta_factor: float = 2.0,
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Mean per-iteration error curves over ``trials`` paired runs.

    Returns (checkpoints, {"ransac": curve, "ransaac": curve}); both methods
    consume the identical hypothesis stream within each trial.
    """
    if checkpoints is None:
        checkpoints = default_checkpoints(iterations)
    checkpoints = np.asarray(checkpoints)
    if agg is None:
        agg = AggConfig(AggMethod.WMEAN)
    seeds = []
    for t in range(trials):
        scen_seed, _ = _trial_seeds(master_seed, 0, t)
        seeds.append(scen_seed)

    sums = {"ransac": np.zeros(len(checkpoints)), "ransaac": np.zeros(len(checkpoints))}
    counts = {k: np.zeros(len(checkpoints)) for k in sums}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [
                pool.submit(
                    _trace_trial_task,
                    scenario,
                    iterations,
                    checkpoints,
                    agg,
                    ransaac_delta_factor,
                    seeds[t],
                )
                for t in range(trials)
            ]
            trial_curves = [f.result() for f in futs]
    else:
        trial_curves = [
            _trace_trial_task(
                scenario, iterations, checkpoints, agg, ransaac_delta_factor, seeds[t]
            )
            for t in range(trials)
        ]
    for curves in trial_curves:
        for name, curve in curves.items():
            ok = np.isfinite(curve)
            sums[name][ok] += curve[ok]
            counts[name][ok] += 1
    means = {
        name: np.where(counts[name] > 0, sums[name] / np.maximum(counts[name], 1), np.nan)
        for name in sums
    }
    return checkpoints, means


# --------------------------------------------------------------------------
# CSV emission
# --------------------------------------------------------------------------

REPORT_HEADER = (
    "scenario_id,method,sigma,n_inliers,outlier_ratio,iterations,"
    "trials,mean_error_px,std_error_px,mean_runtime_s,failures"
)
TRACE_HEADER = "iteration,method,mean_error_px"


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def write_report_csv(reports: list[ExperimentReport], fileobj, include_runtime=False):
    """Emit one row per report. Runtime cells are left empty unless
    explicitly requested, keeping the output byte-deterministic for a given
    grid and seed."""
    fileobj.write(REPORT_HEADER + "\n")
    for rep in reports:
        cell = rep.cell
        s = cell.scenario
        runtime = _fmt(rep.mean_runtime) if include_runtime else ""
        fileobj.write(
            f"{cell.scenario_id},{cell.method},{_fmt(s.sigma)},{s.n_inliers},"
            f"{_fmt(s.outlier_ratio)},{cell.iterations},{len(rep.trials)},"
            f"{_fmt(rep.mean_error)},{_fmt(rep.std_error)},{runtime},{rep.failures}\n"
        )


def write_trace_csv(checkpoints, curves: dict[str, np.ndarray], fileobj):
    fileobj.write(TRACE_HEADER + "\n")
    for i, it in enumerate(checkpoints):
        for name in curves:
            fileobj.write(f"{int(it)},{name},{_fmt(float(curves[name][i]))}\n")


# --------------------------------------------------------------------------
# Paper-protocol presets
# --------------------------------------------------------------------------

_REF_THETA = np.deg2rad(10.0)
REFERENCE_GT = Homography(
    [
        [1.05 * np.cos(_REF_THETA), -0.95 * np.sin(_REF_THETA), 40.0],
        [1.05 * np.sin(_REF_THETA), 0.95 * np.cos(_REF_THETA), -25.0],
        [5e-5, -4e-5, 1.0],
    ]
)
REFERENCE_EXTENTS = ImageExtents(1024.0, 768.0)


def make_scenario(n_inliers: int, outlier_ratio: float, sigma: float, seed: int = 0) -> Scenario:
    return Scenario(
        gt=REFERENCE_GT,
        extents_src=REFERENCE_EXTENTS,
        extents_dst=REFERENCE_EXTENTS,
        n_inliers=n_inliers,
        outlier_ratio=outlier_ratio,
        sigma=sigma,
        seed=seed,
    )


PRESETS = ("1", "3", "adaptive", "p-sweep", "periter")


def preset_cells(name: str) -> list[BenchCell]:
    """Benchmark grids matching the published experiment protocols."""
    cells: list[BenchCell] = []
    if name == "1":
        methods = [
            "ransaac-wmean",
            "lo-ransaac-wmean",
            "ransaac-wgmed",
            "lo-ransaac-wgmed",
        ]
        for sigma in (0.5, 2.0, 5.0):
            for n_in in (100, 1000):
                for ratio in (0.0, 0.05, 0.2, 0.5):
                    for iters in (1000, 10000):
                        sid = f"t1/sigma={sigma}/in={n_in}/out={ratio}"
                        scen = make_scenario(n_in, ratio, sigma)
                        for m in methods:
                            cells.append(BenchCell(sid, scen, m, iters))
    elif name == "3":
        methods = [
            "lo-ransaac-wmean",
            "lo-ransaac-wgmed",
            "ransac+m",
            "lo-ransac",
            "oracle",
        ]
        for sigma in (2.0, 5.0):
            for iters in (10000, 20000):
                sid = f"t3/sigma={sigma}/in=1000/out=0.9"
                scen = make_scenario(1000, 0.9, sigma)
                for m in methods:
                    cells.append(BenchCell(sid, scen, m, iters))
    elif name == "adaptive":
        scen = make_scenario(1000, 0.5, 5.0)
        sid = "adaptive/sigma=5/in=1000/out=0.5"
        for m in ("lo-ransaac-wgmed", "lo-ransaac-wmean"):
            cells.append(BenchCell(sid, scen, m, 1000, adaptive=True))
            cells.append(BenchCell(sid, scen, m, 1000, adaptive=False))
        cells.append(BenchCell(sid, scen, "ransac", 1000, adaptive=True))
        cells.append(BenchCell(sid, scen, "ransac+m", 1000, adaptive=True))
    elif name == "p-sweep":
        scen = make_scenario(1000, 0.2, 5.0)
        for iters in (100, 1000, 10000):
            for p in range(0, 11):
                sid = f"p-sweep/p={p}"
                cells.append(
                    BenchCell(sid, scen, "ransaac-wmean", iters, p=float(p))
                )
                cells.append(
                    BenchCell(sid, scen, "lo-ransaac-wgmed", iters, p=float(p))
                )
    else:
        raise ValueError(f"unknown preset {name!r} (periter uses the trace mode)")
    return cells
