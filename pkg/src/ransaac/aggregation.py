"""Hypothesis aggregation: predefined source-point bases, per-hypothesis
projection clouds, weighted-mean / weighted-geometric-median aggregation,
and the aggregated-consensus estimators."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSample,
    EmptyCloud,
    InsufficientData,
    NoValidHypothesis,
    UnknownModelKind,
)
from .geometry import (
    HORIZON_RTOL,
    Homography,
    ImageExtents,
    MatchSet,
    fit_homography_arrays,
)
from .local_opt import LoConfig, local_optimize
from .robust import (
    Hypothesis,
    RansacResult,
    RobustConfig,
    ScoringVariant,
    TraceEntry,
    _adaptive_bound,
    _is_better,
    _sample_hypothesis,
    derive_rngs,
)


class ModelKind(enum.Enum):
    HOMOGRAPHY = "homography"
    HOMOGRAPHY_DISTORTION = "homography+distortion"


class AggMethod(enum.Enum):
    WMEAN = "wmean"
    WGMED = "wgmed"


@dataclass(frozen=True)
class AggConfig:
    """Aggregation parameters.

    p of None resolves to the method default: 5 for the weighted mean
    (higher exponents discriminate hypotheses harder, which the mean needs),
    2 for the weighted geometric median (insensitive to p under local
    optimization). sanity_box_factor bounds accepted projections to the
    basis bounding box grown by that many diagonals; hypotheses projecting
    outside are excluded from the cloud.
    """

    method: AggMethod
    p: float | None = None
    weiszfeld_tol: float = 1e-9
    weiszfeld_max_iters: int = 100
    sanity_box_factor: float = 100.0

    def __post_init__(self):
        if self.p is None:
            object.__setattr__(
                self, "p", 5.0 if self.method is AggMethod.WMEAN else 2.0
            )
        if self.p < 0:
            raise ValueError("p must be >= 0")
        if not self.weiszfeld_tol > 0:
            raise ValueError("weiszfeld_tol must be positive")
        if self.weiszfeld_max_iters < 1:
            raise ValueError("weiszfeld_max_iters must be >= 1")
        if not self.sanity_box_factor > 0:
            raise ValueError("sanity_box_factor must be positive")


def _any_three_collinear(pts: np.ndarray) -> bool:
    n = pts.shape[0]
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                a, b, c = pts[i], pts[j], pts[k]
                area2 = abs(
                    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                )
                if area2 <= 1e-9:
                    return True
    return False


class SourceBasis:
    """Predefined source points whose projections are aggregated.

    A four-point basis must uniquely determine a homography, so no three
    points may be collinear; the five-point layout used by distortion-aware
    models intentionally places a midpoint on the top border and is exempt
    from that check.
    """

    __slots__ = ("points",)

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
            raise ValueError(f"expected at least 4 points of shape (K, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("basis points must be finite")
        for i in range(pts.shape[0] - 1):
            if np.any(np.all(np.abs(pts[i + 1 :] - pts[i]) < 1e-9, axis=1)):
                raise ValueError("basis points must be pairwise distinct")
        if pts.shape[0] == 4 and _any_three_collinear(pts):
            raise ValueError("no three basis points may be collinear")
        pts.flags.writeable = False
        self.points = pts

    def __len__(self):
        return self.points.shape[0]


def predefined_source_points(
    extents: ImageExtents, model_kind: ModelKind | str = ModelKind.HOMOGRAPHY
) -> SourceBasis:
    """Canonical basis for an image: the four corners, plus the top-border
    midpoint for the homography+distortion layout."""
    if isinstance(model_kind, str):
        try:
            model_kind = ModelKind(model_kind)
        except ValueError:
            raise UnknownModelKind(f"unknown model kind {model_kind!r}") from None
    w, h = extents.width, extents.height
    corners = [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)]
    if model_kind is ModelKind.HOMOGRAPHY:
        return SourceBasis(corners)
    if model_kind is ModelKind.HOMOGRAPHY_DISTORTION:
        return SourceBasis(corners + [(w / 2.0, 0.0)])
    raise UnknownModelKind(f"unknown model kind {model_kind!r}")


def _powered_weights(weights, p: float) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise EmptyCloud("no estimates to aggregate")
    # Normalizing by the maximum keeps w**p in range for large p and makes
    # weight-scale invariance exact.
    return (w / w.max()) ** p


def weighted_mean(points, weights, p: float = 1.0) -> np.ndarray:
    """Componentwise average of ``points`` with weights raised to ``p``."""
    pts = np.asarray(points, dtype=float)
    wp = _powered_weights(weights, p)
    return (wp @ pts) / wp.sum()


def weiszfeld_objective(y, points, weights, p: float = 1.0) -> float:
    """Sum of powered-weighted Euclidean distances from ``y`` to points."""
    pts = np.asarray(points, dtype=float)
    wp = _powered_weights(weights, p)
    return float(wp @ np.linalg.norm(pts - np.asarray(y, dtype=float), axis=1))


def weighted_geometric_median(
    points,
    weights,
    p: float = 1.0,
    tol: float = 1e-9,
    max_iters: int = 100,
    objective_trace: list | None = None,
) -> np.ndarray:
    """Minimizer of the powered-weighted sum of distances, by Weiszfeld
    fixed-point iteration started at the weighted mean.

    Distances below 1e-12 are clamped so an iterate sitting on a data point
    stays finite. When objective_trace is a list, the objective value is
    appended at the start and after every update.
    """
    pts = np.asarray(points, dtype=float)
    wp = _powered_weights(weights, p)
    y = (wp @ pts) / wp.sum()
    if objective_trace is not None:
        objective_trace.append(float(wp @ np.linalg.norm(pts - y, axis=1)))
    for _ in range(max_iters):
        d = np.linalg.norm(pts - y, axis=1)
        np.maximum(d, 1e-12, out=d)
        c = wp / d
        y_new = (c @ pts) / c.sum()
        if objective_trace is not None:
            objective_trace.append(float(wp @ np.linalg.norm(pts - y_new, axis=1)))
        shift = float(np.hypot(y_new[0] - y[0], y_new[1] - y[1]))
        y = y_new
        if shift < tol:
            break
    return y


def aggregate(points, weights, agg: AggConfig) -> np.ndarray:
    if agg.method is AggMethod.WMEAN:
        return weighted_mean(points, weights, agg.p)
    return weighted_geometric_median(
        points, weights, agg.p, agg.weiszfeld_tol, agg.weiszfeld_max_iters
    )


class EstimateCloud:
    """Per-source-point destination estimates sharing one weight vector.

    Entry k holds the projections of all basis points under accepted
    hypothesis k together with its (strictly positive) weight. Backed by
    growable arrays so appends are cheap inside the sampling loop.
    """

    __slots__ = ("_pts", "_w", "_n")

    def __init__(self, n_basis: int, capacity: int = 64):
        self._pts = np.empty((capacity, n_basis, 2))
        self._w = np.empty(capacity)
        self._n = 0

    def __len__(self):
        return self._n

    def append(self, pts: np.ndarray, weight: float) -> None:
        if weight <= 0:
            raise ValueError("cloud weights must be strictly positive")
        if self._n == self._pts.shape[0]:
            self._pts = np.concatenate([self._pts, np.empty_like(self._pts)])
            self._w = np.concatenate([self._w, np.empty_like(self._w)])
        self._pts[self._n] = pts
        self._w[self._n] = weight
        self._n += 1

    @property
    def points(self) -> np.ndarray:
        """(K, B, 2) view of the projections of accepted hypotheses."""
        return self._pts[: self._n]

    @property
    def weights(self) -> np.ndarray:
        return self._w[: self._n]

    def point_estimates(self, j: int) -> np.ndarray:
        """(K, 2) estimates of basis point ``j``."""
        return self._pts[: self._n, j]

    def write_csv(self, fileobj) -> None:
        fileobj.write("basis_index,x,y,weight\n")
        for k in range(self._n):
            w = self._w[k]
            for j in range(self._pts.shape[1]):
                x, y = self._pts[k, j]
                fileobj.write(f"{j},{x:.12g},{y:.12g},{w:.12g}\n")


class _BasisProjector:
    """Projects a basis through hypotheses, rejecting horizon-degenerate or
    wildly out-of-range results."""

    __slots__ = ("basis_h", "norms", "lo", "hi")

    def __init__(self, basis: SourceBasis, sanity_box_factor: float):
        pts = basis.points
        self.basis_h = np.vstack([pts.T, np.ones(len(basis))])
        self.norms = np.linalg.norm(self.basis_h, axis=0)
        span = pts.max(axis=0) - pts.min(axis=0)
        margin = sanity_box_factor * float(np.hypot(span[0], span[1]))
        self.lo = pts.min(axis=0) - margin
        self.hi = pts.max(axis=0) + margin

    def project(self, model: Homography) -> np.ndarray | None:
        q = model.m @ self.basis_h
        w = q[2]
        if np.any(np.abs(w) <= HORIZON_RTOL * self.norms):
            return None
        pts = (q[:2] / w).T
        if np.any(pts < self.lo) or np.any(pts > self.hi):
            return None
        return pts

    def project_batch(self, mats: np.ndarray, weights: np.ndarray) -> EstimateCloud:
        """Project a (K, 3, 3) stack through the basis in one pass, dropping
        horizon-degenerate and out-of-box entries. Results are identical to
        per-hypothesis project(); batching keeps the sampling loop's
        per-iteration overhead negligible."""
        cloud = EstimateCloud(self.basis_h.shape[1], capacity=max(8, len(mats)))
        if len(mats) == 0:
            return cloud
        q = mats @ self.basis_h  # (K, 3, B)
        w = q[:, 2, :]
        ok = np.all(np.abs(w) > HORIZON_RTOL * self.norms, axis=1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            pts = np.transpose(q[:, :2, :] / w[:, None, :], (0, 2, 1))  # (K, B, 2)
        ok &= np.isfinite(pts).all(axis=(1, 2))
        ok &= np.all((pts >= self.lo) & (pts <= self.hi), axis=(1, 2))
        for k in np.flatnonzero(ok):
            cloud.append(pts[k], float(weights[k]))
        return cloud


@dataclass
class CloudCollection:
    """Raw output of the sampling loop, before aggregation."""

    cloud: EstimateCloud
    ransac: RansacResult
    iterations: int


@dataclass
class RansaacResult:
    """Aggregated estimate plus the underlying sampling-run artifacts.

    aggregated is False when the cloud was empty and the answer fell back to
    the plain best hypothesis.
    """

    model: Homography
    aggregated: bool
    cloud: EstimateCloud
    ransac: RansacResult
    iterations: int


def collect_cloud(
    matches: MatchSet,
    cfg: RobustConfig,
    basis: SourceBasis,
    lo_cfg: LoConfig | None = None,
    sanity_box_factor: float = 100.0,
) -> CloudCollection:
    """Run the sampling loop and gather the estimate cloud.

    Without lo_cfg, every hypothesis whose inlier count strictly exceeds the
    minimal sample size contributes its basis projections weighted by that
    count. With lo_cfg, only the models emitted by the local-optimization
    calls (triggered on each new best) are gathered, weighted by their
    recorded support.
    """
    n = len(matches)
    if n < cfg.mss:
        raise InsufficientData(f"need at least {cfg.mss} matches, got {n}")
    sample_rng, lo_rng = derive_rngs(cfg.seed)
    binary = cfg.scoring is ScoringVariant.RANSAC_BINARY
    # Accepted models are stacked and projected in one batch after the
    # loop, keeping the per-iteration cost within a few appends.
    accepted_m: list[np.ndarray] = []
    accepted_w: list[float] = []
    best: Hypothesis | None = None
    trace: list[TraceEntry] = []
    bound = cfg.iterations
    it = 0
    while it < bound:
        it += 1
        hyp = _sample_hypothesis(sample_rng, matches, cfg)
        if hyp is None:
            continue
        n_inl = int(hyp.score) if binary else hyp.n_inliers
        if best is None or _is_better(cfg.scoring, hyp.score, best.score):
            best = hyp
            trace.append(TraceEntry(it, hyp.score, hyp.model))
            if lo_cfg is not None:
                lo_out = local_optimize(
                    matches,
                    np.flatnonzero(hyp.inlier_mask),
                    cfg.delta_d,
                    lo_cfg,
                    lo_rng,
                )
                for model, weight in zip(lo_out.models, lo_out.weights):
                    if weight > 0:
                        accepted_m.append(model.m)
                        accepted_w.append(weight)
            if cfg.adaptive:
                bound = _adaptive_bound(cfg, n_inl / n)
        if lo_cfg is None and n_inl > cfg.mss:
            accepted_m.append(hyp.model.m)
            accepted_w.append(float(n_inl))
    if best is None:
        raise NoValidHypothesis("every sample was degenerate")
    projector = _BasisProjector(basis, sanity_box_factor)
    cloud = projector.project_batch(np.array(accepted_m), np.array(accepted_w))
    return CloudCollection(cloud, RansacResult(best, trace, it), it)


def aggregate_cloud(
    cloud: EstimateCloud, agg: AggConfig, basis: SourceBasis
) -> Homography | None:
    """Aggregate each basis point's estimates and fit the homography mapping
    the basis onto the aggregates. None when the cloud is empty or the
    aggregated correspondence is degenerate."""
    if len(cloud) == 0:
        return None
    dst = np.array(
        [aggregate(cloud.point_estimates(j), cloud.weights, agg) for j in range(len(basis))]
    )
    try:
        return fit_homography_arrays(basis.points, dst)
    except (DegenerateSample, InsufficientData):
        return None


def _finish(collection: CloudCollection, agg: AggConfig, basis: SourceBasis) -> RansaacResult:
    model = aggregate_cloud(collection.cloud, agg, basis)
    if model is None:
        return RansaacResult(
            collection.ransac.best.model,
            False,
            collection.cloud,
            collection.ransac,
            collection.iterations,
        )
    return RansaacResult(model, True, collection.cloud, collection.ransac, collection.iterations)


def ransaac_estimate(
    matches: MatchSet, cfg: RobustConfig, agg: AggConfig, basis: SourceBasis
) -> RansaacResult:
    """Aggregated-consensus estimate: project the basis through every
    acceptable hypothesis, aggregate per basis point, and fit the result.
    Falls back to the plain best hypothesis when no hypothesis qualified."""
    collection = collect_cloud(
        matches, cfg, basis, lo_cfg=None, sanity_box_factor=agg.sanity_box_factor
    )
    return _finish(collection, agg, basis)


def lo_ransaac_estimate(
    matches: MatchSet,
    cfg: RobustConfig,
    lo_cfg: LoConfig | None,
    agg: AggConfig,
    basis: SourceBasis,
) -> RansaacResult:
    """Aggregated-consensus estimate gathering only locally optimized
    models, which cluster much closer to the truth than raw minimal-sample
    hypotheses."""
    collection = collect_cloud(
        matches,
        cfg,
        basis,
        lo_cfg=lo_cfg if lo_cfg is not None else LoConfig(),
        sanity_box_factor=agg.sanity_box_factor,
    )
    return _finish(collection, agg, basis)
