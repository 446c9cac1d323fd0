"""Minimal-sample hypothesis generation, consensus scoring, threshold
selection, adaptive termination, and the classic robust estimators."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .errors import DegenerateSample, InsufficientData, NoValidHypothesis
from .geometry import (
    Homography,
    MatchSet,
    dlt_fit,
    fit_homography_arrays,
    symmetric_transfer_errors,
)


class ScoringVariant(enum.Enum):
    """How a hypothesis is scored against the dataset."""

    RANSAC_BINARY = "ransac-binary"  # inlier count, higher is better
    MSAC = "msac"                    # truncated quadratic sum, lower is better
    LMEDS = "lmeds"                  # lower median residual, lower is better

    @property
    def higher_is_better(self) -> bool:
        return self is ScoringVariant.RANSAC_BINARY


@dataclass(frozen=True)
class RobustConfig:
    """Parameters of the sampling loop.

    delta_d is the squared-distance inlier threshold. When adaptive is set,
    the loop re-evaluates the iteration bound every time a better hypothesis
    is found and stops once the bound is reached; adaptive_multiplier scales
    that bound (practical budgets are often a small multiple of the
    theoretical one).
    """

    iterations: int
    delta_d: float
    eta0: float = 0.99
    adaptive: bool = False
    mss: int = 4
    seed: int = 0
    scoring: ScoringVariant = ScoringVariant.RANSAC_BINARY
    adaptive_multiplier: float = 1.0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.delta_d > 0:
            raise ValueError("delta_d must be positive")
        if not 0.0 < self.eta0 < 1.0:
            raise ValueError("eta0 must be in (0, 1)")
        if self.mss < 1:
            raise ValueError("mss must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if not self.adaptive_multiplier > 0:
            raise ValueError("adaptive_multiplier must be positive")


@dataclass
class Hypothesis:
    """A candidate model with its consensus score and inlier mask."""

    model: Homography
    score: float
    inlier_mask: np.ndarray

    @property
    def n_inliers(self) -> int:
        return int(self.inlier_mask.sum())


@dataclass(frozen=True)
class TraceEntry:
    """Best-so-far update: at ``iteration`` the running best became
    ``model`` with ``score``."""

    iteration: int
    score: float
    model: Homography


@dataclass
class RansacResult:
    best: Hypothesis
    trace: list[TraceEntry] = field(default_factory=list)
    iterations: int = 0


def chi2_threshold(sigma: float, alpha: float, dof: int) -> float:
    """Squared-distance threshold capturing a fraction ``alpha`` of inliers
    whose residual follows a chi-square law with ``dof`` degrees of freedom
    under coordinate noise of standard deviation ``sigma``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if dof not in (2, 4):
        raise ValueError("dof must be 2 (direct) or 4 (symmetric)")
    return float(chi2.ppf(alpha, dof)) * sigma * sigma


def required_iterations(eta0: float, epsilon: float, mss: int, cap: int) -> int:
    """Number of uniform samples guaranteeing, with confidence ``eta0``, at
    least one outlier-free sample at inlier rate ``epsilon``; clamped to
    [1, cap]."""
    if not 0.0 < eta0 < 1.0:
        raise ValueError("eta0 must be in (0, 1)")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if epsilon >= 1.0:
        return 1
    if epsilon <= 0.0:
        return cap
    denom = math.log1p(-(epsilon**mss))
    if denom == 0.0:
        return cap
    k = math.log1p(-eta0) / denom
    if not math.isfinite(k) or k >= cap:
        return cap
    return max(1, math.ceil(k))


def derive_rngs(seed: int, n: int = 2) -> list[np.random.Generator]:
    """Split ``seed`` into ``n`` independent deterministic PCG64 streams.

    Estimators draw minimal samples from stream 0 and local-optimization
    randomness from stream 1, so the outer sample sequence is identical
    across estimator variants sharing a seed.
    """
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(n)]


def draw_minimal_sample(
    rng: np.random.Generator, dataset_size: int, mss: int
) -> np.ndarray:
    """Draw ``mss`` distinct indices uniformly without replacement.

    Uses rejection sampling on single integer draws (a permutation fallback
    when mss exceeds half the dataset), so the consumed generator stream is
    a fixed documented function of (dataset_size, mss).
    """
    if dataset_size < mss:
        raise InsufficientData(
            f"need at least {mss} matches, got {dataset_size}"
        )
    if 2 * mss > dataset_size:
        return rng.permutation(dataset_size)[:mss]
    out = np.empty(mss, dtype=np.intp)
    count = 0
    while count < mss:
        cand = int(rng.integers(0, dataset_size))
        if cand not in out[:count]:
            out[count] = cand
            count += 1
    return out


def score_hypothesis(h: Homography, matches: MatchSet, cfg: RobustConfig) -> Hypothesis:
    """Score a model against the dataset under the configured cost.

    The residual is the squared symmetric transfer error; matches whose
    residual is undefined (horizon) carry infinite error and therefore count
    as outliers under every variant.
    """
    e = symmetric_transfer_errors(h, matches)
    mask = e <= cfg.delta_d
    if cfg.scoring is ScoringVariant.RANSAC_BINARY:
        score = float(mask.sum())
    elif cfg.scoring is ScoringVariant.MSAC:
        score = float(np.minimum(e, cfg.delta_d).sum())
    else:  # LMEDS: lower median, delta_d only defines the reported mask
        k = (e.size - 1) // 2
        score = float(np.partition(e, k)[k])
    return Hypothesis(h, score, mask)


def _is_better(scoring: ScoringVariant, score: float, incumbent: float) -> bool:
    if scoring.higher_is_better:
        return score > incumbent
    return score < incumbent


def _sample_hypothesis(
    rng: np.random.Generator, matches: MatchSet, cfg: RobustConfig
) -> Hypothesis | None:
    """One iteration's sample/fit/score step; None on a degenerate sample.

    Indices are sorted before fitting so the hypothesis depends only on the
    chosen subset, not on the draw order.
    """
    idx = np.sort(draw_minimal_sample(rng, len(matches), cfg.mss))
    try:
        model = fit_homography_arrays(matches.src[idx], matches.dst[idx])
    except DegenerateSample:
        return None
    return score_hypothesis(model, matches, cfg)


def _adaptive_bound(cfg: RobustConfig, inlier_ratio: float) -> int:
    k = required_iterations(cfg.eta0, inlier_ratio, cfg.mss, cfg.iterations)
    if cfg.adaptive_multiplier != 1.0:
        k = min(cfg.iterations, math.ceil(k * cfg.adaptive_multiplier))
    return max(1, k)


def ransac_estimate(matches: MatchSet, cfg: RobustConfig) -> RansacResult:
    """Plain RANSAC: iterate sample/fit/score, retain the best hypothesis.

    Degenerate samples are skipped but count against the iteration budget.
    Returns the best hypothesis, the trace of best-so-far updates, and the
    number of iterations actually executed (relevant under adaptive
    termination).
    """
    n = len(matches)
    if n < cfg.mss:
        raise InsufficientData(f"need at least {cfg.mss} matches, got {n}")
    sample_rng, _ = derive_rngs(cfg.seed)
    best: Hypothesis | None = None
    trace: list[TraceEntry] = []
    bound = cfg.iterations
    it = 0
    while it < bound:
        it += 1
        hyp = _sample_hypothesis(sample_rng, matches, cfg)
        if hyp is None:
            continue
        if best is None or _is_better(cfg.scoring, hyp.score, best.score):
            best = hyp
            trace.append(TraceEntry(it, hyp.score, hyp.model))
            if cfg.adaptive:
                bound = _adaptive_bound(cfg, hyp.n_inliers / n)
    if best is None:
        raise NoValidHypothesis("every sample was degenerate")
    return RansacResult(best, trace, it)


def refit_on_inliers(matches: MatchSet, hyp: Hypothesis) -> Homography:
    """Least-squares refit restricted to the hypothesis inliers (the
    last-step minimization of RANSAC+M)."""
    idx = np.flatnonzero(hyp.inlier_mask)
    if idx.size < 4:
        raise InsufficientData(
            f"need at least 4 inliers to refit, got {idx.size}"
        )
    return dlt_fit(matches.subset(idx))


def export_trace(trace, fileobj, error_fn=None) -> None:
    """Write best-so-far updates as CSV rows
    ``iteration,score,error_if_ground_truth_known``.

    error_fn maps a model to its ground-truth error; the column is left
    empty when no ground truth is available.
    """
    fileobj.write("iteration,score,error_if_ground_truth_known\n")
    for entry in trace:
        err = "" if error_fn is None else f"{error_fn(entry.model):.12g}"
        fileobj.write(f"{entry.iteration},{entry.score:.12g},{err}\n")
