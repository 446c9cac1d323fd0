"""Local optimization: refine a fresh best hypothesis with non-minimal
inner samples and a shrinking threshold, recording every intermediate model
and its support for later aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSample, InsufficientData, NoValidHypothesis
from .geometry import (
    Homography,
    MatchSet,
    fit_homography_arrays,
    symmetric_transfer_errors,
)
from .robust import (
    Hypothesis,
    RansacResult,
    RobustConfig,
    TraceEntry,
    _adaptive_bound,
    _is_better,
    _sample_hypothesis,
    derive_rngs,
    draw_minimal_sample,
)


@dataclass(frozen=True)
class LoConfig:
    """Inner-refinement parameters.

    s_is of None resolves to min(14, K // 2) at call time for K input
    inliers. m_delta scales the starting threshold; each repetition then
    shrinks it back to the outer value over ls_iters refit rounds.
    """

    s_is: int | None = None
    m_delta: float = 4.0
    reps: int = 10
    ls_iters: int = 4

    def __post_init__(self):
        if self.s_is is not None and self.s_is < 4:
            raise ValueError("s_is must be at least the minimal sample size (4)")
        if not self.m_delta > 1.0:
            raise ValueError("m_delta must be > 1")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.ls_iters < 1:
            raise ValueError("ls_iters must be >= 1")


@dataclass
class LoOutput:
    """Everything a local-optimization call produced.

    models/weights hold every intermediate fit and its inlier count at the
    threshold in force when it was recorded; a full run records
    reps * (ls_iters + 2) models, minus skipped_models lost to degenerate
    fits. best_model is set only when some refined model strictly exceeded
    the input inlier count.
    """

    max_score: int
    best_model: Homography | None
    models: list[Homography] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
    skipped_models: int = 0


def _record(models, weights, model, e, threshold):
    mask = e <= threshold
    models.append(model)
    weights.append(float(mask.sum()))
    return mask


def local_optimize(
    matches: MatchSet,
    inliers,
    delta_d: float,
    cfg: LoConfig,
    rng: np.random.Generator,
) -> LoOutput:
    """Run the inner-sample refinement on the inliers of a new best model.

    Each repetition draws an s_is-subset of the inliers, fits it, widens the
    threshold to m_delta * delta_d, then alternates refit/re-evaluate while
    shrinking the threshold linearly back to delta_d. Every fit is appended
    to the output together with its support at the threshold in force; a
    degenerate fit aborts the repetition but never the caller.
    """
    inliers = np.asarray(inliers, dtype=np.intp)
    k = inliers.size
    s_is = cfg.s_is if cfg.s_is is not None else min(14, k // 2)
    if s_is < 4 or k < 2 * s_is:
        return LoOutput(0, None)

    delta_hi = cfg.m_delta * delta_d
    step = (delta_hi - delta_d) / cfg.ls_iters
    per_rep = cfg.ls_iters + 2

    out = LoOutput(max_score=k, best_model=None)
    for _ in range(cfg.reps):
        recorded_before = len(out.models)
        try:
            sub = np.sort(inliers[draw_minimal_sample(rng, k, s_is)])
            model = fit_homography_arrays(matches.src[sub], matches.dst[sub])
            e = symmetric_transfer_errors(model, matches)
            mask = _record(out.models, out.weights, model, e, delta_hi)
            model = fit_homography_arrays(matches.src[mask], matches.dst[mask])
            for j in range(1, cfg.ls_iters + 1):
                e = symmetric_transfer_errors(model, matches)
                mask = _record(out.models, out.weights, model, e, delta_hi - j * step)
                model = fit_homography_arrays(matches.src[mask], matches.dst[mask])
            e = symmetric_transfer_errors(model, matches)
            mask = _record(out.models, out.weights, model, e, delta_d)
        except (DegenerateSample, InsufficientData):
            out.skipped_models += per_rep - (len(out.models) - recorded_before)
            continue
        score = int(mask.sum())
        # A refined model matching the incumbent count still captures
        # best_model (an all-inlier input can never be strictly exceeded).
        if score > out.max_score or (score == out.max_score and out.best_model is None):
            out.max_score = score
            out.best_model = model
    return out


@dataclass
class LoRansacResult:
    model: Homography
    n_inliers: int
    ransac: RansacResult
    iterations: int


def lo_ransac_estimate(
    matches: MatchSet, cfg: RobustConfig, lo_cfg: LoConfig | None = None
) -> LoRansacResult:
    """RANSAC with local optimization triggered on every new best hypothesis.

    The outer best-so-far bookkeeping (which drives triggering and adaptive
    termination) is plain RANSAC's; the locally optimized models are tracked
    separately and the final answer is the highest-support model seen
    overall.
    """
    if lo_cfg is None:
        lo_cfg = LoConfig()
    n = len(matches)
    if n < cfg.mss:
        raise InsufficientData(f"need at least {cfg.mss} matches, got {n}")
    sample_rng, lo_rng = derive_rngs(cfg.seed)
    best: Hypothesis | None = None
    trace: list[TraceEntry] = []
    lo_best: Homography | None = None
    lo_best_score = -1
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
            lo_out = local_optimize(
                matches, np.flatnonzero(hyp.inlier_mask), cfg.delta_d, lo_cfg, lo_rng
            )
            if lo_out.best_model is not None and lo_out.max_score > lo_best_score:
                lo_best = lo_out.best_model
                lo_best_score = lo_out.max_score
            if cfg.adaptive:
                bound = _adaptive_bound(cfg, hyp.n_inliers / n)
    if best is None:
        raise NoValidHypothesis("every sample was degenerate")

    result = RansacResult(best, trace, it)
    if lo_best is not None and lo_best_score > best.n_inliers:
        model = lo_best
        n_inl = lo_best_score
    else:
        # LO never improved on the outer support; fall back to a refit of
        # the outer best (identical support, refined residuals).
        try:
            model = fit_homography_arrays(
                matches.src[best.inlier_mask], matches.dst[best.inlier_mask]
            )
        except (DegenerateSample, InsufficientData):
            model = best.model
        n_inl = best.n_inliers
    return LoRansacResult(model, n_inl, result, it)
