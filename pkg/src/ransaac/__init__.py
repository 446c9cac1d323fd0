"""Robust 2D homography estimation with hypothesis aggregation.

Classic random-sample consensus and its scoring variants, local
optimization, aggregated-consensus estimators built on weighted means and
geometric medians of per-point projection clouds, and a synthetic
ground-truth benchmark harness.
"""

from .aggregation import (
    AggConfig,
    AggMethod,
    EstimateCloud,
    ModelKind,
    RansaacResult,
    SourceBasis,
    aggregate_cloud,
    lo_ransaac_estimate,
    predefined_source_points,
    ransaac_estimate,
    weighted_geometric_median,
    weighted_mean,
)
from .benchmark import (
    BenchCell,
    ExperimentReport,
    Scenario,
    TrialReport,
    generate_scenario,
    mean_inlier_error,
    preset_cells,
    random_homography,
    run_experiment,
    run_method,
    trace_iteration_errors,
)
from .errors import (
    DegenerateSample,
    EmptyCloud,
    GenerationFailed,
    HorizonDegenerate,
    InsufficientData,
    NoValidHypothesis,
    ParseError,
    RansaacError,
    SingularModel,
    UnknownModelKind,
)
from .geometry import (
    Homography,
    ImageExtents,
    MatchSet,
    direct_transfer_error,
    direct_transfer_errors,
    dlt_fit,
    invert,
    project,
    project_points,
    symmetric_transfer_error,
    symmetric_transfer_errors,
)
from .local_opt import LoConfig, LoOutput, lo_ransac_estimate, local_optimize
from .robust import (
    Hypothesis,
    RansacResult,
    RobustConfig,
    ScoringVariant,
    TraceEntry,
    chi2_threshold,
    draw_minimal_sample,
    ransac_estimate,
    refit_on_inliers,
    required_iterations,
    score_hypothesis,
)

__version__ = "0.1.0"
