"""Tests for scenario generation, the error metric, and the experiment runner."""

import io

import numpy as np
import pytest

from _util import compose_homography, random_test_homography
from ransaac.benchmark import (
    REPORT_HEADER,
    TRACE_HEADER,
    BenchCell,
    Scenario,
    TrialReport,
    default_checkpoints,
    generate_scenario,
    make_scenario,
    mean_inlier_error,
    preset_cells,
    random_homography,
    run_experiment,
    trace_iteration_errors,
    write_report_csv,
    write_trace_csv,
)
from ransaac.geometry import (
    Homography,
    ImageExtents,
    MatchSet,
    project_points,
    symmetric_transfer_errors,
)


def _scenario(n=1000, ratio=0.5, sigma=5.0, seed=0):
    return make_scenario(n, ratio, sigma, seed=seed)


# ---------------------------------------------------------------------------
# Scenario generation
# ---------------------------------------------------------------------------


def test_outlier_counts_match_ratio_formula():
    assert _scenario(1000, 0.5).n_outliers == 1000
    assert _scenario(1000, 0.9).n_outliers == 9000
    assert _scenario(1000, 0.2).n_outliers == 250
    assert _scenario(1000, 0.75).n_outliers == 3000
    assert _scenario(1000, 0.0).n_outliers == 0


def test_scenario_validation():
    with pytest.raises(ValueError):
        _scenario(0, 0.5)
    with pytest.raises(ValueError):
        _scenario(10, 1.0)
    with pytest.raises(ValueError):
        _scenario(10, 0.5, sigma=-1.0)


def test_noiseless_scenario_is_exact():
    scen = _scenario(200, 0.0, sigma=0.0, seed=3)
    matches, gt_inliers, idx = generate_scenario(scen)
    assert len(matches) == 200
    assert idx.tolist() == list(range(200))
    errs = symmetric_transfer_errors(scen.gt, matches)
    assert errs.max() < 1e-18
    np.testing.assert_array_equal(gt_inliers.src, matches.src)


def test_scenario_sizes_and_layout():
    scen = _scenario(100, 0.5, sigma=2.0, seed=4)
    matches, gt_inliers, idx = generate_scenario(scen)
    assert len(matches) == 200
    assert len(gt_inliers) == 100
    assert idx.tolist() == list(range(100))


def test_scenario_determinism_by_seed():
    scen = _scenario(50, 0.2, sigma=1.0, seed=11)
    a, _, _ = generate_scenario(scen)
    b, _, _ = generate_scenario(scen)
    assert np.array_equal(a.src, b.src) and np.array_equal(a.dst, b.dst)
    c, _, _ = generate_scenario(_scenario(50, 0.2, sigma=1.0, seed=12))
    assert not np.array_equal(a.src, c.src)


def test_noise_standard_deviation():
    sigma = 3.0
    scen = _scenario(25000, 0.0, sigma=sigma, seed=5)
    matches, gt_inliers, _ = generate_scenario(scen)
    deltas = np.concatenate(
        [
            (matches.src - gt_inliers.src).ravel(),
            (matches.dst - gt_inliers.dst).ravel(),
        ]
    )
    assert deltas.size >= 1e5
    assert abs(deltas.std() - sigma) < 0.02 * sigma


# ---------------------------------------------------------------------------
# Error metric
# ---------------------------------------------------------------------------


def test_mean_inlier_error_zero_at_ground_truth():
    scen = _scenario(100, 0.3, sigma=2.0, seed=6)
    _, gt_inliers, _ = generate_scenario(scen)
    assert mean_inlier_error(scen.gt, gt_inliers) < 1e-9


def test_mean_inlier_error_unit_translation():
    rng = np.random.default_rng(7)
    src = rng.uniform(0, 100, size=(50, 2))
    gt_inliers = MatchSet(src, src)  # identity ground truth
    phi = compose_homography(tx=1.0)
    assert mean_inlier_error(phi, gt_inliers) == pytest.approx(1.0, abs=1e-9)


def test_mean_inlier_error_matches_direct_recomputation():
    rng = np.random.default_rng(8)
    for _ in range(100):
        gt = random_test_homography(rng)
        src = rng.uniform(0, 500, size=(20, 2))
        gt_inliers = MatchSet(src, project_points(gt, src))
        phi = random_test_homography(rng)
        fwd = project_points(phi, gt_inliers.src)
        bwd = project_points(phi.inverse(), gt_inliers.dst)
        expected = np.mean(
            (
                np.linalg.norm(fwd - gt_inliers.dst, axis=1)
                + np.linalg.norm(bwd - gt_inliers.src, axis=1)
            )
            / 2.0
        )
        assert mean_inlier_error(phi, gt_inliers) == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# Random homographies
# ---------------------------------------------------------------------------


def test_random_homography_zero_difficulty_is_identity():
    h = random_homography(ImageExtents(640, 480), np.random.default_rng(9), 0.0)
    np.testing.assert_allclose(h.m, Homography.identity().m, atol=1e-12)


def test_random_homography_corners_project_finite():
    # All corners sit strictly on one side of the horizon: their
    # w-components share a sign (the canonical representation may negate the
    # whole matrix, so only the relative sign is meaningful) and projection
    # succeeds.
    ext = ImageExtents(640, 480)
    rng = np.random.default_rng(10)
    corners = np.array([[0, 0], [640, 0], [0, 480], [640, 480]], dtype=float)
    for _ in range(200):
        h = random_homography(ext, rng)
        w = h.m[2, 0] * corners[:, 0] + h.m[2, 1] * corners[:, 1] + h.m[2, 2]
        assert (w > 0).all() or (w < 0).all()
        project_points(h, corners)


def test_random_homography_round_trip():
    ext = ImageExtents(640, 480)
    rng = np.random.default_rng(11)
    for _ in range(200):
        h = random_homography(ext, rng)
        p = rng.uniform(0, (640, 480), size=2)
        q = project_points(h.inverse(), project_points(h, p[None, :]))
        np.testing.assert_allclose(q[0], p, atol=1e-9)


# ---------------------------------------------------------------------------
# Experiment runner
# ---------------------------------------------------------------------------


def _small_cells(methods=("ransac",), iterations=60, n=60, ratio=0.3, sigma=2.0):
    scen = make_scenario(n, ratio, sigma)
    return [BenchCell("test", scen, m, iterations) for m in methods]


def test_single_trial_report_matches_trial():
    reports = run_experiment(_small_cells(), trials=1, master_seed=5)
    assert len(reports) == 1
    rep = reports[0]
    assert len(rep.trials) == 1
    assert rep.mean_error == rep.trials[0].error
    assert rep.std_error == 0.0
    assert rep.failures == 0


def test_report_csv_determinism():
    cells = _small_cells(methods=("ransac", "ransac+m"))
    outs = []
    for _ in range(2):
        reports = run_experiment(cells, trials=2, master_seed=9)
        buf = io.StringIO()
        write_report_csv(reports, buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]
    assert outs[0].startswith(REPORT_HEADER + "\n")
    # Runtime column stays empty by default.
    first_row = outs[0].split("\n")[1].split(",")
    assert first_row[-2] == ""


def test_worker_count_does_not_change_results():
    cells = _small_cells(methods=("ransac", "lo-ransaac-wgmed"), iterations=40)
    seq = run_experiment(cells, trials=2, master_seed=3, workers=1)
    par = run_experiment(cells, trials=2, master_seed=3, workers=2)
    for a, b in zip(seq, par):
        assert [t.error for t in a.trials] == [t.error for t in b.trials]


def test_cache_sharing_does_not_change_results():
    # Aggregation variants run together (shared sampling) must match the
    # same methods run in isolation.
    together = run_experiment(
        _small_cells(methods=("lo-ransaac-wmean", "lo-ransaac-wgmed"), iterations=40),
        trials=2,
        master_seed=4,
    )
    alone = [
        run_experiment(
            _small_cells(methods=(m,), iterations=40), trials=2, master_seed=4
        )[0]
        for m in ("lo-ransaac-wmean", "lo-ransaac-wgmed")
    ]
    for a, b in zip(together, alone):
        assert [t.error for t in a.trials] == [t.error for t in b.trials]


def test_report_aggregates_recomputable():
    reports = run_experiment(_small_cells(), trials=4, master_seed=6)
    rep = reports[0]
    errs = np.array([t.error for t in rep.trials])
    assert rep.mean_error == pytest.approx(errs.mean(), abs=1e-12)
    assert rep.std_error == pytest.approx(errs.std(), abs=1e-12)


def test_failed_trials_reported_separately():
    cell = _small_cells()[0]
    from ransaac.benchmark import ExperimentReport

    rep = ExperimentReport(cell)
    rep.trials.append(TrialReport("ransac", 1.0, 10, 0.0))
    rep.trials.append(TrialReport("ransac", float("inf"), 10, 0.0))
    assert rep.failures == 1
    assert rep.mean_error == pytest.approx(1.0)


def test_oracle_method_uses_true_inliers():
    reports = run_experiment(_small_cells(methods=("oracle",)), trials=2, master_seed=8)
    # With sigma=2 on 60 inliers the oracle fit sits well under a pixel.
    assert reports[0].mean_error < 1.0


# ---------------------------------------------------------------------------
# Tracing
# ---------------------------------------------------------------------------


def test_default_checkpoints_structure():
    cps = default_checkpoints(2000, dense_until=500, sparse_every=50)
    assert cps[0] == 1 and cps[499] == 500
    assert cps[-1] == 2000
    assert np.all(np.diff(cps) > 0)
    assert default_checkpoints(100).tolist() == list(range(1, 101))


def test_trace_iteration_errors_basic():
    scen = make_scenario(60, 0.3, 2.0)
    cps, curves = trace_iteration_errors(scen, 80, trials=3, master_seed=2)
    assert set(curves) == {"ransac", "ransaac"}
    assert len(curves["ransac"]) == len(cps)
    # After a few iterations both curves are populated and finite.
    assert np.isfinite(curves["ransac"][10:]).all()
    assert np.isfinite(curves["ransaac"][10:]).all()
    cps2, curves2 = trace_iteration_errors(scen, 80, trials=3, master_seed=2)
    np.testing.assert_array_equal(curves["ransaac"], curves2["ransaac"])


def test_trace_csv_format():
    buf = io.StringIO()
    write_trace_csv(
        np.array([1, 2]),
        {"ransac": np.array([1.5, 1.25]), "ransaac-wmean": np.array([2.0, 0.5])},
        buf,
    )
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == TRACE_HEADER
    assert lines[1] == "1,ransac,1.5"
    assert lines[2] == "1,ransaac-wmean,2"
    assert len(lines) == 5


# ---------------------------------------------------------------------------
# Presets and registry
# ---------------------------------------------------------------------------


def test_bench_cell_rejects_unknown_method():
    with pytest.raises(ValueError):
        BenchCell("x", _scenario(10, 0.0), "not-a-method", 10)


def test_preset_high_outlier_methods():
    cells = preset_cells("3")
    methods = {c.method for c in cells}
    assert methods == {
        "lo-ransaac-wmean",
        "lo-ransaac-wgmed",
        "ransac+m",
        "lo-ransac",
        "oracle",
    }
    assert all(c.scenario.outlier_ratio == 0.9 for c in cells)
    assert all(c.scenario.n_inliers == 1000 for c in cells)


def test_preset_p_sweep_grid():
    cells = preset_cells("p-sweep")
    ps = sorted({c.p for c in cells})
    assert ps == [float(x) for x in range(11)]
    assert all(c.scenario.n_inliers == 1000 for c in cells)
    # 1000/1250 total matches at 20% outliers.
    assert all(c.scenario.n_outliers == 250 for c in cells)
    assert all(c.scenario.sigma == 5.0 for c in cells)


def test_preset_table1_rows():
    cells = preset_cells("1")
    assert {c.scenario.sigma for c in cells} == {0.5, 2.0, 5.0}
    assert {c.scenario.outlier_ratio for c in cells} == {0.0, 0.05, 0.2, 0.5}
    assert {c.scenario.n_inliers for c in cells} == {100, 1000}
    assert {c.iterations for c in cells} == {1000, 10000}


def test_unknown_preset_rejected():
    with pytest.raises(ValueError):
        preset_cells("7")
