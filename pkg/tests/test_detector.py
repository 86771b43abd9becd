import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import random_separated_spec
from mosumseg import (
    RenewalScenario,
    SegmentationConfig,
    SegmentationResult,
    build_scale_provider,
    confidence_interval,
    mosum_statistic,
    noiseless_path,
    quadratic_form_series,
    scenario_preset,
    segment,
    significant_local_extrema,
    simulate_argmax_limit,
    simulate_renewal_regimes,
    threshold_sublinear,
)
from mosumseg._validation import ValidationError
from mosumseg.detector import (
    LimitLawQuantiles,
    drift_change_estimate,
    limit_sigma_params,
    local_maximum_mask,
)
from mosumseg.mosum import MosumSeries


def _series(norms, quad=None, step=1.0, h=10.0):
    norms = np.asarray(norms, dtype=float)
    times = h + step * np.arange(norms.size)
    return MosumSeries(step, h, times, norms[:, None], norms, norms**2 if quad is None else np.asarray(quad, float))


def _brute_force_extrema(norms, quad, radius, beta):
    out = []
    for i in range(norms.size):
        lo, hi = max(0, i - radius), min(norms.size, i + radius + 1)
        window = norms[lo:hi]
        first = lo + int(np.argmax(window))
        if first == i and quad[i] >= beta:
            out.append(i)
    return out


@settings(max_examples=150, deadline=None)
@given(
    arrays(np.float64, st.integers(1, 60), elements=st.sampled_from([0.0, 1.0, 2.0, 2.5, 3.0])),
    st.integers(1, 8),
    st.floats(0.5, 8.0),
)
def test_extrema_match_brute_force_min_argmax(norms, radius, beta):
    mask = local_maximum_mask(norms, radius)
    got = [i for i in np.flatnonzero(mask) if norms[i] ** 2 >= beta]
    assert got == _brute_force_extrema(norms, norms**2, radius, beta)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(5, 80), elements=st.floats(0, 10)), st.floats(0.1, 0.9), st.floats(0.1, 30))
def test_estimates_separated_and_antitone_in_beta(norms, eta, beta):
    series = _series(norms, h=10.0)
    res = significant_local_extrema(series, beta, eta)
    radius = math.floor(eta * 10.0 + 1e-9)
    assert np.all(np.diff(res.estimates) > radius - 1e-9)
    assert np.all(np.diff(res.estimates) >= eta * 10.0 * (1 - 1e-9) - 1.0)
    assert all(r.peak_quadform >= beta for r in res.records)
    higher = significant_local_extrema(series, beta * 1.5, eta)
    assert set(higher.estimates) <= set(res.estimates)


def test_empty_when_below_threshold():
    res = significant_local_extrema(_series([1.0, 2.0, 1.0]), 100.0, 0.5)
    assert res.q_hat == 0 and res.estimates.size == 0


def test_plateau_picks_smallest_maximiser():
    norms = np.zeros(60)
    norms[20:28] = 5.0  # plateau of length eta*h = 7 grid steps past t0
    res = significant_local_extrema(_series(norms), 1.0, 0.7)
    assert res.estimates.tolist() == [10.0 + 20]


def test_noiseless_exact_recovery_and_scale_independence():
    rng = np.random.default_rng(0)
    for _ in range(10):
        spec, T, h = random_separated_spec(rng)
        path = noiseless_path(spec, T)
        res = segment(path, SegmentationConfig(bandwidth_h=h, scale_mode="true_diag"), spec)
        assert np.array_equal(res.estimates, spec.change_points)
        ident = segment(path, SegmentationConfig(bandwidth_h=h, scale_mode="identity"))
        assert np.array_equal(ident.estimates, res.estimates)


def test_segment_records_and_json_roundtrip():
    sc = scenario_preset("constvar-independent")
    ev = simulate_renewal_regimes(sc, seed=4)
    res = segment(ev, SegmentationConfig(bandwidth_h=120.0, scale_mode="B"), sc.change_spec())
    assert res.beta_used == threshold_sublinear(1600, 120, 3, 0.05).beta
    assert res.config["scale_mode"] == "true_diag" and res.threshold["mode"] == "gumbel"
    assert np.all(np.diff(res.estimates) > 0)
    assert all(120 <= t <= 1480 for t in res.estimates)
    for rec in res.records:
        assert rec.peak_quadform >= res.beta_used
        assert rec.d_hat is not None and len(rec.sigma_params) == 4
    again = SegmentationResult.from_dict(json.loads(json.dumps(res.to_dict())))
    assert again.to_dict() == res.to_dict()


def test_segment_detects_table_changes_in_most_seeds():
    sc = scenario_preset("constvar-independent")
    cfg = SegmentationConfig(bandwidth_h=120.0, scale_mode="true_diag")
    good = 0
    for seed in range(40):
        res = segment(simulate_renewal_regimes(sc, seed=seed), cfg, sc.change_spec())
        near = all(np.any(np.abs(res.estimates - c) <= 120) for c in sc.change_points)
        good += res.q_hat == 4 and near
    assert good / 40 > 0.5


@pytest.mark.parametrize("mode", ["local_diag", "true_diag"])
def test_segment_null_size_on_homogeneous_poisson(mode):
    sc = RenewalScenario((), np.ones((1, 3)), np.ones((1, 3)), 1600.0, family="exponential")
    spec = sc.change_spec() if mode == "true_diag" else None
    cfg = SegmentationConfig(bandwidth_h=120.0, scale_mode=mode)
    empty = [segment(simulate_renewal_regimes(sc, seed=s), cfg, spec).q_hat == 0 for s in range(1000)]
    assert np.mean(empty) >= 0.85


def test_segment_rejects_mismatched_inputs():
    spec, T, h = random_separated_spec(np.random.default_rng(3))
    path = noiseless_path(spec, T)
    with pytest.raises(ValidationError):
        segment(path, SegmentationConfig(bandwidth_h=h, grid_step=0.5))
    with pytest.raises(ValidationError):
        segment(np.zeros((10, 2)), SegmentationConfig(bandwidth_h=2.0))


def test_drift_change_estimate_on_noiseless_path():
    spec, T, h = random_separated_spec(np.random.default_rng(9))
    path = noiseless_path(spec, T)
    for c, d in zip(spec.change_points, spec.drift_changes()):
        assert np.allclose(drift_change_estimate(path, c, h), d)


def test_limit_sigma_params_projection():
    d = np.array([3.0, 4.0])
    sl, sl2, sr, sr2 = limit_sigma_params(d, np.diag([1.0, 4.0]), np.diag([2.0, 2.0]))
    u = d / 5
    assert sl == sl2 == pytest.approx(math.sqrt(u @ np.diag([1.0, 4.0]) @ u))
    assert sr == sr2 == pytest.approx(math.sqrt(2.0))


def test_argmax_limit_symmetric_median():
    law = simulate_argmax_limit((1.0, 1.0, 1.0, 1.0), n_mc=10_000, seed=1)
    assert abs(law.quantile(0.5)) <= 0.1
    assert law.var_left == law.var_right == 6.0
    assert list(law.quantiles) == sorted(law.quantiles)


def test_argmax_limit_brownian_scaling():
    one = simulate_argmax_limit((1.0, 0.0, 0.0, 0.0), n_mc=6000, seed=2)
    two = simulate_argmax_limit((2.0, 0.0, 0.0, 0.0), n_mc=6000, seed=99)
    for q in (0.1, 0.25, 0.75, 0.9):
        assert two.quantile(q) == pytest.approx(4 * one.quantile(q), rel=0.15, abs=0.05)


def test_argmax_limit_equal_variance_shortcut():
    general = simulate_argmax_limit((0.7, 0.7, 0.7, 0.7), n_mc=8000, seed=3)
    short = simulate_argmax_limit((0.7, 0.0, 0.0, 0.0), n_mc=8000, seed=4, equal_variance=True)
    assert general.var_left == pytest.approx(short.var_left)
    for q in (0.05, 0.25, 0.5, 0.75, 0.95):
        assert general.quantile(q) == pytest.approx(short.quantile(q), abs=0.15 * 6 * 0.49 + 0.05)


def test_argmax_limit_deterministic_and_boundary_check():
    a = simulate_argmax_limit((1.0, 1.0, 2.0, 2.0), n_mc=600, seed=5)
    b = simulate_argmax_limit((1.0, 1.0, 2.0, 2.0), n_mc=600, seed=5)
    assert a.to_dict() == b.to_dict()
    assert a.var_left == 1 + 4 + 4 and a.var_right == 1 + 16 + 4
    with pytest.raises(ValidationError, match="boundary"):
        simulate_argmax_limit((1.0, 1.0, 1.0, 1.0), n_mc=400, horizon_D=0.5, step=0.01)
    with pytest.raises(ValidationError):
        simulate_argmax_limit((0.0, 0.0, 0.0, 0.0))


def _symmetric_law(Q):
    return LimitLawQuantiles((0.05, 0.95), (-Q, Q), (1, 1, 1, 1), 6.0, 6.0, 2, 0, 1.0, 0.1, 0.0)


def test_confidence_interval_plug_in_and_scaling():
    law = simulate_argmax_limit((1.0, 1.0, 1.0, 1.0), n_mc=4000, seed=6)
    d = np.array([0.3, 0.4])
    lo, hi = confidence_interval(500.0, d, law, 0.1)
    assert lo == pytest.approx(500 + law.quantile(0.05) / 0.25)
    assert hi == pytest.approx(500 + law.quantile(0.95) / 0.25)
    lo2, hi2 = confidence_interval(500.0, 2 * d, law, 0.1)
    assert (hi - lo) == pytest.approx(4 * (hi2 - lo2))
    lo3, hi3 = confidence_interval(3.0, d, law, 0.1, horizon_T=10.0)
    assert lo3 >= 0 and hi3 <= 10.0
    with pytest.raises(ValidationError):
        confidence_interval(500.0, np.zeros(2), law, 0.1)


def test_confidence_interval_symmetric_quantiles():
    law = _symmetric_law(3.0)
    lo, hi = confidence_interval(100.0, np.array([0.5]), law, 0.1)
    assert lo == pytest.approx(100 - 3.0 / 0.25) and hi == pytest.approx(100 + 3.0 / 0.25)


def test_quadform_filled_required():
    series = _series([1.0, 2.0])
    with pytest.raises(ValidationError):
        significant_local_extrema(replace(series, quadform=None), 1.0, 0.5)


def test_segment_on_wiener_path_through_block_covariance():
    from mosumseg import ChangeSpec, simulate_wiener_drift

    spec = ChangeSpec([500.0], [1, 2], [[0.0, 0.0], [0.8, -0.8]], [np.eye(2)] * 2)
    path = simulate_wiener_drift(spec, 1000.0, seed=1)
    res = segment(path, SegmentationConfig(bandwidth_h=100.0, scale_mode="identity"))
    assert res.q_hat == 1 and abs(res.estimates[0] - 500) < 20
    assert res.records[0].sigma_params[0] == pytest.approx(1.0, rel=0.3)


def test_mosum_pipeline_pieces_agree_with_segment():
    spec, T, h = random_separated_spec(np.random.default_rng(12))
    path = noiseless_path(spec, T)
    cfg = SegmentationConfig(bandwidth_h=h, scale_mode="identity")
    m = quadratic_form_series(mosum_statistic(path, h), build_scale_provider("identity", dim=spec.dim))
    manual = significant_local_extrema(m, threshold_sublinear(T, h, spec.dim, 0.05).beta, 0.75)
    assert np.array_equal(manual.estimates, segment(path, cfg).estimates)
