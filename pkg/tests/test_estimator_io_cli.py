import json
import warnings

import numpy as np
import pytest
from click.testing import CliRunner
from sklearn.base import clone

from helpers import random_separated_spec
from mosumseg import (
    EventSeries,
    MosumSegmenter,
    SegmentationConfig,
    noiseless_path,
    scenario_preset,
    segment,
    simulate_renewal_regimes,
    threshold_sublinear,
)
from mosumseg.cli import main
from mosumseg.io import read_config, read_events_csv, read_path_csv, write_events_csv, write_path_csv
from mosumseg._validation import ValidationError


# estimator


def test_estimator_params_and_clone():
    est = MosumSegmenter(bandwidth=60.0, scale_mode="identity")
    params = est.get_params()
    assert params["bandwidth"] == 60.0 and params["scale_mode"] == "identity"
    twin = clone(est).set_params(eta=0.5)
    assert twin.eta == 0.5 and est.eta == 0.75


def test_estimator_fit_predict_on_arrays():
    spec, T, h = random_separated_spec(np.random.default_rng(1))
    path = noiseless_path(spec, T)
    est = MosumSegmenter(bandwidth=h, scale_mode="identity")
    assert np.array_equal(est.fit_predict(path.values), spec.change_points)
    assert np.array_equal(est.predict(), spec.change_points)
    assert est.n_features_in_ == spec.dim
    feats = est.transform()
    assert feats.shape == (int(T - 2 * h) + 1, spec.dim + 2)
    assert np.allclose(feats[:, -1], feats[:, -2] ** 2)
    assert est.beta_ == threshold_sublinear(T, h, spec.dim, 0.05).beta


def test_estimator_matches_functional_api_and_intervals():
    sc = scenario_preset("constvar-independent")
    ev = simulate_renewal_regimes(sc, seed=2)
    est = MosumSegmenter(bandwidth=120.0).fit(ev)
    ref = segment(ev, SegmentationConfig(bandwidth_h=120.0))
    assert np.array_equal(est.change_points_, ref.estimates)
    cis = est.confidence_intervals(alpha=0.1, n_mc=500)
    assert len(cis) == ref.q_hat
    for (lo, hi), c in zip(cis, ref.estimates):
        assert lo <= c <= hi


def test_estimator_threshold_variants_and_unfitted():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        MosumSegmenter().predict()
    assert MosumSegmenter(threshold=5.0).to_config().threshold_mode.beta == 5.0
    assert MosumSegmenter(threshold="linear-mc", n_mc=200).to_config().threshold_mode.n_mc == 200
    with pytest.raises(ValueError):
        MosumSegmenter(bandwidth=2.0).fit(np.zeros((2, 1)))


# io


def test_events_csv_roundtrip(tmp_path):
    ev = EventSeries(([0.5, 1.25], [], [3.0]), 4.0)
    f = tmp_path / "e.csv"
    write_events_csv(ev, f)
    assert f.read_text().splitlines()[0] == "component_id,time"
    assert read_events_csv(f, horizon_T=4.0, dim=3) == ev


def test_events_csv_errors(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("id,t\n1,2\n")
    with pytest.raises(ValidationError):
        read_events_csv(f)
    f.write_text("component_id,time\n0,2\n")
    with pytest.raises(ValidationError):
        read_events_csv(f)
    f.write_text("component_id,time\n1,abc\n")
    with pytest.raises(ValidationError, match=":2:"):
        read_events_csv(f)


def test_path_csv_roundtrip(tmp_path):
    spec, T, _ = random_separated_spec(np.random.default_rng(4))
    path = noiseless_path(spec, T)
    f = tmp_path / "p.csv"
    write_path_csv(path, f)
    assert f.read_text().splitlines()[0] == "t," + ",".join(f"z_{j + 1}" for j in range(spec.dim))
    assert read_path_csv(f) == path


def test_config_json(tmp_path):
    f = tmp_path / "c.json"
    cfg = SegmentationConfig(bandwidth_h=50.0, eta=0.5, scale_mode="true_full")
    f.write_text(json.dumps(cfg.to_dict()))
    assert read_config(f) == cfg


# cli


@pytest.fixture()
def runner():
    return CliRunner()


def test_cli_threshold(runner):
    out = runner.invoke(main, ["threshold", "--mode", "gumbel", "--T", "1600", "--h", "120", "--p", "3", "--alpha", "0.05"])
    assert out.exit_code == 0, out.output
    data = json.loads(out.stdout)
    assert data["beta"] == threshold_sublinear(1600, 120, 3, 0.05).beta and data["mode"] == "gumbel"
    mc = runner.invoke(main, ["threshold", "--mode", "linear-mc", "--gamma", "0.25", "--p", "1", "--n-mc", "200", "--grid-points", "200"])
    assert mc.exit_code == 0 and json.loads(mc.stdout)["n_mc"] == 200
    bad = runner.invoke(main, ["threshold", "--T", "2", "--h", "1", "--p", "1"])
    assert bad.exit_code != 0 and "x > e" in bad.output


def test_cli_simulate_segment_ci_pipeline(runner, tmp_path):
    ev, sc_json = tmp_path / "ev.csv", tmp_path / "sc.json"
    r = runner.invoke(main, ["simulate", "--scenario", "poisson-dependent", "--seed", "7", "--out", str(ev), "--scenario-out", str(sc_json)])
    assert r.exit_code == 0, r.output
    expected = simulate_renewal_regimes(scenario_preset("poisson-dependent"), seed=7)
    assert read_events_csv(ev, horizon_T=1600.0, dim=3) == expected

    res, mcsv = tmp_path / "r.json", tmp_path / "m.csv"
    args = ["segment", "--events", str(ev), "--h", "120", "--eta", "0.75", "--alpha", "0.05",
            "--scale-mode", "C", "--grid-step", "1", "--spec", str(sc_json), "--mosum-csv", str(mcsv), "--out", str(res)]
    r = runner.invoke(main, args)
    assert r.exit_code == 0, r.output
    data = json.loads(res.read_text())
    ref = segment(expected, SegmentationConfig(bandwidth_h=120.0, scale_mode="C"), scenario_preset("poisson-dependent").change_spec())
    assert data["estimates"] == ref.estimates.tolist() and data["schema"] == "mosumseg.segmentation/1"
    assert mcsv.read_text().splitlines()[0] == "t,m_1,m_2,m_3,norm,quadform"

    r = runner.invoke(main, ["ci", "--result", str(res), "--alpha", "0.1", "--n-mc", "500", "--seed", "1"])
    assert r.exit_code == 0, r.output
    rows = json.loads(r.stdout)["intervals"]
    assert len(rows) == len(data["estimates"])
    for row in rows:
        assert row["low"] <= row["estimate"] <= row["high"]


def test_cli_segment_path_and_config(runner, tmp_path):
    spec, T, h = random_separated_spec(np.random.default_rng(8))
    pf, cf = tmp_path / "p.csv", tmp_path / "c.json"
    write_path_csv(noiseless_path(spec, T), pf)
    cf.write_text(json.dumps(SegmentationConfig(bandwidth_h=h, scale_mode="identity").to_dict()))
    r = runner.invoke(main, ["segment", "--path", str(pf), "--config", str(cf)])
    assert r.exit_code == 0, r.output
    assert json.loads(r.stdout)["estimates"] == spec.change_points.tolist()
    r = runner.invoke(main, ["segment", "--path", str(pf)])
    assert r.exit_code != 0


def test_cli_experiment_bit_identical(runner, tmp_path):
    outs = []
    for jobs in ("1", "2", "1"):
        f = tmp_path / f"rep{len(outs)}.json"
        r = runner.invoke(main, ["experiment", "--scenario", "constvar-independent", "--mode", "B", "--reps", "12", "--seed", "1", "--jobs", jobs, "--out", str(f)])
        assert r.exit_code == 0, r.output
        outs.append(f.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert "wall_clock_seconds" not in json.loads(outs[0])


def test_cli_figures(runner, tmp_path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = runner.invoke(main, ["figures", "--scenario", "constvar-independent", "--bandwidths", "60,120", "--out", str(tmp_path)])
    assert r.exit_code == 0, r.output
    assert sorted(p.name for p in tmp_path.iterdir()) == ["events.csv", "mosum_h120.csv", "mosum_h60.csv"]
    r = runner.invoke(main, ["figures", "--scenario", "constvar-independent", "--bandwidths", "a,b", "--out", str(tmp_path)])
    assert r.exit_code != 0
