import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdeeplcc.harness import (
    ConfigError,
    ScenarioConfig,
    TrajectoryLog,
    compare_datasets,
    head_profile_cycle,
    head_profile_sinusoid,
    load_cycle,
    metric_rm,
    metric_rs,
    prepare_dataset,
    run_scenario,
    write_metrics_csv,
    write_trajectory_csv,
)

# small noise, short horizon and a cheap validation budget keep these runs fast
FAST = dict(T_s=6, noise_bound=0.001, w_bound=0.001, epsilon=0.2, delta=0.1, datasets=2)


@pytest.fixture(scope="module")
def fast_cfg():
    return ScenarioConfig(**FAST)


@pytest.fixture(scope="module")
def fast_art(fast_cfg):
    return prepare_dataset(fast_cfg, 0)


@pytest.fixture(scope="module")
def fast_runs(fast_cfg, fast_art):
    return run_scenario(fast_cfg, fast_art)


def _log(v, ref):
    v = np.asarray(v, dtype=float)
    K = v.shape[0]
    return TrajectoryLog("hdv", 0, np.arange(K) * 0.1, np.zeros_like(v), v, np.zeros_like(v),
                         np.full(K, ref))


def test_sinusoid_profile_examples():
    np.testing.assert_allclose(head_profile_sinusoid([0.0, 2.5, 5.0, 7.5], 15, 4, 10), [15, 19, 15, 11],
                               atol=1e-12)
    with pytest.raises(ValueError):
        head_profile_sinusoid(0.0, 15, 4, 0)


def test_bundled_cycle():
    t, v = load_cycle()
    assert t[0] == 0 and t[-1] == 195
    assert v.max() == pytest.approx(50 / 3.6)
    assert head_profile_cycle(13.0, (t, v)) == pytest.approx(7.5 / 3.6)
    assert head_profile_cycle(500.0, (t, v)) == v[-1]


def test_cycle_file_validation(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("t_s,v_ms\n0,1\n0,2\n")
    with pytest.raises(ConfigError):
        load_cycle(p)
    p.write_text("t_s,v_ms\n0,1\n5,2\n")
    t, v = load_cycle(p)
    np.testing.assert_array_equal(v, [1, 2])
    with pytest.raises(ConfigError):
        load_cycle(tmp_path / "missing.csv")


def test_config_validation_and_roundtrip(tmp_path):
    with pytest.raises(ConfigError):
        ScenarioConfig(T_ini=2)
    with pytest.raises(ConfigError):
        ScenarioConfig(scenario="circle")
    with pytest.raises(ConfigError):
        ScenarioConfig(v_star=40)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"horizon": 5})
    with pytest.raises(ConfigError):
        ScenarioConfig(methods=("hdv", "lqr"))
    cfg = ScenarioConfig(N=4, methods=("hdv", "mpc"))
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg.to_dict()))
    back = ScenarioConfig.from_json(p)
    assert back == cfg and back.steps == 300


def test_metric_examples():
    log = _log([[15, 16, 14, 15], [15, 15, 17, 13]], 15.0)
    # deviations |1|,|1|,|0|,|0|,|2|,|2| over vehicles 1..3
    assert metric_rm(log) == pytest.approx(1.0)
    assert metric_rs(log) == pytest.approx(np.sqrt(10 / 6))
    assert metric_rm(log, 16.0) == pytest.approx((0 + 2 + 1 + 1 + 1 + 3) / 6)
    with pytest.raises(ValueError):
        metric_rm(_log(np.zeros((0, 4)), 15.0))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=30))
def test_metric_ordering(devs):
    v = 15.0 + np.array(devs)
    v = np.column_stack([np.full(v.size, 15.0), v, v, v])
    log = _log(v, 15.0)
    # mean absolute deviation never exceeds the root-mean-square deviation
    assert metric_rm(log) <= metric_rs(log) + 1e-12


def test_zero_amplitude_stays_at_equilibrium():
    cfg = ScenarioConfig(amplitude=0.0, sim_noise=False, T_s=5, methods=("hdv",))
    log = run_scenario(cfg)["hdv"]
    assert log.valid
    np.testing.assert_allclose(log.velocities, 15.0, atol=1e-9)
    np.testing.assert_allclose(log.spacings, 20.0, atol=1e-9)
    assert metric_rm(log) < 1e-9


def test_head_follows_profile(fast_runs):
    for log in fast_runs.values():
        if log.t.size:
            np.testing.assert_allclose(log.velocities[:, 0], head_profile_sinusoid(log.t, 15, 4, 10), atol=1e-9)


def test_all_methods_run_without_collision(fast_runs):
    for m, log in fast_runs.items():
        assert log.status == "ok", (m, log.message)
        assert np.all(log.spacings > 0)
    rec = fast_runs["rdeep"].records
    assert rec and max(r.kkt_residual for r in rec) <= 1e-6
    assert all(abs(r.u) <= 5.0 for r in rec)


def test_rdeep_artifacts(fast_art):
    assert fast_art.gain is not None and fast_art.tube is not None
    assert set(fast_art.specs) == {"mpc", "deepc", "rdeep"}
    assert fast_art.archive.meta["attempts"] >= 1


def test_runs_are_deterministic(fast_cfg, fast_art, fast_runs):
    again = run_scenario(fast_cfg, fast_art)
    for m in fast_runs:
        np.testing.assert_array_equal(again[m].velocities, fast_runs[m].velocities)
    a2 = prepare_dataset(fast_cfg, 0)
    np.testing.assert_array_equal(a2.archive.X, fast_art.archive.X)
    np.testing.assert_array_equal(a2.gain.K, fast_art.gain.K)


def test_paired_noise_between_methods(fast_runs):
    # the head vehicle sees the same profile and the first T_ini steps are identical
    a, b = fast_runs["hdv"], fast_runs["mpc"]
    np.testing.assert_array_equal(a.velocities[:20], b.velocities[:20])


def test_trajectory_csv_recomputes_metrics(tmp_path, fast_runs):
    p = write_trajectory_csv(fast_runs.values(), tmp_path / "traj.csv")
    with open(p) as fh:
        rows = list(csv.DictReader(fh))
    for m, log in fast_runs.items():
        v = np.array([[float(r["v"]) for r in rows if r["method"] == m and r["vehicle"] == str(i)]
                      for i in range(1, 4)]).T
        assert np.mean(np.abs(v - 15.0)) == pytest.approx(metric_rm(log), abs=1e-12)


def test_campaign_report_and_csv(tmp_path):
    cfg = ScenarioConfig(T_s=5, methods=("hdv",), datasets=3)
    report, logs = compare_datasets(cfg)
    assert len(report.rows) == 3 and len(logs) == 3
    assert report.pct("hdv") == 0.0 and not report.partial
    assert "all-HDV" in report.table()
    p = write_metrics_csv(report, tmp_path / "m.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "method,dataset,R_m,R_s,pct_Rm,pct_Rs,status" and len(lines) == 4
    parallel, _ = compare_datasets(cfg, workers=2)
    assert [r["R_m"] for r in parallel.rows] == [r["R_m"] for r in report.rows]


def test_infeasible_tube_is_reported(fast_cfg):
    cfg = ScenarioConfig(**{**FAST, "u_max": 0.01, "methods": ("hdv", "rdeep")})
    art = prepare_dataset(cfg, 0)
    assert "rdeep" in art.errors
    runs = run_scenario(cfg, art)
    assert runs["rdeep"].status == "infeasible" and runs["hdv"].valid


def test_profile_edge_examples():
    assert head_profile_sinusoid(0.0, 15, 4, 10) == 15.0
    assert head_profile_sinusoid(2.5, 15, 4, 10) == pytest.approx(19.0)
    table = (np.array([0.0, 10.0, 20.0]), np.array([5.0, 5.0, 9.0]))
    assert head_profile_cycle(-3.0, table) == 5.0
    assert head_profile_cycle(20.0, table) == 9.0
    assert head_profile_cycle(15.0, table) == pytest.approx(7.0)


def test_metric_trivial_examples():
    assert metric_rm(_log(np.full((5, 4), 15.0), 15.0)) == 0.0
    one = _log(np.column_stack([np.full(4, 15.0), np.full(4, 16.0)]), 15.0)
    assert metric_rm(one) == pytest.approx(1.0) and metric_rs(one) == pytest.approx(1.0)
    mixed = _log(np.column_stack([np.full(2, 15.0), [15.0, 17.0]]), 15.0)
    assert metric_rs(mixed) == pytest.approx(np.sqrt(2.0))


def test_single_dataset_baseline_only():
    report, _ = compare_datasets(ScenarioConfig(T_s=3, methods=("hdv",)), dataset_count=1)
    assert [r["method"] for r in report.rows] == ["hdv"]
