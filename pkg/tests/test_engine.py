import csv
import dataclasses
import io
import json
import math

import numpy as np
import pytest

from fmcwspoof import engine, scenario
from fmcwspoof.attacker import attacker_emission_times
from fmcwspoof.errors import ConfigurationError, ScenarioError
from fmcwspoof.scene import Reflector, Scene
from fmcwspoof.waveforms import C0, FrameConfig, range_bin_width


def load(scenario_dir, name):
    return scenario.load(scenario_dir / f"{name}.json")


def test_victim_timeline():
    starts = engine.victim_timeline(FrameConfig(), 0.0)
    np.testing.assert_allclose(starts[:3], [0.0, 4e-3, 8e-3])
    late = engine.victim_timeline(FrameConfig(n_chirps=51, t_frame=0.204), 20.0)
    assert late[50] - 50 * 4e-3 == pytest.approx(4e-6, rel=1e-9)


def test_attacker_drift_slips_against_victim():
    attacker = attacker_emission_times(4e-3, 0.0, 20.0, 0.2)
    victim = engine.victim_timeline(FrameConfig(), 0.0)
    slip = np.diff(attacker[:50] - victim)
    np.testing.assert_allclose(slip, 80e-9, rtol=1e-6)


def test_baseline_detects_reference_target(scenario_dir):
    r = engine.run(load(scenario_dir, "baseline"))
    os_dets = r.detections["OS"]
    assert len(os_dets) >= 3
    assert any(abs(d.range_m - 2.55) <= range_bin_width(r.scenario.chirp) for d in os_dets)
    assert all(d.kind == "real" for d in r.all_detections)


def test_empty_scene_has_no_detections(scenario_dir):
    sc = load(scenario_dir, "empty")
    assert engine.run(sc).all_detections == []
    quiet = dataclasses.replace(sc, receiver=dataclasses.replace(sc.receiver, noise_std=0.0))
    r = engine.run(quiet)
    assert r.all_detections == [] and not r.cube.samples.any()


def test_detections_reference_valid_bins(scenario_dir):
    r = engine.run(load(scenario_dir, "removal"))
    n_r, n_v = r.rd_map.power.shape
    for d in r.all_detections:
        assert 0 <= d.range_bin < engine.valid_range_bins(r.scenario) <= n_r
        assert 0 <= d.velocity_bin < n_v
        assert d.kind in engine.KINDS
    for algo, counts in r.summary["counts"].items():
        assert sum(counts[k] for k in engine.KINDS) == counts["total"] == len(r.detections[algo])


def test_superposition_audit(scenario_dir):
    sc = load(scenario_dir, "removal")
    full = engine.run(sc).cube.samples
    scene_only = engine.run(sc.without_attacks()).cube.samples
    attack_only = engine.run(sc.attacks_only()).cube.samples
    err = np.max(np.abs(full - (scene_only + attack_only))) / np.max(np.abs(full))
    assert err <= 1e-12


def test_outputs_identical_across_jobs(scenario_dir):
    sc = load(scenario_dir, "moving_ghost")
    one = engine.run_artifacts(engine.run(sc, jobs=1))
    four = engine.run_artifacts(engine.run(sc, jobs=4))
    assert one == four


def test_error_carries_scenario_context():
    sc = scenario.Scenario(scene=Scene((Reflector(0.5, -5.0),)), name="collision")
    with pytest.raises(ScenarioError, match="collision"):
        engine.run(sc)


def test_sweep_gain_is_monotone(scenario_dir):
    template = json.loads((scenario_dir / "removal.json").read_text())
    values = [0.0, 0.3, 1.0, 2.0, 3.0, 5.0, 8.0, 12.0]
    summaries = engine.sweep(template, "attacker.plans.0.gain", values, jobs=2)
    real = [s["counts"]["CA"]["real_objects"] for s in summaries]
    assert all(a >= b for a, b in zip(real, real[1:])), real
    text = engine.sweep_csv(values, summaries)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [int(r["ca_real_objects"]) for r in rows] == real


def test_single_value_sweep_equals_run(scenario_dir):
    template = json.loads((scenario_dir / "baseline.json").read_text())
    [summary] = engine.sweep(template, "receiver.noise_std", [1.0])
    assert summary == engine.run(scenario.scenario_from_dict(template)).summary


def test_sweep_bad_path(scenario_dir):
    template = json.loads((scenario_dir / "baseline.json").read_text())
    with pytest.raises(ConfigurationError):
        engine.sweep(template, "receiver.noise", [1.0])


def test_sweep_period_gives_linear_velocity(scenario_dir):
    template = json.loads((scenario_dir / "moving_ghost.json").read_text())
    t_c = 4e-3
    periods = [(t_c - r) / 8 for r in (2e-13, 4.27e-13, 8e-13, 1.2e-12)]
    summaries = engine.sweep(template, "attacker.plans.0.T_a", periods)
    rem = np.array([math.fmod(t_c, p) for p in periods])
    v = np.array([s["predictions"][0]["velocity_mps"] for s in summaries])
    np.testing.assert_allclose(v, -C0 * rem / (2 * t_c), rtol=1e-3)


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    with pytest.raises(TypeError):
        engine.write_atomic({"a.txt": b"ok", "b.txt": "not bytes"}, tmp_path)
    assert list(tmp_path.iterdir()) == []
    engine.write_atomic({"a.txt": b"ok"}, tmp_path)
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]


def test_figdata_cfar_range_schema(scenario_dir):
    r = engine.run(load(scenario_dir, "baseline"))
    rows = list(csv.reader(io.StringIO(engine.figdata(r, "cfar_range"))))
    assert rows[0] == ["range_m", "power_db", "ca_threshold_db", "os_threshold_db", "ca_flag", "os_flag"]
    assert len(rows) == 1 + r.scenario.chirp.n_samples
    assert {row[4] for row in rows[1:]} <= {"0", "1"}


def test_figdata_aoa_heatmap_multi_tx_has_two_maxima(scenario_dir):
    r = engine.run(load(scenario_dir, "multi_tx"))
    rows = list(csv.reader(io.StringIO(engine.figdata(r, "aoa_heatmap"))))
    grid = np.array([[float(x) for x in row[1:]] for row in rows[1:]])
    row = grid[np.unravel_index(np.argmax(grid), grid.shape)[0]]
    peaks = [i for i in range(1, row.size - 1) if row[i] > row[i - 1] and row[i] >= row[i + 1] and row[i] > 0.5 * row.max()]
    assert len(peaks) == 2


def test_figdata_empty_scene_is_flat(scenario_dir):
    sc = load(scenario_dir, "empty")
    sc = dataclasses.replace(sc, receiver=dataclasses.replace(sc.receiver, noise_std=0.0))
    text = engine.figdata(engine.run(sc), "aoa_heatmap")
    grid = np.array([[float(x) for x in row[1:]] for row in list(csv.reader(io.StringIO(text)))[1:]])
    assert not grid.any()


def test_figdata_range_doppler_shape(scenario_dir):
    r = engine.run(load(scenario_dir, "baseline"))
    rows = list(csv.reader(io.StringIO(engine.figdata(r, "range_doppler"))))
    assert len(rows[0]) == 1 + r.scenario.frame.n_chirps


def test_figdata_unknown_figure(scenario_dir):
    r = engine.run(load(scenario_dir, "empty"))
    with pytest.raises(ConfigurationError):
        engine.figdata(r, "fig42")
