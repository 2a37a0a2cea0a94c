import json
import math
import os
import subprocess

import pytest

import _cavsim as cavsim

SCENARIOS = os.environ["CAVSIM_SCENARIO_DIR"]
CLI = os.environ["CAVSIM_CLI"]


def scenario(name):
    return os.path.join(SCENARIOS, name)


def test_fd_functions():
    fd = cavsim.FdParams(q_c=0.5, k_c=0.03, k_j=0.15)
    assert cavsim.fd_flow(fd, 0.03) == pytest.approx(0.5)
    assert cavsim.fd_flow(fd, 0.09) == pytest.approx(0.25)
    assert cavsim.fd_speed(fd, 0.0) == pytest.approx(0.5 / 0.03)
    assert math.isinf(cavsim.fd_travel_time(fd, 0.15, 100.0))


def test_prediction():
    fd = cavsim.FdParams(q_c=0.5, k_c=0.03, k_j=0.15)
    p = cavsim.predict_time_to_critical(0.02, 0.002, fd)
    assert p.t_c_remaining == pytest.approx(5.0)
    assert math.isinf(cavsim.predict_time_to_critical(0.02, -0.001, fd).t_c_remaining)
    assert cavsim.prediction_error_magnitude(0.001, 0.002) == pytest.approx(0.5)
    assert cavsim.prediction_error_magnitude(0.001, 0.0) is None
    lo, hi = cavsim.t_c_bounds(0.02, 0.03, 0.0, 0.001, 0.002)
    assert (lo, hi) == (pytest.approx(5.0), pytest.approx(10.0))


def test_scenario_and_routing():
    s = cavsim.load_scenario(scenario("diamond.json"))
    assert s.num_nodes == 4
    assert s.num_edges == 4
    assert s.hash() == cavsim.parse_scenario(s.serialize()).hash()
    r = cavsim.free_flow_shortest_path(s, 1, 4)
    assert r.nodes[0] == 1 and r.nodes[-1] == 4
    assert cavsim.free_flow_shortest_path(s, 4, 1) is None


def test_run_and_metrics():
    s = cavsim.load_scenario(scenario("tiny2.json"))
    rep = cavsim.run(s, "baseline")
    assert rep.completed == 3
    assert rep.ttt > 0.0
    parsed = json.loads(rep.to_json())
    assert parsed["completed"] == 3


def test_bad_scenario_raises():
    with pytest.raises(Exception):
        cavsim.load_scenario("/nonexistent.json")


def run_cli(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True)


def test_cli_exit_codes(tmp_path):
    assert run_cli("run", "--scenario", "/nonexistent.json").returncode == 2

    bad = tmp_path / "bad.json"
    text = open(scenario("tiny2.json")).read().replace(
        '"kc_vpm": 0.036', '"kc_vpm": 0.5')
    bad.write_text(text)
    assert run_cli("validate", "--scenario", str(bad)).returncode == 3

    out = tmp_path / "out"
    res = run_cli("run", "--scenario", scenario("tiny2.json"),
                  "--controller", "baseline", "--out", str(out))
    assert res.returncode == 0, res.stderr
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["completed"] == 3
    assert (out / "edges.csv").exists()
