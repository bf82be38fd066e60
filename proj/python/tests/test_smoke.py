import math
from itertools import permutations
from pathlib import Path

import numpy as np
import pytest

import formplan

ROOT = Path(__file__).resolve().parents[2]
SCENARIOS = ROOT / "scenarios"


def test_eikonal_matches_euclidean_distance():
    h = 0.1
    speed = np.ones((61, 61))
    t = formplan.solve_eikonal(speed, h, [(30, 30)])
    j, i = np.mgrid[0:61, 0:61]
    exact = h * np.hypot(i - 30, j - 30)
    far = exact > 10 * h
    assert np.max(np.abs(t[far] - exact[far]) / exact[far]) <= 0.05


def test_distance_field_and_velocity_map_agree():
    occ = np.zeros((20, 40))
    occ[:, 20] = 1
    d = formplan.distance_field(occ, 0.1)
    w = formplan.velocity_map(occ, 0.1, 0.5)
    assert d[5, 20] == 0.0 and w[5, 20] == 0.0
    assert d[5, 23] == pytest.approx(0.3)
    assert w[5, 23] == pytest.approx(0.6)
    assert w[5, 35] == 1.0


def test_fm2_plan_on_bundled_demo_map():
    plan = formplan.plan_fm2(str(SCENARIOS / "maps" / "plan-demo.map.yaml"), (1.0, 1.0), (9.0, 7.0), 1.5)
    assert plan["min_clearance"] >= 0.30
    v = plan["vertices"]
    assert v.shape[1] == 2
    assert np.linalg.norm(v[-1] - [9.0, 7.0]) <= 0.05 + 1e-9
    assert plan["w2"].shape == (160, 200)


def test_assignment_matches_brute_force():
    rng = np.random.default_rng(3)
    for n in range(2, 6):
        pos = [tuple(p) for p in rng.uniform(-3, 3, (n, 2))]
        goals = [tuple(g) for g in rng.uniform(-3, 3, (n, 2))]
        best = min(formplan.assignment_cost(pos, goals, list(p)) for p in permutations(range(n)))
        roles = formplan.assign_final_goals(pos, goals)
        assert sorted(roles) == list(range(n))
        assert formplan.assignment_cost(pos, goals, roles) == best


def test_leader_hysteresis():
    assert formplan.select_leader([3.0, 2.98], current=0, d_switch=0.05) == 0
    assert formplan.select_leader([3.0, 2.9], current=0, d_switch=0.05) == 1


def test_avoidance_and_caps():
    (vx, vy), triggered, alpha = formplan.obstacle_avoidance((0.0, -0.3), (0.0, 2.0), 0.7)
    assert triggered and alpha == pytest.approx(0.6)
    assert vy == pytest.approx(-0.3 * 0.4)
    assert formplan.directional_speed_limit(0.0) == 0.5
    assert formplan.directional_speed_limit(math.pi / 2) == 0.2
    assert formplan.proximity_speed_limit(0.0) == pytest.approx(0.05)
    assert formplan.spring_delta(1.15, 1.15, 4.0, 2.0, 0.5) == 0.0


def test_corridor_run_passes_its_thresholds():
    result = formplan.run_scenario("lab-corridor")
    assert result["status"] == "completed"
    assert result["passed"]
    assert result["metrics_csv"].startswith("cycle,time,phase,leader")


def test_truncated_run_and_errors(tmp_path):
    result = formplan.run_scenario(str(SCENARIOS / "cone-split.yaml"), until_cycle=20)
    assert result["status"] == "truncated"
    assert result["cycles"] == 20
    bad = tmp_path / "bad.yaml"
    bad.write_text("version: 1\nname: x\n")
    with pytest.raises(formplan.ScenarioError):
        formplan.run_scenario(str(bad))
    with pytest.raises(formplan.FormplanError):
        formplan.load_map(str(tmp_path / "missing.map.yaml"))
    assert set(formplan.builtin_scenarios()) >= {"lab-corridor", "cone-split", "lab-unstructured", "sim-square-clutter"}
