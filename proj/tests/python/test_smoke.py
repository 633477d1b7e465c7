import math
import os
from pathlib import Path

import pytest

import mrpush

SCENARIOS = Path(os.environ.get("MRPUSH_SOURCE_DIR", Path(__file__).resolve().parents[2])) / "scenarios"


def test_stable_set_radius():
    s = mrpush.stable_set(mu=0.6, block_side=0.1)
    assert abs(s["r_min"] - 1.6) <= 0.15 * 1.6
    assert s["phi_max_push"] == pytest.approx(math.atan(0.275 / s["r_min"]), abs=1e-15)


def test_wrench_to_twist_axes():
    vx, vy, omega = mrpush.wrench_to_twist(1.0, 0.0, 0.0)
    assert (vx, vy, omega) == (1.0, 0.0, 0.0)
    vx, vy, omega = mrpush.wrench_to_twist(0.0, 0.0, 1.0)
    assert vx == 0.0 and vy == 0.0 and omega > 0.0
    with pytest.raises(ValueError):
        mrpush.wrench_to_twist(0.0, 0.0, 0.0)


def test_ecbsta_swaps_to_cheaper_assignment():
    # Robot 0 sits next to task 1 and robot 1 next to task 0.
    res = mrpush.ecbsta_solve(5, 1, [(0, 0), (4, 0)], [((3, 0), (4, 0)), ((1, 0), (0, 0))])
    assert res["assignment"] == {0: 1, 1: 0}
    assert res["cost"] == 4
    assert [p[0] for p in res["paths"]] == [(0, 0), (4, 0)]


def test_config_round_trip_and_errors():
    text = mrpush.default_config()
    assert mrpush.check_config(text) == text
    with pytest.raises(mrpush.ValidationError):
        mrpush.check_config("[mpc]\nhorizon = 0\n")


def test_scenario_validation():
    text = (SCENARIOS / "s2a.scn").read_text()
    canonical = mrpush.check_scenario(text)
    assert mrpush.check_scenario(canonical) == canonical
    with pytest.raises(ValueError, match="block 1"):
        mrpush.check_scenario(text.replace("b1 = 2.5 3.25 2.5 5.25", "b1 = 2.5 3.25 2.5 9"))


def test_plan_and_batch():
    text = (SCENARIOS / "s2a.scn").read_text()
    p = mrpush.plan(text)
    assert p["valid"]
    assert p["makespan"] > 0
    assert p["trajectories"].startswith("# dt 0.25")
    a = mrpush.run_batch(text, "PuSHR", trials=2, seed=3)
    b = mrpush.run_batch(text, "PuSHR", trials=2, seed=3)
    assert a["row"] == b["row"] and a["traces"] == b["traces"]
    assert a["trials"] == 2 and a["successes"] == 2
    with pytest.raises(ValueError):
        mrpush.run_batch(text, "nope", trials=1)
