import json
import math

import pytest

import dynwalk


def test_k4_cycles_and_kappa():
    g = dynwalk.complete_graph_k4()
    counts = dynwalk.cycle_counts(g, 4)
    assert counts[3] == 4 and counts[4] == 3
    assert dynwalk.kappa(g, 0) == 4
    assert dynwalk.kappa(g, 63) == 1


def test_generate_is_deterministic():
    a = dynwalk.generate_regular(40, 3, 5)
    b = dynwalk.generate_regular(40, 3, 5)
    assert a == b
    assert len(a.edges()) == 60
    assert all(len(a.neighbors(v)) == 3 for v in range(40))


def test_walk_counts():
    assert dynwalk.tilde_omega(3, 2, 1) == 24
    assert dynwalk.omega(3, 2, 1) == 42


def test_constants_and_refresh_law():
    c = dynwalk.derive_constants({"n": 1024, "d": 3, "p": 0.2, "q": 2, "p_u": 0.5})
    assert math.isclose(c["p_min"], 1 / 9)
    assert c["k"] == 2
    assert math.isclose(dynwalk.open_prob_cut(0.2, 2), 1 / 9)


def test_rc_distribution_normalised():
    support, probs = dynwalk.exact_rc_distribution(dynwalk.complete_graph_k4(), 0.3, 2.0)
    assert len(support) == 64
    assert math.isclose(sum(probs), 1.0)


def test_simulate_counters():
    g = dynwalk.generate_regular(8, 3, 1)
    out = dynwalk.simulate_counters(g, {"n": 8, "p": 0.3, "q": 1, "mu": 2}, 10.0, 3)
    assert out["edge_rings"] > 0 and 0 <= out["final_x"] < 8


def test_experiment_and_errors():
    res = dynwalk.run_experiment({"experiment": "cycles", "n": 100, "graphs": 3})
    assert set(res["summary"]["verdicts"]) == {"mean_c3", "mean_c4"}
    assert res["detail_csv"].startswith("graph,seed,length,count")
    with pytest.raises(dynwalk.DynwalkError):
        dynwalk.run_experiment({"experiment": "nope"})
    with pytest.raises(dynwalk.DynwalkError):
        dynwalk.generate_regular(7, 3, 1)
