import math

import pytest

import geoparc as gp


def test_geometric_threshold_and_phase():
    law = gp.ArrivalLaw.geometric(0.2)
    t_c, kind = gp.find_tc(law)
    assert kind == "root"
    assert t_c == pytest.approx(1.5, abs=1e-12)
    rep = gp.classify(law, 0.52)
    assert rep["phase"] == "subcritical"
    assert rep["q_c"] == pytest.approx(0.5 * (1 + 0.4**1.5 / 2.8), abs=1e-12)
    assert gp.classify(law, 0.56)["phase"] == "supercritical"


def test_binary_outside_window_has_no_q_c():
    rep = gp.classify(gp.ArrivalLaw.binary(0.5), 0.9)
    assert rep["phase"] == "supercritical"
    assert rep["q_c"] is None


def test_errors_carry_codes():
    with pytest.raises(gp.GeoparcError) as info:
        gp.classify(gp.ArrivalLaw.geometric(0.2), 0.5)
    assert gp.error_code(info.value) == "BadParam"
    assert "q out of range" in str(info.value)
    with pytest.raises(gp.GeoparcError) as info:
        gp.ArrivalLaw.custom([1.0])
    assert gp.error_code(info.value) == "TrivialLaw"


def test_law_from_dict_and_G():
    law = gp.ArrivalLaw.from_dict({"family": "geometric", "alpha": "1/5"})
    assert law.is_exact
    assert law.G(1.5) == pytest.approx(1 / 0.9)
    assert law.G(1.0) == pytest.approx(1.0)


def test_tables_match_the_oracle():
    rows = gp.tutte_solve(gp.ArrivalLaw.from_dict({"family": "binary", "alpha": "1/5"}), 3, 2, "rational")
    assert rows[2][0] == "9/100"
    rep = gp.oracle_compare(gp.ArrivalLaw.from_dict({"family": "binary", "alpha": "1/5"}), 6, 3)
    assert rep["passed"] and rep["max_delta"] == 0.0
    assert [len(gp.enum_plane_trees(n)) for n in (1, 4, 6)] == [1, 5, 42]


def test_parametrization_at_one():
    law = gp.ArrivalLaw.geometric(0.2)
    assert gp.x_hat(law, 1.0) == pytest.approx(1 / 1.44)
    assert gp.F_at_one(law, 1.0) == pytest.approx(0.2 / 1.2)


def test_fixed_point_and_recursion_agree():
    law = gp.ArrivalLaw.geometric(0.2)
    fp = gp.solve_p_circ(law, 0.52)
    rde = gp.iterate_rde(law, 0.52, 60, 200)
    assert abs(fp["p_circ"] - rde["visits"][0]) < 1e-6
    assert gp.solve_p_circ(law, 0.56) is None


def test_simulation_is_reproducible():
    law = gp.ArrivalLaw.geometric(0.2)
    a = gp.run_experiment(law, 0.52, samples=5000, seed=3)
    b = gp.run_experiment(law, 0.52, samples=5000, seed=3)
    assert a["csv"] == b["csv"]
    assert a["conservation_violations"] == 0
    assert abs(a["p_visits"][0] - 0.795156) < 4 * a["se_visits"][0]


def test_threshold_curve_rows():
    rows = gp.threshold_curve("geometric", [0.1, 0.2])
    for alpha, t_c, crit, q_c in rows:
        assert t_c == pytest.approx((1 + alpha) / (4 * alpha))
        assert q_c == pytest.approx(0.5 * (1 + (1 - 3 * alpha) ** 1.5 / (1 + 9 * alpha)), abs=1e-9)


def test_quick_criterion():
    r = gp.run_criterion(2)
    assert r["passed"], r["detail"]
