import pytest

from driftstab import experiments
from driftstab.core import ParameterError


def criteria_map(result):
    return {c["name"]: c["passed"] for c in result["criteria"]}


def test_unknown_experiment():
    with pytest.raises(ParameterError):
        experiments.run_experiment("no-such-thing")


def test_registry_names():
    assert set(experiments.EXPERIMENTS) == {
        "sudan-growth",
        "amassed-growth",
        "reset-walk-tail",
        "theorem1-stability",
        "theorem4-tail",
        "lemma-suite",
        "open-question-sweep",
    }


def test_sudan_growth_small():
    result = experiments.run_experiment(
        "sudan-growth", horizon=60, n_traj=4000, mc_times=(10, 30)
    )
    passed = criteria_map(result)
    assert passed == {
        "exact-mean-n-over-3": True,
        "slope-one-third": True,
        "mc-within-4se-of-exact": True,
    }
    assert result["max_abs_error"] <= 1e-9
    assert abs(result["slope"] - 1.0 / 3.0) < 1e-6


def test_sudan_growth_deterministic():
    kw = dict(horizon=40, n_traj=2000, mc_times=(10, 20))
    a = experiments.run_experiment("sudan-growth", **kw)
    b = experiments.run_experiment("sudan-growth", **kw)
    assert a == b


def test_amassed_growth_small():
    result = experiments.run_experiment("amassed-growth", M_grid=(10, 100))
    assert all(criteria_map(result).values())
    rows = result["rows"]
    assert rows[0]["M"] == 10 and rows[1]["M"] == 100
    assert rows[1]["mean"] > rows[0]["mean"]


def test_reset_walk_tail_small():
    result = experiments.run_experiment(
        "reset-walk-tail",
        epsilon=0.5,
        n_max=1 << 18,
        fit_lo=1 << 12,
        fit_hi=1 << 17,
    )
    assert all(criteria_map(result).values())
    assert abs(result["slope"] - (-1.5)) <= 0.05


def test_theorem1_stability_small():
    result = experiments.run_experiment(
        "theorem1-stability", horizon=200, n_traj=5000
    )
    assert criteria_map(result)["uniform-moment-bound"]
    assert result["max_upper_estimate"] <= result["bound"]


def test_theorem4_tail_small():
    result = experiments.run_experiment(
        "theorem4-tail", t_grid=(2, 4, 8), n_traj=20_000
    )
    assert criteria_map(result)["tail-bound-all-t"]
    assert len(result["tables"]) == 2


def test_lemma_suite_small():
    result = experiments.run_experiment(
        "lemma-suite",
        n_traj=20_000,
        lemma7_n_grid=(10, 100),
        lemma8_x_grid=(1.0, 4.0),
        lemma8_horizon=32,
    )
    assert all(criteria_map(result).values())


def test_open_question_sweep_small():
    result = experiments.run_experiment(
        "open-question-sweep", a_grid=(0.5, 2.0), horizon=100
    )
    assert result["criteria"] == []
    assert len(result["rows"]) == 2
    for row in result["rows"]:
        assert row["sup_mean"] >= row["final_mean"] >= 0
        assert row["sup_mean"] > 0
