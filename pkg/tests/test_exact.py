import math

import numpy as np
import pytest

from driftstab import chains, exact
from driftstab.core import DriftParams, Kernel, ParameterError


def identity_kernel():
    return Kernel(
        transition=lambda n, x: [(x, 1.0)],
        state_kind="integer",
        description="identity",
    )


def test_distvector_validation():
    with pytest.raises(ParameterError):
        exact.DistVector(support=[2, 1], mass=[0.5, 0.5], time=0)
    with pytest.raises(ParameterError):
        exact.DistVector(support=[1, 2], mass=[0.5], time=0)
    with pytest.raises(ParameterError):
        exact.DistVector(support=[1], mass=[-0.1], time=0)
    d = exact.DistVector(support=[0, 3], mass=[0.25, 0.75], time=2)
    assert d.prob(3) == 0.75
    assert d.prob(1) == 0.0
    assert d.total_mass() == 1.0


def test_identity_fixed_point():
    laws = exact.propagate(identity_kernel(), exact.point_mass(7), horizon=20)
    for law in laws:
        assert np.array_equal(law.support, [7])
        assert law.mass[0] == 1.0


def test_sudan_marginals_exact():
    k = chains.build_sudan()
    laws = exact.propagate(k, exact.point_mass(0), horizon=60)
    for n in range(2, 61):
        law = laws[n]
        assert np.array_equal(law.support, [0, n])
        assert abs(law.prob(0) - 2.0 / 3.0) < 1e-12
        assert abs(law.prob(n) - 1.0 / 3.0) < 1e-12
        assert abs(exact.moment(law, 1.0) - n / 3.0) < 1e-12


def test_amassed_small_law():
    k = chains.build_amassed(3)
    law = exact.propagate(k, exact.point_mass(0), horizon=3)[-1]
    assert np.array_equal(law.support, [2, 3, 4])
    assert abs(law.prob(2) - 2.0 / 3.0) < 1e-15
    assert abs(law.prob(3) - 2.0 / 9.0) < 1e-15
    assert abs(law.prob(4) - 1.0 / 9.0) < 1e-15


def test_moment_variants():
    d = exact.DistVector(support=[-2, 4], mass=[0.5, 0.5], time=0)
    assert exact.moment(d, 2.0) == 8.0
    assert exact.moment(d, 2.0, positive_part=False) == 10.0
    assert exact.moment(d, 0.5) == 1.0
    lo, hi = exact.dropped_moment_range(d, 2.0, state_cap=10)
    assert (lo, hi) == (0.0, 0.0)


def test_mass_conservation_long_run():
    k = chains.build_reset_walk(0.5)
    laws = exact.propagate(k, exact.point_mass(0), horizon=1200)
    assert abs(laws[-1].total_mass() - 1.0) < 1e-10
    assert laws[-1].time == 1200


def test_state_cap_enforced():
    # Support doubles every step: x -> {2x, 2x+1}.
    k = Kernel(
        transition=lambda n, x: [(2 * x, 0.5), (2 * x + 1, 0.5)],
        state_kind="integer",
        description="doubling",
    )
    with pytest.raises(exact.ResourceError):
        exact.propagate(k, exact.point_mass(1), horizon=12, state_cap=100)


def test_real_kernel_rejected():
    k = Kernel(
        transition=lambda n, x: [(x, 1.0)], state_kind="real", description="real"
    )
    with pytest.raises(ParameterError):
        exact.propagate(k, exact.point_mass(0), horizon=1)


def test_stationary_reset_walk_structure():
    eps = 0.5
    res = exact.stationary_reset_walk(eps, n_max=4000)
    w = res.weights
    assert w[0] == 1.0 and w[1] == 1.0
    # Recursion w(n+1) = w(n) (1 - (1+eps)/(n+1)) for n >= 1.
    for n in (1, 2, 10, 100, 999):
        assert w[n + 1] == pytest.approx(w[n] * (1.0 - (1.0 + eps) / (n + 1.0)), rel=1e-12)
    # Flow balance: inflow to zero per excursion equals the outflow 1, up to
    # the truncated-tail bracket.
    n_arr = np.arange(1, len(w), dtype=float)
    inflow = math.fsum(w[1:] * (1.0 + eps) / (n_arr + 1.0))
    assert inflow <= 1.0 + 1e-12
    assert 1.0 - inflow <= res.tail_weight_upper
    # Polynomial tail: w(n) (n+1)^{1+eps} is nearly constant far out.
    ratio = (w[4000] * 4001.0 ** 1.5) / (w[1000] * 1001.0 ** 1.5)
    assert abs(ratio - 1.0) < 0.1
    # Normalization bracket is tight and orders correctly.
    assert res.norm_lower < res.norm_upper
    assert res.bracket_width / res.norm_lower < 0.05
    # pi_upper normalizes the retained weights by the lower norm, so the
    # retained part sums to exactly 1; pi_lower leaves room for the tail.
    assert math.fsum(res.pi_lower) < 1.0
    assert math.fsum(res.pi_upper) == pytest.approx(1.0, rel=1e-12)
    assert math.fsum(res.pi) < 1.0
    with pytest.raises(ParameterError):
        exact.stationary_reset_walk(1.5, 100)
    with pytest.raises(ParameterError):
        exact.stationary_reset_walk(0.5, 5)


def test_drift_report_reset_walk():
    k = chains.build_reset_walk(0.5)
    # Drift above zero is exactly -eps; the second moment grows with the state,
    # so C2 holds or fails depending on V at a fixed horizon.
    good = exact.drift_report(
        k, DriftParams(a=0.5, J=0.5, p=2.0, V=50.0, r=1.0), horizon=30
    )
    assert good.c1_pass and good.c2_pass and good.passed
    assert good.max_drift == pytest.approx(-0.5, abs=1e-12)
    bad = exact.drift_report(
        k, DriftParams(a=0.5, J=0.5, p=2.0, V=10.0, r=1.0), horizon=30
    )
    assert bad.c1_pass and not bad.c2_pass
    # The worst moment state is the largest reachable one.
    assert bad.moment_witness == (29, 29)
    x = 29.0
    q = 1.5 / (x + 1.0)
    assert bad.max_moment == pytest.approx((1.0 - q) + q * x ** 2, rel=1e-12)


def test_drift_report_truncation():
    k = chains.build_reset_walk(0.5)
    # Excluding the reset jumps (dX = -x) leaves only the +1 steps, so the
    # truncated drift is positive and C1 must fail.
    rep = exact.drift_report(
        k,
        DriftParams(a=0.5, J=0.5, p=2.0, V=1.0, r=1.0),
        horizon=20,
        truncation=lambda n, x: -x / 2.0,
    )
    assert rep.truncated
    assert not rep.c1_pass
    assert rep.max_drift > 0
    assert rep.c2_pass  # truncated moment is at most 1
