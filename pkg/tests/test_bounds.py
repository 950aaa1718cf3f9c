import math

import numpy as np
import pytest

from driftstab.bounds import (
    ConstantOverflowError,
    DivergenceError,
    InapplicableError,
    TailBoundParams,
    UnsupportedOrderError,
    burkholder_constant,
    corollary2_bound,
    hitting_constant,
    p4_expectation_bound,
    p4_tail_probability,
    recentered_moment_bound,
    theorem1_bound,
    theorem1_constants,
    theorem4_constant,
    zeta,
)
from driftstab.core import DriftParams, ParameterError

# Frozen against a 50-digit mpmath evaluation of the same chain
# (oracle 4609777080210629353.7...).
GOLDEN_C_FINAL_311 = 4.6097770802106286e18
# Frozen direct summation of the crude tail series (1e7 terms, tail < 3e-5)
# for a=1, J=0, p=5, V=1, V'=1056, t=50.
GOLDEN_P4_TAIL_T50 = 399.03587143937131
# Closed form for the same parameters: with a=1 and lo - threshold = 1 the
# integrated series telescopes to 2 + (c_p V'/(p-1)) * zeta(1.5) / 1
# = 2 + (1024*1056/4) * zeta(3/2).
GOLDEN_P4_EXPECTATION = 706221.1022622401


def test_burkholder_values():
    assert burkholder_constant(2) == 1.0
    assert burkholder_constant(3) == 8.0
    assert burkholder_constant(4) == 81.0
    assert burkholder_constant(5) == 1024.0
    with pytest.raises(UnsupportedOrderError):
        burkholder_constant(1.5)


def test_zeta_closed_forms():
    assert abs(zeta(2.0) - math.pi ** 2 / 6) < 1e-14
    assert abs(zeta(4.0) - math.pi ** 4 / 90) < 1e-14
    assert abs(zeta(1.5) - 2.6123753486854883) < 1e-12
    assert abs(zeta(3.0) - 1.2020569031595943) < 1e-12
    assert zeta(1.001) >= 1000.0
    with pytest.raises(DivergenceError):
        zeta(1.0)
    with pytest.raises(DivergenceError):
        zeta(0.5)


def test_zeta_against_mpmath_grid():
    mp = pytest.importorskip("mpmath")
    for w in np.concatenate([np.linspace(1.01, 2.0, 25), np.linspace(2.1, 40.0, 25)]):
        ref = float(mp.zeta(float(w)))
        assert abs(zeta(float(w)) - ref) <= 1e-10 * max(1.0, abs(ref))


def test_chain_intermediate_values():
    bd = theorem1_constants(3.0, 1.0, 1.0)
    assert bd.c_p == 8.0
    assert bd.B == 16.0
    assert bd.b == 8.0 * (16.0 + 17.0 ** 3)
    assert bd.b == 39432.0
    assert bd.c_prime == pytest.approx(8.0 * 39432.0 * (9.0 / 8.0) ** 3, rel=1e-15)
    assert bd.c_prime == pytest.approx(449155.125, rel=1e-15)
    assert bd.C_prime == bd.c_prime
    assert bd.c_final == pytest.approx(GOLDEN_C_FINAL_311, rel=1e-12)


def test_chain_recompute_random():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        p = float(rng.uniform(2.1, 8.0))
        r = float(rng.uniform(0.05, 0.95) * (p - 1.0))
        V = float(rng.uniform(0.01, 20.0))
        bd = theorem1_constants(p, V, r)
        c_p = (p - 1.0) ** p
        B = 2.0 ** p * (1.0 + V)
        b = 2.0 ** p * (B + (1.0 + B) ** p)
        c_prime = c_p * b * (1.0 + 1.0 / c_p) ** p
        C_prime = max(1.0, c_prime)
        c_2 = c_p * b * (4.0 ** p + 4.0 ** (p - r) * r / (p - r))
        c_3 = 3.0 ** r * 4.0 ** p * b * (c_p * b + p / (p - r) + 3.0 ** r)
        c_4 = C_prime * c_3 * zeta(p / 2.0)
        K = 2.0 ** (p / 2.0) * c_2 * C_prime + c_4
        assert bd.K == pytest.approx(K, rel=1e-12)
        assert bd.c_final == pytest.approx(K * zeta(p - r), rel=1e-12)


def test_chain_monotonicity():
    for p in np.linspace(2.5, 6.0, 10):
        for r_frac in np.linspace(0.1, 0.9, 10):
            r = r_frac * (p - 1.0)
            prev = None
            for V in np.linspace(0.1, 10.0, 10):
                c = theorem1_constants(float(p), float(V), float(r)).c_final
                assert math.isfinite(c) and c > 0
                if prev is not None:
                    assert c >= prev
                prev = c


def test_chain_divergence_near_r_limit():
    moderate = theorem1_constants(3.0, 1.0, 1.0).c_final
    near = theorem1_constants(3.0, 1.0, 2.0 - 1e-9).c_final
    assert near > 1e6 * moderate
    with pytest.raises(InapplicableError):
        theorem1_constants(3.0, 1.0, 2.0)
    with pytest.raises(InapplicableError):
        theorem1_constants(2.0, 1.0, 0.5)


def test_chain_overflow_reported():
    with pytest.raises(ConstantOverflowError) as exc:
        theorem1_constants(200.0, 1e6, 1.0)
    assert exc.value.constant_name


def test_bound_scaling_identities():
    base = DriftParams(a=1.0, J=0.0, p=3.0, V=1.0, r=1.0)
    # Threshold shifts are additive.
    assert theorem1_bound(base.replace(J=5.0)) == pytest.approx(
        theorem1_bound(base) + 5.0, rel=1e-15
    )
    # Drift rescaling: c(p, a, V, 0, r) = a^r c(p, 1, V/a^p, 0, r).
    scaled = DriftParams(a=2.0, J=0.0, p=3.0, V=4.0, r=1.0)
    normalized = DriftParams(a=1.0, J=0.0, p=3.0, V=4.0 / 2.0 ** 3, r=1.0)
    assert theorem1_bound(scaled) == pytest.approx(
        2.0 * theorem1_bound(normalized), rel=1e-12
    )
    with pytest.raises(InapplicableError):
        theorem1_bound(base.replace(r=2.5))


def test_corollary2_adds_initial_overshoot():
    params = DriftParams(a=1.0, J=3.0, p=3.0, V=1.0, r=1.0)
    below = corollary2_bound(params, x0=2.0)
    above = corollary2_bound(params, x0=10.0)
    assert below == theorem1_bound(params.replace(r=1.0))
    assert above == pytest.approx(below + 7.0, rel=1e-15)


def test_theorem4_constant_properties():
    c = theorem4_constant(b=1.0, p=3.0, r=2.5)
    assert math.isfinite(c) and c > 0
    # r up to p is allowed here, unlike the uniform-moment chain.
    assert theorem4_constant(b=1.0, p=3.0, r=2.0) > 0
    assert theorem4_constant(b=2.0, p=3.0, r=1.0) > theorem4_constant(
        b=1.0, p=3.0, r=1.0
    )
    with pytest.raises(InapplicableError):
        theorem4_constant(b=1.0, p=2.0, r=1.0)
    with pytest.raises(InapplicableError):
        theorem4_constant(b=1.0, p=3.0, r=3.0)
    with pytest.raises(ParameterError):
        theorem4_constant(b=0.0, p=3.0, r=1.0)


def test_hitting_constant_values():
    # c_p b (1+1/c_p)^p = 8 * 1 * (9/8)^3 = 729/64 for p=3, b=1.
    assert hitting_constant(b=1.0, p=3.0) == pytest.approx(729.0 / 64.0, rel=1e-15)
    assert hitting_constant(b=1e-9, p=3.0) == 1.0  # floor at 1


def test_recentered_moment_bound():
    assert recentered_moment_bound(1.0, 3.0) == 72.0
    assert recentered_moment_bound(1.0, 5.0) == 1056.0
    with pytest.raises(ParameterError):
        recentered_moment_bound(0.0, 3.0)


def _p5_tail_params():
    params = DriftParams(a=1.0, J=0.0, p=5.0, V=1.0, r=1.0)
    return TailBoundParams(params=params, V_prime=recentered_moment_bound(1.0, 5.0))


def test_tail_bound_params_validation():
    params = DriftParams(a=1.0, J=0.0, p=5.0, V=1.0, r=1.0)
    with pytest.raises(ParameterError):
        TailBoundParams(params=params, V_prime=0.5)


def test_p4_tail_probability_golden():
    tb = _p5_tail_params()
    value = p4_tail_probability(tb, t=50.0)
    # Certified upper bound: dominates the frozen series value but stays tight.
    assert GOLDEN_P4_TAIL_T50 <= value <= GOLDEN_P4_TAIL_T50 * (1.0 + 1e-4)
    # Monotone decreasing in t.
    assert p4_tail_probability(tb, t=100.0) < value
    with pytest.raises(ParameterError):
        p4_tail_probability(tb, t=0.5)  # below J + V^(1/p)


def test_p4_expectation_bound_golden():
    tb = _p5_tail_params()
    value = p4_expectation_bound(tb)
    assert GOLDEN_P4_EXPECTATION <= value <= GOLDEN_P4_EXPECTATION * 1.01


def test_p4_expectation_requires_p_above_4():
    params = DriftParams(a=1.0, J=0.0, p=3.0, V=1.0, r=1.0)
    tb = TailBoundParams(params=params, V_prime=recentered_moment_bound(1.0, 3.0))
    with pytest.raises(InapplicableError):
        p4_expectation_bound(tb)
