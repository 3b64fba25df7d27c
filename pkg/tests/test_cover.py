import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from moonflower import lp
from moonflower.cover import (Distribution, FamilyDistribution, amplification_diagnostic,
                              choose_p, entropy_bits, entropy_rate, h_bound, is_p_covered,
                              peel_exceptional, phi_value, smooth_distribution)
from moonflower.setfam import SetFamily, gen_lower_bound_family


def fam(n, *sets):
    return SetFamily(n, tuple(sets))


# -- lp ---------------------------------------------------------------------

def test_lp_simple_max():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    res = lp.maximize([1, 1], [[1, 2], [3, 1]], [4, 6])
    assert res.value == Fraction(14, 5)
    assert res.x == [Fraction(8, 5), Fraction(6, 5)]


def test_lp_equality_and_ge():
    # max -x s.t. x + y = 3, y <= 1  ->  x = 2
    res = lp.maximize([-1, 0], [[0, 1]], [1], [[1, 1]], [3])
    assert res.x == [2, 1]
    res = lp.maximize([-1, 0], [[0, 1]], [1], [[1, 1]], [3], exact=False)
    assert res.x[0] == pytest.approx(2)


def test_lp_infeasible_and_unbounded():
    with pytest.raises(lp.Infeasible):
        lp.maximize([1], [[1]], [-1])
    with pytest.raises(lp.Unbounded):
        lp.maximize([1, 0], [[-1, 1]], [1])
    assert lp.feasible([[1]], [-1]) is None


# -- game value ---------------------------------------------------------------

def test_phi_single_set():
    r = phi_value(fam(2, {0, 1}))
    assert r.value == r.dual_value == 1


def test_phi_two_singletons():
    f = fam(2, {0}, {1})
    r = phi_value(f)
    assert r.value == r.dual_value == Fraction(1, 2)
    assert r.cover.weights == {0: Fraction(1, 2), 1: Fraction(1, 2)}
    assert r.smooth.weights == {0: Fraction(1, 2), 1: Fraction(1, 2)}


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_phi_disjoint_singletons(n):
    r = phi_value(SetFamily(n, tuple(1 << i for i in range(n))))
    assert r.value == Fraction(1, n)


def test_phi_degenerate_inputs():
    r = phi_value(SetFamily(3, ()))
    assert r.value == 1 and "empty_family" in r.flags
    r = phi_value(fam(2, set(), {0}))
    assert r.value == 0 and "empty_member" in r.flags


def test_phi_lower_bound_family():
    assert phi_value(gen_lower_bound_family(4, 3)).value == Fraction(3, 5)


def test_phi_json_roundtrip():
    r = phi_value(fam(3, {0}, {1, 2}))
    d = r.to_json()
    assert Distribution.from_json(d["cover"]) == r.cover
    assert FamilyDistribution.from_json(d["smooth"]) == r.smooth


def test_smooth_distribution_examples():
    f = fam(2, {0}, {1})
    D = smooth_distribution(f, Fraction(3, 5))
    assert D.weights == {0: Fraction(1, 2), 1: Fraction(1, 2)}
    assert smooth_distribution(fam(2, {0, 1}), Fraction(1, 2)) is None
    k = 4
    singles = SetFamily(k, tuple(1 << i for i in range(k)))
    D = smooth_distribution(singles, Fraction(2, k))
    assert D.max_coverage(singles) == Fraction(1, k)
    with pytest.raises(ValueError):
        smooth_distribution(f, 1)


def test_is_p_covered():
    f = fam(2, {0}, {1})
    assert is_p_covered(f, Fraction(1, 2))
    assert not is_p_covered(f, Fraction(2, 3))


# -- peeling ------------------------------------------------------------------

def test_peel_already_covered():
    res = peel_exceptional(fam(2, {0, 1}), Fraction(1, 2))
    assert res.exceptional == ()
    assert "already_covered" in res.flags


def test_peel_two_singletons():
    f = fam(2, {0}, {1})
    res = peel_exceptional(f, Fraction(9, 10))
    assert res.exceptional == (0, 1)
    assert res.tau_star == Fraction(1, 2)
    assert res.entropy_bits == pytest.approx(1.0)
    assert len(res.exceptional) <= 2 ** res.entropy_bits


def test_peel_only_empty_member():
    res = peel_exceptional(fam(3, set()), Fraction(1, 2))
    assert res.exceptional == (0,)
    assert res.cover.total() == 1


def test_peel_rejects_bad_p():
    with pytest.raises(ValueError):
        peel_exceptional(fam(1, {0}), 0)


families = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.integers(0, (1 << n) - 1), min_size=1, max_size=6)
    .map(lambda ms: SetFamily(n, tuple(ms))))


@settings(max_examples=80, deadline=None)
@given(families, st.integers(1, 99))
def test_peel_contract(f, u):
    phi = phi_value(f).value
    if phi >= 1:
        return
    p = phi + (1 - phi) * Fraction(u, 100)
    res = peel_exceptional(f, p)
    S = set(res.exceptional)
    assert S
    for i, m in enumerate(f.members):
        if i not in S:
            assert res.cover.mass(m) >= p
    assert len(S) * res.tau_star <= 1


@settings(max_examples=60, deadline=None)
@given(families)
def test_float_mode_matches_exact(f):
    ex = phi_value(f, exact=True)
    fl = phi_value(f, exact=False)
    assert abs(fl.value - float(ex.value)) < 1e-9
    assert abs(fl.value - fl.dual_value) < 1e-9


# -- entropy helpers --------------------------------------------------------

@pytest.mark.parametrize("weights, bits", [
    ([0.25] * 4, 2.0), ([1.0], 0.0), ([0.5, 0.25, 0.25], 1.5), ([0.5, 0.5, 0.0], 1.0),
])
def test_entropy_bits(weights, bits):
    assert entropy_bits(FamilyDistribution(dict(enumerate(weights)))) == pytest.approx(bits)


def test_choose_p():
    assert choose_p(0.25) == pytest.approx(1 / 64)
    assert entropy_rate(1 / 64) == pytest.approx(6 / 64)
    assert choose_p(1 / 8) == pytest.approx(1 / 160)
    assert entropy_rate(choose_p(1 / 8)) <= 1 / 8
    with pytest.raises(ValueError):
        choose_p(0.5)


def test_h_bound():
    assert h_bound(8, 2, 0.25) == pytest.approx(2.0)
    assert h_bound(5, 5, 0.1) == 0
    with pytest.raises(ValueError):
        h_bound(2, 3, 0.1)


def test_amplification_point_mass():
    f = fam(2, {0}, {1})
    rep = amplification_diagnostic(f, FamilyDistribution({0: 1.0}), 0.5)
    assert rep.ratio == 0


def test_amplification_singletons():
    k = 4
    f = SetFamily(k, tuple(1 << i for i in range(k)))
    D = FamilyDistribution({i: 1 / k for i in range(k)})
    rep = amplification_diagnostic(f, D, 1 / k)
    assert rep.closure_size == 2 ** k
    assert rep.ratio == pytest.approx(math.log2(k) / (entropy_rate(1 / k) * k))
    assert rep.ratio == pytest.approx(1.0)
