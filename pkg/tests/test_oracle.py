import random
from fractions import Fraction

import pytest

from moonflower.oracle import (OracleBudget, binomial_tail_exact, chernoff_montecarlo,
                               min_sparsifier_bruteforce, mf_bruteforce, nrd_bruteforce,
                               phi_exact)
from moonflower.setfam import BudgetExceeded, SetFamily, gen_lower_bound_family, to_mask
from moonflower.sparsify import Code, gen_chain_code, verify_sparsifier, Sparsifier


def fam(n, *sets):
    return SetFamily(n, tuple(sets))


def test_mf_bruteforce_examples():
    assert mf_bruteforce(gen_lower_bound_family(3, 2)).value == 2
    assert mf_bruteforce(fam(4, {0}, {1}, {2}, {3})).value == 4
    # {3}, {0,1}, {0,2} have private elements 3, 1, 2; the full triangle has none
    r = mf_bruteforce(fam(4, {0, 1}, {1, 2}, {0, 2}, {3}))
    assert r.value == 3


def test_mf_bruteforce_budget():
    with pytest.raises(BudgetExceeded):
        mf_bruteforce(gen_lower_bound_family(4, 3), OracleBudget(max_subsets=5))


def test_nrd_bruteforce_examples():
    ident = Code(5, tuple(1 << i for i in range(5)))
    assert nrd_bruteforce(ident).value == 5
    code, _ = gen_chain_code(8, 2, 0.5)
    assert nrd_bruteforce(code).value == 2


def test_phi_exact_examples():
    r = phi_exact(fam(2, {0}, {1}))
    assert r.value == Fraction(1, 2)
    assert r.witness["primal"] == r.witness["dual"] == Fraction(1, 2)
    assert phi_exact(fam(2, {0, 1})).value == 1
    assert phi_exact(fam(3, set(), {1})).value == 0


def test_phi_exact_json():
    d = phi_exact(fam(2, {0}, {1})).to_json()
    assert d["value"] == "1/2"


def test_phi_exact_certificates_random():
    rnd = random.Random(5)
    for _ in range(50):
        n = rnd.randint(1, 6)
        f = SetFamily(n, tuple(rnd.randrange(1 << n) for _ in range(rnd.randint(1, 6))))
        r = phi_exact(f)
        assert r.witness["primal"] == r.value == r.witness["dual"]
        assert sum(r.witness["cover"].values(), Fraction(0)) == 1


def test_min_sparsifier_examples():
    n = 6
    r = min_sparsifier_bruteforce(Code(n, ((1 << n) - 1,)), Fraction(1, 10))
    assert r.value == 1
    T, alpha = r.witness
    assert sum(alpha.values()) >= Fraction(9, 10) * n
    k = 4
    r = min_sparsifier_bruteforce(Code(k, tuple(1 << i for i in range(k))), Fraction(1, 4))
    assert r.value == k


def test_min_sparsifier_witness_verifies():
    code = Code(5, (0b00111, 0b11000, 0b11111))
    r = min_sparsifier_bruteforce(code, Fraction(1, 5))
    T, alpha = r.witness
    assert verify_sparsifier(code, Sparsifier(5, alpha), Fraction(1, 5)).passed


def test_min_sparsifier_support_cap():
    with pytest.raises(BudgetExceeded):
        min_sparsifier_bruteforce(Code(20, ((1 << 20) - 1,)), 0.1, max_support=16)


def test_chernoff_montecarlo_examples():
    est = chernoff_montecarlo(1, 0.5, 10_000, seed=1)
    assert est.empirical == 1.0
    est = chernoff_montecarlo(4, 4, 100_000, seed=2)
    assert est.exact == 0.0
    est = chernoff_montecarlo(4, 3.5, 100_000, seed=2)
    assert est.exact == pytest.approx(2 / 16)
    assert abs(est.empirical - est.exact) <= est.band
    with pytest.raises(ValueError):
        chernoff_montecarlo(4, 1, 100)


def test_binomial_tail_exact():
    assert binomial_tail_exact(2, 1) == pytest.approx(0.5)
