import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moonflower.setfam import FamilyFormatError, elements, to_mask
from moonflower.sparsify import (BuildFailed, ChainCodeSpec, Code, Sparsifier, SparsifierConfig,
                                 audit_build, build_parameters, build_sparsifier,
                                 certify_lower_bound, chain_lengths, chernoff_bound, estimate,
                                 format_code, gen_chain_code, is_non_redundant, nrd, parse_code,
                                 random_bounded_nrd_code, resolve_k, verify_sparsifier)


def unit_code(k, n):
    return Code(n, tuple(1 << (i * (n // k)) for i in range(k)))


def linear_code(gens, n):
    words = set()
    for coeffs in itertools.product((0, 1), repeat=len(gens)):
        w = 0
        for c, g in zip(coeffs, gens):
            if c:
                w ^= g
        words.add(w)
    return Code(n, tuple(words))


# -- codes and files -----------------------------------------------------------

def test_code_dedup_and_range():
    c = Code(4, (3, 3, 1))
    assert c.codewords == (1, 3)
    with pytest.raises(ValueError):
        Code(2, (4,))


def test_code_parse_sparse_and_dense():
    c = parse_code("n 4\n0 2\n0110\n\n")
    assert sorted(c.codewords) == [0, to_mask([0, 2]), to_mask([1, 2])]
    assert parse_code(format_code(c)) == c


@pytest.mark.parametrize("text", ["", "n\n", "n 3\n1 7\n", "n 3\nab\n"])
def test_code_parse_errors(text):
    with pytest.raises(FamilyFormatError):
        parse_code(text)


# -- non-redundancy ------------------------------------------------------------

def test_nrd_unit_vectors():
    r = nrd(unit_code(5, 20))
    assert r.value == 5 and r.exact
    assert is_non_redundant(unit_code(5, 20), r.coords)


def test_nrd_linear_code_dimension():
    gens = [0b000111, 0b011001, 0b101010]
    r = nrd(linear_code(gens, 6))
    assert r.value == 3


def test_nrd_chain_code():
    code, spec = gen_chain_code(12, 3, 0.5)
    assert nrd(code).value == 3


# -- estimates and verification ------------------------------------------------

def test_estimate():
    assert estimate(Sparsifier(4, {}), {0, 1}) == 0
    assert estimate(Sparsifier(8, {0: 1, 1: 2}), {0, 1, 5}) == 3


def test_verify_identity_and_empty():
    code = Code(6, (0b111, 0b100001, 0b010000))
    rep = verify_sparsifier(code, Sparsifier.identity(6), 0.1)
    assert rep.passed and rep.max_rel_err == 0
    rep = verify_sparsifier(code, Sparsifier(6, {}), 0.1)
    assert not rep.passed and rep.max_rel_err == 1
    assert len(rep.violators) == 3


def test_verify_exact_boundary():
    code = Code(4, (0b1111,))
    sp = Sparsifier(4, {0: Fraction(5, 1)})
    assert verify_sparsifier(code, sp, 0.25).passed
    sp = Sparsifier(4, {0: Fraction(51, 10)})
    assert not verify_sparsifier(code, sp, 0.25).passed


def test_sparsifier_json_roundtrip():
    sp = Sparsifier(5, {0: 1, 3: Fraction(3, 2)}, 2, {0: 0, 3: "residual"}, 7, {"a": 1})
    back = Sparsifier.from_json(json.loads(sp.dumps()))
    assert back.entries == sp.entries and back.provenance == sp.provenance
    assert back.seed == 7 and back.rounds == 2


# -- builder -------------------------------------------------------------------

def test_config_range():
    SparsifierConfig(epsilon=0.25)
    for eps in (0, 0.3, 0.5):
        with pytest.raises(ValueError):
            SparsifierConfig(epsilon=eps)


def test_parameters():
    p = build_parameters(1024, 3, SparsifierConfig(epsilon=0.2))
    assert p.R == 10
    assert p.w_star == math.ceil(4 * (3 * math.log2(15) + math.log2(10)) / 0.04)
    assert p.eta0 == pytest.approx(0.2 / (100 * math.log2(2 * p.w_star)))
    assert p.round_error(1) == 0
    assert p.eta_large(10**9) < 0.25
    assert build_parameters(2, 2, SparsifierConfig()).log_R == 0


def test_build_unit_vectors():
    code = unit_code(8, 4096)
    sp, log = build_sparsifier(code, SparsifierConfig(epsilon=0.2))
    assert len(sp) == 8
    assert all(w == 1 for w in sp.entries.values())
    assert verify_sparsifier(code, sp, 0.2).max_rel_err == 0
    assert log.audit.passed


def test_build_all_ones():
    n = 1024
    code = Code(n, ((1 << n) - 1,))
    sp, log = build_sparsifier(code, SparsifierConfig(epsilon=0.25, max_build_retries=5))
    assert verify_sparsifier(code, sp, 0.25).max_rel_err <= 0.25
    assert len(log.attempts) <= 5


def test_build_randomized_path():
    rng = np.random.default_rng(3)
    code = random_bounded_nrd_code(512, 24, 4, rng)
    cfg = SparsifierConfig(epsilon=0.25, w_min=8, w_star=64, eta0=0.05, require_audit=False,
                           max_build_retries=20, seed=1)
    sp, log = build_sparsifier(code, cfg)
    assert verify_sparsifier(code, sp, 0.25).passed
    assert any(rl.layers for rl in log.rounds)


def test_build_failure_reports_best():
    code = Code(64, ((1 << 64) - 1,))
    cfg = SparsifierConfig(epsilon=0.01, w_min=1, w_star=2, eta0=0.2, require_audit=True,
                           max_build_retries=2, max_final=0)
    with pytest.raises(BuildFailed) as exc:
        build_sparsifier(code, cfg)
    assert exc.value.best is not None and len(exc.value.log.attempts) == 2


def test_resolve_k_from_nrd():
    code = unit_code(4, 16)
    assert resolve_k(code, SparsifierConfig()) == (5, "nrd")


def test_audit_flags_bad_history():
    code = Code(8, ((1 << 8) - 1,))
    params = build_parameters(8, 2, SparsifierConfig(w_min=1, w_star=2, eta0=0.01))
    # drop everything in round 0 without capturing it
    U_hist = [(1 << 8) - 1] + [0] * params.R
    aud = audit_build(code, params, [0] * params.R, U_hist, 0.2)
    assert not aud.passed and aud.step_violations


# -- chain code and certifier ----------------------------------------------------

def test_chain_lengths():
    assert chain_lengths(4, 0.5) == (1, 2)
    a = chain_lengths(100, 0.25)
    assert all(b > 1.25 * x for x, b in zip(a, a[1:]))


def test_chain_code_example():
    code, spec = gen_chain_code(8, 2, 0.5)
    assert spec.m == 4 and spec.a == (1, 2) and spec.s == 2
    assert sorted(tuple(elements(c)) for c in code.codewords) == [(0,), (0, 1), (4,), (4, 5)]
    assert ChainCodeSpec.from_json(spec.to_json()) == spec


def test_chain_code_bad_args():
    with pytest.raises(ValueError):
        gen_chain_code(9, 2, 0.5)
    with pytest.raises(ValueError):
        gen_chain_code(2, 2, 0.5)


def test_certify_identity():
    code, spec = gen_chain_code(8, 2, 0.5)
    res = certify_lower_bound(spec, Sparsifier.identity(8), 0.5)
    assert res.verdict == "consistent" and res.T_size == 8 >= res.threshold


def test_certify_empty():
    code, spec = gen_chain_code(8, 2, 0.5)
    res = certify_lower_bound(spec, Sparsifier(8, {}), 0.5)
    assert res.verdict == "invalid"
    assert res.witness["chain"] == 1 and res.witness["j"] == 1
    assert res.witness["weights"] == [1, 2]


def test_certify_never_rejects_valid():
    code, spec = gen_chain_code(8, 2, 0.5)
    for T in itertools.combinations(range(8), 2):
        for w in (Fraction(1), Fraction(6, 5), Fraction(3, 2)):
            sp = Sparsifier(8, {i: w for i in T})
            if verify_sparsifier(code, sp, 0.5).passed:
                assert certify_lower_bound(spec, sp, 0.5).verdict != "invalid"


def test_chernoff_bound():
    assert chernoff_bound(3, 3) == pytest.approx(2 * math.exp(-1))
    vals = [chernoff_bound(1, d) for d in (1, 2, 4, 8)]
    assert vals == sorted(vals, reverse=True) and vals[-1] < 1e-8
    with pytest.raises(ValueError):
        chernoff_bound(0, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_random_code_nrd_bounded(seed, d):
    code = random_bounded_nrd_code(40, 12, d, np.random.default_rng(seed))
    assert nrd(code).value <= d
