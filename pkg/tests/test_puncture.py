import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from moonflower.cover import choose_p, h_bound
from moonflower.puncture import (IterationConstants, ReductionConfig, extremal_bound,
                                 iterated_puncture, one_step_reduce, residual_traces,
                                 run_reduction, step_budget, trace_budget,
                                 trace_puncture_to_empty, weight_scale_puncture)
from moonflower.setfam import SetFamily, gen_lower_bound_family, popcount, to_mask


def test_config_validation():
    for bad in (dict(p=0), dict(delta=0.5), dict(theta=1), dict(max_retries=0)):
        with pytest.raises(ValueError):
            ReductionConfig(**bad)


def test_step_budget():
    # (2/p)(w ln 2 + ln 16) with p = 1/4, w = 3 is about 38.8
    assert step_budget(1000, 3, 0.25, 1 / 16) == 39
    assert step_budget(5, 3, 0.25, 1 / 16) == 5


def test_empty_family():
    tr = one_step_reduce(SetFamily(4, ()), ReductionConfig())
    assert tr.I == 0 and tr.covered_count == 0 and tr.attained_bound


def test_single_member():
    tr = one_step_reduce(SetFamily(1, (1,)), ReductionConfig(p=0.5))
    assert tr.I == 1
    assert tr.covered_count == 1


def test_lower_bound_family_attains():
    f = gen_lower_bound_family(4, 3)
    p = choose_p(0.25)
    M = h_bound(max(f.n, 4), 4, p)
    tr = one_step_reduce(f, ReductionConfig(p=p, delta=1 / 16, max_retries=20, seed=0), M)
    assert tr.attained_bound
    assert tr.attempts <= 20
    assert tr.M_budget == M


def test_trace_json():
    tr = one_step_reduce(gen_lower_bound_family(3, 2), ReductionConfig(seed=3))
    d = json.loads(tr.dumps())
    assert d["seed"] == tr.seed and d["I"] == sorted(d["I"])


families = st.integers(2, 8).flatmap(
    lambda n: st.lists(st.integers(1, (1 << n) - 1), min_size=1, max_size=8)
    .map(lambda ms: SetFamily(n, tuple(ms))))


@settings(max_examples=40, deadline=None)
@given(families, st.integers(0, 10**6), st.sampled_from([0.1, 0.25, 0.5]))
def test_trace_invariants(f, seed, p):
    tr = run_reduction(f, ReductionConfig(p=p), seed)
    h = tr.potential_history
    assert all(a >= b for a, b in zip(h, h[1:]))
    assert tr.I_size <= tr.t
    assert h[0] >= 2 * len(f)
    assert tr.covered_count == sum(1 for m in f.members if not m & ~tr.I)


def test_trace_puncture_single():
    tr = trace_puncture_to_empty(SetFamily(1, (1,)), 1)
    assert tr.I == 1 and tr.residual == 0
    tr = trace_puncture_to_empty(SetFamily(3, ()), 0.5)
    assert tr.I == 0 and tr.residual == 0


@settings(max_examples=30, deadline=None)
@given(families, st.integers(0, 1000))
def test_trace_puncture_residual_bound(f, seed):
    tr = trace_puncture_to_empty(f, 0.25, seed=seed, max_retries=5)
    assert tr.residual == residual_traces(f, tr.I)
    assert tr.t == trace_budget(f.n, len(f), f.max_set_size, 0.25)
    if tr.attained_bound:
        assert tr.residual <= tr.t * tr.M_measured


def test_weight_scale_empty_layer():
    out = weight_scale_puncture(SetFamily(10, ()), 3, 2, 0.1)
    assert out.I == 0 and out.residual == 0


def test_weight_scale_disjoint_layer():
    # k - 1 = 3 disjoint sets of size 3 in (w, 2w] for w = 2
    sets = [to_mask(range(3 * i, 3 * i + 3)) for i in range(3)]
    f = SetFamily(9, tuple(sets))
    out = weight_scale_puncture(f, 4, 2, 0.2, seed=1)
    assert out.attained
    assert out.residual == 0
    assert out.I == f.support


def test_weight_scale_rejects_bad_layer():
    with pytest.raises(ValueError):
        weight_scale_puncture(SetFamily(4, (1,)), 2, 2, 0.1)
    with pytest.raises(ValueError):
        weight_scale_puncture(SetFamily(4, ()), 2, 2, 0.3)


def test_extremal_bound():
    assert extremal_bound(3, 3, 2) == 8
    assert extremal_bound(8, 2, 1) == 16
    assert extremal_bound(2, 4, 1) == 4
    assert isinstance(extremal_bound(5, 2, 1.5), Fraction)


def test_iterated_w1():
    f = SetFamily(5, (1, 2, 4))
    rep = iterated_puncture(f, 4)
    assert rep.stop_reason == "singletons"
    assert rep.bound_holds


def test_iterated_empty():
    rep = iterated_puncture(SetFamily(3, ()), 3, 2)
    assert rep.stop_reason == "empty" and rep.bound_holds


@pytest.mark.parametrize("k, w", [(4, 3), (3, 4), (5, 2)])
def test_iterated_lower_bound_family(k, w):
    f = gen_lower_bound_family(k, w)
    rep = iterated_puncture(f, k, w, IterationConstants(seed=1))
    assert rep.bound_holds
    assert rep.rounds <= (2 ** w if w <= k else 10)
    assert rep.universe_size <= f.support_size
    assert popcount(rep.universe) <= 4 * max(k, w)
