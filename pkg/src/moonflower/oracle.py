"""Brute-force ground truth for the test harness.

Nothing here reuses the search or LP code of the modules it checks; only
the plain data types are shared.  Every routine is deterministic and
refuses (raises ``BudgetExceeded``) rather than approximating.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .setfam import BudgetExceeded, SetFamily


@dataclass(frozen=True)
class OracleBudget:
    max_subsets: int = 5_000_000
    max_lp_vars: int = 64
    max_systems: int = 2_000_000


DEFAULT_BUDGET = OracleBudget()


@dataclass
class OracleResult:
    value: object
    witness: object = None
    budget_used: int = 0

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, Fraction):
                return f"{v.numerator}/{v.denominator}"
            if isinstance(v, dict):
                return {str(k): enc(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            return v
        return {"value": enc(self.value), "witness": enc(self.witness),
                "budget_used": self.budget_used}


def _bits(mask):
    return [i for i in range(mask.bit_length()) if (mask >> i) & 1]


# ---------------------------------------------------------------------------
# moonflower number by subfamily enumeration

def _all_have_private(masks) -> bool:
    for a, s in enumerate(masks):
        others = 0
        for b, t in enumerate(masks):
            if a != b:
                others |= t
        if not s & ~others:
            return False
    return True


def mf_bruteforce(fam: SetFamily, budget: OracleBudget = DEFAULT_BUDGET) -> OracleResult:
    """Largest subfamily in which every set has an element no other set has.

    Subfamilies are enumerated size by size.  Having a moonflower of size m
    implies having one of every smaller size, so the scan stops at the first
    size with none.
    """
    masks = [m for m in fam.members if m]
    used = 0
    best = 0
    witness = ()
    for size in range(1, len(masks) + 1):
        found = None
        for combo in itertools.combinations(range(len(masks)), size):
            used += 1
            if used > budget.max_subsets:
                raise BudgetExceeded("mf_bruteforce subset budget exceeded", best)
            if _all_have_private([masks[i] for i in combo]):
                found = combo
                break
        if found is None:
            break
        best = size
        witness = tuple(fam.members.index(masks[i]) for i in found)
    return OracleResult(best, witness, used)


# ---------------------------------------------------------------------------
# non-redundancy by coordinate enumeration

def nrd_bruteforce(code, budget: OracleBudget = DEFAULT_BUDGET) -> OracleResult:
    """Largest coordinate set on which the code contains every unit vector."""
    words = list(code.codewords)
    sup = 0
    for c in words:
        sup |= c
    coords = _bits(sup)
    if len(coords) > 24:
        raise BudgetExceeded("support too large for coordinate enumeration", 0)
    used = 0
    best = 0
    witness = ()
    for size in range(1, len(coords) + 1):
        found = None
        for combo in itertools.combinations(coords, size):
            used += 1
            if used > budget.max_subsets:
                raise BudgetExceeded("nrd_bruteforce subset budget exceeded", best)
            I = 0
            for i in combo:
                I |= 1 << i
            restricted = {c & I for c in words}
            if all((1 << i) in restricted for i in combo):
                found = combo
                break
        if found is None:
            break
        best = size
        witness = found
    return OracleResult(best, witness, used)


# ---------------------------------------------------------------------------
# exact game value

def phi_exact(fam: SetFamily, budget: OracleBudget = DEFAULT_BUDGET) -> OracleResult:
    """Exact covering-game value from a single normalised simplex run.

    Payoffs ``1[i in T] + 1`` are positive, so the minimiser's program
    ``max sum(y) s.t. sum_T A'(T,i) y_T <= 1`` starts feasible at the
    origin.  Its optimal tableau also yields the maximiser's strategy (the
    slack reduced costs).  Returns value and both strategies; witness is
    ``{"cover": Q, "smooth": D, "primal": .., "dual": ..}``.
    """
    members = list(fam.members)
    n = fam.n
    if not members:
        return OracleResult(Fraction(1), {"cover": {}, "smooth": {}, "primal": Fraction(1),
                                          "dual": Fraction(1)}, 0)
    if n == 0:
        return OracleResult(Fraction(0), {"cover": {}, "smooth": {0: Fraction(1)},
                                          "primal": Fraction(0), "dual": Fraction(0)}, 0)
    f = len(members)
    if f + n > budget.max_lp_vars:
        raise BudgetExceeded("phi_exact LP too large", None)
    one = Fraction(1)
    zero = Fraction(0)
    # rows: coordinates i; columns: y_T (f) then slack (n) then rhs
    tab = []
    for i in range(n):
        row = [Fraction(((m >> i) & 1) + 1) for m in members]
        row += [one if j == i else zero for j in range(n)]
        row.append(one)
        tab.append(row)
    obj = [-one] * f + [zero] * n + [zero]
    basis = [f + i for i in range(n)]
    pivots = 0
    while True:
        enter = next((j for j in range(f + n) if obj[j] < 0), None)
        if enter is None:
            break
        leave = None
        for r in range(n):
            a = tab[r][enter]
            if a > 0:
                ratio = tab[r][-1] / a
                if leave is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    leave, best = r, ratio
        pr = tab[leave]
        pv = pr[enter]
        pr = [v / pv for v in pr]
        tab[leave] = pr
        for r in range(n):
            if r != leave and tab[r][enter] != 0:
                g = tab[r][enter]
                tab[r] = [a - g * b for a, b in zip(tab[r], pr)]
        g = obj[enter]
        obj = [a - g * b for a, b in zip(obj, pr)]
        basis[leave] = enter
        pivots += 1
    total = obj[-1]
    scale = 1 / total
    y = [zero] * f
    for r, b in enumerate(basis):
        if b < f:
            y[b] = tab[r][-1]
    D = {t: y[t] * scale for t in range(f) if y[t]}
    Q = {i: obj[f + i] * scale for i in range(n) if obj[f + i]}
    value = scale - 1
    primal = min(sum((Q.get(i, zero) for i in _bits(m)), zero) for m in members)
    dual = max(sum((D.get(t, zero) for t in range(f) if (members[t] >> i) & 1), zero)
               for i in range(n))
    return OracleResult(value, {"cover": Q, "smooth": D, "primal": primal, "dual": dual}, pivots)


# ---------------------------------------------------------------------------
# minimum sparsifier by subset + vertex enumeration

def _solve(rows, rhs):
    """Gaussian elimination over Fractions; ``None`` if singular."""
    k = len(rows)
    M = [list(r) + [b] for r, b in zip(rows, rhs)]
    for c in range(k):
        piv = next((r for r in range(c, k) if M[r][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        pv = M[c][c]
        M[c] = [v / pv for v in M[c]]
        for r in range(k):
            if r != c and M[r][c] != 0:
                g = M[r][c]
                M[r] = [a - g * b for a, b in zip(M[r], M[c])]
    return [M[r][k] for r in range(k)]


def _weights_feasible(T, words, eps, budget_left):
    """Find ``alpha >= 0`` on ``T`` matching every word within ``1 +- eps``.

    The feasible region is a bounded polyhedron (every coordinate of ``T``
    lies in some word), so if nonempty it has a vertex; vertices are found by
    solving every choice of ``|T|`` tight constraints.
    """
    d = len(T)
    cons = []  # (coeffs, bound, sense) meaning coeffs . a  sense  bound
    for c in words:
        wt = bin(c).count("1")
        row = [Fraction((c >> i) & 1) for i in T]
        cons.append((row, (1 - eps) * wt, ">="))
        cons.append((row, (1 + eps) * wt, "<="))
    for j in range(d):
        row = [Fraction(int(j == l)) for l in range(d)]
        cons.append((row, Fraction(0), ">="))

    def ok(a):
        for row, b, s in cons:
            v = sum((x * y for x, y in zip(row, a)), Fraction(0))
            if (s == ">=" and v < b) or (s == "<=" and v > b):
                return False
        return True

    used = 0
    for choice in itertools.combinations(range(len(cons)), d):
        used += 1
        if used > budget_left:
            raise BudgetExceeded("min_sparsifier vertex budget exceeded", None)
        a = _solve([cons[i][0] for i in choice], [cons[i][1] for i in choice])
        if a is not None and ok(a):
            return a, used
    return None, used


def min_sparsifier_bruteforce(code, epsilon, budget: OracleBudget = DEFAULT_BUDGET,
                              max_support: int = 16) -> OracleResult:
    """Smallest ``|T|`` admitting weights that ``epsilon``-sparsify ``code``.

    Sizes are tried in increasing order, so the first feasible size is the
    minimum.  Witness is ``(T, alpha)`` with rational weights.
    """
    eps = Fraction(str(epsilon)) if isinstance(epsilon, float) else Fraction(epsilon)
    words = [c for c in code.codewords if c]
    sup = 0
    for c in words:
        sup |= c
    coords = _bits(sup)
    if len(coords) > max_support:
        raise BudgetExceeded(f"support {len(coords)} exceeds {max_support}", None)
    used = 0
    for size in range(0, len(coords) + 1):
        for T in itertools.combinations(coords, size):
            tm = 0
            for i in T:
                tm |= 1 << i
            if any(not (c & tm) for c in words):
                continue
            alpha, u = _weights_feasible(T, words, eps, budget.max_systems - used)
            used += u
            if alpha is not None:
                return OracleResult(size, (T, dict(zip(T, alpha))), used)
    raise AssertionError("the identity weighting is always feasible")


# ---------------------------------------------------------------------------
# Monte Carlo binomial tail

@dataclass
class TailEstimate:
    t: int
    delta: float
    trials: int
    empirical: float
    band: float
    exact: float = field(default=float("nan"))


def binomial_tail_exact(t: int, delta: float) -> float:
    """``Pr[|2X - t| > delta]`` for ``X ~ Bin(t, 1/2)``, by summation."""
    total = 0
    for x in range(t + 1):
        if abs(2 * x - t) > delta:
            total += math.comb(t, x)
    return total / 2 ** t


def chernoff_montecarlo(t: int, delta: float, trials: int = 100_000, seed: int = 0) -> TailEstimate:
    if trials < 10_000:
        raise ValueError("need at least 10^4 trials")
    rng = np.random.default_rng(seed)
    x = rng.binomial(t, 0.5, size=trials)
    emp = float(np.mean(np.abs(2 * x - t) > delta))
    band = 3 * math.sqrt(max(emp * (1 - emp), 1.0 / trials) / trials)
    return TailEstimate(t, delta, trials, emp, band, binomial_tail_exact(t, delta))
