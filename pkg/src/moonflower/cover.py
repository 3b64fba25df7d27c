"""Covering/smoothness game on a set family.

The column player picks a coordinate distribution ``Q`` and scores
``min_T Q(T)``; the row player picks a member distribution ``D`` and
concedes ``max_i Pr_D[i in T]``.  Both sides are solved as separate LPs so
their optimal values can be compared directly.  All logarithms are base 2.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import lp
from .setfam import BudgetExceeded, SetFamily, elements, union_closure

PEEL_TIE_TOL = 1e-9
FLOAT_COVER_TOL = 1e-9


def _num(v, exact):
    if exact:
        return v if isinstance(v, Fraction) else Fraction(v)
    return float(v)


@dataclass(frozen=True)
class Distribution:
    """Probability weights on coordinates (``Q``)."""

    weights: dict

    def __getitem__(self, i):
        return self.weights.get(i, 0)

    def mass(self, mask: int):
        return sum((self.weights.get(i, 0) for i in elements(mask)), 0)

    def total(self):
        return sum(self.weights.values(), 0)

    def to_json(self) -> dict:
        return {str(i): _encode(v) for i, v in sorted(self.weights.items())}

    @classmethod
    def from_json(cls, data: dict) -> "Distribution":
        return cls({int(i): _decode(v) for i, v in data.items()})


@dataclass(frozen=True)
class FamilyDistribution:
    """Probability weights on family members (by member index)."""

    weights: dict

    def __getitem__(self, i):
        return self.weights.get(i, 0)

    def coverage(self, fam: SetFamily, i: int):
        """``Pr_{T~D}[i in T]``."""
        bit = 1 << i
        return sum((v for t, v in self.weights.items() if fam.members[t] & bit), 0)

    def max_coverage(self, fam: SetFamily):
        return max((self.coverage(fam, i) for i in elements(fam.support)), default=0)

    def total(self):
        return sum(self.weights.values(), 0)

    def to_json(self) -> dict:
        return {str(i): _encode(v) for i, v in sorted(self.weights.items())}

    @classmethod
    def from_json(cls, data: dict) -> "FamilyDistribution":
        return cls({int(i): _decode(v) for i, v in data.items()})


def _encode(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return float(v)


def _decode(v):
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


@dataclass
class PhiResult:
    value: object          # primal optimum, max_Q min_T Q(T)
    dual_value: object     # min_D max_i Pr_D[i in T]
    cover: Distribution
    smooth: FamilyDistribution
    exact: bool
    flags: tuple = ()

    @property
    def gap(self):
        return self.value - self.dual_value

    def to_json(self) -> dict:
        return {
            "phi_primal": _encode(self.value),
            "phi_dual": _encode(self.dual_value),
            "cover": self.cover.to_json(),
            "smooth": self.smooth.to_json(),
            "exact": self.exact,
            "flags": list(self.flags),
        }


@dataclass
class PeelResult:
    exceptional: tuple            # member indices removed
    cover: Distribution           # p-covers the remaining members
    tau_star: object              # None when the family was already p-covered
    entropy_bits: float
    p: object
    nu_star: Optional[FamilyDistribution] = None
    rounds: int = 0
    flags: tuple = ()

    def remainder(self, fam: SetFamily) -> list[int]:
        ex = set(self.exceptional)
        return [i for i in range(len(fam)) if i not in ex]


def _uniform_on(coords, exact):
    coords = list(coords)
    if not coords:
        return Distribution({})
    w = Fraction(1, len(coords)) if exact else 1.0 / len(coords)
    return Distribution({i: w for i in coords})


def phi_value(fam: SetFamily, exact: bool = True) -> PhiResult:
    """Value of the covering game plus optimal strategies for both players."""
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    members = fam.members
    if not members:
        q = Distribution({0: one}) if fam.n else Distribution({})
        return PhiResult(one, one, q, FamilyDistribution({}), exact, ("empty_family",))
    flags = []
    if any(m == 0 for m in members):
        flags.append("empty_member")
    sup = elements(fam.support)
    if not sup:
        # only the empty set; any Q scores 0, any D concedes 0
        q = Distribution({0: one}) if fam.n else Distribution({})
        return PhiResult(zero, zero, q, FamilyDistribution({0: one}), exact, tuple(flags))
    s = len(sup)
    f = len(members)

    # cover side: variables Q_i (i in support) then z
    A_ub = []
    for m in members:
        A_ub.append([-1 if (m >> i) & 1 else 0 for i in sup] + [1])
    res = lp.maximize([0] * s + [1], A_ub, [0] * f, [[1] * s + [0]], [1], exact=exact)
    q = {i: v for i, v in zip(sup, res.x[:s]) if v != 0}
    primal = res.x[s]

    # smooth side: variables D_T then y
    A_ub = []
    for i in sup:
        A_ub.append([1 if (m >> i) & 1 else 0 for m in members] + [-1])
    res = lp.maximize([0] * f + [-1], A_ub, [0] * s, [[1] * f + [0]], [1], exact=exact)
    d = {t: v for t, v in enumerate(res.x[:f]) if v != 0}
    dual = res.x[f]
    if not exact:
        q = {i: max(v, 0.0) for i, v in q.items()}
        d = {t: max(v, 0.0) for t, v in d.items()}
    return PhiResult(primal, dual, Distribution(q), FamilyDistribution(d), exact, tuple(flags))


def is_p_covered(fam: SetFamily, p, exact: bool = True) -> bool:
    return phi_value(fam, exact).value >= _num(p, exact) - (0 if exact else FLOAT_COVER_TOL)


def smooth_distribution(fam: SetFamily, p, exact: bool = True) -> Optional[FamilyDistribution]:
    """A ``p``-smooth member distribution, or ``None`` when ``fam`` is ``p``-covered."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    res = phi_value(fam, exact)
    if res.value >= _num(p, exact):
        return None
    return res.smooth


def _min_linf_smooth(fam: SetFamily, idx: list[int], p, exact: bool):
    """Minimise ``max_T nu(T)`` over ``p``-smooth ``nu`` supported on ``idx``."""
    members = [fam.members[t] for t in idx]
    sup = elements(fam.support)
    f = len(members)
    A_ub = []
    b_ub = []
    for j in range(f):
        row = [0] * (f + 1)
        row[j] = 1
        row[f] = -1
        A_ub.append(row)
        b_ub.append(0)
    for i in sup:
        A_ub.append([1 if (m >> i) & 1 else 0 for m in members] + [0])
        b_ub.append(p)
    res = lp.maximize([0] * f + [-1], A_ub, b_ub, [[1] * f + [0]], [1], exact=exact)
    nu = {idx[j]: v for j, v in enumerate(res.x[:f])}
    return nu, res.x[f]


def peel_exceptional(fam: SetFamily, p, exact: bool = True, max_rounds: int = 50) -> PeelResult:
    """Remove the members an l-infinity-minimal smooth distribution saturates.

    If ``fam`` is already ``p``-covered nothing is removed.  Otherwise the
    members at the maximal mass ``tau*`` of an optimal ``nu*`` are removed;
    the rest is ``p``-covered, which is certified by the returned ``Q``.  In
    float mode near-ties join the removed set and the peel repeats on the
    remainder if the certificate fails.
    """
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    p = _num(p, exact)
    tol = 0 if exact else FLOAT_COVER_TOL
    base = phi_value(fam, exact)
    if base.value >= p - tol:
        return PeelResult((), base.cover, None, 0.0, p, None, 0, ("already_covered",))

    remaining = list(range(len(fam)))
    removed: list[int] = []
    tau_star = None
    nu_star = None
    H = 0.0
    rounds = 0
    while True:
        rounds += 1
        nu, tau = _min_linf_smooth(fam, remaining, p, exact)
        if tau_star is None:
            tau_star = tau
            nu_star = FamilyDistribution({t: v for t, v in nu.items() if v != 0})
            H = entropy_bits(nu_star)
        if exact:
            sat = [t for t in remaining if nu[t] == tau]
        else:
            sat = [t for t in remaining if nu[t] >= tau * (1 - PEEL_TIE_TOL)]
        removed.extend(sat)
        remaining = [t for t in remaining if t not in set(sat)]
        rest = fam.subfamily(remaining)
        if not remaining:
            q = _uniform_on(elements(fam.support) or range(fam.n), exact)
            break
        res = phi_value(rest, exact)
        # subfamily() re-sorts, but Q is on coordinates so order does not matter
        if res.value >= p - tol:
            q = res.cover
            break
        if rounds >= max_rounds:
            raise lp.LPError("peeling did not converge")
    flags = () if rounds == 1 else ("repeated_peel",)
    return PeelResult(tuple(sorted(removed)), q, tau_star, H, p, nu_star, rounds, flags)


def entropy_bits(D) -> float:
    """Shannon entropy in bits; zero-mass entries contribute nothing."""
    weights = D.weights.values() if hasattr(D, "weights") else D
    h = 0.0
    for v in weights:
        v = float(v)
        if v > 0:
            h -= v * math.log2(v)
    return h


def entropy_rate(p) -> float:
    """``p * log2(1/p)``."""
    p = float(p)
    if p <= 0:
        return 0.0
    return -p * math.log2(p)


def choose_p(a) -> float:
    """Cover level ``a / (4 log2(4/a))``; its entropy rate is at most ``a``."""
    if not 0 < a <= 0.25:
        raise ValueError("a must lie in (0, 1/4]")
    return a / (4 * math.log2(4 / a))


def h_bound(n, k, p, B: float = 1.0) -> float:
    """Entropy budget ``B * k * log2(n/k) * p log2(1/p)``."""
    if k < 1 or n < k:
        raise ValueError("need n >= k >= 1")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if B <= 0:
        raise ValueError("B must be positive")
    return B * k * math.log2(n / k) * entropy_rate(p)


@dataclass
class AmplificationReport:
    entropy_bits: float
    closure_size: int
    rate: float
    ratio: Optional[float]
    notes: tuple = field(default=())


def amplification_diagnostic(fam: SetFamily, D: FamilyDistribution, p,
                             cap: int = 1 << 20) -> AmplificationReport:
    """Measured ``H(D) / (phi(p) * log2 |U(fam)|)``; informational only."""
    H = entropy_bits(D)
    U = union_closure(fam, cap)
    rate = entropy_rate(p)
    denom = rate * math.log2(len(U))
    notes = []
    if D.max_coverage(fam) > float(p) + FLOAT_COVER_TOL:
        notes.append("distribution is not p-smooth")
    if denom == 0:
        ratio = 0.0 if H == 0 else None
        notes.append("degenerate denominator")
    else:
        ratio = H / denom
    return AmplificationReport(H, len(U), rate, ratio, tuple(notes))


def dumps_phi(res: PhiResult) -> str:
    return json.dumps(res.to_json(), sort_keys=True)


__all__ = [
    "BudgetExceeded", "Distribution", "FamilyDistribution", "PhiResult", "PeelResult",
    "phi_value", "is_p_covered", "smooth_distribution", "peel_exceptional",
    "entropy_bits", "entropy_rate", "choose_p", "h_bound", "amplification_diagnostic",
]
