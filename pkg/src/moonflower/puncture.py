"""Universe reduction by randomized puncturing.

One run keeps a trace family ``F_j`` on the not-yet-chosen coordinates
``J_j``.  Each step peels the exceptional members of ``F_j``, samples a
coordinate from the cover distribution of the rest, adds it to ``I`` and
projects the survivors away from it.  The potential
``sum_{A in F_j} 2^|A|`` drops by a factor ``1 - p/2`` per step in
expectation, so some seed yields an ``I`` that contains most members.

The guarantees are existential, so every driver retries with fresh seeds
and reports whether the target bound was actually met.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .cover import choose_p, peel_exceptional
from .setfam import SetFamily, elements, popcount, project

HISTORY_LIMIT = 1000


@dataclass(frozen=True)
class ReductionConfig:
    p: float = 0.25
    delta: float = 1 / 16
    B: float = 1.0
    theta: float = 0.01
    max_retries: int = 50
    seed: int = 0
    exact: bool = False

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError("p must lie in (0, 1]")
        if not 0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.max_retries < 1:
            raise ValueError("max_retries must be at least 1")


@dataclass
class PunctureTrace:
    I: int                       # chosen coordinates (bitset)
    covered_count: int           # members of the input inside I
    removed_count: int           # exceptional members peeled across all steps
    potential_history: list      # potential before each step, then the final value
    steps: int
    seed: int
    t: int                       # step budget
    M_measured: int              # largest exceptional set seen
    attained_bound: bool
    family_size: int = 0
    target: float = 0.0
    residual: Optional[int] = None   # distinct nonempty traces outside I
    M_budget: Optional[float] = None
    attempts: int = 1

    @property
    def I_size(self) -> int:
        return popcount(self.I)

    def ratios(self) -> list[float]:
        h = self.potential_history
        return [h[j + 1] / h[j] for j in range(len(h) - 1) if h[j] > 0]

    def to_json(self) -> dict:
        return {
            "I": elements(self.I),
            "covered_count": self.covered_count,
            "removed_count": self.removed_count,
            "potential_history": self.potential_history[:HISTORY_LIMIT],
            "steps": self.steps,
            "seed": self.seed,
            "t": self.t,
            "M_measured": self.M_measured,
            "M_budget": self.M_budget,
            "attained_bound": self.attained_bound,
            "residual": self.residual,
            "attempts": self.attempts,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _potential(masks) -> int:
    return sum(1 << popcount(a) for a in masks)


def _sample(cover, rng) -> int:
    items = sorted(cover.weights.items())
    coords = [i for i, _ in items]
    w = np.array([float(v) for _, v in items])
    w = np.clip(w, 0, None)
    return int(coords[rng.choice(len(coords), p=w / w.sum())])


def _run(fam: SetFamily, p, t: int, rng, exact: bool):
    """One pass of the potential process; returns (I, removed, M, history, steps)."""
    current = sorted({m for m in fam.members if m})
    I = 0
    removed = 0
    M = 0
    history = [_potential(current)]
    steps = 0
    while steps < t and current:
        sf = SetFamily(fam.n, tuple(current))
        current = list(sf.members)  # peel indices refer to canonical order
        peel = peel_exceptional(sf, p, exact=exact)
        ex = set(peel.exceptional)
        removed += len(ex)
        M = max(M, len(ex))
        rest = [a for j, a in enumerate(current) if j not in ex]
        if not rest:
            current = []
            history.append(0)
            steps += 1
            break
        i = _sample(peel.cover, rng)
        I |= 1 << i
        bit = ~(1 << i)
        current = sorted({a & bit for a in rest} - {0})
        history.append(_potential(current))
        steps += 1
    return I, removed, M, history, steps


def step_budget(n: int, w: int, p, delta) -> int:
    """``min(n, ceil((2/p) (w ln 2 + ln(1/delta))))``."""
    return min(n, math.ceil((2 / float(p)) * (w * math.log(2) + math.log(1 / float(delta)))))


def _covered(fam, I):
    return sum(1 for m in fam.members if not m & ~I)


def run_reduction(fam: SetFamily, cfg: ReductionConfig, seed: int,
                  M_budget: Optional[float] = None) -> PunctureTrace:
    """A single seeded run of the one-step reduction process."""
    rng = np.random.default_rng(seed)
    w = fam.max_set_size
    t = step_budget(fam.n, w, cfg.p, cfg.delta)
    if not fam.members:
        return PunctureTrace(0, 0, 0, [0], 0, seed, t, 0, True, 0, 0.0, None, M_budget)
    I, removed, M, history, steps = _run(fam, cfg.p, t, rng, cfg.exact)
    covered = _covered(fam, I)
    target = (1 - cfg.delta) * len(fam) - t * M
    attained = covered >= target and popcount(I) <= t
    return PunctureTrace(I, covered, removed, history, steps, seed, t, M, attained,
                         len(fam), target, None, M_budget)


def _best(a: PunctureTrace, b: Optional[PunctureTrace]) -> PunctureTrace:
    if b is None:
        return a
    ka = (a.attained_bound, a.covered_count, -a.seed)
    kb = (b.attained_bound, b.covered_count, -b.seed)
    return a if ka > kb else b


def one_step_reduce(fam: SetFamily, cfg: ReductionConfig,
                    M: Optional[float] = None) -> PunctureTrace:
    """Find ``I`` with ``|I| <= t`` covering at least ``(1-delta)|F| - t*M`` members.

    ``M`` is the theoretical exception budget and is only recorded; the
    attainment test uses the largest exceptional set actually peeled.  Seeds
    ``cfg.seed, cfg.seed + 1, ...`` are tried until one attains the bound.
    """
    best = None
    for attempt in range(cfg.max_retries):
        tr = run_reduction(fam, cfg, cfg.seed + attempt, M)
        tr.attempts = attempt + 1
        best = _best(tr, best)
        if tr.attained_bound:
            return tr
    best.attempts = cfg.max_retries
    return best


def residual_traces(fam: SetFamily, I: int) -> int:
    """Number of distinct nonempty traces of ``fam`` outside ``I``."""
    return len({m & ~I for m in fam.members} - {0})


def trace_budget(n: int, size: int, w: int, p) -> int:
    """``min(n, ceil((2/p) ln(|F| 2^w)))``."""
    if size == 0:
        return 0
    return min(n, math.ceil((2 / float(p)) * (math.log(size) + w * math.log(2))))


def trace_puncture_to_empty(fam: SetFamily, p, M: Optional[float] = None, seed: int = 0,
                            max_retries: int = 50, exact: bool = False,
                            bound: Optional[float] = None) -> PunctureTrace:
    """Run the potential process until the trace family is empty or ``t`` steps pass.

    A run succeeds when the residual trace count is at most ``t * M_measured``
    (or at most ``bound`` when given).  Returns the first success, else the
    run with the smallest residual.
    """
    w = fam.max_set_size
    t = trace_budget(fam.n, len(fam), w, p)
    best = None
    for attempt in range(max_retries):
        s = seed + attempt
        rng = np.random.default_rng(s)
        if not fam.members:
            I, removed, Mm, history, steps = 0, 0, 0, [0], 0
        else:
            I, removed, Mm, history, steps = _run(fam, p, t, rng, exact)
        res = residual_traces(fam, I)
        limit = t * Mm if bound is None else bound
        ok = res <= limit and popcount(I) <= t
        tr = PunctureTrace(I, _covered(fam, I), removed, history, steps, s, t, Mm, ok,
                           len(fam), limit, res, M, attempt + 1)
        if ok:
            return tr
        if best is None or (tr.residual, tr.seed) < (best.residual, best.seed):
            best = tr
    return best


@dataclass
class WeightScaleResult:
    I: int
    residual: int
    bound: float
    p: float
    a: float
    M_theory: float
    attained: bool
    trace: Optional[PunctureTrace] = None
    size_reference: float = 0.0   # k/(theta eta^2) * log^2(k w/(eta theta)), reported only

    @property
    def I_size(self) -> int:
        return popcount(self.I)


def weight_scale_puncture(fam: SetFamily, k: int, w: float, eta: float, theta: float = 0.01,
                          B: float = 1.0, seed: int = 0, max_retries: int = 50,
                          exact: bool = False) -> WeightScaleResult:
    """Puncture a layer of ``(w, 2w]``-sets so few traces remain outside ``I``.

    The cover level comes from ``a = min(1/4, theta eta^2 w / (B k log2(n0/k)))``
    via ``choose_p``; success means at most ``|I| exp(theta eta^2 w)`` distinct
    nonempty traces survive outside ``I``.
    """
    if not 0 < eta < 0.25:
        raise ValueError("eta must lie in (0, 1/4)")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    for m in fam.members:
        if not w < popcount(m) <= 2 * w:
            raise ValueError("layer members must have sizes in (w, 2w]")
    expo = theta * eta * eta * w
    ref = k / (theta * eta * eta) * max(1.0, math.log2(max(k * w / (eta * theta), 2))) ** 2
    if not fam.members:
        return WeightScaleResult(0, 0, 0.0, 0.0, 0.25, 2 ** expo, True, None, ref)
    n0 = fam.support_size
    if n0 > k:
        a = min(0.25, expo / (B * k * math.log2(n0 / k)))
    else:
        a = 0.25
    p = choose_p(a)
    best = None
    for attempt in range(max_retries):
        tr = trace_puncture_to_empty(fam, p, 2 ** expo, seed + attempt, 1, exact)
        bound = popcount(tr.I) * math.exp(expo)
        ok = tr.residual <= bound
        if ok:
            return WeightScaleResult(tr.I, tr.residual, bound, p, a, 2 ** expo, True, tr, ref)
        if best is None or tr.residual < best.residual:
            best = WeightScaleResult(tr.I, tr.residual, bound, p, a, 2 ** expo, False, tr, ref)
    return best


# ---------------------------------------------------------------------------
# iterated puncturing

def extremal_bound(k: int, w: int, C) -> Fraction:
    """``(C k/w)^w`` when ``w <= k``, else ``(C w/k)^k``, as an exact rational."""
    if k < 1 or w < 1:
        raise ValueError("need k, w >= 1")
    C = Fraction(C) if not isinstance(C, float) else Fraction(str(C))
    if C <= 0:
        raise ValueError("C must be positive")
    if w <= k:
        return (C * k / w) ** w
    return (C * w / k) ** k


@dataclass(frozen=True)
class IterationConstants:
    C: float = 6.0       # extremal-bound constant used by the size-bound stop
    B: float = 1.0       # entropy-budget constant
    C1: float = 1.0      # halving threshold constant (w >= k regime)
    Ca: float = 4.0      # denominator constant in the w >= k choice of a
    survival: float = 0.3
    max_retries: int = 20
    seed: int = 0
    exact: bool = False


@dataclass
class IteratedReport:
    regime: str
    rounds: int
    stop_reason: str
    universe: int              # final coordinate set (bitset in input coordinates)
    survivors: SetFamily
    initial_size: int
    implied_bound: Fraction
    constant: float
    history: list = field(default_factory=list)

    @property
    def universe_size(self) -> int:
        return popcount(self.universe)

    @property
    def survival_fraction(self) -> float:
        return len(self.survivors) / self.initial_size if self.initial_size else 1.0

    @property
    def bound_holds(self) -> bool:
        return self.initial_size <= self.implied_bound


def iterated_puncture(fam: SetFamily, k: int, w: Optional[int] = None,
                      consts: IterationConstants = IterationConstants()) -> IteratedReport:
    """Repeatedly shrink the universe to a reduction set while keeping most members.

    Stops, in this order of checks, on: the size bound firing, survival
    dropping below ``consts.survival`` (``w <= k``) or the entropy parameter
    becoming small (``w >= k``), no progress, or the regime's round cap.
    """
    if w is None:
        w = fam.max_set_size
    F = fam.without_empty()
    size0 = len(F)
    bound = extremal_bound(k, max(w, 1), consts.C)
    U = F.support
    regime = "w<=k" if w <= k else "w>=k"
    if size0 == 0:
        return IteratedReport(regime, 0, "empty", U, F, 0, bound, consts.C)
    if w == 1:
        # k distinct singletons already form a k-moonflower
        reason = "singletons" if size0 <= k - 1 else "singletons_violate"
        return IteratedReport(regime, 0, reason, U, F, size0, Fraction(k - 1), consts.C)
    if regime == "w<=k":
        cap = 2 ** w
        delta = 2.0 ** (-w - 4)
    else:
        n0 = popcount(U)
        L0 = math.log2(max(n0 / k, 2))
        gap = math.log2(w / k) if w > k else 0.0
        cap = 2 + math.ceil(math.log2(max(L0 / max(consts.C1 * gap, 1e-9), 1)))
        delta = 0.25
    history = []
    rounds = 0
    reason = "round_cap"
    current = F
    while rounds < cap:
        n_i = popcount(U)
        if len(current) <= bound:
            reason = "size_bound"
            break
        if regime == "w<=k" and len(current) < consts.survival * size0:
            reason = "survival"
            break
        if n_i > k:
            L = math.log2(n_i / k)
        else:
            L = 0.0
        if regime == "w>=k" and L <= consts.C1 * math.log2(w / k):
            reason = "entropy_small"
            break
        if regime == "w<=k":
            a = w * math.log2(4 * k / w) / (32 * consts.B * k * L) if L > 0 else 0.25
        else:
            a = math.log2(4 * w / k) / (consts.Ca * L) if L > 0 else 0.25
        a = min(a, 0.25)
        p = choose_p(a)
        local = project(current, U, relabel=True)
        coords = elements(U)
        cfg = ReductionConfig(p=p, delta=delta, B=consts.B, max_retries=consts.max_retries,
                              seed=consts.seed + 1000 * rounds, exact=consts.exact)
        tr = one_step_reduce(local, cfg)
        I = 0
        for j in elements(tr.I):
            I |= 1 << coords[j]
        kept = SetFamily(current.n, tuple(m for m in current.members if not m & ~I))
        history.append({"round": rounds, "n": n_i, "size": len(current), "p": p,
                        "t": tr.t, "I": popcount(I), "kept": len(kept),
                        "M_measured": tr.M_measured, "attained": tr.attained_bound})
        rounds += 1
        if I == U or not kept.members:
            reason = "stalled"
            if kept.members:
                current = kept
            break
        U = I
        current = kept
    return IteratedReport(regime, rounds, reason, U, current, size0, bound, consts.C, history)
