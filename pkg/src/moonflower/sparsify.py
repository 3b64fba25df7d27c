"""Weighted coordinate sparsifiers for binary codes.

A code is stored as the supports of its codewords (bitset ints).  A
sparsifier is a map ``coordinate -> weight`` with power-of-two weights; it
estimates the weight of ``x`` as the weighted count of ``supp(x)`` inside
its key set.

The builder runs ``R = ceil(log2 n)`` rounds.  Round ``r`` captures the
residual supports of low-weight codewords outright, punctures each dyadic
medium-weight layer, gives the captured coordinates weight ``2^r`` and keeps
each remaining coordinate with probability 1/2.  Survivors of the last
round get weight ``2^R``.  The result is verified exactly and the build is
retried on failure.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .puncture import weight_scale_puncture
from .setfam import (BudgetExceeded, FamilyFormatError, SetFamily, elements, is_moonflower,
                     mf_exact, mf_greedy, popcount, to_mask)


# ---------------------------------------------------------------------------
# codes

@dataclass(frozen=True)
class Code:
    n: int
    codewords: tuple = ()

    def __post_init__(self):
        full = (1 << self.n) - 1
        seen = set()
        for c in self.codewords:
            m = c if isinstance(c, int) else to_mask(c)
            if m & ~full:
                raise ValueError("codeword support outside block length")
            seen.add(m)
        object.__setattr__(self, "codewords",
                           tuple(sorted(seen, key=lambda m: (popcount(m), elements(m)))))

    @classmethod
    def from_supports(cls, n: int, supports) -> "Code":
        return cls(n, tuple(supports))

    @classmethod
    def from_words(cls, words) -> "Code":
        words = [list(w) for w in words]
        n = len(words[0]) if words else 0
        return cls(n, tuple(to_mask(i for i, b in enumerate(w) if b) for w in words))

    def __len__(self):
        return len(self.codewords)

    def support_family(self) -> SetFamily:
        return SetFamily(self.n, self.codewords)

    @property
    def support(self) -> int:
        u = 0
        for c in self.codewords:
            u |= c
        return u

    def weights(self) -> list[int]:
        return [popcount(c) for c in self.codewords]


def format_code(code: Code) -> str:
    lines = [f"n {code.n}"]
    for c in code.codewords:
        lines.append(" ".join(str(e) for e in elements(c)))
    return "\n".join(lines) + "\n"


def parse_code(text: str) -> Code:
    """Header ``n <int>`` then one codeword per line.

    A line is read as a dense 0/1 word when it is a single token of length
    ``n >= 2`` made of 0s and 1s; otherwise as sorted coordinate indices.
    A blank line is the zero word.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if not lines:
        raise FamilyFormatError("missing header", 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != "n":
        raise FamilyFormatError("expected header 'n <int>'", 1)
    try:
        n = int(head[1])
    except ValueError:
        raise FamilyFormatError("block length is not an integer", 1) from None
    words = []
    for lineno, line in enumerate(lines[1:], start=2):
        toks = line.split()
        if len(toks) == 1 and n >= 2 and len(toks[0]) == n and set(toks[0]) <= {"0", "1"}:
            words.append(to_mask(i for i, ch in enumerate(toks[0]) if ch == "1"))
            continue
        try:
            coords = [int(t) for t in toks]
        except ValueError:
            raise FamilyFormatError(f"bad codeword {line!r}", lineno) from None
        if any(c < 0 or c >= n for c in coords):
            raise FamilyFormatError(f"coordinate out of range in {line!r}", lineno)
        words.append(to_mask(coords))
    return Code(n, tuple(words))


def read_code(path) -> Code:
    with open(path) as fh:
        return parse_code(fh.read())


def write_code(code: Code, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_code(code))


# ---------------------------------------------------------------------------
# non-redundancy

@dataclass
class NRDResult:
    value: int
    coords: tuple          # a non-redundant coordinate set of that size
    exact: bool


def nrd(code: Code, budget: int = 10**6) -> NRDResult:
    """Non-redundancy as the moonflower number of the support family.

    Each petal contributes one private coordinate, which gives a
    non-redundant set.  On budget exhaustion the greedy bound is returned
    with ``exact=False``.
    """
    fam = code.support_family().without_empty()
    if not fam.members:
        return NRDResult(0, (), True)
    try:
        value, wit = mf_exact(fam, budget)
        exact = True
    except BudgetExceeded:
        value, wit = mf_greedy(fam)
        exact = False
    coords = tuple(sorted(min(elements(m & ~wit.core)) for m in wit.petals))
    return NRDResult(value, coords, exact)


def is_non_redundant(code: Code, coords) -> bool:
    I = to_mask(coords)
    restricted = {c & I for c in code.codewords}
    return all((1 << i) in restricted for i in elements(I))


# ---------------------------------------------------------------------------
# sparsifiers

@dataclass
class Sparsifier:
    n: int
    entries: dict                  # coordinate -> weight
    rounds: int = 0
    provenance: dict = field(default_factory=dict)   # coordinate -> round or "residual"
    seed: Optional[int] = None
    config: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return to_mask(self.entries)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def identity(cls, n: int) -> "Sparsifier":
        return cls(n, {i: 1 for i in range(n)}, 0, {i: 0 for i in range(n)})

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "R": self.rounds,
            "entries": [{"coord": i, "weight": _enc(w), "round": self.provenance.get(i)}
                        for i, w in sorted(self.entries.items())],
            "seed": self.seed,
            "config": self.config,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Sparsifier":
        entries = {}
        prov = {}
        for e in data["entries"]:
            entries[int(e["coord"])] = _dec(e["weight"])
            if e.get("round") is not None:
                prov[int(e["coord"])] = e["round"]
        return cls(int(data["n"]), entries, int(data.get("R", 0)), prov,
                   data.get("seed"), data.get("config", {}))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _enc(w):
    if isinstance(w, Fraction):
        return w.numerator if w.denominator == 1 else f"{w.numerator}/{w.denominator}"
    return w


def _dec(w):
    if isinstance(w, str):
        return Fraction(w)
    return w


def estimate(sp: Sparsifier, support) -> object:
    """Weighted count of ``support`` inside the sparsifier's coordinate set."""
    m = support if isinstance(support, int) else to_mask(support)
    total = 0
    for i in elements(m):
        total += sp.entries.get(i, 0)
    return total


@dataclass
class VerifyReport:
    max_rel_err: float
    violators: list              # codeword indices with relative error above epsilon
    layer_errors: dict           # floor(log2 weight) -> max relative error in that layer
    epsilon: float
    passed: bool
    worst: list = field(default_factory=list)   # (index, weight, estimate) of worst codewords

    def to_json(self) -> dict:
        return {"max_rel_err": self.max_rel_err, "violators": self.violators,
                "layer_errors": {str(k): v for k, v in sorted(self.layer_errors.items())},
                "epsilon": self.epsilon, "passed": self.passed, "worst": self.worst}


def verify_sparsifier(code: Code, sp: Sparsifier, epsilon) -> VerifyReport:
    """Exact check of ``(1 - eps) wt(x) <= est(x) <= (1 + eps) wt(x)`` for all codewords."""
    eps = Fraction(str(epsilon)) if isinstance(epsilon, float) else Fraction(epsilon)
    max_err = Fraction(0)
    violators = []
    layers: dict = {}
    errs = []
    for idx, c in enumerate(code.codewords):
        wt = popcount(c)
        est = Fraction(estimate(sp, c))
        if wt == 0:
            err = Fraction(0) if est == 0 else Fraction(1)
            ok = est == 0
            layer = -1
        else:
            err = abs(est - wt) / wt
            ok = err <= eps
            layer = wt.bit_length() - 1
        layers[layer] = max(layers.get(layer, 0.0), float(err))
        max_err = max(max_err, err)
        if not ok:
            violators.append(idx)
        errs.append((float(err), idx, wt, float(est)))
    errs.sort(reverse=True)
    worst = [[i, w, e] for _, i, w, e in errs[:10] if _ > 0]
    return VerifyReport(float(max_err), violators, layers, float(eps), not violators, worst)


# ---------------------------------------------------------------------------
# builder

@dataclass(frozen=True)
class SparsifierConfig:
    epsilon: float = 0.2
    C_big: float = 4.0
    B: float = 1.0
    theta: float = 0.01
    max_build_retries: int = 10
    seed: int = 0
    max_final: int = 50             # retry unless the last sampled set has at most this many coords
    require_audit: bool = True
    nrd_budget: int = 10**6
    # experimentation overrides for the weight thresholds; None means derive them
    w_min: Optional[int] = None
    w_star: Optional[int] = None
    eta0: Optional[float] = None
    puncture_retries: int = 20

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.25:
            raise ValueError("epsilon must lie in (0, 1/4]")
        if self.C_big <= 0 or self.B <= 0:
            raise ValueError("constants must be positive")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.max_build_retries < 1:
            raise ValueError("max_build_retries must be at least 1")


@dataclass(frozen=True)
class BuildParameters:
    n: int
    k: int
    epsilon: float
    R: int
    w_star: int
    eta0: float
    w_min: int
    C: float

    @property
    def log_R(self) -> float:
        return math.log2(self.R) if self.R > 1 else 0.0

    def eta_large(self, w: float) -> float:
        """Per-round error allowance for a layer of weight scale ``w`` above ``w_star``."""
        inner = self.C * (self.k * math.log2(max(w / self.k, 1.0)) + self.log_R) / w
        return min(0.25, math.sqrt(max(inner, 0.0)))

    def dyadic_medium(self) -> list[int]:
        """Scales ``w_min * 2^j`` that do not exceed ``w_star``."""
        out = []
        w = self.w_min
        while w <= self.w_star:
            out.append(w)
            w *= 2
        return out

    def scale_of(self, weight: int) -> int:
        """Dyadic scale ``w = w_min 2^j`` with ``weight in (w, 2w]``."""
        w = self.w_min
        while weight > 2 * w:
            w *= 2
        return w

    def round_error(self, weight: int) -> float:
        if weight <= self.w_min:
            return 0.0
        if weight <= self.w_star:
            return self.eta0
        return self.eta_large(self.scale_of(weight))


def build_parameters(n: int, k: int, cfg: SparsifierConfig) -> BuildParameters:
    eps = cfg.epsilon
    C = cfg.C_big
    R = max(0, math.ceil(math.log2(n))) if n > 0 else 0
    log_R = math.log2(R) if R > 1 else 0.0
    lk = math.log2(k / eps)
    w_star = cfg.w_star if cfg.w_star is not None else math.ceil(C * (k * lk + log_R) / eps ** 2)
    eta0 = cfg.eta0 if cfg.eta0 is not None else eps / (100 * math.log2(2 * w_star))
    w_min = cfg.w_min if cfg.w_min is not None else math.ceil(C / eta0 ** 2 * (lk + log_R))
    return BuildParameters(n, k, eps, R, w_star, eta0, w_min, C)


@dataclass
class RoundLog:
    r: int
    U_size: int
    tiny: int
    layers: dict            # dyadic scale -> |I_{r,w}|
    I_size: int
    layer_residuals: dict = field(default_factory=dict)
    layer_attained: dict = field(default_factory=dict)


@dataclass
class AuditResult:
    passed: bool
    max_error_sum: float
    budget: float
    step_violations: list    # (codeword index, round) where the per-round estimate moved too far
    sum_violations: list     # codeword indices with sum of round errors above budget


@dataclass
class BuildLog:
    params: BuildParameters
    k_source: str
    attempts: list = field(default_factory=list)
    rounds: list = field(default_factory=list)
    residuals: Optional[list] = None      # per codeword, residual weight at each round
    audit: Optional[AuditResult] = None
    final_U: int = 0
    size_reference: float = 0.0

    def to_json(self, with_residuals: bool = False) -> dict:
        out = {
            "params": asdict(self.params),
            "k_source": self.k_source,
            "attempts": self.attempts,
            "rounds": [
                {"r": rl.r, "U": rl.U_size, "tiny": rl.tiny, "I": rl.I_size,
                 "layers": {str(w): s for w, s in rl.layers.items()},
                 "layer_residuals": {str(w): s for w, s in rl.layer_residuals.items()}}
                for rl in self.rounds
            ],
            "final_U": self.final_U,
            "size_reference": self.size_reference,
        }
        if self.audit is not None:
            out["audit"] = asdict(self.audit)
        if with_residuals and self.residuals is not None:
            out["residuals"] = self.residuals
        return out


class BuildFailed(RuntimeError):
    def __init__(self, message, best=None, report=None, log=None):
        super().__init__(message)
        self.best = best
        self.report = report
        self.log = log


def _sample_half(V: int, rng) -> int:
    coords = elements(V)
    if not coords:
        return 0
    keep = rng.random(len(coords)) < 0.5
    out = 0
    for c, k in zip(coords, keep):
        if k:
            out |= 1 << c
    return out


def _one_build(code: Code, params: BuildParameters, cfg: SparsifierConfig, seed: int):
    rng = np.random.default_rng(seed)
    words = [c for c in code.codewords if c]
    U = code.support  # coordinates outside every codeword never affect an estimate
    I_rounds = []
    U_hist = [U]
    logs = []
    residuals = [[] for _ in words]
    medium = params.dyadic_medium()
    for r in range(params.R):
        res = [c & U for c in words]
        for j, x in enumerate(res):
            residuals[j].append(popcount(x))
        distinct = {x for x in res if x}
        tiny = 0
        for x in distinct:
            if popcount(x) <= params.w_min:
                tiny |= x
        I_r = tiny
        layers = {}
        layer_res = {}
        layer_ok = {}
        for w in medium:
            layer = SetFamily(code.n, tuple(x for x in distinct if w < popcount(x) <= 2 * w))
            if not layer.members:
                continue
            out = weight_scale_puncture(layer, params.k, w, params.eta0, cfg.theta, cfg.B,
                                        seed=int(rng.integers(2**31)),
                                        max_retries=cfg.puncture_retries)
            I_r |= out.I
            layers[w] = out.I_size
            layer_res[w] = out.residual
            layer_ok[w] = out.attained
        I_rounds.append(I_r)
        logs.append(RoundLog(r, popcount(U), popcount(tiny), layers, popcount(I_r),
                             layer_res, layer_ok))
        U = _sample_half(U & ~I_r, rng)
        U_hist.append(U)
    for j, x in enumerate(words):
        residuals[j].append(popcount(x & U))
    entries = {}
    prov = {}
    for r, I_r in enumerate(I_rounds):
        for i in elements(I_r):
            entries[i] = 1 << r
            prov[i] = r
    for i in elements(U):
        entries[i] = 1 << params.R
        prov[i] = "residual"
    sp = Sparsifier(code.n, entries, params.R, prov, seed)
    return sp, logs, residuals, I_rounds, U_hist


def audit_build(code: Code, params: BuildParameters, I_rounds, U_hist,
                epsilon: float) -> AuditResult:
    """Replay the per-round estimates of every codeword.

    ``U_hist[r]`` is the live coordinate set before round ``r`` (``U_hist[R]``
    is the final sample).  With ``N_r = sum_{r' < r} 2^r' |S & I_r'| +
    2^r |S & U_r|`` the audit checks ``|N_{r+1} - N_r| <= e_r N_r`` where
    ``e_r`` is 0, ``eta0`` or ``eta(w)`` by the regime of ``|S & U_r|``, and
    that the ``e_r`` sum to at most ``epsilon / 25``.
    """
    budget = epsilon / 25
    words = [c for c in code.codewords if c]
    R = params.R
    step_viol = []
    sum_viol = []
    worst = 0.0
    for j, S in enumerate(words):
        total = 0.0
        N_prev = popcount(S & U_hist[0])
        acc = 0
        for r in range(R):
            e_r = params.round_error(popcount(S & U_hist[r]))
            total += e_r
            acc += (1 << r) * popcount(S & I_rounds[r])
            N_next = acc + (1 << (r + 1)) * popcount(S & U_hist[r + 1])
            if abs(N_next - N_prev) > e_r * N_prev + 1e-12:
                step_viol.append((j, r))
            N_prev = N_next
        worst = max(worst, total)
        if total > budget + 1e-15:
            sum_viol.append(j)
    return AuditResult(not step_viol and not sum_viol, worst, budget, step_viol, sum_viol)


def resolve_k(code: Code, cfg: SparsifierConfig, k: Optional[int] = None) -> tuple[int, str]:
    """Moonflower-freeness parameter: NRD + 1 when computable, else the supplied bound."""
    res = nrd(code, cfg.nrd_budget)
    if res.exact:
        return max(res.value + 1, 2), "nrd"
    if k is None:
        raise BudgetExceeded("NRD not computable within budget and no k supplied", res.value)
    if k < res.value + 1:
        raise ValueError(f"supplied k={k} is below the greedy NRD bound + 1 = {res.value + 1}")
    return k, "supplied"


def build_sparsifier(code: Code, cfg: SparsifierConfig = SparsifierConfig(),
                     k: Optional[int] = None) -> tuple[Sparsifier, BuildLog]:
    """Build and verify an ``epsilon``-sparsifier, retrying with fresh seeds.

    Raises ``BuildFailed`` carrying the attempt with the smallest error when
    every retry fails verification.
    """
    if not code.codewords:
        raise ValueError("code must be nonempty")
    k, source = resolve_k(code, cfg, k)
    params = build_parameters(code.n, k, cfg)
    log = BuildLog(params, source)
    log.size_reference = k * max(math.log2(max(code.n, 2)), 1) / cfg.epsilon ** 2
    best = None
    for attempt in range(cfg.max_build_retries):
        seed = cfg.seed + attempt
        sp, rounds, residuals, I_rounds, U_hist = _one_build(code, params, cfg, seed)
        U = U_hist[-1]
        sp.config = _config_echo(cfg, k, source)
        report = verify_sparsifier(code, sp, cfg.epsilon)
        aud = audit_build(code, params, I_rounds, U_hist, cfg.epsilon)
        small_final = popcount(U) <= cfg.max_final
        ok = report.passed and small_final and (aud.passed or not cfg.require_audit)
        log.attempts.append({"seed": seed, "passed": report.passed,
                             "max_rel_err": report.max_rel_err, "final_U": popcount(U),
                             "audit": aud.passed, "T": len(sp)})
        if best is None or report.max_rel_err < best[1].max_rel_err:
            best = (sp, report, rounds, residuals, aud, U)
        if ok:
            log.rounds, log.residuals, log.audit, log.final_U = rounds, residuals, aud, popcount(U)
            return sp, log
    sp, report, rounds, residuals, aud, U = best
    log.rounds, log.residuals, log.audit, log.final_U = rounds, residuals, aud, popcount(U)
    raise BuildFailed(f"no verified sparsifier after {cfg.max_build_retries} attempts",
                      sp, report, log)


def _config_echo(cfg: SparsifierConfig, k: int, source: str) -> dict:
    d = asdict(cfg)
    d["k"] = k
    d["k_source"] = source
    return d


# ---------------------------------------------------------------------------
# lower-bound chain code

@dataclass(frozen=True)
class ChainCodeSpec:
    n: int
    k: int
    epsilon: float
    m: int
    a: tuple

    @property
    def s(self) -> int:
        return len(self.a)

    def block(self, i: int, j: int) -> int:
        """Chain set ``S_{i,j}`` (0-based ``i``, ``j``): ``[i m, i m + a_j)``."""
        start = i * self.m
        return ((1 << self.a[j]) - 1) << start

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "epsilon": self.epsilon, "m": self.m,
                "a": list(self.a), "s": self.s}

    @classmethod
    def from_json(cls, d: dict) -> "ChainCodeSpec":
        return cls(int(d["n"]), int(d["k"]), float(d["epsilon"]), int(d["m"]), tuple(d["a"]))


def chain_lengths(m: int, epsilon) -> tuple:
    """Greedy maximal chain ``1 = a_1 < a_2 < ... < m`` with ``a_{j+1} > (1+eps) a_j``."""
    eps = Fraction(str(epsilon)) if isinstance(epsilon, float) else Fraction(epsilon)
    a = []
    x = 1
    while x < m:
        a.append(x)
        x = math.floor((1 + eps) * x) + 1
    return tuple(a)


def gen_chain_code(n: int, k: int, epsilon) -> tuple[Code, ChainCodeSpec]:
    if k < 1 or n % k:
        raise ValueError("k must divide n")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    m = n // k
    a = chain_lengths(m, epsilon)
    if not a:
        raise ValueError("n too small: no chain lengths fit below n/k")
    spec = ChainCodeSpec(n, k, float(epsilon), m, a)
    words = [spec.block(i, j) for i in range(k) for j in range(spec.s)]
    return Code(n, tuple(words)), spec


@dataclass
class CertifyResult:
    verdict: str          # "invalid", "consistent" or "inconclusive"
    witness: Optional[dict]
    T_size: int
    threshold: int


def certify_lower_bound(spec: ChainCodeSpec, sp: Sparsifier, epsilon) -> CertifyResult:
    """Look for two chain sets the sparsifier cannot tell apart.

    Within one chain the traces on ``T`` are nested, so when ``T`` has fewer
    than ``k s`` coordinates some chain has two consecutive sets with the
    same trace (counting the empty set before ``S_{i,1}``).  Equal traces
    give equal estimates; the sparsifier is refuted when that common estimate
    misses the ``(1 +- eps)`` window of either true weight.
    """
    eps = Fraction(str(epsilon)) if isinstance(epsilon, float) else Fraction(epsilon)
    T = sp.T
    threshold = spec.k * spec.s
    collisions = []
    for i in range(spec.k):
        prev_set, prev_trace = 0, 0
        for j in range(spec.s):
            S = spec.block(i, j)
            tr = S & T
            if tr == prev_trace:
                collisions.append((i, j, prev_set, S))
            prev_set, prev_trace = S, tr
    # pairs of genuine chain sets first, then the ones involving the empty set
    collisions.sort(key=lambda c: (c[1] == 0, c[0], c[1]))
    for i, j, A, Bset in collisions:
        est = Fraction(estimate(sp, Bset))
        wa, wb = popcount(A), popcount(Bset)

        def inside(wt):
            if wt == 0:
                return est == 0
            return (1 - eps) * wt <= est <= (1 + eps) * wt
        if not inside(wa) or not inside(wb):
            return CertifyResult("invalid", {
                "chain": i + 1, "j": j, "j_next": j + 1,
                "weights": [wa, wb], "estimate": float(est),
                "trace": elements(Bset & T)}, len(sp), threshold)
    if len(sp) >= threshold or not collisions:
        return CertifyResult("consistent", None, len(sp), threshold)
    i, j, A, Bset = collisions[0]
    return CertifyResult("inconclusive", {
        "chain": i + 1, "j": j, "j_next": j + 1,
        "weights": [popcount(A), popcount(Bset)],
        "estimate": float(estimate(sp, Bset)), "trace": elements(Bset & T),
        "note": "equal traces but the estimate fits both weight windows"}, len(sp), threshold)


def chernoff_bound(t, delta) -> float:
    """``2 exp(-delta^2 / (3t))`` bound on ``Pr[|2X - t| > delta]``, ``X ~ Bin(t, 1/2)``."""
    if t < 1:
        raise ValueError("t must be at least 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    return 2 * math.exp(-delta * delta / (3 * t))


# ---------------------------------------------------------------------------
# random test codes

def random_bounded_nrd_code(n: int, max_words: int, d: int, rng, density=(0.01, 0.2)) -> Code:
    """Codewords are unions of nonempty subsets of ``d`` random base sets.

    A private coordinate of a petal lies in some base set that the petal
    contains, and no two petals can share that base, so NRD is at most ``d``.
    """
    bases = []
    for _ in range(d):
        dens = rng.uniform(*density)
        m = 0
        for i in np.flatnonzero(rng.random(n) < dens):
            m |= 1 << int(i)
        if not m:
            m = 1 << int(rng.integers(n))
        bases.append(m)
    words = set()
    tries = 0
    while len(words) < max_words and tries < 50 * max_words:
        tries += 1
        pick = rng.random(d) < 0.5
        if not pick.any():
            pick[int(rng.integers(d))] = True
        w = 0
        for b, on in zip(bases, pick):
            if on:
                w |= b
        words.add(w)
    return Code(n, tuple(words))


def _moonflower_coords(code: Code, coords) -> bool:
    """Cross-check helper: the codewords realising each unit vector form a moonflower."""
    I = to_mask(coords)
    reps = []
    for i in elements(I):
        rep = next((c for c in code.codewords if c & I == 1 << i), None)
        if rep is None:
            return False
        reps.append(rep)
    return is_moonflower(reps) is not None
