"""Set families over a finite universe, stored as integer bitsets.

A member ``S`` of a family on ``n`` coordinates is an ``int`` whose bit ``i``
is set iff ``i`` is in ``S``.  Families are deduplicated and kept in a
canonical order (size first, then by sorted element tuple) so that every
seeded procedure built on top of them is reproducible.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence


class BudgetExceeded(RuntimeError):
    """Raised when a search exceeds its node/size budget.

    ``best`` carries whatever partial answer was available (a lower bound for
    maximisation searches), ``witness`` the matching certificate if any.
    """

    def __init__(self, message, best=None, witness=None):
        super().__init__(message)
        self.best = best
        self.witness = witness


class FamilyFormatError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# ---------------------------------------------------------------------------
# bitset helpers

def popcount(x: int) -> int:
    return bin(x).count("1")


def to_mask(elements: Iterable[int]) -> int:
    m = 0
    for e in elements:
        if e < 0:
            raise ValueError(f"negative coordinate {e}")
        m |= 1 << e
    return m


def elements(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _canon_key(mask: int):
    return (popcount(mask), tuple(elements(mask)))


def _as_mask(s) -> int:
    if isinstance(s, int):
        if s < 0:
            raise ValueError("bitset must be nonnegative")
        return s
    return to_mask(s)


@dataclass(frozen=True)
class SetFamily:
    """Deduplicated family of subsets of ``{0, ..., n-1}``.

    Members may be given as bitset ints or as iterables of coordinates.
    """

    n: int
    members: tuple = ()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("universe size must be nonnegative")
        full = (1 << self.n) - 1
        masks = set()
        for s in self.members:
            m = _as_mask(s)
            if m & ~full:
                raise ValueError(f"member {elements(m)} not inside universe of size {self.n}")
            masks.add(m)
        object.__setattr__(self, "members", tuple(sorted(masks, key=_canon_key)))

    @classmethod
    def from_sets(cls, sets, n: Optional[int] = None) -> "SetFamily":
        masks = [_as_mask(s) for s in sets]
        if n is None:
            n = max((m.bit_length() for m in masks), default=0)
        return cls(n, tuple(masks))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, s):
        return _as_mask(s) in set(self.members)

    def as_sets(self) -> list[frozenset]:
        return [frozenset(elements(m)) for m in self.members]

    @property
    def support(self) -> int:
        u = 0
        for m in self.members:
            u |= m
        return u

    @property
    def support_size(self) -> int:
        return popcount(self.support)

    @property
    def max_set_size(self) -> int:
        return max((popcount(m) for m in self.members), default=0)

    def without_empty(self) -> "SetFamily":
        return SetFamily(self.n, tuple(m for m in self.members if m))

    def subfamily(self, indices: Iterable[int]) -> "SetFamily":
        return SetFamily(self.n, tuple(self.members[i] for i in indices))

    def __repr__(self):
        return f"SetFamily(n={self.n}, members={[elements(m) for m in self.members]})"


@dataclass(frozen=True)
class MoonflowerWitness:
    petal_indices: tuple
    core: int  # bitset
    petals: tuple = field(default=(), compare=False)

    @property
    def size(self) -> int:
        return len(self.petal_indices)


@dataclass(frozen=True)
class FamilyStats:
    size: int
    max_set_size: int
    support_size: int
    mf_lower: int
    mf_exact: Optional[int] = None

    def check(self) -> bool:
        if self.mf_exact is None:
            return True
        return (self.mf_lower <= self.mf_exact
                and self.support_size <= self.mf_exact * self.max_set_size)


# ---------------------------------------------------------------------------
# moonflowers

def _core_of(masks: Sequence[int]) -> int:
    """Elements lying in at least two of ``masks``."""
    once = 0
    twice = 0
    for m in masks:
        twice |= once & m
        once |= m
    return twice


def is_moonflower(sets, indices: Optional[Sequence[int]] = None) -> Optional[MoonflowerWitness]:
    """Return a witness iff every set has an element found in no other set.

    ``sets`` may be masks or coordinate iterables.  Duplicate or empty inputs
    raise ``ValueError``.  ``indices`` labels the petals in the witness
    (defaults to positions in ``sets``).
    """
    masks = [_as_mask(s) for s in sets]
    if any(m == 0 for m in masks):
        raise ValueError("moonflower petals must be nonempty")
    if len(set(masks)) != len(masks):
        raise ValueError("moonflower petals must be distinct")
    core = _core_of(masks)
    for m in masks:
        if not m & ~core:
            return None
    if indices is None:
        indices = range(len(masks))
    return MoonflowerWitness(tuple(indices), core, tuple(masks))


def validate_witness(fam: SetFamily, wit: MoonflowerWitness) -> bool:
    masks = [fam.members[i] for i in wit.petal_indices]
    if not masks or len(set(masks)) != len(masks) or any(m == 0 for m in masks):
        return False
    core = wit.core
    if core != _core_of(masks):
        return False
    seen = 0
    for m in masks:
        petal = m & ~core
        if not petal or petal & seen:
            return False
        seen |= petal
    return True


def mf_greedy(fam: SetFamily) -> tuple[int, MoonflowerWitness]:
    """Inclusion-minimal subfamily covering ``supp(fam)``.

    Any such subfamily is a moonflower: each of its sets owns an element no
    other chosen set covers.  The value is a lower bound on MF(fam).
    """
    members = fam.members
    nonempty = [i for i, m in enumerate(members) if m]
    if not nonempty:
        raise ValueError("mf_greedy needs a family with a nonempty member")
    # start from everything, drop redundant sets largest-index first
    # (canonical order puts small sets first, so large sets tend to survive)
    chosen = list(nonempty)
    target = fam.support
    for i in sorted(nonempty, key=lambda j: _canon_key(members[j])):
        rest = 0
        for j in chosen:
            if j != i:
                rest |= members[j]
        if rest == target:
            chosen.remove(i)
    chosen.sort()
    wit = is_moonflower([members[i] for i in chosen], chosen)
    assert wit is not None
    return len(chosen), wit


def mf_exact(fam: SetFamily, budget: int = 10**7) -> tuple[int, MoonflowerWitness]:
    """Maximum moonflower size by branch and bound.

    Candidates are scanned in canonical (ascending size) order.  A partial
    selection stays valid iff every selected set keeps a private element, so
    the search is hereditary.  Pruning uses the greedy lower bound and the
    count of elements still available as private elements for new petals.
    Raises ``BudgetExceeded`` (with the best bound so far) after ``budget``
    nodes.
    """
    members = fam.members
    cand = [i for i, m in enumerate(members) if m]
    if not cand:
        raise ValueError("mf_exact needs a family with a nonempty member")
    best_val, best_wit = mf_greedy(fam)
    best = [best_val, list(best_wit.petal_indices)]
    nodes = 0

    def rec(start, sel, union, core, avail_cands):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded("mf_exact node budget exceeded", best[0],
                                 _witness(fam, best[1]))
        if len(sel) > best[0]:
            best[0] = len(sel)
            best[1] = list(sel)
        # every new petal needs its own element outside the current union
        free = 0
        for c in avail_cands:
            free |= members[c] & ~union
        if len(sel) + min(len(avail_cands), popcount(free)) <= best[0]:
            return
        for pos, c in enumerate(avail_cands):
            m = members[c]
            if len(sel) + len(avail_cands) - pos <= best[0]:
                return
            if not m & ~union:
                continue
            new_core = core | (union & m)
            ok = True
            for s in sel:
                if not members[s] & ~new_core:
                    ok = False
                    break
            if not ok:
                continue
            new_union = union | m
            rest = [d for d in avail_cands[pos + 1:]
                    if members[d] & ~new_union
                    and all(members[s] & ~(new_core | (new_union & members[d])) for s in sel + [c])]
            sel.append(c)
            rec(c, sel, new_union, new_core, rest)
            sel.pop()

    rec(0, [], 0, 0, cand)
    return best[0], _witness(fam, best[1])


def _witness(fam, idx):
    idx = sorted(idx)
    masks = [fam.members[i] for i in idx]
    return MoonflowerWitness(tuple(idx), _core_of(masks), tuple(masks))


def family_stats(fam: SetFamily, exact: bool = True, budget: int = 10**7) -> FamilyStats:
    nonempty = any(fam.members)
    lower = mf_greedy(fam)[0] if nonempty else 0
    ex = None
    if exact:
        ex = mf_exact(fam, budget)[0] if nonempty else 0
    return FamilyStats(len(fam), fam.max_set_size, fam.support_size, lower, ex)


# ---------------------------------------------------------------------------
# projections, closures, shattering

def project(fam: SetFamily, J, relabel: bool = False) -> SetFamily:
    """Trace family ``{S & J}``; the empty trace is kept if it occurs.

    With ``relabel`` the result lives on ``{0..|J|-1}`` with the elements of
    ``J`` renumbered in increasing order.
    """
    jm = _as_mask(J)
    full = (1 << fam.n) - 1
    if jm & ~full:
        raise ValueError("projection set must lie inside the universe")
    traces = {m & jm for m in fam.members}
    if not relabel:
        return SetFamily(fam.n, tuple(traces))
    pos = {e: r for r, e in enumerate(elements(jm))}
    out = []
    for t in traces:
        out.append(to_mask(pos[e] for e in elements(t)))
    return SetFamily(popcount(jm), tuple(out))


def gen_lower_bound_family(k: int, w: int, max_size: int = 10**6) -> SetFamily:
    """All ``w``-subsets of a universe of size ``k + w - 2``.

    This family has ``binom(k+w-2, w)`` members and no ``k``-moonflower.
    """
    if k < 2 or w < 1:
        raise ValueError("need k >= 2 and w >= 1")
    n = k + w - 2
    size = math.comb(n, w)
    if size > max_size:
        raise BudgetExceeded(f"family would have {size} members (limit {max_size})", size)
    return SetFamily(n, tuple(to_mask(c) for c in itertools.combinations(range(n), w)))


def union_closure(fam: SetFamily, cap: int = 1 << 20) -> SetFamily:
    """All unions of subfamilies, the empty union included."""
    closure = {0}
    for m in fam.members:
        new = {u | m for u in closure}
        closure |= new
        if len(closure) > cap:
            raise BudgetExceeded(f"union closure exceeds {cap} sets", len(closure))
    return SetFamily(fam.n, tuple(closure))


def shatters(fam: SetFamily, S: int) -> bool:
    traces = {m & S for m in fam.members}
    return len(traces) == 1 << popcount(S)


def vc_dimension(fam: SetFamily, cap: int = 22) -> int:
    """Exact VC dimension, trying the largest candidate sizes first.

    Only coordinates in the support can be shattered (beyond the empty set),
    and a shattered set of size d needs ``2**d <= |fam|``.  ``cap`` bounds the
    support size searched; exceeding it raises ``BudgetExceeded`` carrying the
    trivial lower bound.
    """
    if not fam.members:
        return -1  # nothing is shattered, not even the empty set
    sup = elements(fam.support)
    if len(sup) > cap:
        raise BudgetExceeded(f"support of size {len(sup)} exceeds cap {cap}",
                             0 if fam.members else -1)
    top = min(len(sup), len(fam).bit_length() - 1)
    for d in range(top, 0, -1):
        # shattering is hereditary: a shattered d-set implies shattered (d-1)-sets,
        # so searching downward stops at the first success
        for combo in itertools.combinations(sup, d):
            if shatters(fam, to_mask(combo)):
                return d
    return 0


def sauer_shelah_bound(n: int, d: int) -> int:
    return sum(math.comb(n, i) for i in range(0, d + 1))


# ---------------------------------------------------------------------------
# text format

def format_family(fam: SetFamily) -> str:
    lines = [f"n {fam.n}"]
    for m in fam.members:
        lines.append(" ".join(str(e) for e in elements(m)))
    return "\n".join(lines) + "\n"


def parse_family(text: str) -> SetFamily:
    """Parse the ``n <int>`` header plus one member per line.

    A blank line is the empty set.  Trailing newline at end of file is not a
    member.
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
        raise FamilyFormatError("universe size is not an integer", 1) from None
    if n < 0:
        raise FamilyFormatError("universe size must be nonnegative", 1)
    members = []
    for lineno, line in enumerate(lines[1:], start=2):
        toks = line.split()
        try:
            coords = [int(t) for t in toks]
        except ValueError:
            raise FamilyFormatError(f"bad coordinate in {line!r}", lineno) from None
        if any(c < 0 or c >= n for c in coords):
            raise FamilyFormatError(f"coordinate out of range in {line!r}", lineno)
        members.append(to_mask(coords))
    return SetFamily(n, tuple(members))


def read_family(path) -> SetFamily:
    with open(path) as fh:
        return parse_family(fh.read())


def write_family(fam: SetFamily, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_family(fam))
