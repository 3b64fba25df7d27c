"""Dense two-phase tableau simplex over exact rationals or floats.

Problems here are tiny (a few dozen variables), so a plain tableau with
Bland's anti-cycling rule is enough.  The same code runs in both arithmetic
modes; ``exact=True`` feeds ``Fraction`` entries and compares against zero
exactly, ``exact=False`` uses floats with a small pivot tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

FLOAT_TOL = 1e-12


class LPError(RuntimeError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass
class LPResult:
    x: list
    value: object


def _conv(v, exact):
    if exact:
        return v if isinstance(v, Fraction) else Fraction(v)
    return float(v)


def maximize(c: Sequence, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (),
             A_eq: Sequence[Sequence] = (), b_eq: Sequence = (),
             exact: bool = True) -> LPResult:
    """Maximise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    tol = 0 if exact else FLOAT_TOL
    nv = len(c)
    rows = []  # (coeffs, rhs, kind) with kind in {"le", "ge", "eq"}
    for a, b in zip(A_ub, b_ub):
        rows.append(([_conv(v, exact) for v in a], _conv(b, exact), "le"))
    for a, b in zip(A_eq, b_eq):
        rows.append(([_conv(v, exact) for v in a], _conv(b, exact), "eq"))
    for i, (a, b, kind) in enumerate(rows):
        if len(a) != nv:
            raise ValueError("constraint width does not match objective")
        if b < 0:
            rows[i] = ([-v for v in a], -b, {"le": "ge", "ge": "le", "eq": "eq"}[kind])

    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    m = len(rows)
    n_slack = sum(1 for r in rows if r[2] != "eq")
    n_art = sum(1 for r in rows if r[2] != "le")
    width = nv + n_slack + n_art
    T = []
    basis = []
    art_cols = []
    s = nv
    a_col = nv + n_slack
    for a, b, kind in rows:
        row = list(a) + [zero] * (n_slack + n_art) + [b]
        if kind == "le":
            row[s] = one
            basis.append(s)
            s += 1
        elif kind == "ge":
            row[s] = -one
            s += 1
            row[a_col] = one
            basis.append(a_col)
            art_cols.append(a_col)
            a_col += 1
        else:
            row[a_col] = one
            basis.append(a_col)
            art_cols.append(a_col)
            a_col += 1
        T.append(row)

    def pivot(r, col):
        pr = T[r]
        pv = pr[col]
        if pv != one:
            T[r] = pr = [v / pv for v in pr]
        for i in range(m):
            if i != r:
                f = T[i][col]
                if f != zero:
                    Ti = T[i]
                    T[i] = [vi - f * vp for vi, vp in zip(Ti, pr)]
        basis[r] = col

    def run(obj, allowed):
        # obj: reduced-cost row (maximisation form: we pick entering col with obj[col] > tol)
        while True:
            enter = None
            for col in range(width):
                if col in allowed and obj[col] > tol:
                    enter = col
                    break
            if enter is None:
                return obj
            best = None
            leave = None
            for i in range(m):
                a = T[i][enter]
                if a > tol:
                    ratio = T[i][-1] / a
                    if (best is None or ratio < best - tol
                            or (abs(ratio - best) <= tol and basis[i] < basis[leave])):
                        best = ratio
                        leave = i
            if leave is None:
                raise Unbounded("objective is unbounded")
            pivot(leave, enter)
            f = obj[enter]
            obj = [o - f * p for o, p in zip(obj, T[leave])]

    def reduced(cost):
        # cost is a length-width list; returns reduced costs with last entry = -objective
        obj = list(cost) + [zero]
        for i, bcol in enumerate(basis):
            cb = cost[bcol]
            if cb != zero:
                obj = [o - cb * t for o, t in zip(obj, T[i])]
        return obj

    all_cols = set(range(width))
    if art_cols:
        cost1 = [zero] * width
        for col in art_cols:
            cost1[col] = -one
        run(reduced(cost1), all_cols)
        art = set(art_cols)
        residual = sum((T[i][-1] for i in range(m) if basis[i] in art), zero)
        if residual > (0 if exact else 1e-9):
            raise Infeasible("no feasible point")
        # drive remaining artificials out of the basis
        for i in range(m):
            if basis[i] in art:
                for col in range(nv + n_slack):
                    if abs(T[i][col]) > tol:
                        pivot(i, col)
                        break
        allowed = all_cols - art
    else:
        allowed = all_cols
    cost2 = [_conv(v, exact) for v in c] + [zero] * (n_slack + n_art)
    obj = run(reduced(cost2), allowed)
    x = [zero] * nv
    for i, bcol in enumerate(basis):
        if bcol < nv:
            x[bcol] = T[i][-1]
    value = sum((ci * xi for ci, xi in zip(cost2, x)), zero)
    return LPResult(x, value)


def feasible(A_ub=(), b_ub=(), A_eq=(), b_eq=(), nv: Optional[int] = None,
             exact: bool = True) -> Optional[list]:
    """A feasible ``x >= 0`` or ``None``."""
    if nv is None:
        rows = list(A_ub) + list(A_eq)
        nv = len(rows[0]) if rows else 0
    try:
        return maximize([0] * nv, A_ub, b_ub, A_eq, b_eq, exact=exact).x
    except Infeasible:
        return None
