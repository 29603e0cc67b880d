"""Exact linear programming over the rationals (dense two-phase simplex,
Bland's rule, hence deterministic and cycle-free).  Problem sizes here are
tiny: variables = edge orbits of a graph, constraints = candidate loops."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def _pivot(T, basis, r, c):
    m = len(T)
    piv = T[r][c]
    T[r] = [x / piv for x in T[r]]
    for i in range(m):
        if i != r and T[i][c] != 0:
            f = T[i][c]
            T[i] = [a - f * b for a, b in zip(T[i], T[r])]
    basis[r] = c


def _run_simplex(T, basis, ncols) -> str:
    """Minimize the objective in the last row; Bland's rule."""
    m = len(T) - 1
    while True:
        obj = T[-1]
        enter = -1
        for j in range(ncols):
            if obj[j] < 0:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        leave = -1
        best: Optional[Fraction] = None
        for i in range(m):
            if T[i][enter] > 0:
                ratio = T[i][-1] / T[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED
        _pivot(T, basis, leave, enter)


def solve_lp(c: Sequence[Fraction], A_ub, b_ub, A_eq, b_eq):
    """Maximize c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0.

    Returns (status, x, value); x is None unless status == "optimal".
    All arithmetic is exact.
    """
    c = [Fraction(v) for v in c]
    n = len(c)
    rows = []
    nslack = len(A_ub)
    for a, b in zip(A_ub, b_ub):
        rows.append(([Fraction(v) for v in a], Fraction(b), True))
    for a, b in zip(A_eq, b_eq):
        rows.append(([Fraction(v) for v in a], Fraction(b), False))
    m = len(rows)
    width = n + nslack + m + 1  # x, slacks, artificials, rhs
    T = []
    si = 0
    for i, (a, b, slack) in enumerate(rows):
        row = a + [Fraction(0)] * (nslack + m) + [b]
        if slack:
            row[n + si] = Fraction(1)
            si += 1
        if b < 0:
            row = [-v for v in row]
        row[n + nslack + i] = Fraction(1)
        T.append(row)
    basis = [n + nslack + i for i in range(m)]
    # phase 1: minimize sum of artificials
    obj = [Fraction(0)] * width
    for j in range(n + nslack):
        obj[j] = -sum(T[i][j] for i in range(m))
    obj[-1] = -sum(T[i][-1] for i in range(m))
    T.append(obj)
    status = _run_simplex(T, basis, n + nslack)
    if status != OPTIMAL or T[-1][-1] < 0:
        return INFEASIBLE, None, None
    # drive artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n + nslack:
            for j in range(n + nslack):
                if T[i][j] != 0:
                    _pivot(T, basis, i, j)
                    break
    T.pop()
    # phase 2: maximize c.x == minimize -c.x
    obj = [Fraction(0)] * width
    for j in range(n):
        obj[j] = -c[j]
    for i in range(m):
        if basis[i] < n and obj[basis[i]] != 0:
            f = obj[basis[i]]
            obj = [a - f * b for a, b in zip(obj, T[i])]
    T.append(obj)
    # pricing is restricted to the first n+nslack columns, so artificials never re-enter
    status = _run_simplex(T, basis, n + nslack)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None
    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i][-1]
    value = sum(ci * xi for ci, xi in zip(c, x))
    return OPTIMAL, x, value


def feasible_point(A_ub, b_ub, A_eq, b_eq, nvars: int):
    """Exact feasibility of {x >= 0, A_ub x <= b_ub, A_eq x = b_eq}; returns a
    witness point or None."""
    status, x, _ = solve_lp([Fraction(0)] * nvars, A_ub, b_ub, A_eq, b_eq)
    return x if status == OPTIMAL else None
