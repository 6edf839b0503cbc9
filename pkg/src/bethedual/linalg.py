"""Row reduction over exact rationals (or floats with a pivot tolerance)."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def rref(rows: Sequence[Sequence], tol: float = 0.0) -> tuple[list[list], list[int]]:
    """Reduced row echelon form and pivot columns."""
    a = [list(r) for r in rows]
    if not a:
        return a, []
    ncols = len(a[0])
    pivots = []
    r = 0
    for c in range(ncols):
        if r >= len(a):
            break
        best = None
        for i in range(r, len(a)):
            v = a[i][c]
            if (v != 0) if tol == 0 else abs(v) > tol:
                if best is None or (tol and abs(v) > abs(a[best][c])):
                    best = i
                if not tol:
                    break
        if best is None:
            continue
        a[r], a[best] = a[best], a[r]
        piv = a[r][c]
        a[r] = [v / piv for v in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(rows: Sequence[Sequence], tol: float = 0.0) -> int:
    return len(rref(rows, tol)[1])


def nullspace(rows: Sequence[Sequence], ncols: int, tol: float = 0.0) -> list[list]:
    """Basis of ``{v : rows @ v = 0}``."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    red, pivots = rref(rows, tol)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(red, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis
