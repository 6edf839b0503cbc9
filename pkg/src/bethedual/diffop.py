"""Differential operators with function-valued coefficients.

A :class:`DiffOp` stores ``coeffs[m]`` as the coefficient of ``(d/dx)**m``
(ascending internally, leading-first in JSON).  Coefficients may be any type
implementing ``+ - * deriv is_zero``: :class:`RatFunc` for exact scalar work,
:class:`PFrac` for float work and for matrix-valued coefficients.  Products of
coefficients keep their order, so matrix-valued operators compose correctly.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

from .scalars import PFrac, Poly, RatFunc


class NotDivisible(ArithmeticError):
    """The kernel of the divisor is not contained in the kernel of the dividend."""


class NotDifferential(ArithmeticError):
    """A transformed operator carries negative powers of d/dx."""


def _zero_like(c):
    if isinstance(c, RatFunc):
        return RatFunc.zero()
    if isinstance(c, PFrac):
        return c * 0
    return 0 * c


def _one_like(c):
    if isinstance(c, RatFunc):
        return RatFunc.one()
    if isinstance(c, PFrac):
        from .scalars import _one_like as unit

        return PFrac.const(unit(c))
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _is_zero(c, tol: float = 0.0) -> bool:
    return c.is_zero(tol) if hasattr(c, "is_zero") else c == 0


def _deriv(c, times: int = 1):
    for _ in range(times):
        c = c.deriv()
    return c


class DiffOp:
    """``sum_m coeffs[m] (d/dx)**m`` with the leading coefficient nonzero."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        c = list(coeffs)
        while len(c) > 1 and _is_zero(c[-1]):
            c.pop()
        if not c:
            raise ValueError("DiffOp needs at least one coefficient")
        self.coeffs = tuple(c)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_leading_first(cls, coeffs: Sequence) -> "DiffOp":
        return cls(list(reversed(list(coeffs))))

    @classmethod
    def const(cls, c) -> "DiffOp":
        return cls([c])

    @classmethod
    def d_minus(cls, a, like=None) -> "DiffOp":
        """``d/dx - a`` where ``a`` is a scalar or coefficient object."""
        if like is None:
            one = RatFunc.one()
            a = a if isinstance(a, RatFunc) else RatFunc.const(a)
        else:
            one = _one_like(like)
            a = a if isinstance(a, type(like)) else one * a
        return cls([-a, one])

    # -- inspection ---------------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self):
        return self.coeffs[-1]

    def coefficient(self, m: int):
        if 0 <= m < len(self.coeffs):
            return self.coeffs[m]
        return _zero_like(self.coeffs[0])

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(_is_zero(c, tol) for c in self.coeffs)

    def is_monic(self, tol: float = 0.0) -> bool:
        return (self.leading - _one_like(self.leading)).is_zero(tol)

    def __repr__(self):
        return f"DiffOp(order={self.order}, coeffs={list(self.coeffs)})"

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def close(self, other: "DiffOp", tol: float) -> bool:
        n = max(len(self.coeffs), len(other.coeffs))
        for m in range(n):
            a, b = self.coefficient(m), other.coefficient(m)
            if isinstance(a, RatFunc):
                a = PFrac.from_ratfunc(a)
            if isinstance(b, RatFunc):
                b = PFrac.from_ratfunc(b)
            if not a.close(b, tol):
                return False
        return True

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self):
        return DiffOp([-c for c in self.coeffs])

    def __add__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        out = []
        for m in range(n):
            if m < len(self.coeffs) and m < len(other.coeffs):
                out.append(self.coeffs[m] + other.coeffs[m])
            else:
                out.append(self.coeffs[m] if m < len(self.coeffs) else other.coeffs[m])
        return DiffOp(out)

    def __sub__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        # (a d^p)(b d^q) = sum_l C(p, l) a b^(l) d^(p+q-l)
        acc: dict[int, object] = {}
        derivs = [[b] for b in other.coeffs]
        for p, a in enumerate(self.coeffs):
            if _is_zero(a):
                continue
            for q, dq in enumerate(derivs):
                while len(dq) <= p:
                    dq.append(dq[-1].deriv())
                for l in range(p + 1):
                    b = dq[l]
                    if _is_zero(b):
                        continue
                    term = a * b
                    if l:
                        term = term * math.comb(p, l)
                    t = p + q - l
                    acc[t] = acc[t] + term if t in acc else term
        if not acc:
            return DiffOp([_zero_like(self.coeffs[0])])
        zero = _zero_like(next(iter(acc.values())))
        return DiffOp([acc.get(t, zero) for t in range(max(acc) + 1)])

    def lmul(self, f) -> "DiffOp":
        """Left multiplication by a function."""
        return DiffOp([f * c for c in self.coeffs])

    def scale(self, c) -> "DiffOp":
        return DiffOp([cc * c for cc in self.coeffs])

    def map(self, fn) -> "DiffOp":
        return DiffOp([fn(c) for c in self.coeffs])

    def __pow__(self, e: int) -> "DiffOp":
        out = DiffOp([_one_like(self.leading)])
        for _ in range(e):
            out = out * self
        return out

    # -- involutions --------------------------------------------------------

    def dagger(self) -> "DiffOp":
        """Formal conjugate: ``sum (-d/dx)^m a_m``."""
        acc: dict[int, object] = {}
        for m, a in enumerate(self.coeffs):
            if _is_zero(a):
                continue
            sign = -1 if m % 2 else 1
            da = a
            for l in range(m + 1):
                if l:
                    da = da.deriv()
                term = da * (sign * math.comb(m, l))
                t = m - l
                acc[t] = acc[t] + term if t in acc else term
        zero = _zero_like(self.coeffs[0])
        return DiffOp([acc.get(t, zero) for t in range(len(self.coeffs))])

    def poly_terms(self, tol: float = 0.0) -> dict[tuple[int, int], object]:
        """``{(k, m): C_km}`` in normal form; requires polynomial coefficients."""
        out = {}
        for m, c in enumerate(self.coeffs):
            p = c.as_poly(tol)
            if p is None:
                raise NotDifferential(f"coefficient of d^{m} is not a polynomial")
            for k, v in enumerate(p.coeffs):
                if v != 0:
                    out[(k, m)] = v
        return out

    def ddagger(self, tol: float = 0.0) -> "DiffOp":
        """Swap x- and d/dx-exponents of the normal form (polynomial coefficients)."""
        terms = self.poly_terms(tol)
        float_mode = isinstance(self.coeffs[0], PFrac)
        if not terms:
            return DiffOp([_zero_like(self.coeffs[0])])
        top = max(k for k, _ in terms)
        cols: list[list] = [[] for _ in range(top + 1)]
        for (k, m), v in terms.items():
            col = cols[k]
            while len(col) <= m:
                col.append(0)
            col[m] = v
        if float_mode:
            return DiffOp([PFrac(col) for col in cols])
        return DiffOp([RatFunc(Poly(col)) for col in cols])

    def sharp(self, tol: float = 0.0) -> "DiffOp":
        return self.dagger().ddagger(tol)

    # -- evaluation ---------------------------------------------------------

    def apply(self, f):
        """``sum_m a_m f^(m)`` for any f with ``deriv`` and left scalar action."""
        out = None
        g = f
        for m, a in enumerate(self.coeffs):
            if m:
                g = g.deriv()
            if _is_zero(a):
                continue
            term = a * g
            out = term if out is None else out + term
        return out if out is not None else f * 0

    # -- conversion ---------------------------------------------------------

    def to_pfrac(self, poles=None) -> "DiffOp":
        return self.map(lambda c: PFrac.from_ratfunc(c, poles) if isinstance(c, RatFunc) else c)

    def to_ratfunc(self) -> "DiffOp":
        return self.map(lambda c: c.to_ratfunc() if isinstance(c, PFrac) else c)

    def to_json(self):
        coeffs = [c.to_ratfunc() if isinstance(c, PFrac) else c for c in reversed(self.coeffs)]
        return {"order": self.order, "coeffs": [c.to_json() for c in coeffs]}

    @classmethod
    def from_json(cls, data) -> "DiffOp":
        ops = cls.from_leading_first([RatFunc.from_json(c) for c in data["coeffs"]])
        if ops.order != data.get("order", ops.order):
            raise ValueError("order field disagrees with coefficient list")
        return ops


def diffop_mul(a: DiffOp, b: DiffOp) -> DiffOp:
    return a * b


def diffop_apply(a: DiffOp, f):
    return a.apply(f)


def quotient(dhat: DiffOp, d: DiffOp, tol: float = 0.0) -> DiffOp:
    """The operator Q with ``Q * d == dhat`` (both monic)."""
    n, big = d.order, dhat.order
    if big < n:
        raise NotDivisible("dividend has lower order than divisor")
    if not d.is_monic(tol) or not dhat.is_monic(tol):
        raise ValueError("quotient expects monic operators")
    r_top = big - n
    c: dict[int, object] = {}
    # derivative cache of divisor coefficients
    db = [[b] for b in d.coeffs]
    for t in range(big, n - 1, -1):
        r0 = t - n
        acc = dhat.coefficient(t)
        for r in range(r0 + 1, r_top + 1):
            for l in range(r + 1):
                s = t - r + l
                if s > n or s < 0:
                    continue
                while len(db[s]) <= l:
                    db[s].append(db[s][-1].deriv())
                b = db[s][l]
                if _is_zero(b):
                    continue
                acc = acc - c[r] * b * math.comb(r, l)
        c[r0] = acc
    q = DiffOp([c[r] for r in range(r_top + 1)])
    if not (q * d - dhat).is_zero(tol * max(1.0, _scale(dhat))):
        raise NotDivisible("nonzero remainder after division")
    return q


def _scale(d: DiffOp) -> float:
    out = 0.0
    for c in d.coeffs:
        if isinstance(c, PFrac):
            out = max(out, c.scale())
    return out


def rdet(matrix: Sequence[Sequence[DiffOp]]) -> DiffOp:
    """Row determinant: entries multiplied in row order for each permutation."""
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError("rdet needs a square matrix")
    total = None
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = matrix[0][perm[0]]
        for i in range(1, n):
            term = term * matrix[i][perm[i]]
        if inversions % 2:
            term = -term
        total = term if total is None else total + term
    return total
