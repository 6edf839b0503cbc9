"""Windowed pseudodifferential operators.

An element is a double series ``sum C[k, m] x**k (d/dx)**m`` with the
exponents bounded above by the ceilings ``K`` and ``M``.  Only finitely many
coefficients can be held, so each value also carries floors: a coefficient at
``(k, m)`` is known when ``k >= k_floor`` and ``m >= m_floor``; below that it
is unknown rather than zero.  Floors may be ``-inf`` for exactly known
(finite) operators.

Products use the normal-ordering rule

    (d/dx)**m x**k = sum_j (m)_j (k)_j / j! x**(k-j) (d/dx)**(m-j)

and set the result floors to the smallest indices where every contributing
pair of coefficients is known.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .diffop import DiffOp
from .scalars import coerce, falling_factorial, laurent_at_infinity, PFrac, RatFunc, scalar_str

INF = math.inf


class NotInvertible(ArithmeticError):
    """The top coefficient vanishes."""


class NotRegularAtInfinity(ValueError):
    """A coefficient grows at infinity, so the operator has no series form."""


def _norm_order_coeff(m: int, k: int, j: int) -> Fraction:
    return Fraction(falling_factorial(m, j) * falling_factorial(k, j), math.factorial(j))


class PsiDO:
    __slots__ = ("terms", "K", "M", "k_floor", "m_floor")

    def __init__(self, terms: dict, K=None, M=None, k_floor=-INF, m_floor=-INF):
        clean = {}
        for (k, m), c in terms.items():
            c = coerce(c)
            if c != 0 and k >= k_floor and m >= m_floor:
                clean[(int(k), int(m))] = c
        self.terms = clean
        if K is None:
            K = max((k for k, _ in clean), default=0)
        if M is None:
            M = max((m for _, m in clean), default=0)
        if any(k > K or m > M for k, m in clean):
            raise ValueError("term above ceiling")
        self.K, self.M = K, M
        self.k_floor, self.m_floor = k_floor, m_floor

    # -- constructors -------------------------------------------------------

    @classmethod
    def one(cls) -> "PsiDO":
        return cls({(0, 0): 1})

    @classmethod
    def monomial(cls, k: int, m: int, c=1) -> "PsiDO":
        return cls({(k, m): c})

    # -- inspection ---------------------------------------------------------

    @property
    def floor(self):
        return (self.k_floor, self.m_floor)

    def known(self, k: int, m: int) -> bool:
        return k >= self.k_floor and m >= self.m_floor

    def coefficient(self, k: int, m: int):
        if not self.known(k, m):
            raise KeyError(f"coefficient ({k}, {m}) lies outside the window")
        return self.terms.get((k, m), Fraction(0))

    def __repr__(self):
        body = " + ".join(f"{scalar_str(c)} x^{k} d^{m}" for (k, m), c in sorted(self.terms.items(), reverse=True))
        return f"PsiDO({body or '0'}; floor={self.floor})"

    def clip(self, k_floor=-INF, m_floor=-INF) -> "PsiDO":
        """Restrict the window (floors only move up)."""
        return PsiDO(self.terms, self.K, self.M, max(self.k_floor, k_floor), max(self.m_floor, m_floor))

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self):
        return PsiDO({km: -c for km, c in self.terms.items()}, self.K, self.M, *self.floor)

    def __add__(self, other):
        if isinstance(other, (int, Fraction, float)):
            other = PsiDO({(0, 0): other})
        if not isinstance(other, PsiDO):
            return NotImplemented
        terms = dict(self.terms)
        for km, c in other.terms.items():
            terms[km] = terms.get(km, 0) + c
        return PsiDO(terms, max(self.K, other.K), max(self.M, other.M),
                     max(self.k_floor, other.k_floor), max(self.m_floor, other.m_floor))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, float)):
            other = PsiDO({(0, 0): other})
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, float)):
            return PsiDO({km: c * other for km, c in self.terms.items()}, self.K, self.M, *self.floor)
        if not isinstance(other, PsiDO):
            return NotImplemented
        return psido_mul(self, other)

    def __rmul__(self, c):
        if isinstance(c, (int, Fraction, float)):
            return self * c
        return NotImplemented

    def __pow__(self, e: int):
        out = PsiDO.one()
        for _ in range(e):
            out = out * self
        return out

    # -- maps ---------------------------------------------------------------

    def dagger(self) -> "PsiDO":
        return dagger(self)

    def ddagger(self) -> "PsiDO":
        return ddagger(self)

    def sharp(self) -> "PsiDO":
        return sharp(self)

    def to_json(self):
        terms = [{"k": k, "m": m, "c": scalar_str(c)} for (k, m), c in sorted(self.terms.items(), reverse=True)]
        fl = [None if f == -INF else f for f in self.floor]
        return {"terms": terms, "floor": fl, "ceiling": [self.K, self.M]}

    @classmethod
    def from_json(cls, data) -> "PsiDO":
        terms = {(t["k"], t["m"]): coerce(t["c"]) for t in data["terms"]}
        fl = [(-INF if f is None else f) for f in data.get("floor", [None, None])]
        ceil = data.get("ceiling", [None, None])
        return cls(terms, ceil[0], ceil[1], fl[0], fl[1])


def _j_limit(m1: int, k2: int) -> float:
    """Index after which (m1)_j (k2)_j vanishes for every larger j."""
    lim = INF
    if m1 >= 0:
        lim = m1
    if k2 >= 0:
        lim = min(lim, k2)
    return lim


def psido_mul(a: PsiDO, b: PsiDO, k_floor=-INF, m_floor=-INF) -> PsiDO:
    """Product ``a * b``; optional floors narrow the computed window."""
    kf = max(a.k_floor + b.K, a.K + b.k_floor, k_floor)
    mf = max(a.m_floor + b.M, a.M + b.m_floor, m_floor)
    out: dict[tuple[int, int], object] = {}
    for (k1, m1), c1 in a.terms.items():
        for (k2, m2), c2 in b.terms.items():
            j_max = min(_j_limit(m1, k2), k1 + k2 - kf, m1 + m2 - mf)
            if j_max == INF:
                raise ValueError("product needs a finite window: both series are infinite here")
            c = c1 * c2
            for j in range(int(j_max) + 1):
                w = _norm_order_coeff(m1, k2, j)
                if w == 0:
                    continue
                key = (k1 + k2 - j, m1 + m2 - j)
                out[key] = out.get(key, 0) + c * w
    return PsiDO(out, a.K + b.K, a.M + b.M, kf, mf)


def dagger(a: PsiDO) -> PsiDO:
    """``x^k d^m -> (-d)^m x^k``, renormalized."""
    out: dict[tuple[int, int], object] = {}
    for (k, m), c in a.terms.items():
        j_max = min(_j_limit(m, k), k - a.k_floor, m - a.m_floor)
        if j_max == INF:
            raise ValueError("conjugate of an infinite series needs a finite window")
        sign = -1 if m % 2 else 1
        for j in range(int(j_max) + 1):
            w = _norm_order_coeff(m, k, j)
            if w == 0:
                continue
            key = (k - j, m - j)
            out[key] = out.get(key, 0) + c * sign * w
    return PsiDO(out, a.K, a.M, a.k_floor, a.m_floor)


def ddagger(a: PsiDO) -> PsiDO:
    """Swap the x- and d/dx-exponents of every coefficient."""
    return PsiDO({(m, k): c for (k, m), c in a.terms.items()}, a.M, a.K, a.m_floor, a.k_floor)


def sharp(a: PsiDO) -> PsiDO:
    return ddagger(dagger(a))


def compare(a: PsiDO, b: PsiDO, tol: float = 0.0) -> tuple[bool, tuple]:
    """Equality on the intersection of windows; returns (equal, window)."""
    kf = max(a.k_floor, b.k_floor)
    mf = max(a.m_floor, b.m_floor)
    keys = {km for km in a.terms if km[0] >= kf and km[1] >= mf}
    keys |= {km for km in b.terms if km[0] >= kf and km[1] >= mf}
    for km in keys:
        d = a.terms.get(km, 0) - b.terms.get(km, 0)
        if (d != 0) if tol == 0 else abs(d) > tol * max(1.0, abs(a.terms.get(km, 0)), abs(b.terms.get(km, 0))):
            return False, (kf, mf)
    return True, (kf, mf)


def psido_invert(d: PsiDO, k_floor: int, m_floor: int) -> PsiDO:
    """Inverse of d, guaranteed (at most) down to the requested floors.

    Writes ``1 + R = C^-1 x^-K d (d/dx)^-M`` and sums the geometric series in
    ``-R``; every term of ``R**j`` has ``k + m <= -j``, which bounds the sum.
    """
    if k_floor == -INF or m_floor == -INF:
        raise ValueError("inversion needs finite requested floors")
    K, M = d.K, d.M
    top = d.terms.get((K, M), 0)
    if top == 0:
        raise NotInvertible(f"top coefficient C[{K},{M}] vanishes")
    inv_top = (Fraction(1) / top) if isinstance(top, Fraction) else 1 / top
    # floors needed for the inner series S so that d^-1 = C^-1 d^-M S x^-K lands on the request
    ks, ms = k_floor + K, m_floor + M
    left = PsiDO.monomial(-K, 0, inv_top)
    right = PsiDO.monomial(0, -M)
    normalized = psido_mul(psido_mul(left, d, ks, ms), right, ks, ms)
    rest = normalized - PsiDO.one()
    if rest.K > 0 or rest.M > 0 or (0, 0) in rest.terms:
        raise AssertionError("normalized remainder must lie strictly below the top term")
    rest = PsiDO(rest.terms, 0, 0, rest.k_floor, rest.m_floor)
    ks, ms = max(ks, rest.k_floor), max(ms, rest.m_floor)
    depth = -(ks + ms)
    series = PsiDO.one().clip(ks, ms)
    power = PsiDO.one()
    for j in range(1, max(depth, 0) + 1):
        power = psido_mul(power, -rest, ks, ms)
        if not power.terms:
            break
        series = series + power
    series = PsiDO(series.terms, 0, 0, ks, ms)
    out = psido_mul(PsiDO.monomial(0, -M), series)
    out = psido_mul(out, PsiDO.monomial(-K, 0))
    return PsiDO(out.terms, -K, -M, out.k_floor, out.m_floor) * inv_top


def diffop_to_psido(d: DiffOp, depth: int) -> PsiDO:
    """Expand every coefficient at infinity down to ``x**(-depth)``."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    terms = {}
    for m, c in enumerate(d.coeffs):
        if isinstance(c, PFrac):
            c = c.to_ratfunc()
        if not isinstance(c, RatFunc):
            raise TypeError("scalar rational coefficients expected")
        if c.is_zero():
            continue
        if c.top > 0:
            raise NotRegularAtInfinity(f"coefficient of d^{m} grows like x^{c.top}")
        tail = laurent_at_infinity(c, int(c.top) + depth + 1)
        for e, v in tail.as_dict().items():
            terms[(e, m)] = v
    return PsiDO(terms, 0, d.order, -depth, -INF)


def psido_from_diffop_poly(d: DiffOp) -> PsiDO:
    """Exact PsiDO for an operator with polynomial coefficients."""
    return PsiDO(d.poly_terms(), None, None, -INF, -INF)
