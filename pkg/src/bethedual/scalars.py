"""Coefficient arithmetic: rationals, univariate polynomials, rational
functions, Laurent tails at infinity and partial-fraction forms.

Two scalar modes share one code path.  Exact values are
:class:`fractions.Fraction` (Python ints are promoted on entry); float values
are ``float`` or ``complex``.  Polynomial gcd reduction is only performed in
exact mode; float-mode rational functions keep a monic denominator and nothing
more.  Code that needs cancellation in float mode should use :class:`PFrac`,
whose pole set is carried explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

NEG_INF = float("-inf")


class UnsplitDenominator(ValueError):
    """A denominator does not factor over the supplied (or rational) poles."""


# ---------------------------------------------------------------------------
# scalar helpers


def coerce(v):
    """Promote ints (and ``"p/q"`` strings) to Fraction; leave floats alone."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (bool, np.bool_)):
        return Fraction(int(v))
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        if "j" in v:
            return complex(v)
        if "/" in v or v.lstrip("-").isdigit():
            return Fraction(v)
        return float(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.complexfloating):
        return complex(v)
    return v


def is_exact(v) -> bool:
    if isinstance(v, np.ndarray):
        return v.dtype == object and all(isinstance(x, (int, Fraction)) for x in v.flat)
    return isinstance(v, (int, Fraction))


def exact_zero(v) -> bool:
    if isinstance(v, np.ndarray):
        return not np.any(v != 0)
    return v == 0


def magnitude(v) -> float:
    if isinstance(v, np.ndarray):
        return float(np.max(np.abs(v.astype(complex)))) if v.size else 0.0
    return abs(complex(v))


def near_zero(v, tol: float = 0.0, scale: float = 1.0) -> bool:
    if tol == 0:
        return exact_zero(v)
    return magnitude(v) <= tol * max(1.0, scale)


def vmul(a, b):
    """Product respecting operator order when both factors are matrices."""
    if isinstance(a, np.ndarray) and isinstance(b, np.ndarray):
        return a @ b
    return a * b


def scalar_str(v) -> str:
    v = coerce(v)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return repr(v)


def falling_factorial(a: int, j: int) -> int:
    """``a (a-1) ... (a-j+1)``; the empty product for ``j == 0``."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    out = 1
    for t in range(j):
        out *= a - t
    return out


def _shift_values(vals: Sequence, a) -> list:
    """Coefficients of ``P(y + a)`` in ``y`` given ascending coefficients of P."""
    n = len(vals)
    out = []
    for r in range(n):
        acc = None
        for s in range(r, n):
            term = vals[s] * (math.comb(s, r) * a ** (s - r)) if s > r else vals[s]
            acc = term if acc is None else acc + term
        out.append(acc)
    return out


def _series_divide(num: Sequence, den: Sequence, order: int) -> list:
    """First ``order`` power-series coefficients of num/den (den[0] != 0)."""
    out = []
    d0 = den[0]
    for r in range(order):
        acc = num[r] if r < len(num) else 0 * d0
        for s in range(1, min(r, len(den) - 1) + 1):
            acc = acc - den[s] * out[r - s]
        out.append(acc / d0)
    return out


# ---------------------------------------------------------------------------
# polynomials


class Poly:
    """Univariate polynomial with ascending coefficients; zero is ``()``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        c = [coerce(v) for v in coeffs]
        while c and exact_zero(c[-1]):
            c.pop()
        self.coeffs = tuple(c)

    @classmethod
    def x(cls) -> "Poly":
        return cls((0, 1))

    @classmethod
    def const(cls, c) -> "Poly":
        return cls((c,))

    @classmethod
    def linear_root(cls, r) -> "Poly":
        """``x - r``."""
        return cls((-coerce(r), 1))

    @classmethod
    def from_roots(cls, roots: dict) -> "Poly":
        out = cls((1,))
        for r, m in roots.items():
            out = out * cls.linear_root(r) ** m
        return out

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    @property
    def lc(self):
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.coeffs)

    def __repr__(self):
        return f"Poly({[scalar_str(c) for c in self.coeffs]})"

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = _as_poly(other)
            if other is None:
                return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __neg__(self):
        return Poly(-c for c in self.coeffs)

    def __add__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Poly((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n))

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Poly):
            a, b = self.coeffs, other.coeffs
            if not a or not b:
                return Poly()
            out = [0] * (len(a) + len(b) - 1)
            for i, x in enumerate(a):
                if exact_zero(x):
                    continue
                for j, y in enumerate(b):
                    out[i + j] += x * y
            return Poly(out)
        if isinstance(other, (int, float, complex, Fraction)):
            return Poly(c * other for c in self.coeffs)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = Poly((1,))
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __divmod__(self, other: "Poly"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dd = len(other.coeffs) - 1
        lc = other.lc
        if len(rem) - 1 < dd:
            return Poly(), self
        quo = [0] * (len(rem) - dd)
        for i in range(len(rem) - 1, dd - 1, -1):
            q = rem[i] / lc
            quo[i - dd] = q
            for j, c in enumerate(other.coeffs):
                rem[i - dd + j] -= q * c
            rem[i] = 0 * rem[i]
        return Poly(quo), Poly(rem[:dd])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def deriv(self) -> "Poly":
        return Poly(i * c for i, c in enumerate(self.coeffs) if i)

    def shift(self, a) -> "Poly":
        """``P(y + a)`` as a polynomial in ``y``."""
        return Poly(_shift_values(self.coeffs, coerce(a)))

    def monic(self) -> "Poly":
        return self * (1 / self.lc) if isinstance(self.lc, float | complex) else self * (Fraction(1) / self.lc)

    def order_at_zero(self) -> int:
        for i, c in enumerate(self.coeffs):
            if not exact_zero(c):
                return i
        raise ValueError("zero polynomial has no finite order")

    def to_json(self):
        return [scalar_str(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data) -> "Poly":
        return cls(coerce(v) for v in data)


def _as_poly(v):
    if isinstance(v, Poly):
        return v
    if isinstance(v, (int, float, complex, Fraction)):
        return Poly((v,))
    return None


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd over the rationals (exact inputs only)."""
    if a.is_zero() or b.is_zero():
        g = b if a.is_zero() else a
        return g.monic() if not g.is_zero() else g
    if a.degree == 0 or b.degree == 0:
        return Poly((1,))
    # plain Euclid over Fraction blows up coefficient sizes; sympy's dense gcd does not
    from sympy.polys.domains import QQ
    from sympy.polys.euclidtools import dup_gcd

    to_qq = lambda p: [QQ(c.numerator, c.denominator) for c in reversed(p.coeffs)]
    g = dup_gcd(to_qq(a), to_qq(b), QQ)
    return Poly([Fraction(int(c.numerator), int(c.denominator)) for c in reversed(g)]).monic()


def rational_roots(p: Poly) -> list[tuple[Fraction, int]]:
    """Rational roots of an exact polynomial with multiplicities."""
    import sympy

    if p.is_zero() or p.degree == 0:
        return []
    if not p.exact:
        raise TypeError("rational_roots needs exact coefficients")
    x = sympy.Symbol("x")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(p.coeffs))
    _, factors = sympy.factor_list(sympy.Poly(expr, x, domain="QQ"))
    out = []
    for f, mult in factors:
        if f.degree() == 1:
            c1, c0 = f.all_coeffs()
            r = -sympy.Rational(c0) / sympy.Rational(c1)
            out.append((Fraction(int(r.p), int(r.q)), int(mult)))
    out.sort(key=lambda t: t[0], reverse=True)
    return out


# ---------------------------------------------------------------------------
# Laurent tails


@dataclass(frozen=True)
class LaurentTail:
    """Coefficients of x^top, x^(top-1), ..., x^(top-depth+1)."""

    top: int
    coeffs: tuple

    @property
    def depth(self) -> int:
        return len(self.coeffs)

    def coefficient(self, e: int):
        i = self.top - e
        if i < 0:
            return Fraction(0)
        if i >= len(self.coeffs):
            raise IndexError(f"x^{e} lies below the computed tail")
        return self.coeffs[i]

    def as_dict(self) -> dict[int, object]:
        return {self.top - i: c for i, c in enumerate(self.coeffs)}


# ---------------------------------------------------------------------------
# rational functions


class RatFunc:
    """Reduced quotient of polynomials with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = _as_poly(num) if not isinstance(num, Poly) else num
        den = Poly((1,)) if den is None else (_as_poly(den) if not isinstance(den, Poly) else den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            self.num, self.den = Poly(), Poly((1,))
            return
        if num.exact and den.exact and den.degree > 0:
            g = poly_gcd(num, den)
            if g.degree > 0:
                num, den = num // g, den // g
        lc = den.lc
        if lc != 1:
            inv = (Fraction(1) / lc) if isinstance(lc, Fraction) else 1 / lc
            num, den = num * inv, den * inv
        self.num, self.den = num, den

    @classmethod
    def zero(cls) -> "RatFunc":
        return cls(Poly())

    @classmethod
    def one(cls) -> "RatFunc":
        return cls(Poly((1,)))

    @classmethod
    def const(cls, c) -> "RatFunc":
        return cls(Poly((c,)))

    def is_zero(self, tol: float = 0.0) -> bool:
        if tol == 0:
            return self.num.is_zero()
        return all(abs(complex(c)) <= tol for c in self.num.coeffs)

    def is_one(self, tol: float = 0.0) -> bool:
        return (self - 1).is_zero(tol)

    @property
    def top(self):
        """Exponent of the leading term at infinity."""
        if self.num.is_zero():
            return NEG_INF
        return self.num.degree - self.den.degree

    def __repr__(self):
        if self.den.degree == 0:
            return f"RatFunc({self.num.to_json()})"
        return f"RatFunc({self.num.to_json()} / {self.den.to_json()})"

    def __eq__(self, other):
        if not isinstance(other, RatFunc):
            other = _as_ratfunc(other)
            if other is None:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __neg__(self):
        return RatFunc(-self.num, self.den)

    def __add__(self, other):
        other = _as_ratfunc(other)
        if other is None:
            return NotImplemented
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_ratfunc(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_ratfunc(other)
        if other is None:
            return NotImplemented
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_ratfunc(other)
        if other is None:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return _as_ratfunc(other) / self

    def __pow__(self, e: int):
        if e < 0:
            return RatFunc.one() / self ** (-e)
        return RatFunc(self.num**e, self.den**e)

    def deriv(self) -> "RatFunc":
        return RatFunc(self.num.deriv() * self.den - self.num * self.den.deriv(), self.den * self.den)

    def __call__(self, x):
        return self.num(x) / self.den(x)

    def as_poly(self, tol: float = 0.0):
        if self.den.degree == 0:
            return self.num
        return None

    def regular_at_infinity(self) -> bool:
        return self.top <= 0

    def laurent(self, depth: int) -> LaurentTail:
        return laurent_at_infinity(self, depth)

    def taylor(self, a, order: int) -> list:
        """Taylor coefficients at a regular point ``a``."""
        den = self.den.shift(a)
        if exact_zero(den.coeffs[0] if den.coeffs else 0):
            raise ValueError("point is a pole")
        return _series_divide(self.num.shift(a).coeffs, den.coeffs, order)

    def to_json(self):
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    @classmethod
    def from_json(cls, data) -> "RatFunc":
        if isinstance(data, list):
            return cls(Poly.from_json(data))
        return cls(Poly.from_json(data["num"]), Poly.from_json(data.get("den", ["1/1"])))


def _as_ratfunc(v):
    if isinstance(v, RatFunc):
        return v
    if isinstance(v, Poly):
        return RatFunc(v)
    if isinstance(v, (int, float, complex, Fraction)):
        return RatFunc(Poly((v,)))
    return None


def laurent_at_infinity(f: RatFunc, depth: int) -> LaurentTail:
    """Leading ``depth`` coefficients of the expansion of f at infinity."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    if f.is_zero():
        return LaurentTail(0, tuple(Fraction(0) for _ in range(depth)))
    num = list(reversed(f.num.coeffs))
    den = list(reversed(f.den.coeffs))
    return LaurentTail(int(f.top), tuple(_series_divide(num, den, depth)))


# ---------------------------------------------------------------------------
# partial-fraction form


def _acc(d: dict, key, v):
    if key in d:
        d[key] = d[key] + v
    else:
        d[key] = v


def _neg_binom(j: int, s: int) -> int:
    """Binomial coefficient C(-j, s)."""
    return (-1) ** s * math.comb(j + s - 1, s)


class PFrac:
    """Polynomial part plus principal parts at an explicit set of poles.

    ``poly[d]`` multiplies ``x**d``; ``poles[a][j-1]`` multiplies
    ``(x - a)**(-j)``.  Values may be scalars or square matrices (numpy
    arrays); products keep the left/right order of the factors.
    """

    __slots__ = ("poly", "poles")

    def __init__(self, poly: Iterable = (), poles: dict | None = None):
        p = [coerce(v) for v in poly]
        while p and exact_zero(p[-1]):
            p.pop()
        self.poly = tuple(p)
        clean = {}
        for a, vals in (poles or {}).items():
            v = [coerce(x) for x in vals]
            while v and exact_zero(v[-1]):
                v.pop()
            if v:
                clean[coerce(a)] = tuple(v)
        self.poles = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> "PFrac":
        return cls()

    @classmethod
    def const(cls, c) -> "PFrac":
        return cls((c,))

    @classmethod
    def from_poly(cls, p: Poly) -> "PFrac":
        return cls(p.coeffs)

    @classmethod
    def from_ratfunc(cls, f: RatFunc, poles: Sequence | None = None) -> "PFrac":
        q, r = divmod(f.num, f.den)
        if f.den.degree <= 0:
            return cls(q.coeffs)
        if poles is None:
            roots = dict(rational_roots(f.den))
        else:
            roots = {}
            rest = f.den
            for a in poles:
                a = coerce(a)
                m = 0
                lin = Poly.linear_root(a)
                while rest.degree > 0:
                    qq, rr = divmod(rest, lin)
                    if not rr.is_zero():
                        break
                    rest, m = qq, m + 1
                if m:
                    roots[a] = m
        if sum(roots.values()) != f.den.degree:
            raise UnsplitDenominator(f"denominator {f.den} does not split over the given poles")
        return cls._principal(q, r, roots)

    @classmethod
    def from_poly_over(cls, p: Poly, roots: dict) -> "PFrac":
        """``p / prod (x - a)**m`` for the given root multiplicities."""
        roots = {coerce(a): m for a, m in roots.items() if m}
        den = Poly.from_roots(roots)
        q, r = divmod(p, den)
        return cls._principal(q, r, roots)

    @classmethod
    def _principal(cls, q: Poly, r: Poly, roots: dict) -> "PFrac":
        poles = {}
        for a, m in roots.items():
            cof = Poly.from_roots({b: mb for b, mb in roots.items() if b != a})
            s = _series_divide(r.shift(a).coeffs, cof.shift(a).coeffs, m)
            poles[a] = tuple(s[m - j] for j in range(1, m + 1))
        return cls(q.coeffs, poles)

    # -- inspection ---------------------------------------------------------

    def is_zero(self, tol: float = 0.0) -> bool:
        vals = list(self.poly) + [v for vs in self.poles.values() for v in vs]
        return all(near_zero(v, tol) for v in vals)

    def is_one(self, tol: float = 0.0) -> bool:
        return (self - PFrac.const(_one_like(self))).is_zero(tol)

    def scale(self) -> float:
        vals = list(self.poly) + [v for vs in self.poles.values() for v in vs]
        return max((magnitude(v) for v in vals), default=0.0)

    def pole_order(self, a) -> int:
        return len(self.poles.get(coerce(a), ()))

    def residue(self, a):
        vals = self.poles.get(coerce(a))
        if not vals:
            return 0 * _one_like(self)
        return vals[0]

    def as_poly(self, tol: float = 0.0):
        """Polynomial part if the principal parts vanish (to tol), else None."""
        sc = self.scale()
        for vals in self.poles.values():
            if not all(near_zero(v, tol, sc) for v in vals):
                return None
        return Poly(self.poly)

    def drop_poles(self) -> "PFrac":
        return PFrac(self.poly)

    def __repr__(self):
        return f"PFrac(poly={list(self.poly)}, poles={ {k: list(v) for k, v in self.poles.items()} })"

    def __eq__(self, other):
        if not isinstance(other, PFrac):
            if isinstance(other, (int, Fraction, float)):
                other = PFrac.const(other)
            else:
                return NotImplemented
        if len(self.poly) != len(other.poly) or self.poles.keys() != other.poles.keys():
            return False
        pairs = list(zip(self.poly, other.poly))
        for a, vs in self.poles.items():
            ws = other.poles[a]
            if len(vs) != len(ws):
                return False
            pairs.extend(zip(vs, ws))
        return all(exact_zero(x - y) for x, y in pairs)

    __hash__ = None

    def close(self, other: "PFrac", tol: float) -> bool:
        diff = self - other
        sc = max(self.scale(), other.scale(), 1.0)
        return diff.is_zero(tol * sc)

    # -- arithmetic ---------------------------------------------------------

    def map(self, f) -> "PFrac":
        return PFrac([f(v) for v in self.poly], {a: [f(v) for v in vs] for a, vs in self.poles.items()})

    def __neg__(self):
        return self.map(lambda v: -v)

    def __add__(self, other):
        other = _as_pfrac(other, self)
        if other is None:
            return NotImplemented
        n = max(len(self.poly), len(other.poly))
        poly = []
        for i in range(n):
            if i < len(self.poly) and i < len(other.poly):
                poly.append(self.poly[i] + other.poly[i])
            else:
                poly.append(self.poly[i] if i < len(self.poly) else other.poly[i])
        poles = {a: list(vs) for a, vs in self.poles.items()}
        for a, ws in other.poles.items():
            vs = poles.setdefault(a, [])
            for j, w in enumerate(ws):
                if j < len(vs):
                    vs[j] = vs[j] + w
                else:
                    vs.append(w)
        return PFrac(poly, poles)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_pfrac(other, self)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __rmul__(self, c):
        if isinstance(c, (int, float, complex, Fraction)):
            return self.map(lambda v: v * c)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, Fraction)):
            return self.map(lambda v: v * other)
        if not isinstance(other, PFrac):
            return NotImplemented
        poly: dict[int, object] = {}
        poles: dict[tuple, object] = {}
        # polynomial x polynomial
        for i, u in enumerate(self.poly):
            for j, w in enumerate(other.poly):
                _acc(poly, i + j, vmul(u, w))
        # polynomial x principal part (and mirror)
        if self.poly:
            for a, ws in other.poles.items():
                shifted = _shift_values(self.poly, a)
                for j, w in enumerate(ws, start=1):
                    _poly_times_pole(poly, poles, [vmul(v, w) for v in shifted], a, j)
        if other.poly:
            for a, us in self.poles.items():
                shifted = _shift_values(other.poly, a)
                for j, u in enumerate(us, start=1):
                    _poly_times_pole(poly, poles, [vmul(u, v) for v in shifted], a, j)
        # principal x principal
        for a, us in self.poles.items():
            for b, ws in other.poles.items():
                for i, u in enumerate(us, start=1):
                    for j, w in enumerate(ws, start=1):
                        uw = vmul(u, w)
                        if a == b:
                            _acc(poles, (a, i + j), uw)
                            continue
                        for r in range(1, i + 1):
                            c = _neg_binom(j, i - r) * (a - b) ** (-j - (i - r))
                            _acc(poles, (a, r), uw * c)
                        for r in range(1, j + 1):
                            c = _neg_binom(i, j - r) * (b - a) ** (-i - (j - r))
                            _acc(poles, (b, r), uw * c)
        return _assemble(poly, poles)

    def __pow__(self, e: int):
        out = PFrac.const(_one_like(self))
        for _ in range(e):
            out = out * self
        return out

    def deriv(self) -> "PFrac":
        poly = [v * i for i, v in enumerate(self.poly) if i]
        poles = {}
        for a, vs in self.poles.items():
            poles[a] = [0 * vs[0]] + [v * (-j) for j, v in enumerate(vs, start=1)]
        return PFrac(poly, poles)

    def laurent(self, depth: int) -> LaurentTail:
        """Expansion at infinity, from x^top down through x^(top - depth + 1)."""
        top = len(self.poly) - 1 if self.poly else -1
        if not self.poly and not self.poles:
            return LaurentTail(0, tuple(Fraction(0) for _ in range(depth)))
        coeffs: dict[int, object] = {}
        for i, v in enumerate(self.poly):
            coeffs[i] = v
        bottom = top - depth + 1
        for a, vs in self.poles.items():
            for j, v in enumerate(vs, start=1):
                t = 0
                while -j - t >= bottom:
                    _acc(coeffs, -j - t, v * (math.comb(j + t - 1, t) * a**t))
                    t += 1
        z = 0 * _one_like(self)
        return LaurentTail(top, tuple(coeffs.get(e, z) for e in range(top, bottom - 1, -1)))

    def to_ratfunc(self) -> RatFunc:
        out = RatFunc(Poly(self.poly))
        for a, vs in self.poles.items():
            for j, v in enumerate(vs, start=1):
                out = out + RatFunc(Poly((v,)), Poly.linear_root(a) ** j)
        return out

    def __call__(self, x):
        acc = Poly(self.poly)(x) if self.poly else 0
        for a, vs in self.poles.items():
            for j, v in enumerate(vs, start=1):
                acc = acc + v / (x - a) ** j
        return acc


def _one_like(f: PFrac):
    for v in list(f.poly) + [w for ws in f.poles.values() for w in ws]:
        if isinstance(v, np.ndarray):
            eye = np.zeros(v.shape, dtype=v.dtype)
            for i in range(v.shape[0]):
                eye[i, i] = Fraction(1) if v.dtype == object else 1.0
            return eye
        return 1.0 if isinstance(v, (float, complex)) else Fraction(1)
    return Fraction(1)


def _as_pfrac(v, like: PFrac):
    if isinstance(v, PFrac):
        return v
    if isinstance(v, (int, float, complex, Fraction)):
        return PFrac.const(_one_like(like) * v)
    if isinstance(v, np.ndarray):
        return PFrac.const(v)
    return None


def _poly_times_pole(poly: dict, poles: dict, shifted: list, a, j: int) -> None:
    """Accumulate ``(sum_r shifted[r] (x-a)^r) * (x-a)^(-j)``."""
    tail = []
    for r, v in enumerate(shifted):
        if r < j:
            _acc(poles, (a, j - r), v)
        else:
            tail.append(v)
    if tail:
        for d, v in enumerate(_shift_values(tail, -a)):
            _acc(poly, d, v)


def _assemble(poly: dict, poles: dict) -> PFrac:
    if poly:
        n = max(poly) + 1
        zero = 0 * next(iter(poly.values()))
        p = [poly.get(i, zero) for i in range(n)]
    else:
        p = []
    grouped: dict = {}
    for (a, j), v in poles.items():
        grouped.setdefault(a, {})[j] = v
    out = {}
    for a, d in grouped.items():
        zero = 0 * next(iter(d.values()))
        out[a] = [d.get(j, zero) for j in range(1, max(d) + 1)]
    return PFrac(p, out)


def partial_fractions(f: RatFunc, poles: Sequence) -> tuple[Poly, dict]:
    """Split f into polynomial part and principal parts at the given poles.

    Returns ``(poly, table)`` where ``table[a][j-1]`` is the coefficient of
    ``(x - a)**(-j)``.
    """
    pf = PFrac.from_ratfunc(f, poles)
    return Poly(pf.poly), {a: list(v) for a, v in pf.poles.items()}
