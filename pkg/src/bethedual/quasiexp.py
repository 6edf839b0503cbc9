"""Spaces of quasi-exponentials and the operator transform between dual data.

A quasi-exponential is a finite sum ``sum_r f_r(x) e^(r x)``; here ``f_r`` is
kept as a :class:`RatFunc` so that Wronskian ratios stay in the same type.
A space is given by an ordered basis.  The data of a space are the
partitions attached to its exponential rates (read off from the degrees of
the polynomial parts) and to its singular points (read off from the
vanishing orders there).

The main entry point is :func:`tilde_transform`, which takes the augmented
fundamental operator of a space and its data and returns the augmented
operator of the dual space, exposing every intermediate operator.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from .diffop import DiffOp, NotDifferential, quotient
from .linalg import nullspace, rref
from .partitions import Partition
from .psido import PsiDO, compare, diffop_to_psido, psido_invert, psido_mul, sharp
from .scalars import (
    PFrac,
    Poly,
    RatFunc,
    coerce,
    near_zero,
    poly_gcd,
    rational_roots,
    scalar_str,
)


class DependentBasis(ValueError):
    """The Wronskian of the supplied functions vanishes identically."""


class DegenerateFlag(ValueError):
    """An intermediate Wronskian of the flag vanishes identically."""


class DegreePatternMismatch(ValueError):
    """Basis degrees do not come from any partition data."""


class IrrationalSingularPoint(ValueError):
    """The Wronskian has a root outside the rationals."""


class NoSolutionFound(RuntimeError):
    """No space with the requested data was found within the retry budget."""


class NonPolynomialAtStep4(ArithmeticError):
    pass


class NotDifferentialAtStep5(ArithmeticError):
    pass


class NotMonicOrderL(ArithmeticError):
    pass


class ResidueMismatch(ArithmeticError):
    pass


class CheckFailed(AssertionError):
    """A built-in post-condition did not hold."""


# ---------------------------------------------------------------------------
# quasi-exponentials


def _rf(f) -> RatFunc:
    if isinstance(f, RatFunc):
        return f
    if isinstance(f, Poly):
        return RatFunc(f)
    if isinstance(f, (list, tuple)):
        return RatFunc(Poly(f))
    return RatFunc.const(f)


class QuasiExp:
    """``sum_rate terms[rate](x) * exp(rate * x)`` with nonzero parts."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        items = terms.items() if isinstance(terms, dict) else (terms or ())
        clean: dict = {}
        for rate, f in items:
            rate = coerce(rate)
            f = _rf(f)
            clean[rate] = clean[rate] + f if rate in clean else f
        self.terms = {r: f for r, f in clean.items() if not f.is_zero()}

    @classmethod
    def term(cls, f, rate=0) -> "QuasiExp":
        return cls([(rate, f)])

    @classmethod
    def exp(cls, rate) -> "QuasiExp":
        return cls([(rate, 1)])

    @classmethod
    def const(cls, c) -> "QuasiExp":
        return cls([(0, c)])

    @property
    def rates(self) -> list:
        return list(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def single(self) -> tuple:
        """``(rate, f)`` for a one-rate function."""
        if len(self.terms) != 1:
            raise ValueError(f"expected a single exponential rate, got {len(self.terms)}")
        return next(iter(self.terms.items()))

    def __repr__(self):
        body = " + ".join(f"({f})*exp({scalar_str(r)} x)" for r, f in self.terms.items())
        return f"QuasiExp({body or '0'})"

    def __eq__(self, other):
        if not isinstance(other, QuasiExp):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    def __neg__(self):
        return QuasiExp({r: -f for r, f in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, QuasiExp):
            if other == 0:
                return self
            return NotImplemented
        return QuasiExp(list(self.terms.items()) + list(other.terms.items()))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, QuasiExp):
            out = []
            for r1, f1 in self.terms.items():
                for r2, f2 in other.terms.items():
                    out.append((r1 + r2, f1 * f2))
            return QuasiExp(out)
        if isinstance(other, (RatFunc, Poly, int, Fraction)):
            other = _rf(other)
            return QuasiExp({r: f * other for r, f in self.terms.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, QuasiExp):
            rate, g = other.single()
            return QuasiExp({r - rate: f / g for r, f in self.terms.items()})
        other = _rf(other)
        return QuasiExp({r: f / other for r, f in self.terms.items()})

    def deriv(self) -> "QuasiExp":
        return QuasiExp({r: f.deriv() + f * r for r, f in self.terms.items()})

    def log_deriv(self) -> RatFunc:
        """``f'/f`` for a one-rate function."""
        rate, f = self.single()
        return f.deriv() / f + rate

    def to_json(self):
        out = []
        for r, f in self.terms.items():
            if f.den.degree == 0:
                out.append({"alpha": scalar_str(r), "poly": f.num.to_json()})
            else:
                out.append({"alpha": scalar_str(r), "num": f.num.to_json(), "den": f.den.to_json()})
        return out

    @classmethod
    def from_json(cls, data) -> "QuasiExp":
        items = []
        for t in data:
            if "poly" in t:
                f = RatFunc(Poly.from_json(t["poly"]))
            else:
                f = RatFunc(Poly.from_json(t["num"]), Poly.from_json(t["den"]))
            items.append((coerce(t["alpha"]), f))
        return cls(items)


def qe_derivative(f: QuasiExp) -> QuasiExp:
    return f.deriv()


def qe_mul(f: QuasiExp, g: QuasiExp) -> QuasiExp:
    return f * g


def qe_add(f: QuasiExp, g: QuasiExp) -> QuasiExp:
    return f + g


class QuasiExpSpace:
    """Ordered basis of a finite-dimensional space of quasi-exponentials."""

    def __init__(self, basis: Iterable[QuasiExp]):
        self.basis = list(basis)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def __iter__(self):
        return iter(self.basis)

    def __len__(self):
        return len(self.basis)

    def __repr__(self):
        return f"QuasiExpSpace({self.basis})"

    def to_json(self):
        return [f.to_json() for f in self.basis]

    @classmethod
    def from_json(cls, data) -> "QuasiExpSpace":
        return cls(QuasiExp.from_json(f) for f in data)


def _basis(v) -> list[QuasiExp]:
    return list(v.basis) if isinstance(v, QuasiExpSpace) else list(v)


# ---------------------------------------------------------------------------
# Wronskians


def _derivatives(fs: Sequence[QuasiExp], top: int) -> list[list[QuasiExp]]:
    out = []
    for f in fs:
        ds = [f]
        for _ in range(top):
            ds.append(ds[-1].deriv())
        out.append(ds)
    return out


def _det(entry, nrows: int, ncols: int):
    """Laplace expansion along columns with memoized row subsets."""
    if nrows != ncols:
        raise ValueError("square matrix expected")
    memo: dict[int, QuasiExp] = {}

    def go(col: int, used: int) -> QuasiExp:
        if col == ncols:
            return QuasiExp.const(1)
        if used in memo:
            return memo[used]
        total = QuasiExp()
        sign_pos = 0
        for r in range(nrows):
            if used >> r & 1:
                continue
            e = entry(r, col)
            if not e.is_zero():
                minor = go(col + 1, used | (1 << r))
                if not minor.is_zero():
                    term = e * minor
                    total = total - term if sign_pos % 2 else total + term
            sign_pos += 1
        memo[used] = total
        return total

    return go(0, 0)


def wronskian_rows(fs: Sequence[QuasiExp], orders: Sequence[int]) -> QuasiExp:
    """Determinant of ``[f_c^(orders[r])]``."""
    fs = _basis(fs)
    if not fs:
        return QuasiExp.const(1)
    ders = _derivatives(fs, max(orders))
    return _det(lambda r, c: ders[c][orders[r]], len(orders), len(fs))


def wronskian(fs) -> QuasiExp:
    fs = _basis(fs)
    # W(g f_1, .., g f_n) = g^n W(f_1, .., f_n): clear denominators first
    den = Poly([1])
    for f in fs:
        for g in f.terms.values():
            if g.den.degree > 0:
                den = den * (g.den // poly_gcd(den, g.den)) if g.den.exact else den * g.den
    if den.degree <= 0:
        return wronskian_rows(fs, list(range(len(fs))))
    scale = QuasiExp.term(den)
    w = wronskian_rows([scale * f for f in fs], list(range(len(fs))))
    return w * QuasiExp.term(RatFunc(Poly([1]), den ** len(fs)))


def wronskian_minor_Wi(fs, i: int) -> QuasiExp:
    """Rows ``0..n`` with the derivative of order ``n - i`` left out."""
    fs = _basis(fs)
    n = len(fs)
    if not 0 <= i <= n:
        raise ValueError("minor index out of range")
    return wronskian_rows(fs, [r for r in range(n + 1) if r != n - i])


def _ratio(a: QuasiExp, b: QuasiExp) -> RatFunc:
    """a / b for functions sharing one rate."""
    if a.is_zero():
        return RatFunc.zero()
    q = a / b
    rate, f = q.single()
    if rate != 0:
        raise ValueError("ratio is not a rational function")
    return f


def fundamental_operator(v) -> DiffOp:
    """Monic operator of order dim V killing V: ``a_i = (-1)^i W_i / W``."""
    fs = _basis(v)
    n = len(fs)
    w = wronskian(fs)
    if w.is_zero():
        raise DependentBasis("Wronskian vanishes")
    coeffs = [RatFunc.zero()] * (n + 1)
    for i in range(n + 1):
        c = _ratio(wronskian_minor_Wi(fs, i), w)
        coeffs[n - i] = -c if i % 2 else c
    return DiffOp(coeffs)


def factorize(fs) -> list[DiffOp]:
    """First-order factors ``d/dx - g_i'/g_i`` whose product is the fundamental operator.

    ``g_n = f_n`` and ``g_i = W(f_n, ..., f_i) / W(f_n, ..., f_{i+1})``.
    """
    fs = _basis(fs)
    n = len(fs)
    rev = list(reversed(fs))
    ws = [QuasiExp.const(1)]
    for m in range(1, n + 1):
        w = wronskian(rev[:m])
        if w.is_zero():
            raise DegenerateFlag(f"W of the last {m} functions vanishes")
        ws.append(w)
    factors = []
    for i in range(1, n + 1):
        m = n - i + 1
        g = ws[m] / ws[m - 1]
        factors.append(DiffOp.d_minus(g.log_deriv()))
    return factors


def conjugate_kernel_basis(fs, check: bool = True) -> list[QuasiExp]:
    """``h_i = W(f_1..^f_i..f_n) / W(f_1..f_n)``, a basis of the conjugate kernel."""
    fs = _basis(fs)
    w = wronskian(fs)
    if w.is_zero():
        raise DependentBasis("Wronskian vanishes")
    hs = [wronskian(fs[:i] + fs[i + 1:]) / w for i in range(len(fs))]
    if check:
        dd = fundamental_operator(fs).dagger()
        for i, h in enumerate(hs):
            if not dd.apply(h).is_zero():
                raise CheckFailed(f"h_{i + 1} is not killed by the conjugate operator")
    return hs


def quotient_conjugate_kernel(fs, hs, check: bool = True) -> list[QuasiExp]:
    """``phi_a = W(f, h_1..^h_a..h_k) / W(f, h)``: kernel of the conjugate quotient."""
    fs, hs = _basis(fs), _basis(hs)
    full = fs + hs
    w = wronskian(full)
    if w.is_zero():
        raise DependentBasis("combined Wronskian vanishes")
    phis = [wronskian(fs + hs[:a] + hs[a + 1:]) / w for a in range(len(hs))]
    if check:
        big = fundamental_operator(full)
        small = fundamental_operator(fs) if fs else DiffOp.const(RatFunc.one())
        dd = quotient(big, small).dagger()
        for a, phi in enumerate(phis):
            if not dd.apply(phi).is_zero():
                raise CheckFailed(f"phi_{a + 1} is not killed by the conjugate quotient")
    return phis


# ---------------------------------------------------------------------------
# closed forms for spans of x^p e^(alpha x)


def monomial_basis(rates: Sequence, ps: Sequence[int]) -> list[QuasiExp]:
    """``x^p e^(alpha_i x)`` for ``p < p_i`` in rate order."""
    out = []
    for a, p in zip(rates, ps):
        for j in range(p):
            out.append(QuasiExp.term(Poly([0] * j + [1]), a))
    return out


def closed_form_wronskian(rates: Sequence, ps: Sequence[int]) -> QuasiExp:
    rates = [coerce(a) for a in rates]
    if len(set(rates)) != len(rates):
        raise ValueError("rates must be distinct")
    const = Fraction(1)
    for p in ps:
        for s in range(1, p):
            const *= math.factorial(s)
    for i in range(len(rates)):
        for j in range(i + 1, len(rates)):
            const *= (rates[j] - rates[i]) ** (ps[i] * ps[j])
    return QuasiExp.term(const, sum(p * a for p, a in zip(ps, rates)))


@dataclass(frozen=True)
class MinorForm:
    rate: object
    constant: Fraction
    degree: int
    r: Poly | None = None


def closed_form_minor(i: int, j: int, rates: Sequence, ps: Sequence[int], verify: bool = True) -> MinorForm:
    """Closed form of the Wronskian with ``x^j e^(alpha_i x)`` left out (``i`` 0-based).

    The result is ``exp(rate x) * constant * r(x)`` with ``r`` monic of degree
    ``p_i - j - 1``.  The constant of the block that loses a function is
    ``prod_{s<p_i} s! / (j! (p_i-1-j)!)``.
    """
    rates = [coerce(a) for a in rates]
    p = list(ps)
    if not 0 <= j < p[i]:
        raise ValueError("omitted power out of range")
    reduced = [pl - (1 if l == i else 0) for l, pl in enumerate(p)]
    const = Fraction(1)
    for l, pl in enumerate(p):
        for s in range(1, pl):
            const *= math.factorial(s)
    const /= math.factorial(j) * math.factorial(p[i] - 1 - j)
    for l in range(len(rates)):
        for m in range(l + 1, len(rates)):
            const *= (rates[m] - rates[l]) ** (reduced[l] * reduced[m])
    rate = sum(q * a for q, a in zip(reduced, rates))
    form = MinorForm(rate, const, p[i] - j - 1)
    if not verify:
        return form
    basis = monomial_basis(rates, p)
    omit = sum(p[:i]) + j
    direct = wronskian(basis[:omit] + basis[omit + 1:])
    d_rate, f = direct.single()
    if d_rate != rate or f.den.degree != 0:
        raise CheckFailed("direct minor has unexpected exponential factor")
    r = f.num * (Fraction(1) / const)
    if r.degree != form.degree or r.lc != 1:
        raise CheckFailed(f"minor ({i},{j}): r has degree {r.degree}, leading {r.lc}")
    return MinorForm(rate, const, form.degree, r)


# ---------------------------------------------------------------------------
# data of a space


def _poly_of(f: RatFunc) -> Poly:
    if f.den.degree != 0:
        raise DegreePatternMismatch("basis parts must be polynomials")
    return f.num


def graded_components(v) -> dict:
    """Per-rate polynomial bases (echelon by degree, highest first)."""
    fs = _basis(v)
    by_rate: dict = {}
    for f in fs:
        for r, g in f.terms.items():
            by_rate.setdefault(r, []).append(_poly_of(g))
    out = {}
    total = 0
    for r, polys in by_rate.items():
        top = max(int(p.degree) for p in polys)
        rows = [[p.coeffs[d] if d < len(p.coeffs) else Fraction(0) for d in range(top, -1, -1)] for p in polys]
        red, piv = rref(rows)
        basis = []
        for row in red[: len(piv)]:
            basis.append(Poly(reversed(row)))
        out[r] = basis
        total += len(basis)
    if total != len(fs):
        raise DegreePatternMismatch("space is not spanned by one-rate functions")
    return out


def _taylor_row(q: Poly, rate, z, depth: int) -> list:
    """Taylor coefficients at z of ``q(x) e^(rate (x - z))``."""
    qs = q.shift(z).coeffs
    ex = [Fraction(1)]
    for s in range(1, depth):
        ex.append(ex[-1] * rate / s)
    out = []
    for s in range(depth):
        acc = Fraction(0)
        for t in range(min(s, len(qs) - 1) + 1):
            acc += qs[t] * ex[s - t]
        out.append(acc)
    return out


def exponents_at(v, z) -> tuple[tuple[int, ...], Partition, bool]:
    """Exponents (descending), their partition, and whether z is singular."""
    comps = graded_components(v)
    z = coerce(z)
    dim = sum(len(b) for b in comps.values())
    depth = dim + max((int(p.degree) for b in comps.values() for p in b), default=0) + 1
    while True:
        rows = [_taylor_row(q, r, z, depth) for r, b in comps.items() for q in b]
        _, piv = rref(rows)
        if len(piv) == dim:
            break
        depth *= 2
    exps = tuple(sorted(piv, reverse=True))
    lam = Partition(e - dim + i for i, e in enumerate(exps, start=1))
    return exps, lam, set(exps) != set(range(dim))


def singular_points(v) -> list[tuple[Fraction, Partition]]:
    fs = _basis(v)
    w = wronskian(fs)
    if w.is_zero():
        raise DependentBasis("Wronskian vanishes")
    _, f = w.single()
    num = f.num
    roots = rational_roots(num)
    if sum(m for _, m in roots) != num.degree:
        raise IrrationalSingularPoint(f"Wronskian factor {num} has nonrational roots")
    out = []
    for z, _ in sorted(roots):
        _, lam, sing = exponents_at(fs, z)
        if sing:
            out.append((z, lam))
    return out


def _pair_key(v):
    return (float(v) if not isinstance(v, complex) else v.real, str(v))


@dataclass(frozen=True)
class QEData:
    mu: tuple
    lam: tuple
    alphas: tuple
    zs: tuple

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(Partition(p) for p in self.mu))
        object.__setattr__(self, "lam", tuple(Partition(p) for p in self.lam))
        object.__setattr__(self, "alphas", tuple(coerce(a) for a in self.alphas))
        object.__setattr__(self, "zs", tuple(coerce(z) for z in self.zs))
        if len(self.mu) != len(self.alphas) or len(self.lam) != len(self.zs):
            raise ValueError("partition and point lists must have equal lengths")
        if len(set(self.alphas)) != len(self.alphas) or len(set(self.zs)) != len(self.zs):
            raise ValueError("rates and points must be pairwise distinct")

    @property
    def reduced(self) -> bool:
        return all(self.mu) and all(self.lam)

    @property
    def n(self) -> int:
        return len(self.mu)

    @property
    def k(self) -> int:
        return len(self.lam)

    @property
    def M_prime(self) -> int:
        return sum(p.length for p in self.mu)

    @property
    def M(self) -> int:
        return sum(p.first for p in self.mu)

    @property
    def L(self) -> int:
        return sum(p.first for p in self.lam)

    def reduce(self) -> "QEData":
        mu = [(p, a) for p, a in zip(self.mu, self.alphas) if p]
        lam = [(p, z) for p, z in zip(self.lam, self.zs) if p]
        return QEData([p for p, _ in mu], [p for p, _ in lam], [a for _, a in mu], [z for _, z in lam])

    def dual(self) -> "QEData":
        """``(lam', mu'; z, -alpha)``."""
        return QEData([p.conjugate() for p in self.lam], [p.conjugate() for p in self.mu],
                      self.zs, [-a for a in self.alphas])

    def canonical(self) -> "QEData":
        mu = sorted(zip(self.alphas, self.mu), key=lambda t: _pair_key(t[0]))
        lam = sorted(zip(self.zs, self.lam), key=lambda t: _pair_key(t[0]))
        return QEData([p for _, p in mu], [p for _, p in lam], [a for a, _ in mu], [z for z, _ in lam])

    def same_as(self, other: "QEData") -> bool:
        a, b = self.reduce().canonical(), other.reduce().canonical()
        return a == b

    def to_json(self):
        return {
            "mu": [list(p) for p in self.mu],
            "lambda": [list(p) for p in self.lam],
            "alphas": [scalar_str(a) for a in self.alphas],
            "zs": [scalar_str(z) for z in self.zs],
        }

    @classmethod
    def from_json(cls, data) -> "QEData":
        return cls(data["mu"], data.get("lambda", []), [coerce(a) for a in data["alphas"]],
                   [coerce(z) for z in data.get("zs", [])])


def qe_data(v) -> QEData:
    comps = graded_components(v)
    mu, alphas = [], []
    for r, polys in comps.items():
        n_i = len(polys)
        degs = [int(p.degree) for p in polys]
        parts = [d - n_i + j for j, d in enumerate(degs, start=1)]
        if parts[-1] < 1:
            raise DegreePatternMismatch(f"rate {r}: degrees {degs} give a partition with a zero part")
        mu.append(Partition(parts))
        alphas.append(r)
    sing = singular_points(v)
    return QEData(mu, [lam for _, lam in sing], alphas, [z for z, _ in sing])


def reduce_data(d: QEData) -> QEData:
    return d.reduce()


def _const_factor(a, like=None) -> DiffOp:
    """``d/dx - a`` with coefficients matching ``like`` (RatFunc or PFrac)."""
    if like is None or isinstance(like, RatFunc):
        return DiffOp([RatFunc.const(-coerce(a)), RatFunc.one()])
    return DiffOp([PFrac.const(-coerce(a)), PFrac.const(Fraction(1))])


def augment_op(d: DiffOp, data: QEData) -> DiffOp:
    out = d
    for p, a in zip(data.mu, data.alphas):
        if not p:
            out = out * _const_factor(a, d.leading)
    return out


# ---------------------------------------------------------------------------
# the transform between dual data


@dataclass
class TildeStages:
    """Every operator produced along the chain, in order."""

    D_V: DiffOp
    D_hat: DiffOp
    D_check: DiffOp
    D_check_dagger: DiffOp
    step4: DiffOp
    D_times: DiffOp
    D_tilde: DiffOp
    D_tilde_aug: DiffOp
    exact: bool = True

    def items(self):
        names = ["D_V", "D_hat", "D_check", "D_check_dagger", "step4", "D_times", "D_tilde", "D_tilde_aug"]
        return [(n, getattr(self, n)) for n in names]

    def to_json(self):
        return {name: op.to_json() for name, op in self.items()}


def _to_pfrac_op(d: DiffOp, poles) -> DiffOp:
    return d.map(lambda c: PFrac.from_ratfunc(c, poles) if isinstance(c, RatFunc) else c)


def _is_exact_op(d: DiffOp) -> bool:
    for c in d.coeffs:
        if isinstance(c, RatFunc):
            vals = c.num.coeffs + c.den.coeffs
        else:
            vals = list(c.poly) + [v for vs in c.poles.values() for v in vs]
        if any(isinstance(v, (float, complex)) for v in vals):
            return False
    return True


def _pf_const_op(a) -> DiffOp:
    return DiffOp([PFrac.const(-a), PFrac.const(Fraction(1))])


def tilde_transform(d_aug: DiffOp, data: QEData, tol: float = 0.0) -> TildeStages:
    """Run the chain from ``D^aug`` of a space to ``D~^aug`` of the dual space.

    Exact inputs (RatFunc or exact PFrac coefficients) are processed exactly
    and every check is an equality.  Float coefficients need ``tol > 0``.
    """
    exact = _is_exact_op(d_aug)
    if not exact and tol <= 0:
        raise ValueError("float coefficients need a positive tolerance")
    if exact:
        tol = 0.0
    d_aug = _to_pfrac_op(d_aug, data.zs)

    # (1) strip the factors of empty rate partitions
    strip = DiffOp([PFrac.const(Fraction(1))])
    for p, a in zip(data.mu, data.alphas):
        if not p:
            strip = strip * _pf_const_op(a)
    d_v = quotient(d_aug, strip, tol)
    if d_v.order != data.M_prime:
        raise ValueError(f"operator order {d_v.order} does not match data (M' = {data.M_prime})")

    # (2) quotient of the constant-coefficient operator with kernel x^p e^(alpha x)
    d_hat = DiffOp([PFrac.const(Fraction(1))])
    for p, a in zip(data.mu, data.alphas):
        if p:
            d_hat = d_hat * _pf_const_op(a) ** (p.first + p.length)
    d_check = quotient(d_hat, d_v, tol)

    # (3) formal conjugate
    d_dag = d_check.dagger()

    # (4) clear the poles at the singular points
    pref = Poly([1])
    for lam, z in zip(data.lam, data.zs):
        if lam:
            pref = pref * Poly.linear_root(z) ** lam.first
    step4_raw = d_dag.lmul(PFrac(pref.coeffs))
    coeffs4 = []
    for m, c in enumerate(step4_raw.coeffs):
        p = c.as_poly(tol)
        if p is None:
            raise NonPolynomialAtStep4(f"coefficient of d^{m} keeps a pole")
        coeffs4.append(PFrac(p.coeffs))
    step4 = DiffOp(coeffs4)

    # (5) bispectral swap
    try:
        d_times = step4.ddagger(tol)
    except NotDifferential as exc:
        raise NotDifferentialAtStep5(str(exc)) from exc
    d_times = DiffOp(_trim_float(d_times.coeffs, tol))

    # (6) divide by (-1)^M prod (x + alpha_i)^(mu_1)
    roots = {-a: p.first for p, a in zip(data.mu, data.alphas) if p}
    sign = -1 if data.M % 2 else 1
    coeffs6 = [PFrac.from_poly_over(Poly(c.poly) * sign, roots) for c in d_times.coeffs]
    d_tilde = DiffOp(_trim_float(coeffs6, tol))
    if d_tilde.order != data.L or not d_tilde.is_monic(tol):
        raise NotMonicOrderL(f"result has order {d_tilde.order} (L = {data.L}), leading {d_tilde.leading}")
    d_tilde = DiffOp(list(d_tilde.coeffs[:-1]) + [PFrac.const(Fraction(1))])

    # (7) re-augment with the empty point partitions
    d_tilde_aug = d_tilde
    for lam, z in zip(data.lam, data.zs):
        if not lam:
            d_tilde_aug = d_tilde_aug * _pf_const_op(z)

    stages = TildeStages(d_v, d_hat, d_check, d_dag, step4, d_times, d_tilde, d_tilde_aug, exact)
    if exact:
        for name, op in stages.items():
            setattr(stages, name, op.to_ratfunc())
    return stages


def _trim_float(coeffs: list, tol: float) -> list:
    """Drop leading coefficients that vanish to tolerance."""
    c = list(coeffs)
    if tol:
        scale = max((x.scale() for x in c), default=1.0)
        while len(c) > 1 and c[-1].is_zero(tol * max(1.0, scale)):
            c.pop()
    return c


def tilde_psido(d_v: DiffOp, data: QEData, depth: int) -> PsiDO:
    """The pseudodifferential formula for the transform, evaluated in a window.

    ``(-1)^M' prod (x + alpha_i)^(n_i) (D_V^-1)^# prod (d/dx - z_a)^(lam_1)``
    """
    data = data.reduce()
    inv = psido_invert(diffop_to_psido(d_v, depth), -depth, -depth)
    core = sharp(inv)
    left = Poly([(-1) ** data.M_prime])
    for p, a in zip(data.mu, data.alphas):
        left = left * Poly.linear_root(-a) ** p.length
    right = PsiDO.one()
    for lam, z in zip(data.lam, data.zs):
        for _ in range(lam.first):
            right = psido_mul(right, PsiDO({(0, 1): 1, (0, 0): -z}))
    lpsi = PsiDO({(k, 0): c for k, c in enumerate(left.coeffs)})
    return psido_mul(psido_mul(lpsi, core), right)


def tilde_psido_check(d_v: DiffOp, d_tilde: DiffOp, data: QEData, depth: int) -> tuple[bool, tuple]:
    series = tilde_psido(d_v, data, depth)
    return compare(series, diffop_to_psido(d_tilde, depth))


def reflect(d: DiffOp) -> DiffOp:
    """``x -> -x`` substituted into ``d``, scaled by ``(-1)^order`` to stay monic."""

    def flip(p: Poly) -> Poly:
        return Poly([c if i % 2 == 0 else -c for i, c in enumerate(p.coeffs)])

    coeffs = []
    for m, c in enumerate(d.to_ratfunc().coeffs):
        f = RatFunc(flip(c.num), flip(c.den))
        coeffs.append(-f if (d.order - m) % 2 else f)
    return DiffOp(coeffs)


def tilde_twice_probe(d: DiffOp, data: QEData) -> dict:
    """Apply the transform twice with the data dualized in between.

    Not an invariant.  Reports whether the round trip returns ``d`` itself
    and whether it returns the reflection of ``d`` under ``x -> -x``.
    """
    first = tilde_transform(d, data)
    second = tilde_transform(first.D_tilde, data.dual().reduce())
    back = second.D_tilde.to_ratfunc()
    return {"identity": back == d.to_ratfunc(), "reflection": back == reflect(d)}


# ---------------------------------------------------------------------------
# kernels of operators with rational coefficients


def kernel_quasiexp(d: DiffOp, rates: Sequence, max_degree: int) -> list[QuasiExp]:
    """Basis of the quasi-exponential solutions with the given rates and degree bound."""
    coeffs = [c if isinstance(c, RatFunc) else c.to_ratfunc() for c in d.coeffs]
    den = reduce(lambda a, b: a * b, [c.den for c in coeffs], Poly([1]))
    out = []
    for r in rates:
        r = coerce(r)
        cols = []
        for deg in range(max_degree + 1):
            mono = Poly([0] * deg + [1])
            acc = RatFunc.zero()
            for m, c in enumerate(coeffs):
                if c.is_zero():
                    continue
                # (d/dx + r)^m x^deg
                shifted = Poly()
                dl = mono
                for l in range(m + 1):
                    shifted = shifted + dl * (math.comb(m, l) * r ** (m - l))
                    dl = dl.deriv()
                acc = acc + c * RatFunc(shifted)
            p = (acc * RatFunc(den)).as_poly()
            if p is None:
                raise CheckFailed("common denominator did not clear")
            cols.append(p)
        height = max((len(p.coeffs) for p in cols), default=0)
        rows = [[p.coeffs[h] if h < len(p.coeffs) else Fraction(0) for p in cols] for h in range(height)]
        for vec in nullspace(rows, len(cols)):
            out.append(QuasiExp.term(Poly(vec), r))
    return out


# ---------------------------------------------------------------------------
# residues of the quadratic combinations


def expansion_coefficient(f: PFrac, t: int):
    """Coefficient of ``x^(-t)`` in the expansion at infinity (t >= 0)."""
    tail = f.laurent(len(f.poly) + t + 1)
    return tail.coefficient(-t)


def u_series(coeffs: Sequence[PFrac], roots: dict, j_max: int) -> list[PFrac]:
    """Functions c_j(u) with ``prod (u - r)^m sum_j c_j(u) x^-j = u^K + sum_s b_s(x) u^(K-s)``.

    ``coeffs[s-1]`` is ``b_s``; values may be scalars or matrices.
    """
    K = len(coeffs)
    one = None
    for c in coeffs:
        vals = list(c.poly) + [v for vs in c.poles.values() for v in vs]
        if vals:
            from .scalars import _one_like

            one = _one_like(c)
            break
    if one is None:
        one = Fraction(1)
    out = []
    for j in range(j_max + 1):
        num = [0 * one for _ in range(K + 1)]
        if j == 0:
            num[K] = one
        for s, b in enumerate(coeffs, start=1):
            num[K - s] = num[K - s] + expansion_coefficient(b, j)
        out.append(PFrac.from_poly_over(Poly(num), roots))
    return out


def quadratic_residue(c1: PFrac, c2: PFrac, point):
    """``Res_{point} (c1^2/2 - c2)``."""
    return (c1 * c1 * Fraction(1, 2) - c2).residue(point)


def h_g_residues(d_aug: DiffOp, dt_aug: DiffOp, data: QEData, tol: float = 0.0) -> tuple[list, list]:
    """Residue eigenvalue pairs ``(h_a, g~_a)``; raises unless ``g~_a = -h_a``."""
    if _is_exact_op(d_aug) and _is_exact_op(dt_aug):
        tol = 0.0
    left = _to_pfrac_op(d_aug, data.zs)
    right = _to_pfrac_op(dt_aug, [-a for a in data.alphas])
    n = left.order
    b1 = left.coefficient(n - 1)
    b2 = left.coefficient(n - 2) if n >= 2 else PFrac.zero()
    hs = [quadratic_residue(b1, b2, z) for z in data.zs]
    kk = right.order
    roots = {z: max(p.first, 1) for p, z in zip(data.lam, data.zs)}
    if sum(roots.values()) != kk:
        raise ValueError("dual operator order does not match the point multiplicities")
    bt = [right.coefficient(kk - s) for s in range(1, kk + 1)]
    cs = u_series(bt, roots, 2)
    gs = [quadratic_residue(cs[1], cs[2], z) for z in data.zs]
    for a, (h, g) in enumerate(zip(hs, gs)):
        if not near_zero(g + h, tol, max(abs(complex(h)), abs(complex(g)))):
            raise ResidueMismatch(f"point {a}: g~ = {g}, h = {h}")
    return hs, gs


# ---------------------------------------------------------------------------
# test-instance generator


def make_space_with_data(data: QEData, seed: int = 0, retries: int = 5) -> QuasiExpSpace:
    """Find a space with the given reduced data by solving the vanishing conditions.

    Polynomial parts are taken monic in reduced echelon form; the exponent
    conditions at each point are rank bounds on Taylor-coefficient matrices,
    i.e. vanishing of minors.  Free parameters left by the solver are drawn
    from ``seed``.  The result is verified by recomputing its data.
    """
    import sympy

    if not data.reduced:
        raise ValueError("data must be reduced")
    if sum(p.size for p in data.mu) != sum(p.size for p in data.lam):
        raise NoSolutionFound("total sizes of rate and point partitions differ")
    x = sympy.Symbol("x")
    t = sympy.Symbol("t")
    unknowns = []
    funcs = []  # (rate, sympy poly expr)
    for i, (mu, a) in enumerate(zip(data.mu, data.alphas)):
        n_i = mu.length
        degs = [n_i + mu.part(j) - j for j in range(1, n_i + 1)]
        for j, d in enumerate(degs):
            expr = x**d
            for e in range(d):
                if e in degs:
                    continue
                u = sympy.Symbol(f"u_{i}_{j}_{e}")
                unknowns.append(u)
                expr += u * x**e
            funcs.append((sympy.Rational(str(a)), expr))
    dim = len(funcs)
    eqs = []
    for lam, z in zip(data.lam, data.zs):
        zq = sympy.Rational(str(z))
        exps = [dim + lam.part(i) - i for i in range(1, dim + 1)]
        top = max(exps) + 1
        rows = []
        for a, expr in funcs:
            ser = sympy.expand(sympy.series(expr.subs(x, zq + t) * sympy.exp(a * t), t, 0, top).removeO())
            rows.append([ser.coeff(t, s) for s in range(top)])
        mat = sympy.Matrix(rows)
        for s in range(1, top + 1):
            bound = sum(1 for e in exps if e < s)
            if bound >= dim:
                continue
            sub = mat[:, :s]
            for rs in _combinations(range(dim), bound + 1):
                for cs in _combinations(range(s), bound + 1):
                    eqs.append(sympy.expand(sub.extract(list(rs), list(cs)).det()))
    eqs = [e for e in set(eqs) if e != 0]
    if eqs and unknowns:
        sols = sympy.solve(eqs, unknowns, dict=True)
    elif eqs:
        sols = []
    else:
        sols = [{}]
    rng = random.Random(seed)
    for attempt in range(retries):
        for sol in sols:
            vals = {}
            free = [u for u in unknowns if u not in sol]
            for u in free:
                vals[u] = sympy.Rational(rng.randint(-9, 9), rng.randint(1, 5))
            full = {u: sympy.nsimplify(sympy.sympify(sol[u]).subs(vals)) if u in sol else vals[u] for u in unknowns}
            if not all(v.is_rational for v in full.values()):
                continue
            basis = []
            for a, expr in funcs:
                poly = sympy.Poly(expr.subs(full), x)
                coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(poly.all_coeffs())]
                basis.append(QuasiExp.term(Poly(coeffs), Fraction(str(a))))
            space = QuasiExpSpace(basis)
            try:
                got = qe_data(space)
            except (DependentBasis, IrrationalSingularPoint, DegreePatternMismatch):
                continue
            if got.same_as(data):
                return space
    raise NoSolutionFound(f"no space found for data {data.to_json()}")


def _combinations(it, r):
    import itertools

    return itertools.combinations(list(it), r)
