"""Seeded random instances for the verification suites."""

from __future__ import annotations

import random
from fractions import Fraction

from .diffop import DiffOp
from .psido import PsiDO
from .quasiexp import (
    DegreePatternMismatch,
    DependentBasis,
    IrrationalSingularPoint,
    QuasiExp,
    qe_data,
    wronskian,
)
from .scalars import Poly, RatFunc


def rational(rng: random.Random, height: int, nonzero: bool = False) -> Fraction:
    while True:
        v = Fraction(rng.randint(-height, height), rng.randint(1, height))
        if v or not nonzero:
            return v


def distinct_rationals(rng: random.Random, count: int, height: int, avoid=()) -> list[Fraction]:
    out: list[Fraction] = []
    banned = set(avoid)
    while len(out) < count:
        v = rational(rng, height)
        if v not in banned and v not in out:
            out.append(v)
    return out


def random_psido(rng: random.Random, coeff: int = 3, ceiling: int = 3, depth: int = 5) -> PsiDO:
    """Dense element on a random window ``[K - dk, K] x [M - dm, M]``."""
    K = rng.randint(-ceiling, ceiling)
    M = rng.randint(-ceiling, ceiling)
    dk, dm = rng.randint(0, depth), rng.randint(0, depth)
    terms = {}
    for k in range(K - dk, K + 1):
        for m in range(M - dm, M + 1):
            terms[(k, m)] = rng.randint(-coeff, coeff)
    return PsiDO(terms, K, M, K - dk, M - dm)


def random_invertible_psido(rng: random.Random, **kw) -> PsiDO:
    while True:
        d = random_psido(rng, **kw)
        if d.coefficient(d.K, d.M):
            return d


def random_regular_diffop(rng: random.Random, order: int = 2, height: int = 5) -> DiffOp:
    """Monic operator whose lower coefficients are ``c + e / (x - p)``."""
    coeffs = []
    for _ in range(order):
        c = rational(rng, height)
        e = rational(rng, height)
        p = rational(rng, height)
        coeffs.append(RatFunc.const(c) + RatFunc(Poly([e]), Poly([-p, 1])))
    coeffs.append(RatFunc.one())
    return DiffOp(coeffs)


def random_space(rng: random.Random, n: int, height: int = 5, max_degree: int = 2) -> list[QuasiExp]:
    """``n`` quasi-exponentials with independent random polynomial parts."""
    while True:
        rates = [rational(rng, height) for _ in range(rng.randint(1, n))]
        fs = []
        for _ in range(n):
            deg = rng.randint(0, max_degree)
            poly = Poly([rational(rng, height) for _ in range(deg)] + [1])
            fs.append(QuasiExp.term(poly, rng.choice(rates)))
        if not wronskian(fs).is_zero():
            return fs


# -- spaces with rational singular points -------------------------------------


def _lin(c) -> Poly:
    return Poly.linear_root(c)


def _family_powers(rng, height):
    """``(x - c)^d_j e^(alpha x)`` for distinct positive ``d_j``."""
    c, a = rational(rng, height), rational(rng, height)
    dims = rng.choice([[1], [2], [2, 1], [3, 1], [1, 3], [3, 2], [3, 2, 1]])
    return [QuasiExp.term(_lin(c) ** d, a) for d in dims]


def _family_shared_factor(rng, height):
    """``P(x) e^(alpha_i x)`` with ``P`` split over at most two rational roots."""
    roots = distinct_rationals(rng, rng.randint(1, 2), height)
    p = Poly([1])
    for r in roots:
        p = p * _lin(r) ** rng.randint(1, 2)
    rates = distinct_rationals(rng, rng.randint(1, 2), height)
    return [QuasiExp.term(p, a) for a in rates]


def _family_two_rates(rng, height):
    """``(x - a) e^(r1 x), (x - b) e^(r2 x)`` tuned so the Wronskian has a rational root."""
    while True:
        a, b, z = distinct_rationals(rng, 3, height)
        r1 = rational(rng, height)
        r2 = r1 + (a - b) / ((z - a) * (z - b))
        if r2 != r1:
            return [QuasiExp.term(_lin(a), r1), QuasiExp.term(_lin(b), r2)]


FAMILIES = (_family_powers, _family_shared_factor, _family_two_rates)


def theorem1_instances(rng: random.Random, count: int, height: int = 5, max_k: int = 2, max_n: int = 2,
                       max_dim: int = 3):
    """Yield ``(basis, data)`` pairs whose data is exactly extractable and within bounds."""
    made = 0
    while made < count:
        fam = FAMILIES[made % len(FAMILIES)]
        fs = fam(rng, height)
        try:
            data = qe_data(fs)
        except (DependentBasis, IrrationalSingularPoint, DegreePatternMismatch):
            continue
        if data.n > max_n or data.k > max_k or data.M_prime > max_dim or data.k == 0:
            continue
        made += 1
        yield fs, data
