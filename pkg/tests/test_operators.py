import random
from fractions import Fraction as F

import pytest
import sympy
from hypothesis import given, strategies as st

from bethedual.diffop import DiffOp, NotDivisible, NotDifferential, diffop_apply, diffop_mul, quotient, rdet
from bethedual.instances import random_psido, random_regular_diffop
from bethedual.psido import (
    NotInvertible,
    NotRegularAtInfinity,
    PsiDO,
    compare,
    dagger,
    ddagger,
    diffop_to_psido,
    psido_from_diffop_poly,
    psido_invert,
    psido_mul,
    sharp,
)
from bethedual.quasiexp import QuasiExp
from bethedual.scalars import Poly, RatFunc
from conftest import X, small_rationals, to_sympy

seeds = st.integers(0, 10**6)


def op(*coeffs):
    """Operator from leading-first coefficients given as RatFunc, Poly coefficient lists or numbers."""
    out = []
    for c in coeffs:
        if isinstance(c, RatFunc):
            out.append(c)
        elif isinstance(c, (list, tuple)):
            out.append(RatFunc(Poly(c)))
        else:
            out.append(RatFunc.const(c))
    return DiffOp.from_leading_first(out)


def inv_lin(c, scale=1):
    """``scale / (x - c)``."""
    return RatFunc(Poly([scale]), Poly.linear_root(c))


def mono(k, m, c=1):
    return PsiDO.monomial(k, m, c)


# -- normal ordering -----------------------------------------------------------


def test_d_times_x():
    got = psido_mul(mono(0, 1), mono(1, 0))
    assert got.terms == {(1, 1): 1, (0, 0): 1}


def test_d2_times_x2():
    got = psido_mul(mono(0, 2), mono(2, 0))
    assert got.terms == {(2, 2): 1, (1, 1): 4, (0, 0): 2}


def test_d2_times_x2_by_application():
    # both sides applied to test polynomials, via sympy
    lhs = op(1, 0, 0) * op([0, 0, 1])
    for p in (1, X, X**2, X**3):
        want = sympy.expand(sympy.diff(X**2 * p, X, 2))
        poly = Poly([F(int(c)) for c in reversed(sympy.Poly(p, X).all_coeffs())])
        got = lhs.apply(RatFunc(poly))
        assert sympy.expand(to_sympy(got) - want) == 0


@given(seeds)
def test_identity_is_neutral(seed):
    b = random_psido(random.Random(seed))
    assert compare(psido_mul(PsiDO.one(), b), b)[0]
    assert compare(psido_mul(b, PsiDO.one()), b)[0]


@given(seeds)
def test_associativity(seed):
    rng = random.Random(seed)
    a, b, c = (random_psido(rng) for _ in range(3))
    ok, (kf, mf) = compare(psido_mul(psido_mul(a, b), c), psido_mul(a, psido_mul(b, c)))
    assert ok


@given(seeds)
def test_series_product_matches_differential_product(seed):
    rng = random.Random(seed)
    ops = []
    for _ in range(2):
        coeffs = [RatFunc(Poly([rng.randint(-3, 3) for _ in range(rng.randint(0, 3))])) for _ in range(3)]
        ops.append(DiffOp(coeffs + [RatFunc.one()]))
    a, b = ops
    lhs = psido_mul(psido_from_diffop_poly(a), psido_from_diffop_poly(b))
    assert compare(lhs, psido_from_diffop_poly(a * b))[0]


# -- involutions ---------------------------------------------------------------


def test_dagger_examples():
    assert dagger(mono(1, 1)).terms == {(1, 1): -1, (0, 0): -1}
    assert op(1, 0, 0).dagger() == op(1, 0, 0)
    alpha = F(2)
    assert op(1, -alpha).dagger() == op(-1, -alpha)


def test_ddagger_examples():
    assert ddagger(mono(2, 1)).terms == {(1, 2): 1}
    # -(x-3) d/dx - 2x + 7  ->  -(x+2) d/dx + 3x + 7
    d = op([3, -1], [7, -2])
    assert d.ddagger() == op([-2, -1], [7, 3])


def test_ddagger_rejects_negative_powers():
    with pytest.raises(NotDifferential):
        op(1, inv_lin(0)).ddagger()


def test_sharp_of_x_is_d():
    assert sharp(mono(1, 0)).terms == {(0, 1): 1}


@given(seeds)
def test_involutions_and_sharp_order(seed):
    a = random_psido(random.Random(seed))
    assert compare(dagger(dagger(a)), a)[0]
    assert compare(ddagger(ddagger(a)), a)[0]
    assert compare(sharp(sharp(sharp(sharp(a)))), a)[0]


@given(seeds)
def test_product_rules(seed):
    rng = random.Random(seed)
    a, b = random_psido(rng), random_psido(rng)
    ab = psido_mul(a, b)
    assert compare(dagger(ab), psido_mul(dagger(b), dagger(a)))[0]
    assert compare(ddagger(ab), psido_mul(ddagger(b), ddagger(a)))[0]
    assert compare(sharp(ab), psido_mul(sharp(a), sharp(b)))[0]


@given(seeds)
def test_exact_dagger_agrees_with_series_dagger(seed):
    d = random_regular_diffop(random.Random(seed))
    assert compare(diffop_to_psido(d.dagger(), 6), dagger(diffop_to_psido(d, 6)))[0]


# -- inversion -----------------------------------------------------------------


def test_invert_geometric_series():
    d = PsiDO({(0, 0): 1, (-1, 0): -1}, 0, 0, -10, 0)
    e = psido_invert(d, -3, 0)
    assert e.terms == {(0, 0): 1, (-1, 0): 1, (-2, 0): 1, (-3, 0): 1}


def test_invert_x():
    e = psido_invert(mono(1, 0), -1, 0)
    assert e.terms == {(-1, 0): 1}


def test_invert_converted_first_order():
    alpha = F(2)
    d = diffop_to_psido(op(1, -alpha), 3)
    e = psido_invert(d, -3, -4)
    ok, window = compare(psido_mul(d, e), PsiDO.one())
    assert ok and window[0] <= 0 and window[1] <= 0


def test_invert_rejects_zero_top():
    with pytest.raises(NotInvertible):
        psido_invert(PsiDO({(-1, 0): 1}, 0, 0, -3, 0), -3, 0)


def test_conversion_example():
    p = diffop_to_psido(op(1, -inv_lin(0)), 2)
    assert p.terms == {(0, 1): 1, (-1, 0): -1}
    assert p.k_floor == -2


def test_conversion_rejects_growth():
    with pytest.raises(NotRegularAtInfinity):
        diffop_to_psido(op(1, [0, 1]), 3)


# -- differential operators ----------------------------------------------------


def test_diffop_products():
    assert diffop_mul(op(1, -1), op(1, 1)) == op(1, 0, -1)
    assert op(1, inv_lin(0)) * op(1, -inv_lin(0)) == op(1, 0, 0)


def test_apply_kills_exponential():
    alpha = F(3, 2)
    f = QuasiExp.exp(alpha)
    assert diffop_apply(op(1, -alpha), f).is_zero()


@given(seeds)
def test_apply_respects_composition(seed):
    rng = random.Random(seed)
    a, b = random_regular_diffop(rng, 2), random_regular_diffop(rng, 1)
    f = RatFunc(Poly([rng.randint(-3, 3) for _ in range(3)]), Poly.linear_root(9))
    assert (a * b).apply(f) == a.apply(b.apply(f))


def test_quotient_examples():
    alpha = F(2)
    sq = op(1, -alpha) ** 2
    assert quotient(sq, op(1, -alpha)) == op(1, -alpha)
    assert quotient(op(1, 0, -1), op(1, -1)) == op(1, 1)
    c = F(3)
    q = quotient(sq, op(1, RatFunc.const(-alpha) - inv_lin(c)))
    assert q == op(1, RatFunc.const(-alpha) + inv_lin(c))


def test_quotient_detects_remainder():
    with pytest.raises(NotDivisible):
        quotient(op(1, 0, 0), op(1, -1))


def test_rdet_examples():
    x = RatFunc(Poly([0, 1]))
    d, one = op(1, 0), op(1)
    assert rdet([[d, DiffOp([x])], [one, DiffOp([x])]]) == DiffOp([RatFunc.one() - x, x])
    a, b, c, e = (op(v) for v in (2, 3, 5, 7))
    assert rdet([[a, b], [c, e]]) == op(2 * 7 - 3 * 5)
    assert rdet([[d]]) == d


def test_psido_json_roundtrip():
    a = random_psido(random.Random(1))
    assert compare(PsiDO.from_json(a.to_json()), a)[0]
