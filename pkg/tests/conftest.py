from fractions import Fraction

import sympy
from hypothesis import settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

X = sympy.Symbol("x")

small_rationals = st.builds(Fraction, st.integers(-7, 7), st.integers(1, 5))
small_polys = st.lists(small_rationals, min_size=0, max_size=4)


def to_sympy(f):
    """Rational function (RatFunc or PFrac) as a sympy expression in ``X``."""
    from bethedual.scalars import PFrac

    if isinstance(f, PFrac):
        f = f.to_ratfunc()
    num = sum(sympy.Rational(c.numerator, c.denominator) * X**i for i, c in enumerate(f.num.coeffs))
    den = sum(sympy.Rational(c.numerator, c.denominator) * X**i for i, c in enumerate(f.den.coeffs))
    return sympy.together(num / den)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[num])
