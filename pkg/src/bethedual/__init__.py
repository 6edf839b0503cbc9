"""Exact operator calculus for the duality between two Bethe algebras.

Submodules: ``scalars`` (exact numbers, polynomials, rational functions),
``diffop`` and ``psido`` (differential and windowed pseudodifferential
operators), ``quasiexp`` (spaces of quasi-exponentials and the dual
transform), ``fermion`` (Bethe algebra actions on anticommuting variables)
and ``harness`` (verification suites).
"""

from .diffop import DiffOp, quotient, rdet
from .psido import PsiDO, psido_invert, psido_mul
from .quasiexp import QEData, QuasiExp, qe_data, tilde_transform
from .scalars import PFrac, Poly, RatFunc

__all__ = [
    "DiffOp", "PFrac", "Poly", "PsiDO", "QEData", "QuasiExp", "RatFunc",
    "psido_invert", "psido_mul", "qe_data", "quotient", "rdet", "tilde_transform",
]
