"""Polynomials in anticommuting variables and the two Bethe algebra actions.

Variables ``xi[a, i]`` (``a`` in 1..k, ``i`` in 1..n) are numbered by
``bit = (a-1)*n + (i-1)``; a monomial is the bitmask of its variables,
written in increasing bit order, which is the (a, i) lexicographic order.

Everything below is parameterized by a *side*.  On the ``"n"`` side the
matrix indices run over 1..n, the evaluation points are the ``z``'s and
``(e_pq)_(pt)`` acts as ``xi[pt, p] d[pt, q]``.  On the ``"k"`` side the
indices run over 1..k, the points are the ``-alpha``'s and ``(e_pq)_(pt)``
acts as ``xi[p, pt] d[q, pt]``.  The second side is the first one with the
roles of the two indices of ``xi`` exchanged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .diffop import DiffOp, rdet
from .quasiexp import quadratic_residue, u_series
from .scalars import PFrac, coerce, scalar_str


class IndexOutOfRange(IndexError):
    pass


class NotInZ(ValueError):
    """The pair (l, m) is not an admissible weight."""


class CoincidingParameters(ValueError):
    pass


class PoleOrderExceeded(ArithmeticError):
    pass


class IdentityFailed(AssertionError):
    pass


class NotInvariant(ValueError):
    """An operator maps part of the chosen basis outside it."""


# ---------------------------------------------------------------------------
# monomials


def bit_of(a: int, i: int, n: int) -> int:
    return (a - 1) * n + (i - 1)


def pairs_of(mask: int, n: int) -> list[tuple[int, int]]:
    out = []
    b = 0
    while mask >> b:
        if mask >> b & 1:
            out.append((b // n + 1, b % n + 1))
        b += 1
    return out


def mask_of(pairs, n: int) -> int:
    m = 0
    for a, i in pairs:
        b = bit_of(a, i, n)
        if m >> b & 1:
            raise ValueError("repeated variable")
        m |= 1 << b
    return m


def _below(mask: int, b: int) -> int:
    return bin(mask & ((1 << b) - 1)).count("1")


def derive(b: int, mask: int):
    """Left derivation by variable ``b``: ``(sign, mask)`` or None."""
    if not mask >> b & 1:
        return None
    return (-1 if _below(mask, b) % 2 else 1), mask & ~(1 << b)


def multiply(b: int, mask: int):
    """Left multiplication by variable ``b``: ``(sign, mask)`` or None."""
    if mask >> b & 1:
        return None
    return (-1 if _below(mask, b) % 2 else 1), mask | (1 << b)


def left_derivation(a: int, i: int, mono, n: int):
    """``d[a, i]`` applied to a monomial given as a mask or a list of pairs."""
    mask = mono if isinstance(mono, int) else mask_of(mono, n)
    return derive(bit_of(a, i, n), mask)


@dataclass(frozen=True)
class WedgeMonomial:
    pairs: tuple

    @classmethod
    def from_mask(cls, mask: int, n: int) -> "WedgeMonomial":
        return cls(tuple(pairs_of(mask, n)))

    def mask(self, n: int) -> int:
        return mask_of(self.pairs, n)


# ---------------------------------------------------------------------------
# bases


def row_degrees(mask: int, k: int, n: int) -> tuple[int, ...]:
    return tuple(_below(mask >> ((a - 1) * n), n) for a in range(1, k + 1))


def col_degrees(mask: int, k: int, n: int) -> tuple[int, ...]:
    return tuple(sum(mask >> bit_of(a, i, n) & 1 for a in range(1, k + 1)) for i in range(1, n + 1))


@dataclass
class Basis:
    """Ordered list of monomials closed under the operators built on it."""

    k: int
    n: int
    masks: list
    l: tuple | None = None
    m: tuple | None = None
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.masks = sorted(self.masks)
        self.index = {mk: r for r, mk in enumerate(self.masks)}

    @property
    def dim(self) -> int:
        return len(self.masks)

    def monomials(self) -> list[WedgeMonomial]:
        return [WedgeMonomial.from_mask(mk, self.n) for mk in self.masks]

    def to_json(self):
        return {
            "l": None if self.l is None else list(self.l),
            "m": None if self.m is None else list(self.m),
            "basis": [[list(p) for p in pairs_of(mk, self.n)] for mk in self.masks],
        }


WeightBlock = Basis


def full_space(k: int, n: int) -> Basis:
    return Basis(k, n, list(range(1 << (k * n))))


def row_sector(k: int, n: int, l: Sequence[int]) -> Basis:
    l = tuple(l)
    return Basis(k, n, [mk for mk in range(1 << (k * n)) if row_degrees(mk, k, n) == l], l=l)


def col_sector(k: int, n: int, m: Sequence[int]) -> Basis:
    m = tuple(m)
    return Basis(k, n, [mk for mk in range(1 << (k * n)) if col_degrees(mk, k, n) == m], m=m)


def weight_block(k: int, n: int, l: Sequence[int], m: Sequence[int]) -> Basis:
    l, m = tuple(l), tuple(m)
    if len(l) != k or len(m) != n:
        raise NotInZ("l must have k entries and m must have n entries")
    if any(not 0 <= x <= n for x in l) or any(not 0 <= x <= k for x in m) or sum(l) != sum(m):
        raise NotInZ(f"(l, m) = ({l}, {m}) is not admissible")
    masks = [mk for mk in range(1 << (k * n)) if row_degrees(mk, k, n) == l and col_degrees(mk, k, n) == m]
    return Basis(k, n, masks, l=l, m=m)


def admissible_weights(k: int, n: int):
    for l in itertools.product(range(n + 1), repeat=k):
        for m in itertools.product(range(k + 1), repeat=n):
            if sum(l) == sum(m):
                yield l, m


# ---------------------------------------------------------------------------
# operators


@dataclass
class FermionOperator:
    """Exact matrix on a monomial basis (columns are inputs)."""

    matrix: np.ndarray
    basis: Basis

    def __matmul__(self, other: "FermionOperator") -> "FermionOperator":
        return FermionOperator(self.matrix @ other.matrix, self.basis)

    def to_json(self):
        entries = []
        for (r, c), v in np.ndenumerate(self.matrix):
            if v != 0:
                entries.append([r, c, scalar_str(v)])
        return {"rows": self.matrix.shape[0], "entries": entries}


def zeros(dim: int) -> np.ndarray:
    return np.full((dim, dim), Fraction(0), dtype=object)


def identity(dim: int) -> np.ndarray:
    out = zeros(dim)
    for r in range(dim):
        out[r, r] = Fraction(1)
    return out


def xi_d(p_bit: int, q_bit: int, basis: Basis) -> np.ndarray:
    """Matrix of ``xi_p d_q`` on the basis."""
    out = zeros(basis.dim)
    for c, mk in enumerate(basis.masks):
        r1 = derive(q_bit, mk)
        if r1 is None:
            continue
        r2 = multiply(p_bit, r1[1])
        if r2 is None:
            continue
        row = basis.index.get(r2[1])
        if row is None:
            raise NotInvariant("operator leaves the basis")
        out[row, c] += r1[0] * r2[0]
    return out


def d_matrix(b: int, basis: Basis, target: Basis) -> np.ndarray:
    """Left derivation as a map between two bases."""
    out = np.full((target.dim, basis.dim), Fraction(0), dtype=object)
    for c, mk in enumerate(basis.masks):
        r = derive(b, mk)
        if r is not None:
            out[target.index[r[1]], c] = Fraction(r[0])
    return out


def x_matrix(b: int, basis: Basis, target: Basis) -> np.ndarray:
    out = np.full((target.dim, basis.dim), Fraction(0), dtype=object)
    for c, mk in enumerate(basis.masks):
        r = multiply(b, mk)
        if r is not None:
            out[target.index[r[1]], c] = Fraction(r[0])
    return out


def _bit(side: str, point: int, idx: int, k: int, n: int) -> int:
    """Variable of generator index ``idx`` at evaluation point ``point`` (1-based)."""
    if side == "n":
        return bit_of(point, idx, n)
    return bit_of(idx, point, n)


def _dims(side: str, k: int, n: int) -> tuple[int, int]:
    """(matrix size, number of points) for a side."""
    return (n, k) if side == "n" else (k, n)


def local_generator(side: str, p: int, q: int, point: int, basis: Basis) -> np.ndarray:
    """``(e_pq)_(point)`` on the given side."""
    k, n = basis.k, basis.n
    return xi_d(_bit(side, point, p, k, n), _bit(side, point, q, k, n), basis)


def _check_range(side: str, basis: Basis, *idx):
    size = _dims(side, basis.k, basis.n)[0]
    if any(not 1 <= x <= size for x in idx):
        raise IndexOutOfRange(f"generator index out of 1..{size}")


def current_action(side: str, p: int, q: int, s: int, points: Sequence, basis: Basis) -> np.ndarray:
    """``e_pq (x) t^s -> sum_pt point_pt^s (e_pq)_(pt)``."""
    _check_range(side, basis, p, q)
    out = zeros(basis.dim)
    for pt, val in enumerate(points, start=1):
        out = out + local_generator(side, p, q, pt, basis) * coerce(val) ** s
    return out


def current_action_n(i: int, j: int, s: int, zs: Sequence, block: Basis | None = None, k: int | None = None,
                     n: int | None = None) -> FermionOperator:
    basis = block if block is not None else full_space(k if k is not None else len(zs), n)
    return FermionOperator(current_action("n", i, j, s, zs, basis), basis)


def current_action_k(a: int, b: int, s: int, alphas: Sequence, block: Basis | None = None, k: int | None = None,
                     n: int | None = None) -> FermionOperator:
    basis = block if block is not None else full_space(k, n if n is not None else len(alphas))
    return FermionOperator(current_action("k", a, b, s, [-coerce(x) for x in alphas], basis), basis)


def restrict(mat: np.ndarray, big: Basis, small: Basis) -> np.ndarray:
    """Restriction to an invariant sub-basis (checked)."""
    idx = [big.index[mk] for mk in small.masks]
    inside = set(idx)
    for c in idx:
        for r in range(big.dim):
            if r not in inside and mat[r, c] != 0:
                raise NotInvariant("block is not invariant under the operator")
    return mat[np.ix_(idx, idx)]


def side_sector(side: str, block: Basis) -> Basis:
    """Smallest standard basis closed under all generators of the side."""
    if block.l is None and block.m is None:
        return block
    if side == "n":
        return row_sector(block.k, block.n, block.l) if block.l is not None else full_space(block.k, block.n)
    return col_sector(block.k, block.n, block.m) if block.m is not None else full_space(block.k, block.n)


# ---------------------------------------------------------------------------
# Hamiltonians


def _distinct(vals: Sequence, name: str):
    if len(set(coerce(v) for v in vals)) != len(vals):
        raise CoincidingParameters(f"{name} must be pairwise distinct")


def omega(side: str, pa: int, pb: int, basis: Basis) -> np.ndarray:
    size = _dims(side, basis.k, basis.n)[0]
    out = zeros(basis.dim)
    for p in range(1, size + 1):
        for q in range(1, size + 1):
            out = out + local_generator(side, p, q, pa, basis) @ local_generator(side, q, p, pb, basis)
    return out


def hamiltonian_H(side: str, pt: int, params: Sequence, points: Sequence, basis: Basis) -> np.ndarray:
    """``sum_p params_p (e_pp)_(pt) + sum_{pt' != pt} Omega_(pt pt') / (points_pt - points_pt')``."""
    params = [coerce(v) for v in params]
    points = [coerce(v) for v in points]
    _distinct(params, "parameters")
    _distinct(points, "points")
    out = zeros(basis.dim)
    for p, c in enumerate(params, start=1):
        out = out + local_generator(side, p, p, pt, basis) * c
    for other in range(1, len(points) + 1):
        if other != pt:
            out = out + omega(side, pt, other, basis) / (points[pt - 1] - points[other - 1])
    return out


def hamiltonian_G(side: str, p: int, params: Sequence, points: Sequence, basis: Basis) -> np.ndarray:
    """``sum_pt points_pt (e_pp)_(pt) + sum_{q != p} (e_pq e_qp - e_pp) / (params_p - params_q)``."""
    params = [coerce(v) for v in params]
    points = [coerce(v) for v in points]
    _distinct(params, "parameters")
    _distinct(points, "points")
    glob = lambda a, b: sum((local_generator(side, a, b, pt, basis) for pt in range(1, len(points) + 1)),
                            zeros(basis.dim))
    out = zeros(basis.dim)
    for pt, c in enumerate(points, start=1):
        out = out + local_generator(side, p, p, pt, basis) * c
    epp = glob(p, p)
    for q in range(1, len(params) + 1):
        if q != p:
            out = out + (glob(p, q) @ glob(q, p) - epp) / (params[p - 1] - params[q - 1])
    return out


def _on_block(side: str, builder, block: Basis) -> np.ndarray:
    sector = side_sector(side, block)
    mat = builder(sector)
    return mat if sector is block else restrict(mat, sector, block)


def gaudin_hamiltonian(a: int, alphas, zs, block: Basis, side: str = "n") -> FermionOperator:
    """``rho(H_a(alphas, zs))``; with ``side="k"`` the mirror ``rho(H_a(zs, alphas))`` on the other side.

    On the ``k`` side, ``alphas`` are the parameters (indexed by 1..k) and
    ``zs`` the points (indexed by 1..n).
    """
    return FermionOperator(_on_block(side, lambda b: hamiltonian_H(side, a, alphas, zs, b), block), block)


def dynamical_hamiltonian(i: int, alphas, zs, block: Basis, side: str = "n") -> FermionOperator:
    return FermionOperator(_on_block(side, lambda b: hamiltonian_G(side, i, alphas, zs, b), block), block)


# ---------------------------------------------------------------------------
# universal operator and generator tables


def universal_operator_sector(side: str, params: Sequence, points: Sequence, sector: Basis) -> DiffOp:
    """rdet of ``(d/dx - params_p) delta_pq - sum_pt (e_qp)_(pt) / (x - points_pt)`` on a sector."""
    params = [coerce(v) for v in params]
    points = [coerce(v) for v in points]
    _distinct(params, "parameters")
    _distinct(points, "points")
    size = len(params)
    eye = identity(sector.dim)
    zero = zeros(sector.dim)
    rows = []
    for p in range(1, size + 1):
        row = []
        for q in range(1, size + 1):
            poles = {}
            for pt, val in enumerate(points, start=1):
                g = local_generator(side, q, p, pt, sector)
                if np.any(g != 0):
                    poles[val] = [-g]
            if p == q:
                c0 = PFrac([eye * -params[p - 1]], poles)
                row.append(DiffOp([c0, PFrac([eye])]))
            else:
                row.append(DiffOp([PFrac([zero], poles)]))
        rows.append(row)
    op = rdet(rows)
    if op.order != size:
        raise IdentityFailed("universal operator has the wrong order")
    return op


def _restrict_pfrac(f: PFrac, big: Basis, small: Basis) -> PFrac:
    return f.map(lambda v: restrict(v, big, small) if isinstance(v, np.ndarray) else v)


@dataclass
class BetheTable:
    """Partial-fraction generators of one side on one block.

    ``coeffs[i-1]`` is ``B_i(x)`` as a matrix-valued :class:`PFrac`;
    ``const[i]`` and ``poles[(i, a, j)]`` are its constant part and the
    coefficient of ``(x - point_a)^-j``.
    """

    side: str
    params: tuple
    points: tuple
    block: Basis
    coeffs: list
    const: dict
    poles: dict

    def entries(self) -> list[tuple[object, np.ndarray]]:
        out = [(("const", i), v) for i, v in sorted(self.const.items())]
        out += sorted(self.poles.items(), key=lambda t: t[0])
        return out

    def operator(self) -> DiffOp:
        size = len(self.coeffs)
        eye = identity(self.block.dim)
        return DiffOp(list(reversed(self.coeffs)) + [PFrac([eye])]) if size else DiffOp([PFrac([eye])])


def universal_operator(n: int, alphas, zs, block: Basis, side: str = "n") -> DiffOp:
    """Universal operator on a block.  ``side="k"`` uses ``zs`` as parameters and ``-alphas`` as points."""
    params, points = _side_params(side, alphas, zs)
    if len(params) != (n if side == "n" else block.k):
        raise ValueError("parameter count does not match the operator size")
    sector = side_sector(side, block)
    op = universal_operator_sector(side, params, points, sector)
    if sector is not block:
        op = op.map(lambda c: _restrict_pfrac(c, sector, block))
    _check_constant_terms(op, params)
    return op


def _side_params(side: str, alphas, zs):
    alphas = [coerce(a) for a in alphas]
    zs = [coerce(z) for z in zs]
    if side == "n":
        return alphas, zs
    return zs, [-a for a in alphas]


def _elementary(params: Sequence) -> list:
    """Coefficients of ``prod (u - p)``, leading first."""
    poly = [Fraction(1)]
    for p in params:
        poly = [a - p * b for a, b in zip(poly + [Fraction(0)], [Fraction(0)] + poly)]
    return poly


def _check_constant_terms(op: DiffOp, params: Sequence):
    size = op.order
    expect = _elementary(params)
    for i in range(1, size + 1):
        c = op.coefficient(size - i)
        if len(c.poly) > 1:
            raise IdentityFailed(f"B_{i} grows at infinity")
        dim = op.leading.poly[0].shape[0]
        const = c.poly[0] if c.poly else zeros(dim)
        if np.any(const != identity(dim) * expect[i]):
            raise IdentityFailed(f"constant part of B_{i} is not the elementary symmetric value")


def bethe_generators(n: int, alphas, zs, block: Basis, side: str = "n") -> BetheTable:
    params, points = _side_params(side, alphas, zs)
    op = universal_operator(n, alphas, zs, block, side)
    size = op.order
    dim = block.dim
    coeffs, const, poles = [], {}, {}
    for i in range(1, size + 1):
        c = op.coefficient(size - i)
        coeffs.append(c)
        const[i] = c.poly[0] if c.poly else zeros(dim)
        for a, pt in enumerate(points, start=1):
            vals = c.poles.get(pt, ())
            if len(vals) > i:
                raise PoleOrderExceeded(f"B_{i} has a pole of order {len(vals)} at point {a}")
            for j in range(1, i + 1):
                poles[(i, a, j)] = vals[j - 1] if j <= len(vals) else zeros(dim)
    return BetheTable(side, tuple(params), tuple(points), block, coeffs, const, poles)


def chat_series(n: int, alphas, zs, block: Basis, j_max: int, side: str = "n") -> list[PFrac]:
    """``C_j(u)`` with ``prod (u - params) sum_j C_j(u) x^-j = u^N + sum_i B_i(x) u^(N-i)``."""
    if j_max < 2:
        raise ValueError("j_max must be at least 2")
    table = bethe_generators(n, alphas, zs, block, side)
    roots = {p: 1 for p in table.params}
    return u_series(table.coeffs, roots, j_max)


def expansion_table(table: BetheTable, depth: int) -> dict:
    """Expansion coefficients at infinity: ``{(i, j): B_ij}`` for ``j < depth``."""
    out = {}
    for i, c in enumerate(table.coeffs, start=1):
        tail = c.laurent(max(1, len(c.poly)) + depth)
        for j in range(depth):
            out[(i, j)] = tail.coefficient(-j)
    return out


# ---------------------------------------------------------------------------
# checks


@dataclass
class CheckReport:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def record(self, ok: bool, what: str):
        self.checked += 1
        if not ok:
            self.failures.append(what)


def _eq(a: np.ndarray, b: np.ndarray) -> bool:
    return not np.any(a != b)


def residue_check(n: int, alphas, zs, block: Basis, side: str = "n", raise_on_fail: bool = True) -> CheckReport:
    """Hamiltonians as residues of the quadratic generator combinations."""
    rep = CheckReport("residues")
    params, points = _side_params(side, alphas, zs)
    table = bethe_generators(n, alphas, zs, block, side)
    b1 = table.coeffs[0]
    b2 = table.coeffs[1] if len(table.coeffs) > 1 else PFrac.const(zeros(block.dim))
    for a, pt in enumerate(points, start=1):
        h = gaudin_hamiltonian(a, params, points, block, side).matrix
        rep.record(_eq(quadratic_residue(b1, b2, pt), h), f"H_{a}")
    cs = u_series(table.coeffs, {p: 1 for p in params}, 2)
    for i, p in enumerate(params, start=1):
        g = dynamical_hamiltonian(i, params, points, block, side).matrix
        rep.record(_eq(quadratic_residue(cs[1], cs[2], p), g), f"G_{i}")
    if raise_on_fail and not rep.ok:
        raise IdentityFailed(f"residue identities fail at {rep.failures}")
    return rep


def duality_check(k: int, n: int, alphas, zs, block: Basis | None = None, raise_on_fail: bool = True) -> CheckReport:
    """Hamiltonian duality between the two sides and the sign rule under negation."""
    rep = CheckReport("duality")
    block = block if block is not None else full_space(k, n)
    alphas = [coerce(a) for a in alphas]
    zs = [coerce(z) for z in zs]
    neg_a = [-a for a in alphas]
    for a in range(1, k + 1):
        lhs = gaudin_hamiltonian(a, alphas, zs, block, "n").matrix
        rhs = dynamical_hamiltonian(a, zs, neg_a, block, "k").matrix
        rep.record(_eq(lhs, -rhs), f"H_{a} = -G_{a}")
    for i in range(1, n + 1):
        lhs = dynamical_hamiltonian(i, alphas, zs, block, "n").matrix
        rhs = gaudin_hamiltonian(i, zs, neg_a, block, "k").matrix
        rep.record(_eq(lhs, rhs), f"G_{i} = H_{i}")
    if block.l is not None:
        for ok, what in sign_rule(n, alphas, zs, block):
            rep.record(ok, what)
    if raise_on_fail and not rep.ok:
        raise IdentityFailed(f"duality identities fail at {rep.failures}")
    return rep


def sign_rule(n: int, alphas, zs, block: Basis) -> list[tuple[bool, str]]:
    """Generator tables at negated parameters and points.

    Negating ``x`` turns the universal operator at ``(-alpha, -z)`` into the
    one at ``(alpha, z)`` up to the sign ``(-1)^(i+j)`` on the coefficient of
    ``x^-j d^(n-i)``; the same sign relates partial-fraction entries with
    pole order ``j`` and the constant parts carry ``(-1)^i``.
    """
    out = []
    plus = bethe_generators(n, alphas, zs, block)
    minus = bethe_generators(n, [-a for a in alphas], [-z for z in zs], block)
    for i, v in plus.const.items():
        out.append((_eq(minus.const[i], v * (-1) ** i), f"const_{i}"))
    keys = set(plus.poles) | set(minus.poles)
    for key in sorted(keys):
        i, a, j = key
        v = plus.poles.get(key, zeros(block.dim))
        w = minus.poles.get(key, zeros(block.dim))
        out.append((_eq(w, v * (-1) ** (i + j)), f"pole_{key}"))
    ep, em = expansion_table(plus, 4), expansion_table(minus, 4)
    for (i, j), v in ep.items():
        out.append((_eq(em[(i, j)], v * (-1) ** (i + j)), f"B_{i}{j}"))
    return out


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def dimension_total(k: int, n: int) -> int:
    return sum(weight_block(k, n, l, m).dim for l, m in admissible_weights(k, n))
