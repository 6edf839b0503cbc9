"""Verification suites, configuration and reports."""

from __future__ import annotations

import json
import random
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import fermion as fb
from .diffop import DiffOp, quotient
from .instances import (
    distinct_rationals,
    random_invertible_psido,
    random_psido,
    random_regular_diffop,
    random_space,
    theorem1_instances,
)
from .partitions import Partition, d_sets
from .psido import compare, dagger, ddagger, diffop_to_psido, psido_invert, psido_mul, sharp, PsiDO
from .quasiexp import (
    QEData,
    QuasiExp,
    closed_form_minor,
    closed_form_wronskian,
    conjugate_kernel_basis,
    factorize,
    fundamental_operator,
    h_g_residues,
    kernel_quasiexp,
    monomial_basis,
    qe_data,
    quotient_conjugate_kernel,
    tilde_psido_check,
    tilde_transform,
    wronskian,
)
from .scalars import PFrac, RatFunc, coerce, scalar_str


class Degenerate(ArithmeticError):
    """Eigenvalues of the random combination collide; resample parameters."""


class NotCommuting(ValueError):
    pass


class IncompleteTable(KeyError):
    pass


class GapWarning(UserWarning):
    pass


@dataclass
class SuiteConfig:
    k: int = 2
    n: int = 2
    alphas: list | None = None  # None draws at random from the seed
    zs: list | None = None
    block: object = "all"  # or (l, m)
    mode: str = "exact"
    tol: float = 1e-8
    trunc: int = 6
    seed: int = 0
    retries: int = 5
    instances: int = 20
    draws: int = 1  # parameter draws per block in the main2 suite
    height: int = 7
    output: str | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise ValueError("mode must be exact or float")
        if self.mode == "float" and self.tol <= 0:
            raise ValueError("float mode needs tol > 0")
        for name in ("alphas", "zs"):
            vals = getattr(self, name)
            if vals is not None:
                vals = [coerce(v) for v in vals]
                if len(set(vals)) != len(vals):
                    raise ValueError(f"{name} must be pairwise distinct")
                setattr(self, name, vals)

    def draw(self, rng: random.Random) -> tuple[list, list]:
        alphas = self.alphas or distinct_rationals(rng, self.n, self.height)
        zs = self.zs or distinct_rationals(rng, self.k, self.height)
        return alphas, zs

    def blocks(self):
        if self.block == "all":
            for l, m in fb.admissible_weights(self.k, self.n):
                blk = fb.weight_block(self.k, self.n, l, m)
                if blk.dim:
                    yield blk
        else:
            l, m = self.block
            yield fb.weight_block(self.k, self.n, l, m)

    def echo(self) -> dict:
        return {
            "k": self.k, "n": self.n, "seed": self.seed, "mode": self.mode, "tol": self.tol,
            "trunc": self.trunc, "block": self.block if self.block == "all" else [list(x) for x in self.block],
        }


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return scalar_str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, complex, np.floating, np.complexfloating)):
        return repr(complex(v) if isinstance(v, complex) else float(v))
    return v


@dataclass
class Report:
    suite: str
    config: dict = field(default_factory=dict)
    instances: int = 0
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    timing: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, reason: str, **inputs):
        self.failures.append({"reason": reason, "input": _jsonable(inputs)})

    def note(self, text: str):
        self.notes.append(text)

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "suite": self.suite, "config": _jsonable(self.config), "instances": self.instances,
            "failures": self.failures, "notes": self.notes, "ok": self.ok,
        }
        if timing:
            out["timing"] = round(self.timing, 3)
        return out

    def dumps(self, timing: bool = False) -> str:
        return json.dumps(self.to_json(timing), indent=2, sort_keys=True)

    def summary(self) -> str:
        state = "PASS" if self.ok else "FAIL"
        return f"{self.suite}: {state} ({self.instances} instances, {len(self.failures)} failures)"


class _Timer:
    def __init__(self, report: Report):
        self.report = report

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self.report

    def __exit__(self, *exc):
        self.report.timing = time.perf_counter() - self.t0
        return False


# ---------------------------------------------------------------------------
# spectra


def _as_complex(a) -> np.ndarray:
    return np.array(a, dtype=complex)


def common_eigenbasis(ops: Sequence, tol: float = 1e-8, rng: random.Random | None = None):
    """Joint eigenvectors of commuting operators as ``[(vector, [eigenvalue per op])]``.

    One-dimensional inputs keep their exact entries.  Otherwise a random
    combination is diagonalized in double precision and every operator is
    checked to be diagonal in the resulting basis.
    """
    mats = [op.matrix if isinstance(op, fb.FermionOperator) else op for op in ops]
    if not mats:
        return []
    dim = mats[0].shape[0]
    if dim == 0:
        return []
    if dim == 1:
        return [(np.ones(1), [m[0, 0] for m in mats])]
    cm = [_as_complex(m) for m in mats]
    norms = [max(1.0, float(np.linalg.norm(m))) for m in cm]
    for i, a in enumerate(cm):
        for j in range(i + 1, len(cm)):
            if np.linalg.norm(a @ cm[j] - cm[j] @ a) > tol * norms[i] * norms[j]:
                raise NotCommuting(f"operators {i} and {j} do not commute")
    rng = rng or random.Random(0)
    weights = [rng.uniform(0.5, 1.5) * rng.choice((-1, 1)) for _ in cm]
    comb = sum(w * a for w, a in zip(weights, cm))
    vals, vecs = np.linalg.eig(comb)
    scale = max(1.0, float(np.max(np.abs(vals))))
    gap = min(abs(vals[i] - vals[j]) for i in range(dim) for j in range(i + 1, dim))
    if gap <= tol * scale:
        raise Degenerate(f"eigenvalue gap {gap:.3e} of the random combination")
    if gap < 1e3 * tol * scale:
        warnings.warn(f"small eigenvalue gap {gap:.3e}; results may be ill conditioned", GapWarning)
    out = []
    for c in range(dim):
        v = vecs[:, c]
        v = v / np.linalg.norm(v)
        big = v[np.argmax(np.abs(v))]
        v = v * (abs(big) / big)
        eigs = []
        for a, nrm in zip(cm, norms):
            lam = np.vdot(v, a @ v)
            if np.linalg.norm(a @ v - lam * v) > tol * nrm:
                raise Degenerate("an operator is not diagonal in the eigenbasis of the combination")
            eigs.append(lam.real if abs(lam.imag) <= tol * nrm else lam)
        if np.all(np.abs(v.imag) <= tol):
            v = v.real
        out.append((v, eigs))
    out.sort(key=lambda t: [(complex(e).real, complex(e).imag) for e in t[1]])
    return out


def eigen_to_diffop(values: dict, size: int, points: Sequence) -> DiffOp:
    """``d^N + sum_i b_i(x) d^(N-i)`` from the eigenvalues of a generator table.

    ``values`` maps ``("const", i)`` and ``(i, a, j)`` (``j <= i``) to numbers.
    """
    coeffs = []
    for i in range(1, size + 1):
        try:
            const = values[("const", i)]
            poles = {pt: [values[(i, a, j)] for j in range(1, i + 1)] for a, pt in enumerate(points, start=1)}
        except KeyError as exc:
            raise IncompleteTable(f"missing eigenvalue for {exc.args[0]}") from None
        coeffs.append(PFrac([const], poles))
    one = PFrac.const(Fraction(1))
    return DiffOp(list(reversed(coeffs)) + [one])


def _eigen_values(table: fb.BetheTable, v: np.ndarray, exact: bool, tol: float):
    out, worst = {}, 0.0
    for key, mat in table.entries():
        if exact:
            out[key] = mat[0, 0]
            continue
        a = _as_complex(mat)
        lam = np.vdot(v, a @ v) / np.vdot(v, v)
        worst = max(worst, float(np.linalg.norm(a @ v - lam * v)) / max(1.0, float(np.linalg.norm(a))))
        out[key] = lam.real if abs(lam.imag) <= tol * max(1.0, abs(lam)) else lam
    return out, worst


def _pfrac_entries(f: PFrac) -> dict:
    out = {("poly", i): v for i, v in enumerate(f.poly)}
    for a, vs in f.poles.items():
        for j, v in enumerate(vs, start=1):
            out[(a, j)] = v
    return out


def _match_pfrac(a: PFrac, b: PFrac, tol: float, points) -> tuple[bool, float]:
    """Entrywise comparison; float poles are matched to the nearest reference point."""
    ea, eb = _pfrac_entries(_snap(a, points, tol)), _pfrac_entries(_snap(b, points, tol))
    worst = 0.0
    for key in set(ea) | set(eb):
        x, y = ea.get(key, 0), eb.get(key, 0)
        if tol == 0:
            if x != y:
                return False, float("inf")
            continue
        err = abs(complex(x) - complex(y)) / max(1.0, abs(complex(x)), abs(complex(y)))
        worst = max(worst, err)
    return worst <= tol, worst


def _snap(f: PFrac, points, tol: float) -> PFrac:
    if tol == 0:
        return f
    poles = {}
    for a, vs in f.poles.items():
        near = min(points, key=lambda p: abs(complex(p) - complex(a))) if points else a
        poles[near if abs(complex(near) - complex(a)) <= tol * max(1.0, abs(complex(a))) else a] = vs
    return PFrac(f.poly, poles)


def compare_ops(a: DiffOp, b: DiffOp, tol: float, points=()) -> tuple[bool, float]:
    if a.order != b.order:
        return False, float("inf")
    a, b = (op.map(lambda c: PFrac.from_ratfunc(c, points) if isinstance(c, RatFunc) else c) for op in (a, b))
    worst = 0.0
    for m in range(a.order + 1):
        ok, err = _match_pfrac(a.coefficient(m), b.coefficient(m), tol, points)
        if not ok:
            return False, err
        worst = max(worst, err)
    return True, worst


# ---------------------------------------------------------------------------
# main correspondence on weight blocks


def block_data(block: fb.Basis, alphas, zs) -> QEData:
    """Rate partitions ``(m_i)`` and point partitions ``(1^l_a)`` of a weight block."""
    mu = [Partition([m] if m else []) for m in block.m]
    lam = [Partition([1] * l) for l in block.l]
    return QEData(mu, lam, alphas, zs)


def check_block_spectrum(block: fb.Basis, alphas, zs, exact: bool, tol: float, rng: random.Random,
                         report: Report) -> int:
    """Compare the transformed operator of each joint eigenvector with the dual eigenvalues.

    Returns the number of eigenvectors checked; raises Degenerate for resampling.
    """
    k, n = block.k, block.n
    table_n = fb.bethe_generators(n, alphas, zs, block)
    table_k = fb.bethe_generators(n, alphas, zs, block, side="k")
    data = block_data(block, alphas, zs)
    ops = [mat for _, mat in table_n.entries()]
    if exact and block.dim != 1:
        raise ValueError("exact comparison needs a one-dimensional block")
    basis = common_eigenbasis(ops, tol, rng)
    neg = [-a for a in alphas]
    checked = 0
    ctx = dict(l=block.l, m=block.m, alphas=alphas, zs=zs, exact=exact)
    for v, _ in basis:
        vals_n, res_n = _eigen_values(table_n, v, exact, tol)
        vals_k, res_k = _eigen_values(table_k, v, exact, tol)
        checked += 1
        if max(res_n, res_k) > tol:
            report.fail("vector is not a joint eigenvector of both tables", residual=max(res_n, res_k), **ctx)
            continue
        d_aug = eigen_to_diffop(vals_n, n, zs)
        dual = eigen_to_diffop(vals_k, k, neg)
        try:
            st = tilde_transform(d_aug, data, 0.0 if exact else tol)
        except Exception as exc:  # noqa: BLE001 - every chain failure is a report entry
            report.fail(f"transform failed: {type(exc).__name__}: {exc}", **ctx)
            continue
        ok, err = compare_ops(st.D_tilde_aug, dual, 0.0 if exact else tol, neg)
        if not ok:
            report.fail("transformed operator differs from dual eigenvalues", error=err, **ctx)
            continue
        try:
            h_g_residues(d_aug, st.D_tilde_aug, data, 0.0 if exact else max(tol, 1e-6))
        except Exception as exc:  # noqa: BLE001
            report.fail(f"residue identity failed: {exc}", **ctx)
    return checked


def verify_theorem_main2(cfg: SuiteConfig) -> Report:
    report = Report("main2", cfg.echo())
    rng = random.Random(cfg.seed)
    with _Timer(report):
        blocks = list(cfg.blocks())
        if cfg.mode == "float" and not any(b.dim == 1 for b in blocks):
            # exact spot instance on a one-dimensional block of the same shape
            blocks.append(next(b for b in SuiteConfig(k=cfg.k, n=cfg.n).blocks() if b.dim == 1))
        for blk in blocks:
            for _ in range(cfg.draws if blk.dim > 1 else 1):
                _main2_draw(cfg, blk, rng, report)
    return report


def _main2_draw(cfg: SuiteConfig, blk: fb.Basis, rng: random.Random, report: Report):
    for _ in range(cfg.retries + 1):
        alphas, zs = cfg.draw(rng)
        exact = blk.dim == 1 and all(isinstance(v, Fraction) for v in alphas + zs)
        try:
            report.instances += check_block_spectrum(blk, alphas, zs, exact, cfg.tol, rng, report)
            return
        except Degenerate as exc:
            report.note(f"block l={list(blk.l)} m={list(blk.m)}: resampled after draw "
                        f"alphas={_jsonable(alphas)} zs={_jsonable(zs)} ({exc})")
    report.fail("no generic draw within the retry budget", l=blk.l, m=blk.m)


# ---------------------------------------------------------------------------
# duality, commutativity, residues


def _commute(a, b) -> bool:
    return not np.any(a @ b - b @ a != 0)


def verify_duality(cfg: SuiteConfig) -> Report:
    report = Report("duality", cfg.echo())
    rng = random.Random(cfg.seed)
    k, n = cfg.k, cfg.n
    with _Timer(report):
        alphas, zs = cfg.draw(rng)
        ctx = dict(k=k, n=n, alphas=alphas, zs=zs)
        total = 0
        for blk in cfg.blocks():
            total += blk.dim
            c = dict(l=blk.l, m=blk.m, **ctx)
            rep = fb.duality_check(k, n, alphas, zs, blk, raise_on_fail=False)
            report.instances += rep.checked
            for f in rep.failures:
                report.fail(f"duality: {f}", **c)
            if k > 2 or n > 2:
                continue
            for side in ("n", "k"):
                rep = fb.residue_check(n, alphas, zs, blk, side=side, raise_on_fail=False)
                report.instances += rep.checked
                for f in rep.failures:
                    report.fail(f"residue ({side} side): {f}", **c)
            tn = [m for _, m in fb.bethe_generators(n, alphas, zs, blk).entries()]
            tk = [m for _, m in fb.bethe_generators(n, alphas, zs, blk, side="k").entries()]
            cartan = [fb.current_action("n", i, i, 0, zs, blk) for i in range(1, n + 1)]
            for name, left, right in (("table", tn, tn), ("cross", tn, tk), ("cartan", tn, cartan)):
                for i, a in enumerate(left):
                    for j, b in enumerate(right):
                        report.instances += 1
                        if not _commute(a, b):
                            report.fail(f"{name} commutator [{i}, {j}] is nonzero", **c)
        if cfg.block == "all" and total != 2 ** (k * n):
            report.fail("block dimensions do not add up", total=total, **ctx)
    return report


# ---------------------------------------------------------------------------
# quasi-exponential suites


def _check_theorem1(fs, data: QEData, depth: int) -> list[str]:
    problems = []
    d = fundamental_operator(fs)
    st = tilde_transform(d, data)
    if st.D_tilde.order != data.L or not st.D_tilde.is_monic():
        problems.append("transform is not monic of order L")
    dual = data.dual().reduce()
    bound = max([p.first + p.length for p in data.lam] + [1])
    ker = kernel_quasiexp(st.D_tilde, dual.alphas, bound)
    if len(ker) != data.L or not qe_data(ker).same_as(dual):
        problems.append("kernel data differs from the dual data")
    ok, _ = tilde_psido_check(st.D_V, st.D_tilde, data, depth)
    if not ok:
        problems.append("windowed series evaluation disagrees")
    h_g_residues(d, st.D_tilde_aug, data)
    return problems


def verify_theorem1(cfg: SuiteConfig) -> Report:
    report = Report("theorem1", cfg.echo())
    rng = random.Random(cfg.seed)
    with _Timer(report):
        for fs, data in theorem1_instances(rng, cfg.instances, height=5, max_k=min(cfg.k, 2),
                                           max_n=min(cfg.n, 2)):
            report.instances += 1
            try:
                problems = _check_theorem1(fs, data, cfg.trunc)
            except Exception as exc:  # noqa: BLE001
                problems = [f"{type(exc).__name__}: {exc}"]
            for p in problems:
                report.fail(p, space=[f.to_json() for f in fs], data=data.to_json())
    return report


def _wronskian_identities(fs: list[QuasiExp], extra: QuasiExp) -> list[str]:
    problems = []
    n = len(fs)
    d = fundamental_operator(fs)
    if any(not d.apply(f).is_zero() for f in fs):
        problems.append("fundamental operator misses a basis function")
    prod = None
    for f in factorize(fs):
        prod = f if prod is None else prod * f
    if prod != d:
        problems.append("factor product differs from the fundamental operator")
    hs = conjugate_kernel_basis(fs)
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    if wronskian(hs) * wronskian(fs) != QuasiExp.const(sign):
        problems.append("Wronskian of the conjugate kernel is not the signed inverse")
    if d.apply(extra) * wronskian(fs) != wronskian(fs + [extra]):
        problems.append("applied operator times W differs from the bordered Wronskian")
    if n >= 2:
        head, tail = fs[: n // 2], fs[n // 2:]
        small, big = fundamental_operator(head), d
        q = quotient(big, small)
        phis = quotient_conjugate_kernel(head, tail)
        qd = q.dagger()
        if any(not qd.apply(p).is_zero() for p in phis):
            problems.append("quotient conjugate misses a kernel function")
    return problems


def verify_wronskian(cfg: SuiteConfig) -> Report:
    report = Report("wronskian", cfg.echo())
    rng = random.Random(cfg.seed)
    with _Timer(report):
        for t in range(cfg.instances):
            n = 1 + t % 4
            fs = random_space(rng, n, height=5)
            extra = random_space(rng, 1, height=5)[0]
            report.instances += 1
            try:
                problems = _wronskian_identities(fs, extra)
            except Exception as exc:  # noqa: BLE001
                problems = [f"{type(exc).__name__}: {exc}"]
            for p in problems:
                report.fail(p, space=[f.to_json() for f in fs])
        closed_form_grid(report)
    return report


RATE_GRID = (Fraction(0), Fraction(1), Fraction(-2), Fraction(1, 2))


def closed_form_grid(report: Report, rates: Sequence = RATE_GRID, max_n: int = 3, max_p: int = 3):
    """Closed forms of Wronskians and their minors against direct determinants."""
    import itertools

    for n in range(1, max_n + 1):
        rs = list(rates[:n])
        for ps in itertools.product(range(1, max_p + 1), repeat=n):
            report.instances += 1
            direct = wronskian(monomial_basis(rs, ps))
            if direct != closed_form_wronskian(rs, ps):
                report.fail("closed-form Wronskian differs", rates=rs, ps=list(ps))
            for i in range(n):
                for j in range(ps[i]):
                    if sum(ps) == 1:
                        continue
                    report.instances += 1
                    try:
                        closed_form_minor(i, j, rs, ps, verify=True)
                    except Exception as exc:  # noqa: BLE001
                        report.fail(f"closed-form minor: {exc}", rates=rs, ps=list(ps), i=i, j=j)
    for rows in range(0, 7):
        for parts in itertools.combinations_with_replacement(range(1, 7), rows):
            mu = Partition(sorted(parts, reverse=True))
            report.instances += 1
            try:
                d_sets(mu)
            except AssertionError as exc:
                report.fail(str(exc), mu=list(mu))


# ---------------------------------------------------------------------------
# pseudodifferential suite


def _window_ok(a: PsiDO, b: PsiDO) -> bool:
    ok, (kf, mf) = compare(a, b)
    return ok and kf <= min(a.K, b.K) and mf <= min(a.M, b.M)


def verify_psido(cfg: SuiteConfig, triples: int = 200, inversions: int = 50, conversions: int = 20) -> Report:
    report = Report("psido", cfg.echo())
    rng = random.Random(cfg.seed)
    with _Timer(report):
        for t in range(triples):
            a, b, c = (random_psido(rng) for _ in range(3))
            ab = psido_mul(a, b)
            checks = {
                "associativity": compare(psido_mul(ab, c), psido_mul(a, psido_mul(b, c)))[0],
                "dagger involution": compare(dagger(dagger(a)), a)[0],
                "ddagger involution": compare(ddagger(ddagger(a)), a)[0],
                "sharp order four": compare(sharp(sharp(sharp(sharp(a)))), a)[0],
                "dagger reverses products": compare(dagger(ab), psido_mul(dagger(b), dagger(a)))[0],
                "ddagger reverses products": compare(ddagger(ab), psido_mul(ddagger(b), ddagger(a)))[0],
                "sharp preserves products": compare(sharp(ab), psido_mul(sharp(a), sharp(b)))[0],
            }
            report.instances += 1
            for name, ok in checks.items():
                if not ok:
                    report.fail(name, a=a.to_json(), b=b.to_json(), c=c.to_json())
        for t in range(inversions):
            d = random_invertible_psido(rng)
            e = psido_invert(d, -d.K - cfg.trunc, -d.M - cfg.trunc)
            report.instances += 1
            one = PsiDO.one()
            if not (_window_ok(psido_mul(d, e), one) and _window_ok(psido_mul(e, d), one)):
                report.fail("inverse does not multiply back to 1", d=d.to_json())
        for t in range(conversions):
            op = random_regular_diffop(rng, order=rng.randint(1, 2))
            p = diffop_to_psido(op, cfg.trunc)
            e = psido_invert(p, -cfg.trunc - 1, -op.order - cfg.trunc)
            report.instances += 1
            if not (_window_ok(psido_mul(p, e), PsiDO.one()) and _window_ok(psido_mul(e, p), PsiDO.one())):
                report.fail("inverse of a converted operator does not multiply back", op=op.to_json())
            if not compare(diffop_to_psido(op.dagger(), cfg.trunc), dagger(p))[0]:
                report.fail("exact conjugate disagrees with the series conjugate", op=op.to_json())
    return report


SUITES = {
    "psido": verify_psido,
    "wronskian": verify_wronskian,
    "theorem1": verify_theorem1,
    "duality": verify_duality,
    "main2": verify_theorem_main2,
}
