"""Acceptance criteria 1-12.

Each test records one ``criterion N: PASS|FAIL`` line.  The lines are printed
together at the end of the pytest run (see ``conftest.py``) and also when this
file is executed directly.
"""

import contextlib
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from bethedual import fermion as fb
from bethedual.diffop import DiffOp
from bethedual.harness import (
    Report,
    SuiteConfig,
    _wronskian_identities,
    closed_form_grid,
    verify_duality,
    verify_psido,
    verify_theorem1,
    verify_theorem_main2,
)
from bethedual.instances import random_space, theorem1_instances
from bethedual.quasiexp import h_g_residues, tilde_psido_check, tilde_transform, QEData
from bethedual.scalars import Poly, RatFunc

LINES: dict[str, str] = {}


@contextlib.contextmanager
def criterion(num: str, title: str):
    t0 = time.perf_counter()
    state, detail = "FAIL", ""
    try:
        yield
        state = "PASS"
    except BaseException as exc:
        detail = f" [{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}]"
        raise
    finally:
        LINES[num] = f"criterion {num:<9} {state}  {title} ({time.perf_counter() - t0:.1f} s){detail}"
        print(LINES[num])


def assert_report(rep: Report, minimum: int = 1):
    assert rep.ok, rep.failures[:3]
    assert rep.instances >= minimum, rep.instances


def all_blocks(k, n):
    for l, m in fb.admissible_weights(k, n):
        blk = fb.weight_block(k, n, l, m)
        if blk.dim:
            yield blk


def same(a, b):
    return not np.any(np.asarray(a, dtype=object) != np.asarray(b, dtype=object))


def test_c01_psido_algebra():
    with criterion(" 1", "pseudodifferential algebra, 200 seeded triples"):
        t0 = time.perf_counter()
        rep = verify_psido(SuiteConfig(seed=1), triples=200, inversions=0, conversions=0)
        assert_report(rep, 200)
        assert time.perf_counter() - t0 < 60


def test_c02_inversion():
    with criterion(" 2", "inversion of 50 random elements and 20 converted operators"):
        rep = verify_psido(SuiteConfig(seed=2), triples=0, inversions=50, conversions=20)
        assert_report(rep, 70)


def test_c03_wronskian_machinery():
    with criterion(" 3", "factorization and conjugate kernels on 40 random spaces, n <= 4"):
        rng = random.Random(3)
        for t in range(40):
            fs = random_space(rng, 1 + t % 4, height=5)
            extra = random_space(rng, 1, height=5)[0]
            assert not _wronskian_identities(fs, extra), [f.to_json() for f in fs]


def test_c04_closed_forms():
    with criterion(" 4", "closed-form Wronskians and minors, partitions in a 6x6 box"):
        rep = Report("closed forms")
        closed_form_grid(rep)
        assert_report(rep, 100)


def test_c05_transform_instances():
    with criterion(" 5", "dual transform on 24 exact instances"):
        assert_report(verify_theorem1(SuiteConfig(seed=5, instances=24)), 24)


def op(*coeffs):
    return DiffOp.from_leading_first([c if isinstance(c, RatFunc) else RatFunc.const(c) for c in coeffs])


def inv_lin(c):
    return RatFunc(Poly([1]), Poly.linear_root(c))


def test_c06_worked_pipeline():
    with criterion(" 6", "worked pipeline and windowed evaluation at depth 6"):
        alpha, c = F(2), F(3)
        data = QEData([[1]], [[1]], [alpha], [c])
        st = tilde_transform(op(1, RatFunc.const(-alpha) - inv_lin(c)), data)
        assert st.D_tilde_aug.to_ratfunc() == op(1, RatFunc.const(-3) - inv_lin(-2))
        ok, window = tilde_psido_check(st.D_V, st.D_tilde, data, 6)
        assert ok, window


def test_c07_residue_eigenvalues():
    with criterion(" 7", "g~_a = -h_a on the instances of criterion 5"):
        from bethedual.quasiexp import fundamental_operator

        count = 0
        for fs, data in theorem1_instances(random.Random(5), 24, height=5, max_k=2, max_n=2):
            d = fundamental_operator(fs)
            hs, gs = h_g_residues(d, tilde_transform(d, data).D_tilde_aug, data)
            assert all(g == -h for h, g in zip(hs, gs))
            count += 1
        assert count == 24


PARAMS_22 = ([F(3), F(-5, 2)], [F(7), F(-1, 3)])  # height <= 7


def test_c08_commutativity():
    with criterion(" 8", "generator tables commute on every block of P22"):
        t0 = time.perf_counter()
        alphas, zs = PARAMS_22
        total = 0
        for blk in all_blocks(2, 2):
            total += blk.dim
            ent = [m for _, m in fb.bethe_generators(2, alphas, zs, blk).entries()]
            cartan = [fb.current_action("n", i, i, 0, zs, blk) for i in (1, 2)]
            for a in ent:
                assert all(same(a @ b, b @ a) for b in ent + cartan)
        assert total == 16
        assert time.perf_counter() - t0 < 300


def test_c09_cross_commutativity():
    with criterion(" 9", "tables of the two sides commute on every block of P22"):
        alphas, zs = PARAMS_22
        for blk in all_blocks(2, 2):
            tn = [m for _, m in fb.bethe_generators(2, alphas, zs, blk).entries()]
            tk = [m for _, m in fb.bethe_generators(2, alphas, zs, blk, side="k").entries()]
            assert all(same(a @ b, b @ a) for a in tn for b in tk)


@pytest.mark.parametrize("k,n", [(1, 2), (2, 2), (2, 3)])
def test_c10_duality(k, n):
    with criterion(f"10 {k}x{n}", "Hamiltonian duality, residue formulas and sign rule"):
        assert_report(verify_duality(SuiteConfig(k=k, n=n, seed=10)))
        if (k, n) == (2, 2):
            alphas, zs = PARAMS_22
            for blk in all_blocks(2, 2):
                assert all(ok for ok, _ in fb.sign_rule(2, alphas, zs, blk))
            for kk, nn in [(1, 1), (1, 2), (2, 1)]:
                for blk in all_blocks(kk, nn):
                    a, z = alphas[:nn], zs[:kk]
                    assert fb.residue_check(nn, a, z, blk).ok
                    assert fb.residue_check(nn, a, z, blk, side="k").ok


def test_c11a_main2_exact():
    with criterion("11a", "end-to-end spectrum, exact on one-dimensional blocks"):
        blocks = [b for b in all_blocks(2, 2) if b.dim == 1]
        assert blocks
        for blk in blocks:
            cfg = SuiteConfig(seed=11, block=(blk.l, blk.m))
            assert_report(verify_theorem_main2(cfg))


def test_c11b_main2_float():
    with criterion("11b", "end-to-end spectrum, float on l = m = (1,1) with 5 draws"):
        cfg = SuiteConfig(seed=12, block=((1, 1), (1, 1)), mode="float", tol=1e-8, draws=5)
        t0 = time.perf_counter()
        rep = verify_theorem_main2(cfg)
        assert_report(rep, 10)
        assert time.perf_counter() - t0 < 120 * 5


def test_c12_dimensions():
    with criterion("12", "block dimensions sum to 2^(kn) for k, n <= 3"):
        for k in (1, 2, 3):
            for n in (1, 2, 3):
                assert fb.dimension_total(k, n) == 2 ** (k * n)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
