"""Command line entry point: ``bethedual verify|transform|spectrum``."""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import fermion as fb
from .diffop import DiffOp
from .harness import SUITES, SuiteConfig, _jsonable, block_data, common_eigenbasis, eigen_to_diffop
from .harness import _eigen_values
from .quasiexp import QEData, tilde_transform
from .scalars import coerce


def _scalars(text: str | None):
    if text is None or text == "random":
        return None
    return [coerce(t.strip()) for t in text.split(",") if t.strip()]


def _ints(text: str | None):
    return None if text is None else [int(t) for t in text.split(",") if t.strip() != ""]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--trunc", type=int, default=6, help="series depth for windowed checks")
    p.add_argument("--retries", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bethedual", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=sorted(SUITES))
    v.add_argument("--k", type=int, default=2)
    v.add_argument("--n", type=int, default=2)
    v.add_argument("--alphas", help="comma separated, or 'random' (default)")
    v.add_argument("--zs", help="comma separated, or 'random' (default)")
    v.add_argument("--l", help="row degrees of one block; all blocks when omitted")
    v.add_argument("--m", help="column degrees of one block")
    v.add_argument("--instances", type=int, default=20)
    v.add_argument("--draws", type=int, default=1, help="parameter draws per block (main2)")
    v.add_argument("--json-out", "--output", dest="output", help="write the JSON report here")
    v.add_argument("--timing", action="store_true", help="include wall time in the report")
    _common(v)

    t = sub.add_parser("transform", help="apply the dual transform to an operator")
    t.add_argument("--in", dest="infile", required=True, help="operator JSON")
    t.add_argument("--data", required=True, help="data JSON")
    t.add_argument("--dump-stages", action="store_true")
    _common(t)

    s = sub.add_parser("spectrum", help="joint spectrum of a weight block and its transformed operators")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--l", required=True)
    s.add_argument("--m", required=True)
    s.add_argument("--alphas", required=True)
    s.add_argument("--zs", required=True)
    s.add_argument("--json-out")
    _common(s)
    return parser


def _emit(payload, path: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_verify(args) -> int:
    block = "all"
    if args.l is not None or args.m is not None:
        block = (tuple(_ints(args.l)), tuple(_ints(args.m)))
    cfg = SuiteConfig(k=args.k, n=args.n, alphas=_scalars(args.alphas), zs=_scalars(args.zs), block=block,
                      mode=args.mode, tol=args.tol, trunc=args.trunc, seed=args.seed, retries=args.retries,
                      instances=args.instances, draws=args.draws, output=args.output)
    report = SUITES[args.suite](cfg)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(report.dumps(args.timing) + "\n")
    print(report.summary())
    for f in report.failures:
        print("  " + json.dumps(f, sort_keys=True))
    return 0 if report.ok else 1


def cmd_transform(args) -> int:
    with open(args.infile) as fh:
        op = DiffOp.from_json(json.load(fh))
    with open(args.data) as fh:
        data = QEData.from_json(json.load(fh))
    stages = tilde_transform(op, data, args.tol if args.mode == "float" else 0.0)
    payload = {"D_tilde_aug": stages.D_tilde_aug.to_json()}
    if args.dump_stages:
        payload["stages"] = stages.to_json()
    _emit(payload, None)
    return 0


def cmd_spectrum(args) -> int:
    k, n = args.k, args.n
    blk = fb.weight_block(k, n, _ints(args.l), _ints(args.m))
    alphas, zs = _scalars(args.alphas), _scalars(args.zs)
    table_n = fb.bethe_generators(n, alphas, zs, blk)
    table_k = fb.bethe_generators(n, alphas, zs, blk, side="k")
    exact = blk.dim == 1 and args.mode == "exact"
    basis = common_eigenbasis([m for _, m in table_n.entries()], args.tol, random.Random(args.seed))
    data = block_data(blk, alphas, zs)
    out = []
    for v, _ in basis:
        vals_n, _ = _eigen_values(table_n, v, exact, args.tol)
        vals_k, _ = _eigen_values(table_k, v, exact, args.tol)
        d_aug = eigen_to_diffop(vals_n, n, zs)
        dual = eigen_to_diffop(vals_k, k, [-a for a in alphas])
        st = tilde_transform(d_aug, data, 0.0 if exact else args.tol)
        out.append({
            "vector": _jsonable(list(v)),
            "D_aug": d_aug.to_json(),
            "D_tilde_aug": st.D_tilde_aug.to_json(),
            "dual_eigen_operator": dual.to_json(),
        })
    _emit({"block": blk.to_json(), "data": data.to_json(), "eigenvectors": out}, args.json_out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"verify": cmd_verify, "transform": cmd_transform, "spectrum": cmd_spectrum}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
