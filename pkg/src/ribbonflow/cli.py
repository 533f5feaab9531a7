"""Command line interface: ``ribbonflow <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import algebra as alg
from .expansion import format_pairs, grouped_measure, one_matrix_moment, symbolic_measure
from .fields import GaussianModel
from .gauge import Connection
from .harness import Experiment, standard_suite, verify_iso, wilson_decomposition
from .network import Network, green
from .ribbon import Composition, describe, enumerate_pairings


def _nu(text: str) -> Composition:
    return Composition.parse(text)


def _emit(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False))


def cmd_ribbon_enumerate(args) -> int:
    nu = _nu(args.nu)
    for rho in enumerate_pairings(nu, args.start, args.stop, allow_large=args.allow_large):
        _emit(describe(nu, rho, args.beta))
    return 0


def _load_shift(net: Network, path):
    if path is None:
        return None
    return net.shift_vector(json.loads(Path(path).read_text()))


def cmd_green(args) -> int:
    net = Network.load(args.network)
    gd = green(net, _load_shift(net, args.shift))
    width = max(10, max(len(v) for v in net.vertices) + 1)
    print(" " * width + "".join(f"{v:>{width}}" for v in net.vertices))
    for v, row in zip(net.vertices, gd.G):
        print(f"{v:<{width}}" + "".join(f"{x:>{width}.6g}" for x in row))
    return 0


def cmd_sample_field(args) -> int:
    net = Network.load(args.network)
    conn = Connection.load(net, args.connection, args.n) if args.connection else None
    model = GaussianModel.build(net, args.beta, args.n, conn)
    rng = np.random.default_rng(args.seed)
    samples = model.sample(rng, args.samples)
    if args.dump:
        for s in samples:
            _emit({v: alg.format_matrix_literal(m, args.beta) for v, m in zip(net.vertices, s)})
        return 0
    nv, d = net.size, model.dim
    traces = np.array([[alg.re_trace(m, args.beta) for m in s] for s in samples])
    sq = np.array([[alg.re_trace(alg.matmul(m, m, args.beta), args.beta) for m in s] for s in samples])
    exact_sq = np.einsum("xaxa->x", model.covariance.reshape(nv, d, nv, d))
    _emit({
        "samples": args.samples,
        "mean_re_tr_sq": dict(zip(net.vertices, sq.mean(axis=0).tolist())),
        "exact_re_tr_sq": dict(zip(net.vertices, exact_sq.tolist())),
        "trace_cov": np.atleast_2d(np.cov(traces.T)).tolist(),
        "exact_trace_cov": model.trace_covariance().tolist(),
    })
    return 0


def cmd_moments(args) -> int:
    poly = one_matrix_moment(_nu(args.nu), args.beta)
    if args.n is not None:
        print(f"{poly}  [n={args.n}: {poly(args.n)}]")
    else:
        print(poly)
    return 0


def cmd_expand_measure(args) -> int:
    nu = _nu(args.nu)
    if args.symbolic:
        for pairs, forms in sorted(symbolic_measure(nu, args.beta).items()):
            body = " + ".join(f"({c}) {m}" for m, c in sorted(forms.items()))
            print(f"{format_pairs(pairs)}: {body}")
        return 0
    for pairs, poly in sorted(grouped_measure(nu, args.beta).items()):
        line = f"{format_pairs(pairs)}: {poly}"
        if args.n is not None:
            line += f"  [n={args.n}: {poly(args.n)}]"
        print(line)
    return 0


def _run_reports(reports) -> int:
    ok = True
    for r in reports:
        _emit(r)
        ok &= bool(r["pass"])
    return 0 if ok else 1


def cmd_verify_iso(args) -> int:
    if args.suite:
        return _run_reports(verify_iso(e) for e in standard_suite(args.seed or 20240601))
    if not args.config:
        print("either --config or --suite is required", file=sys.stderr)
        return 2
    exp = Experiment.load(args.config)
    if args.mode:
        exp.mode = args.mode
    if args.seed is not None:
        exp.seed = args.seed
    if exp.mode == "mc" and exp.seed is None:
        print("--seed is mandatory in mc mode", file=sys.stderr)
        return 2
    if args.samples:
        exp.samples = args.samples
    return _run_reports([verify_iso(exp)])


def cmd_wilson(args) -> int:
    return _run_reports([wilson_decomposition(Experiment.load(args.config))])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ribbonflow", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    rib = sub.add_parser("ribbon", help="ribbon pairing utilities")
    rsub = rib.add_subparsers(dest="ribbon_command", required=True)
    en = rsub.add_parser("enumerate", help="list ribbon pairings with border data")
    en.add_argument("--nu", required=True, help="composition, e.g. 4,3,1")
    en.add_argument("--beta", type=int, choices=alg.BETAS)
    en.add_argument("--start", type=int, default=0)
    en.add_argument("--stop", type=int)
    en.add_argument("--allow-large", action="store_true")
    en.set_defaults(func=cmd_ribbon_enumerate)

    g = sub.add_parser("green", help="Green's function of a network")
    g.add_argument("--network", required=True)
    g.add_argument("--shift", help="JSON file with the extra killing")
    g.set_defaults(func=cmd_green)

    sf = sub.add_parser("sample-field", help="sample a (twisted) matrix free field")
    sf.add_argument("--network", required=True)
    sf.add_argument("--beta", type=int, choices=alg.BETAS, required=True)
    sf.add_argument("--n", type=int, required=True)
    sf.add_argument("--connection")
    sf.add_argument("--samples", type=int, default=1000)
    sf.add_argument("--seed", type=int, required=True)
    sf.add_argument("--dump", action="store_true", help="print every sample instead of moments")
    sf.set_defaults(func=cmd_sample_field)

    mo = sub.add_parser("moments", help="one-matrix moment polynomial")
    mo.add_argument("--nu", required=True)
    mo.add_argument("--beta", type=int, choices=alg.BETAS, required=True)
    mo.add_argument("--n", type=int)
    mo.set_defaults(func=cmd_moments)

    em = sub.add_parser("expand-measure", help="coefficients of the path-measure expansion")
    em.add_argument("--nu", required=True)
    em.add_argument("--beta", type=int, choices=alg.BETAS, required=True)
    em.add_argument("--n", type=int)
    em.add_argument("--symbolic", action="store_true", help="trace forms in the coefficient matrices")
    em.set_defaults(func=cmd_expand_measure)

    vi = sub.add_parser("verify-iso", help="compare field moments with the path expansion")
    vi.add_argument("--config")
    vi.add_argument("--mode", choices=("exact", "mc"))
    vi.add_argument("--seed", type=int)
    vi.add_argument("--samples", type=int)
    vi.add_argument("--suite", action="store_true", help="run the fixed seeded grid")
    vi.set_defaults(func=cmd_verify_iso)

    wi = sub.add_parser("wilson", help="Wilson loop decomposition per ribbon pairing")
    wi.add_argument("--config", required=True)
    wi.set_defaults(func=cmd_wilson)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
