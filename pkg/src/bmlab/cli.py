"""Command-line entry points.

Each module gets its own executable (``signset``, ``space``, ``bmdist``,
``qx``, ``bounds``) emitting JSON on stdout, and ``bmlab`` drives whole
experiments (run / verify / preset).  Matrices are serialised as separate
re/im row-major arrays; large sample runs can stream CSV next to the JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bmdist, bounds, harness, qexpander, signset, spaces


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")


def _parse_space(token: str) -> spaces.Space:
    """Space DSL: linf:N | l1:N | l2:N | file:PATH (JSON space description)."""
    kind, _, arg = token.partition(":")
    if kind == "linf":
        return spaces.linf_space(int(arg))
    if kind == "l1":
        return spaces.l1_space(int(arg))
    if kind == "l2":
        return spaces.l2_space(int(arg))
    if kind == "file":
        return spaces.space_from_json(json.loads(Path(arg).read_text()))
    raise argparse.ArgumentTypeError(f"unknown space token {token!r}")


# ----------------------------------------------------------------------
# signset
# ----------------------------------------------------------------------


def main_signset(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="signset",
                                 description="Greedy separated sign families")
    ap.add_argument("--n", type=int, required=True)
    ap.add_argument("--theta", type=float, required=True)
    mode = ap.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true", default=True)
    mode.add_argument("--samples", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if args.samples is not None:
        T = signset.greedy_sign_set(args.n, args.theta, exhaustive=False,
                                    samples=args.samples, seed=args.seed)
    else:
        T = signset.greedy_sign_set(args.n, args.theta, exhaustive=True)
    T.validate()
    out = T.to_json()
    out.pop("pool_size")
    _emit(out)
    return 0


# ----------------------------------------------------------------------
# space
# ----------------------------------------------------------------------


def main_space(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="space", description="Space constructions")
    sub = ap.add_subparsers(dest="cmd", required=True)

    mk = sub.add_parser("make-ex", help="sign-vector space from a separated family")
    mk.add_argument("--n", type=int, required=True)
    mk.add_argument("--theta", type=float, required=True)
    mk.add_argument("--samples", type=int, default=None)
    mk.add_argument("--seed", type=int, default=0)
    mk.add_argument("--subset", type=str, default=None,
                    help="comma-separated indices into the family (default: first half)")
    mk.add_argument("--check-vectors", type=int, default=1000)

    em = sub.add_parser("embed-linf", help="embed a space into a sup-norm space")
    em.add_argument("--space", type=_parse_space, required=True)
    em.add_argument("--delta", type=float, required=True)
    em.add_argument("--samples", type=int, default=10_000)
    em.add_argument("--seed", type=int, default=0)

    sn = sub.add_parser("subspace-net", help="net of n-dim subspaces of X")
    sn.add_argument("--n", type=int, required=True)
    sn.add_argument("--X", type=_parse_space, required=True)
    sn.add_argument("--xi", type=float, required=True)
    sn.add_argument("--test-seed", type=int, default=None,
                    help="also verify a random test subspace with this seed")
    sn.add_argument("--samples", type=int, default=10_000)

    args = ap.parse_args(argv)
    if args.cmd == "make-ex":
        if args.samples is not None:
            T = signset.greedy_sign_set(args.n, args.theta, exhaustive=False,
                                        samples=args.samples, seed=args.seed)
        else:
            T = signset.greedy_sign_set(args.n, args.theta, exhaustive=True)
        if args.subset:
            idx = [int(t) for t in args.subset.split(",")]
        else:
            idx = list(range(T.size // 2))
        sp = spaces.make_ex(T, idx)
        rng = np.random.default_rng(args.seed + 1)
        A = rng.standard_normal((args.check_vectors, T.n))
        bad = spaces.coordinate_sandwich_violations(sp, A)
        _emit({**sp.to_json(),
               "certification": {"bound": "sup|a_j| <= ||a|| <= sum|a_j|",
                                 "verified_on": args.check_vectors,
                                 "sandwich_ok": bad == 0}})
    elif args.cmd == "embed-linf":
        res = spaces.embed_linf(args.space, args.delta, samples=args.samples, seed=args.seed)
        _emit({"F": res.F.to_json(), "m": res.m,
               "certification": {"bound": res.certified_distortion,
                                 "verified_on": args.samples,
                                 "max_observed": res.observed_distortion,
                                 "covering_certified": res.covering_certified}})
    else:
        snet = spaces.subspace_net(args.n, args.X, args.xi)
        out = {"tuple_count": snet.tuple_count, "tuple_bound": snet.tuple_bound(),
               "R": snet.R, "net_size": snet.net.size,
               "materialized": snet.spaces is not None,
               "degenerate_skipped": snet.degenerate_skipped}
        if args.test_seed is not None:
            rng = np.random.default_rng(args.test_seed)
            basis = rng.standard_normal((args.X.n, args.n))
            rep = spaces.verify_subspace_against_net(snet, basis, samples=args.samples)
            out["certification"] = {"bound": snet.R, "verified_on": args.samples,
                                    "max_observed": rep["distance_bound_observed"],
                                    "two_sided_ok": rep["two_sided_ok"]}
        _emit(out)
    return 0


# ----------------------------------------------------------------------
# bmdist
# ----------------------------------------------------------------------


def main_bmdist(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="bmdist", description="Distance estimates")
    sub = ap.add_subparsers(dest="cmd", required=True)

    up = sub.add_parser("upper")
    up.add_argument("--E", type=_parse_space, required=True)
    up.add_argument("--F", type=_parse_space, required=True)
    up.add_argument("--effort", type=int, default=32)
    up.add_argument("--seed", type=int, default=0)

    ex = sub.add_parser("exact2d")
    ex.add_argument("--E", type=_parse_space, required=True)
    ex.add_argument("--F", type=_parse_space, required=True)
    ex.add_argument("--tol", type=float, default=1e-3)

    pk = sub.add_parser("pack")
    pk.add_argument("--n", type=int, required=True)
    pk.add_argument("--theta", type=float, required=True)
    pk.add_argument("--members", type=int, default=20)
    pk.add_argument("--r", type=float, required=True)
    pk.add_argument("--effort", type=int, default=0)
    pk.add_argument("--seed", type=int, default=0)

    cl = sub.add_parser("claim")
    cl.add_argument("--n", type=int, required=True)
    cl.add_argument("--r", type=float, required=True)
    cl.add_argument("--theta", type=float, required=True)

    args = ap.parse_args(argv)
    if args.cmd == "upper":
        res = bmdist.bm_upper(args.E, args.F, effort=args.effort, seed=args.seed)
        _emit(res.to_json())
    elif args.cmd == "exact2d":
        res = bmdist.bm_exact_2d(args.E, args.F, tol=args.tol)
        out = res.to_json()
        out["bound_kind"] = "certified"
        _emit(out)
    elif args.cmd == "pack":
        T = signset.greedy_sign_set(args.n, args.theta, exhaustive=True)
        vectors = T.even_size_vectors()
        Teven = signset.SignSet(args.n, args.theta, vectors, T.pool_size, T.exhaustive)
        ac = signset.antichain_half_subsets(len(vectors), mode="sampled",
                                            samples=args.members, seed=args.seed)
        subsets = list(ac.subsets())
        family = [spaces.make_ex(Teven, s) for s in subsets]
        certifier = lambda i, j: bmdist.identity_certificate(
            subsets[i], subsets[j], Teven).implied_ratio
        rep = bmdist.greedy_packing(family, args.r, effort=args.effort,
                                    seed=args.seed, certifier=certifier)
        out = rep.to_json()
        out["bound_kind"] = "heuristic-acceptance/certified-rejection"
        _emit(out)
    else:
        val = bmdist.claim_counter(args.n, args.r, args.theta)
        _emit({"value": val.to_json(), "bound_kind": "certified",
               "log": val.log_float()})
    return 0


# ----------------------------------------------------------------------
# qx
# ----------------------------------------------------------------------


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def main_qx(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qx", description="Unitary-tuple experiments")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, with_N=True):
        p.add_argument("--n", type=int, required=True)
        if with_N:
            p.add_argument("--N", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("sample"); common(sp)
    df = sub.add_parser("defect"); common(df)
    ov = sub.add_parser("overlap"); common(ov)
    fa = sub.add_parser("family"); common(fa)
    fa.add_argument("--epsilon", type=float, required=True)
    fa.add_argument("--delta", type=float, required=True)
    fa.add_argument("--max-samples", type=int, default=100)
    fa.add_argument("--csv", type=str, default=None)
    ta = sub.add_parser("tail"); common(ta)
    ta.add_argument("--s", type=float, required=True)
    ta.add_argument("--samples", type=int, default=10_000)
    ta.add_argument("--csv", type=str, default=None)
    av = sub.add_parser("avgdefect")
    av.add_argument("--n-list", type=str, default="2,4,8,16")
    av.add_argument("--N", type=int, required=True)
    av.add_argument("--samples", type=int, default=50)
    av.add_argument("--seed", type=int, default=0)
    ce = sub.add_parser("counterexample"); common(ce)
    ce.add_argument("--delta", type=float, required=True)
    ce.add_argument("--samples", type=int, default=10_000)

    args = ap.parse_args(argv)
    if args.cmd == "sample":
        u = qexpander.haar_tuple(args.n, args.N, args.seed)
        _emit(u.to_json())
    elif args.cmd == "defect":
        u = qexpander.haar_tuple(args.n, args.N, args.seed)
        res = qexpander.defect_result(u)
        _emit({"defect": res.value, "converged": res.converged,
               "iterations": res.iterations, "starts_agree": res.starts_agree,
               "kron_route": qexpander.defect_kron(u) if args.N <= 32 else None})
    elif args.cmd == "overlap":
        s = qexpander.haar_tuple(args.n, args.N, args.seed)
        t = qexpander.haar_tuple(args.n, args.N, args.seed + 1)
        _emit({"overlap": qexpander.overlap_norm(s, t),
               "self_overlap": qexpander.overlap_norm(s, s), "n": args.n})
    elif args.cmd == "family":
        fam = qexpander.separated_family(args.n, args.N, args.epsilon, args.delta,
                                         args.max_samples, args.seed)
        if args.csv:
            rows = [[i, qexpander.defect(u)] + fam.pairwise_overlaps[i].tolist()
                    for i, u in enumerate(fam.T)]
            _write_csv(args.csv, ["index", "defect"] + [f"ov{j}" for j in range(fam.size)], rows)
        _emit({"size": fam.size, "stats": fam.stats,
               "threshold": fam.separation_threshold(),
               "max_offdiag": float(np.max(fam.pairwise_overlaps - np.diag(np.diag(fam.pairwise_overlaps)))) if fam.size > 1 else 0.0})
    elif args.cmd == "tail":
        res = qexpander.trace_tail_experiment(args.n, args.N, args.s, args.samples, args.seed)
        if args.csv:
            _write_csv(args.csv, ["sample", "normalized_trace_sum"],
                       [[i, v] for i, v in enumerate(res.values)])
        _emit(res.to_json())
    elif args.cmd == "avgdefect":
        n_list = [int(t) for t in args.n_list.split(",")]
        res = qexpander.average_defect_constant(n_list, args.N, args.samples, args.seed)
        _emit(res.to_json())
    else:
        res = qexpander.identity_counterexample(args.n, args.N, args.delta,
                                                args.samples, args.seed)
        _emit(res.to_json())
    return 0


# ----------------------------------------------------------------------
# bounds
# ----------------------------------------------------------------------


def main_bounds(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="bounds", description="Counting-chain calculators")
    sub = ap.add_subparsers(dest="cmd", required=True)

    lo = sub.add_parser("lower")
    lo.add_argument("--n", type=int, required=True)
    lo.add_argument("--theta", type=float, required=True)
    lo.add_argument("--r", type=float, required=True)
    up = sub.add_parser("upper")
    up.add_argument("--n", type=int, required=True)
    up.add_argument("--eps", type=float, required=True)
    cl = sub.add_parser("claim")
    cl.add_argument("--n", type=int, required=True)
    cl.add_argument("--r", type=float, required=True)
    cl.add_argument("--delta", type=float, required=True)
    me = sub.add_parser("measure")
    me.add_argument("--n", type=int, required=True)
    me.add_argument("--N", type=int, required=True)
    me.add_argument("--delta", type=float, required=True)
    me.add_argument("--c", type=float, default=0.5)
    me.add_argument("--gamma", type=float, default=6.0)
    hh = sub.add_parser("hh")
    hh.add_argument("--n", type=int, required=True)
    hh.add_argument("--N", type=int, required=True)
    hh.add_argument("--r", type=float, required=True)
    sv = sub.add_parser("spherical")
    sv.add_argument("--n", type=int, required=True)
    sv.add_argument("--theta", type=float, required=True)
    sv.add_argument("--K", type=int, required=True)

    args = ap.parse_args(argv)
    if args.cmd == "lower":
        res = bounds.lower_chain(args.n, args.theta, args.r)
        _emit({"inputs": {"n": args.n, "theta": args.theta, "r": args.r},
               **res.to_json(), "flags": {"passes": res.passes_target}})
    elif args.cmd == "upper":
        res = bounds.upper_chain(args.n, args.eps)
        _emit({"inputs": {"n": args.n, "eps": args.eps}, **res.to_json(), "flags": {}})
    elif args.cmd == "claim":
        val = bounds.os_claim_counter(args.n, args.r, args.delta)
        _emit({"inputs": {"n": args.n, "r": args.r, "delta": args.delta},
               "result": val.to_json(), "flags": {}})
    elif args.cmd == "measure":
        res = bounds.measure_chain(args.n, args.N, args.delta, args.c, args.gamma)
        _emit({"inputs": {"n": args.n, "N": args.N, "delta": args.delta,
                          "c_assumed": args.c, "gamma": args.gamma},
               **res.to_json(), "flags": {}})
    elif args.cmd == "hh":
        res = bounds.hh_iteration(args.n, args.N, args.r)
        _emit({"inputs": {"n": args.n, "N": args.N, "r": args.r},
               **res.to_json(), "flags": {"condition_holds": res.condition_holds}})
    else:
        res = bounds.spherical_variant_bound(args.n, args.theta, args.K)
        _emit({"inputs": {"n": args.n, "theta": args.theta, "K_theta": args.K},
               **res.to_json(), "flags": {"significant": res.significant}})
    return 0


# ----------------------------------------------------------------------
# bmlab
# ----------------------------------------------------------------------


def main_bmlab(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="bmlab", description="Experiment harness")
    sub = ap.add_subparsers(dest="cmd", required=True)

    rn = sub.add_parser("run", help="run a config file")
    rn.add_argument("config", type=str)
    rn.add_argument("--out", type=str, default=None)

    vf = sub.add_parser("verify", help="re-verify a report's certificates")
    vf.add_argument("report", type=str)

    pr = sub.add_parser("preset", help="run a named preset")
    pr.add_argument("name", type=str, choices=list(harness.PRESET_NAMES))
    pr.add_argument("--out", type=str, default=None)

    args = ap.parse_args(argv)
    out_dir = Path(os.environ.get("BMLAB_OUT", "."))

    if args.cmd == "verify":
        ok, details = harness.verify_report(args.report)
        _emit({"ok": ok, "certificates": details})
        return 0 if ok else 1

    if args.cmd == "run":
        cfg = harness.ExperimentConfig.from_json(json.loads(Path(args.config).read_text()))
    else:
        cfg = harness.preset_config(args.name)
    try:
        report = harness.run_experiment(cfg)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    path = Path(args.out) if args.out else out_dir / f"report-{cfg.name}.json"
    harness.write_report(report, path)
    summary = {
        "report": str(path),
        "all_passed": report["all_passed"],
        "invariants": [{"name": i["name"], "passed": i["passed"]}
                       for i in report["invariants"]],
    }
    _emit(summary)
    return 0 if report["all_passed"] else 1


def main(argv=None) -> int:  # convenience alias
    return main_bmlab(argv)


if __name__ == "__main__":
    sys.exit(main_bmlab())
