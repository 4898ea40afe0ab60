"""Experiment harness: configs, presets, reports, and witness re-verification.

Reports are deterministic given their config (master seed included): every
random stream is derived from a keyed hash of (master seed, module,
operation, call index), so adding experiments never perturbs earlier
streams, and re-running a report's embedded config reproduces every
non-timing field bit-for-bit on one platform.

Certificates carry enough context (sign vectors, unitary tuples, witnesses)
to be re-evaluated without re-running any search; :func:`verify_report`
does exactly that.
"""

from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import bmdist, bounds, qexpander, signset, spaces

__all__ = [
    "ExperimentConfig",
    "derive_seed",
    "run_experiment",
    "verify_report",
    "write_report",
    "report_signature",
    "preset_config",
    "PRESET_NAMES",
]

NORM_REEVAL_TOL = 1e-9
MATRIX_REEVAL_TOL = 1e-8


def derive_seed(master: int, *parts) -> int:
    """Keyed-hash seed stream: stable across runs and insertion-order safe."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode())
    for p in parts:
        h.update(b"/")
        h.update(str(p).encode())
    return int.from_bytes(h.digest(), "big") % (2 ** 63)


@dataclass
class ExperimentConfig:
    """A named experiment with parameters and a master seed."""

    name: str
    params: dict = field(default_factory=dict)
    master_seed: int = 0

    def to_json(self) -> dict:
        return {"name": self.name, "params": self.params, "master_seed": self.master_seed}

    @staticmethod
    def from_json(obj: dict) -> "ExperimentConfig":
        return ExperimentConfig(obj["name"], dict(obj.get("params", {})),
                                int(obj.get("master_seed", 0)))

    def validate(self) -> list[str]:
        errors = []
        if self.name not in _RUNNERS:
            errors.append(f"unknown experiment {self.name!r}; known: {sorted(_RUNNERS)}")
            return errors
        errors.extend(_VALIDATORS[self.name](self.params))
        return errors


# ----------------------------------------------------------------------
# experiment bodies
# ----------------------------------------------------------------------


def _validate_t1(params: dict) -> list[str]:
    errs = []
    n = params.get("n", 16)
    theta = params.get("theta", 0.5)
    r = params.get("r", 1.5)
    if not (1 <= n <= signset.EXHAUSTIVE_DIM_LIMIT):
        errs.append(f"n must be in [1, {signset.EXHAUSTIVE_DIM_LIMIT}] for the exhaustive scan")
    if not (0 < theta < 1):
        errs.append("theta must be in (0,1)")
    if not (1 < r < 1 / max(theta, 1e-9)):
        errs.append("r must satisfy 1 < r < 1/theta")
    if theta * n < 1:
        errs.append("identity certificates need theta*n >= 1")
    return errs


def _run_t1(cfg: ExperimentConfig) -> tuple[list, list, list, dict]:
    p = cfg.params
    n = int(p.get("n", 16))
    theta = float(p.get("theta", 0.5))
    r = float(p.get("r", 1.5))
    members = int(p.get("antichain_samples", 50))
    cert_pairs = int(p.get("certificate_pairs", 100))

    results, certs, invs = [], [], []
    T = signset.greedy_sign_set(n, theta, exhaustive=True)
    T.validate()
    invs.append({"name": "signset-pairwise-separation", "passed": True,
                 "detail": f"size {T.size}, bound {theta * n:g}"})
    maximal = signset.is_maximal(T)
    invs.append({"name": "signset-maximality", "passed": maximal, "detail": ""})

    vectors = T.even_size_vectors()
    K = len(vectors)
    Teven = signset.SignSet(n, theta, vectors, T.pool_size, T.exhaustive)
    ac = signset.antichain_half_subsets(K, mode="sampled", samples=members,
                                        seed=derive_seed(cfg.master_seed, "signset", "antichain", 0))
    results.append({"operation": "greedy_sign_set",
                    "inputs": {"n": n, "theta": theta, "mode": "exhaustive"},
                    "outputs": {"size": T.size, "K_even": K, "maximal": maximal}})
    results.append({"operation": "antichain_half_subsets",
                    "inputs": {"K": K, "mode": "sampled", "samples": members},
                    "outputs": {"count": ac.count}})

    rng = np.random.default_rng(derive_seed(cfg.master_seed, "bmdist", "cert-pairs", 0))
    subsets = list(ac.subsets())
    ratios = []
    for k in range(cert_pairs):
        i, j = rng.choice(len(subsets), size=2, replace=False)
        c = bmdist.identity_certificate(subsets[i], subsets[j], Teven)
        ratios.append(c.implied_ratio)
        certs.append({
            "kind": "ex-identity",
            "context": "signs",
            "x": list(map(int, subsets[i])),
            "y": list(map(int, subsets[j])),
            "witness_index": int(c.meta["witness_index"]),
            "witness": c.witness.tolist(),
            "source_norm": c.source_norm,
            "target_norm": c.target_norm,
            "implied_ratio": c.implied_ratio,
        })
    min_ratio = min(ratios) if ratios else math.inf
    invs.append({"name": "identity-ratios-at-least-1/theta",
                 "passed": bool(min_ratio >= 1.0 / theta - 1e-12),
                 "detail": f"min ratio {min_ratio:.6g} over {len(ratios)} pairs"})
    results.append({"operation": "identity_certificate",
                    "inputs": {"pairs": cert_pairs},
                    "outputs": {"min_ratio": min_ratio, "max_ratio": max(ratios)}})

    claim = bmdist.claim_counter(n, r, theta)
    chain = bounds.lower_chain(n, theta, r)
    results.append({"operation": "claim_counter", "inputs": {"n": n, "r": r, "theta": theta},
                    "outputs": claim.to_json()})
    results.append({"operation": "lower_chain", "inputs": {"n": n, "theta": theta, "r": r},
                    "outputs": chain.to_json()})

    context = {"signs": {"n": n, "theta": theta, "vectors": vectors.astype(int).tolist()}}
    return results, certs, invs, context


def _validate_t2(params: dict) -> list[str]:
    errs = []
    eps = params.get("epsilon", 0.85)
    delta = params.get("delta", 0.15)
    n = params.get("n", 8)
    if not (0 < eps < 1):
        errs.append("epsilon must be in (0,1)")
    if not (0 < delta < 1):
        errs.append("delta must be in (0,1)")
    if (1 - float(delta)) * int(n) < 1:
        errs.append("matrix-level certificates need (1-delta)*n >= 1")
    if int(params.get("max_samples", 60)) < 4:
        errs.append("need at least 4 samples to form half-subsets")
    return errs


def _run_t2(cfg: ExperimentConfig) -> tuple[list, list, list, dict]:
    p = cfg.params
    n = int(p.get("n", 8))
    N = int(p.get("N", 4))
    eps = float(p.get("epsilon", 0.85))
    delta = float(p.get("delta", 0.15))
    max_samples = int(p.get("max_samples", 60))
    sub_size = int(p.get("subfamily_size", 4))

    results, certs, invs = [], [], []
    fam = qexpander.separated_family(n, N, eps, delta, max_samples,
                                     seed=derive_seed(cfg.master_seed, "qexpander", "family", 0))
    ver = fam.verify()
    invs.append({"name": "family-reverification", "passed": bool(ver["ok"]),
                 "detail": f"size {fam.size}, max offdiag {ver['max_offdiag_overlap']:.4f}"})
    results.append({"operation": "separated_family",
                    "inputs": {"n": n, "N": N, "epsilon": eps, "delta": delta,
                               "max_samples": max_samples},
                    "outputs": {"size": fam.size, **fam.stats,
                                "max_offdiag_overlap": ver["max_offdiag_overlap"]}})
    certs.append({
        "kind": "family-separation",
        "context": "tuples",
        "epsilon": eps,
        "delta": delta,
        "indices": list(range(min(fam.size, sub_size))),
        "overlaps": fam.pairwise_overlaps[:sub_size, :sub_size].tolist(),
        "defects": [qexpander.defect(u) for u in fam.T[:sub_size]],
    })

    sub = fam.T[:sub_size]
    halves = list(combinations(range(len(sub)), len(sub) // 2))
    ratios = []
    for x in halves:
        for y in halves:
            if x == y:
                continue
            Fx, Fy = qexpander.make_fx(sub, x), qexpander.make_fx(sub, y)
            c = qexpander.dn_identity_certificate(Fx, Fy, sub, delta)
            ratios.append(c.implied_ratio)
            certs.append({
                "kind": "dn-identity",
                "context": "tuples",
                "N": N,
                "delta": delta,
                "x": list(map(int, x)),
                "y": list(map(int, y)),
                "witness_index": int(c.meta["witness_index"]),
                "source_norm": c.source_norm,
                "target_norm": c.target_norm,
                "implied_ratio": c.implied_ratio,
            })
    min_ratio = min(ratios) if ratios else math.inf
    invs.append({"name": "dn-ratios-at-least-1/(1-delta)",
                 "passed": bool(min_ratio >= 1.0 / (1.0 - delta) - 1e-12),
                 "detail": f"min ratio {min_ratio:.6g} over {len(ratios)} ordered pairs"})
    results.append({"operation": "dn_identity_certificate",
                    "inputs": {"subfamily": len(sub), "ordered_pairs": len(ratios)},
                    "outputs": {"min_ratio": min_ratio}})
    r_claim = float(p.get("r", 1.1))
    if r_claim * (1.0 - delta) < 1.0:
        results.append({"operation": "os_claim_counter",
                        "inputs": {"n": n, "r": r_claim, "delta": delta},
                        "outputs": bounds.os_claim_counter(n, r_claim, delta).to_json()})

    context = {"tuples": [u.to_json() for u in fam.T[:sub_size]]}
    return results, certs, invs, context


def _validate_bounds(params: dict) -> list[str]:
    return []


def _run_bounds(cfg: ExperimentConfig) -> tuple[list, list, list, dict]:
    results, certs, invs = [], [], []
    chain = bounds.lower_chain(400, 0.5, 1.9)
    results.append({"operation": "lower_chain",
                    "inputs": {"n": 400, "theta": 0.5, "r": 1.9},
                    "outputs": chain.to_json()})
    invs.append({"name": "lower-chain-400-passes", "passed": bool(chain.passes_target),
                 "detail": f"log packing {chain.log_packing:.6g} vs target {chain.target_log:.6g}"})
    up = bounds.upper_chain(10, 0.5)
    results.append({"operation": "upper_chain", "inputs": {"n": 10, "eps": 0.5},
                    "outputs": up.to_json()})
    invs.append({"name": "upper-chain-log-value",
                 "passed": bool(abs(up.log_bound - 10 * 5 ** 10 * math.log(60.0)) < 1e-3),
                 "detail": f"log bound {up.log_bound:.6g}"})
    hh = bounds.hh_iteration(32, 2, 8.0)
    results.append({"operation": "hh_iteration", "inputs": {"n": 32, "N": 2, "r": 8},
                    "outputs": hh.to_json()})
    hh2 = bounds.hh_iteration(16, 2, 2.0)
    invs.append({"name": "hh-base-case",
                 "passed": bool(abs(hh2.bound.log_float() - 4 * 16 * 4) < 1e-9),
                 "detail": "bound log equals 4nN^2 at r=2"})
    mc = bounds.measure_chain(64, 4, 0.4)
    results.append({"operation": "measure_chain", "inputs": {"n": 64, "N": 4, "delta": 0.4},
                    "outputs": mc.to_json()})
    from fractions import Fraction
    ident = all(bounds.liminf_exponent_identity(Fraction(p, q))
                for p, q in [(3, 2), (7, 3), (13, 5)])
    invs.append({"name": "liminf-exponent-identity", "passed": bool(ident), "detail": ""})
    results.append({"operation": "liminf_constant", "inputs": {"r": 2.0},
                    "outputs": {"value": bounds.liminf_constant(2.0)}})
    sv = bounds.spherical_variant_bound(10, 0.5, 10 ** 4)
    results.append({"operation": "spherical_variant_bound",
                    "inputs": {"n": 10, "theta": 0.5, "K_theta": 10 ** 4},
                    "outputs": sv.to_json()})
    return results, certs, invs, {}


def _run_empty(cfg: ExperimentConfig) -> tuple[list, list, list, dict]:
    return [], [], [], {}


_RUNNERS = {
    "t1-lower-desk": _run_t1,
    "t2-desk": _run_t2,
    "bounds-desk": _run_bounds,
    "empty": _run_empty,
}

_VALIDATORS = {
    "t1-lower-desk": _validate_t1,
    "t2-desk": _validate_t2,
    "bounds-desk": _validate_bounds,
    "empty": lambda p: [],
}

PRESET_NAMES = tuple(_RUNNERS)


def preset_config(name: str) -> ExperimentConfig:
    """The stock configuration for a named preset."""
    if name == "t1-lower-desk":
        return ExperimentConfig(name, {"n": 16, "theta": 0.5, "r": 1.5,
                                       "antichain_samples": 50, "certificate_pairs": 100},
                                master_seed=2024)
    if name == "t2-desk":
        return ExperimentConfig(name, {"n": 8, "N": 4, "epsilon": 0.85, "delta": 0.15,
                                       "max_samples": 60, "subfamily_size": 4},
                                master_seed=2024)
    if name == "bounds-desk":
        return ExperimentConfig(name, {}, master_seed=2024)
    if name == "empty":
        return ExperimentConfig(name, {}, master_seed=2024)
    raise ValueError(f"unknown preset {name!r}; known: {sorted(_RUNNERS)}")


class ConfigError(ValueError):
    pass


def run_experiment(config: ExperimentConfig) -> dict:
    """Run one experiment and assemble its report dict.

    Raises :class:`ConfigError` on validation failure; otherwise the report
    is always produced, with per-invariant pass flags and an overall
    ``all_passed`` field.
    """
    errors = config.validate()
    if errors:
        raise ConfigError("; ".join(errors))
    t0 = time.perf_counter()
    results, certs, invs, context = _RUNNERS[config.name](config)
    wall = time.perf_counter() - t0
    return {
        "config": config.to_json(),
        "context": context,
        "results": results,
        "certificates": certs,
        "invariants": invs,
        "all_passed": all(i["passed"] for i in invs),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "bmlab": __version__,
        },
        "wall_clock_s": wall,
    }


def write_report(report: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=1, sort_keys=True))
    return path


def report_signature(report: dict) -> str:
    """Canonical JSON of the non-timing fields (for determinism checks)."""
    clean = {k: v for k, v in report.items() if k != "wall_clock_s"}
    return json.dumps(clean, sort_keys=True)


# ----------------------------------------------------------------------
# certificate re-verification
# ----------------------------------------------------------------------


def _verify_ex_identity(cert: dict, context: dict) -> tuple[bool, str]:
    signs = context["signs"]
    T = signset.SignSet(signs["n"], signs["theta"],
                        np.array(signs["vectors"], dtype=np.int8),
                        pool_size=0, exhaustive=False)
    Ex = spaces.make_ex(T, cert["x"])
    Ey = spaces.make_ex(T, cert["y"])
    w = np.array(cert["witness"], dtype=np.float64)
    src = Ex.norm(w)
    tgt = Ey.norm(w)
    if abs(src - cert["source_norm"]) > NORM_REEVAL_TOL:
        return False, f"source norm re-evaluates to {src}, stored {cert['source_norm']}"
    if abs(tgt - cert["target_norm"]) > NORM_REEVAL_TOL:
        return False, f"target norm re-evaluates to {tgt}, stored {cert['target_norm']}"
    if abs(src / tgt - cert["implied_ratio"]) > NORM_REEVAL_TOL:
        return False, "ratio inconsistent with re-evaluated norms"
    return True, ""


def _verify_dn_identity(cert: dict, context: dict) -> tuple[bool, str]:
    tuples = [qexpander.UnitaryTuple.from_json(t) for t in context["tuples"]]
    Fx = qexpander.make_fx(tuples, cert["x"])
    Fy = qexpander.make_fx(tuples, cert["y"])
    A = tuples[cert["witness_index"]].matrices.conj()
    src = qexpander.fx_norm_levelN(Fx, A)
    tgt = qexpander.fx_norm_levelN(Fy, A)
    if abs(src - cert["source_norm"]) > MATRIX_REEVAL_TOL:
        return False, f"source norm re-evaluates to {src}, stored {cert['source_norm']}"
    if abs(tgt - cert["target_norm"]) > MATRIX_REEVAL_TOL:
        return False, f"target norm re-evaluates to {tgt}, stored {cert['target_norm']}"
    if abs(src / tgt - cert["implied_ratio"]) > MATRIX_REEVAL_TOL:
        return False, "ratio inconsistent with re-evaluated norms"
    return True, ""


def _verify_family(cert: dict, context: dict) -> tuple[bool, str]:
    tuples = [qexpander.UnitaryTuple.from_json(context["tuples"][i]) for i in cert["indices"]]
    eps = cert["epsilon"]
    thr = (1.0 - cert["delta"]) * tuples[0].n if tuples else 0.0
    for i, u in enumerate(tuples):
        d = qexpander.defect(u)
        if abs(d - cert["defects"][i]) > MATRIX_REEVAL_TOL:
            return False, f"defect {i} re-evaluates to {d}, stored {cert['defects'][i]}"
        if d > eps + 1e-9:
            return False, f"defect {i} = {d} above epsilon"
    stored = np.array(cert["overlaps"])
    for i in range(len(tuples)):
        for j in range(i, len(tuples)):
            v = qexpander.overlap_norm(tuples[i], tuples[j])
            if abs(v - stored[i, j]) > MATRIX_REEVAL_TOL:
                return False, f"overlap ({i},{j}) re-evaluates to {v}, stored {stored[i, j]}"
            if i != j and v > thr + 1e-9:
                return False, f"overlap ({i},{j}) = {v} above threshold"
    return True, ""


_CERT_VERIFIERS = {
    "ex-identity": _verify_ex_identity,
    "dn-identity": _verify_dn_identity,
    "family-separation": _verify_family,
}


def verify_report(report: str | Path | dict) -> tuple[bool, list[dict]]:
    """Re-evaluate every certificate from its stored witness.

    No search is re-run: norms and overlaps are recomputed from stored
    vectors / matrices and compared to the stored values within tolerance.
    Returns (all ok, per-certificate detail), naming any failing entry.
    """
    if not isinstance(report, dict):
        report = json.loads(Path(report).read_text())
    context = report.get("context", {})
    details = []
    ok_all = True
    for i, cert in enumerate(report.get("certificates", [])):
        kind = cert.get("kind", "?")
        verifier = _CERT_VERIFIERS.get(kind)
        if verifier is None:
            ok, msg = False, f"unknown certificate kind {kind!r}"
        else:
            try:
                ok, msg = verifier(cert, context)
            except Exception as exc:  # malformed payloads count as failures
                ok, msg = False, f"re-evaluation error: {exc}"
        details.append({"index": i, "kind": kind, "ok": ok, "detail": msg})
        ok_all = ok_all and ok
    return ok_all, details
