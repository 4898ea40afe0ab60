"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are pinned here and nowhere else.
"""

import copy
import math
import time
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from bmlab import bmdist, bounds, harness, qexpander, signset, spaces


def _criterion(num: int, name: str, checks: list[tuple[str, bool]]) -> None:
    ok = all(flag for _, flag in checks)
    print(f"\nACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'}")
    for label, flag in checks:
        if not flag:
            print(f"  failed: {label}")
    assert ok, f"criterion {num} ({name}): " + "; ".join(l for l, f in checks if not f)


@pytest.fixture(scope="module")
def sign16():
    T = signset.greedy_sign_set(16, 0.5)
    vectors = T.even_size_vectors()
    return T, signset.SignSet(16, 0.5, vectors, T.pool_size, True)


@pytest.fixture(scope="module")
def family500():
    return qexpander.separated_family(8, 4, 0.85, 0.15, 500, seed=77)


def test_criterion_01_hoeffding_consistency():
    t0 = time.perf_counter()
    bound = signset.hoeffding_tail(0.5, 20)
    exact = signset.exact_binomial_tail(0.5, 20)
    freq = signset.empirical_sign_tail(0.5, 20, 100_000, seed=101)
    elapsed = time.perf_counter() - t0
    _criterion(1, "hoeffding-consistency", [
        ("bound is 2 exp(-2.5) ~ 0.1642", math.isclose(bound, 2 * math.exp(-2.5), rel_tol=1e-15)),
        ("exact tail equals 6196/2^19", exact == Fraction(6196, 2 ** 19)),
        ("exact tail ~ 0.01182", math.isclose(float(exact), 0.01182, rel_tol=1e-3)),
        ("exact tail below bound", float(exact) <= bound),
        ("empirical frequency below bound", freq <= bound),
        ("runtime < 1 s", elapsed < 1.0),
    ])


def test_criterion_02_separated_sign_set(sign16):
    t0 = time.perf_counter()
    T = signset.greedy_sign_set(16, 0.5)
    G = T.vectors.astype(np.int64) @ T.vectors.astype(np.int64).T
    np.fill_diagonal(G, 0)
    maximal = signset.is_maximal(T)
    elapsed = time.perf_counter() - t0
    _criterion(2, "separated-sign-set", [
        ("pairwise |<s,t>| <= 8 (exact integers)", int(np.abs(G).max()) <= 8),
        ("size >= ceil(e^2/2) = 4", T.size >= 4),
        ("maximality over all 2^16 candidates", maximal),
        ("runtime < 5 s", elapsed < 5.0),
    ])


def test_criterion_03_ex_identity_certificates(sign16):
    _, Teven = sign16
    t0 = time.perf_counter()
    K = len(Teven.vectors)
    ac = signset.antichain_half_subsets(K, mode="sampled", samples=60, seed=7)
    subs = list(ac.subsets())
    rng = np.random.default_rng(8)
    ok_ratio = ok_src = ok_tgt = True
    for _ in range(100):
        i, j = rng.choice(len(subs), size=2, replace=False)
        c = bmdist.identity_certificate(subs[i], subs[j], Teven)
        ok_ratio &= c.implied_ratio >= 2.0
        ok_src &= c.source_norm == 16.0
        ok_tgt &= c.target_norm <= 8.0
    elapsed = time.perf_counter() - t0
    _criterion(3, "ex-identity-certificates", [
        ("all 100 ratios >= 1/theta = 2", ok_ratio),
        ("witness source norm re-evaluates to exactly 16", ok_src),
        ("witness target norm <= 8", ok_tgt),
        ("runtime < 10 s", elapsed < 10.0),
    ])


def test_criterion_04_eq12_sandwich(sign16):
    _, Teven = sign16
    rng = np.random.default_rng(9)
    violations = 0
    for k in range(20):
        idx = rng.choice(len(Teven.vectors), size=len(Teven.vectors) // 2, replace=False)
        Ex = spaces.make_ex(Teven, idx)
        A = rng.standard_normal((1000, 16))
        violations += spaces.coordinate_sandwich_violations(Ex, A)
    _criterion(4, "coordinate-sandwich", [
        ("zero violations over 20 spaces x 1000 vectors", violations == 0),
    ])


def test_criterion_05_distance_oracle_agreement():
    t0 = time.perf_counter()
    l12, l22, linf2 = spaces.l1_space(2), spaces.l2_space(2), spaces.linf_space(2)
    d_l1 = bmdist.bm_exact_2d(l12, linf2).value
    d_l2 = bmdist.bm_exact_2d(l22, linf2).value
    je = bmdist.john_ellipsoid(linf2)
    john_route = bmdist.john_ellipsoid(l22).outer_radius_factor * je.outer_radius_factor
    upper = bmdist.bm_upper(l22, linf2, effort=8, seed=0).value
    elapsed = time.perf_counter() - t0
    _criterion(5, "distance-oracle-agreement", [
        ("d(l1^2, linf^2) = 1 +- 1e-3", abs(d_l1 - 1.0) <= 1e-3),
        ("d(l2^2, linf^2) = sqrt(2) +- 1e-3", abs(d_l2 - math.sqrt(2)) <= 1e-3),
        ("john-route upper bound <= sqrt(2) + 1e-3", john_route <= math.sqrt(2) + 1e-3),
        ("search upper bound <= sqrt(2) + 1e-3", upper <= math.sqrt(2) + 1e-3),
        ("square john factors (1, sqrt 2) +- 1e-6",
         abs(je.inner_radius_factor - 1.0) <= 1e-6
         and abs(je.outer_radius_factor - math.sqrt(2)) <= 1e-6),
        ("runtime < 30 s", elapsed < 30.0),
    ])


def test_criterion_06_sup_norm_embedding():
    res = spaces.embed_linf(spaces.l2_space(2), 0.5, samples=10_000, seed=1)
    _criterion(6, "sup-norm-embedding", [
        ("m <= 25", res.m <= 25),
        ("sampled distortion <= 2 over 1e4 directions", res.observed_distortion <= 2.0),
    ])


def test_criterion_07_subspace_nets():
    snet = spaces.subspace_net(2, spaces.linf_space(3), 0.2)
    rng = np.random.default_rng(12)
    rep = spaces.verify_subspace_against_net(snet, rng.standard_normal((3, 2)),
                                             samples=10_000, seed=13)
    _criterion(7, "subspace-nets", [
        ("R = 1.4/0.6", math.isclose(snet.R, 1.4 / 0.6, rel_tol=1e-12)),
        ("tuple count <= (1+2/xi)^(n m)", snet.tuple_count <= snet.tuple_bound()),
        ("test subspace snaps within xi", rep["snap_within_xi"]),
        ("two-sided distortion within [1 - xi n, 1 + xi n]", rep["two_sided_ok"]),
        ("observed distance bound <= R", rep["distance_bound_observed"] <= snet.R),
    ])


def test_criterion_08_expander_identities():
    ok_self = ok_def = ok_routes = True
    for seed in range(20):
        u = qexpander.haar_tuple(8, 4, seed=300 + seed)
        ok_self &= abs(qexpander.overlap_norm(u, u) - 8.0) <= 1e-8
        d = qexpander.defect(u)
        ok_def &= 0.0 <= d <= 1.0
        ok_routes &= abs(d - qexpander.defect_kron(u)) <= 1e-8
    ident = qexpander.defect(qexpander.identity_tuple(8, 4))
    _criterion(8, "expander-identities", [
        ("overlap(s, s) = n +- 1e-8 for 20 tuples", ok_self),
        ("identity-tuple defect = 1 exactly", ident == 1.0),
        ("defect in [0, 1] on all samples", ok_def),
        ("averaging-map and Kronecker routes agree to 1e-8", ok_routes),
    ])


def test_criterion_09_separated_family_feasibility(family500):
    t0 = time.perf_counter()
    fam = family500
    off = fam.pairwise_overlaps - np.diag(np.diag(fam.pairwise_overlaps))
    ver = fam.verify()
    elapsed = time.perf_counter() - t0
    _criterion(9, "separated-family-feasibility", [
        ("family size >= 8", fam.size >= 8),
        ("all pairwise overlaps <= 6.8", float(off.max()) <= 6.8 + 1e-9),
        ("all defects <= 0.85", all(d <= 0.85 + 1e-9 for d in ver["defects"])),
        ("full re-verification passes", ver["ok"]),
        ("runtime < 5 min", elapsed < 300.0),
    ])


def test_criterion_10_matrix_level_certificates(family500):
    sub = family500.T[:4]
    halves = list(combinations(range(4), 2))
    ok_ratio = ok_amp = True
    count = 0
    for x in halves:
        for y in halves:
            if x == y:
                continue
            c = qexpander.dn_identity_certificate(
                qexpander.make_fx(sub, x), qexpander.make_fx(sub, y), sub, 0.15)
            ok_ratio &= c.implied_ratio >= 1 / 0.85
            ok_amp &= abs(c.source_norm - 8.0) <= 1e-8
            count += 1
    _criterion(10, "matrix-level-certificates", [
        ("all 30 ordered pairs have ratio >= 1/0.85", ok_ratio and count == 30),
        ("amplified witness norm = n to 1e-8", ok_amp),
    ])


def test_criterion_11_concentration_experiments():
    t0 = time.perf_counter()
    tail = qexpander.trace_tail_experiment(8, 8, 0.5, 10_000, seed=21)
    avg = qexpander.average_defect_constant([2, 4, 8, 16], 8, 50, seed=22)
    ce = qexpander.identity_counterexample(2, 2, 0.5, 10_000, seed=23)
    elapsed = time.perf_counter() - t0
    _criterion(11, "concentration-experiments", [
        ("trace tail frequency <= 0.05 (gaussian ~ 0.023)", tail.frequency <= 0.05),
        ("mean-defect ratios <= 3 for n in {2,4,8,16}",
         all(r.ratio <= 3.0 for r in avg.rows)),
        ("identity-tuple neighbourhood mass >= 10 exp(-n N^2)",
         ce.frequency >= 10 * math.exp(-8)),
        ("runtime < 10 min", elapsed < 600.0),
    ])


def test_criterion_12_arithmetic_chains():
    chain = bounds.lower_chain(400, 0.5, 1.9)
    up = bounds.upper_chain(10, 0.5)
    hh = bounds.hh_iteration(16, 2, 2.0)
    ident = all(bounds.liminf_exponent_identity(Fraction(p, q))
                for p, q in [(2, 1), (3, 2), (17, 5)])
    _criterion(12, "arithmetic-chains", [
        ("family log-size ~ 1.30e21", math.isclose(chain.log_family, 1.30e21, rel_tol=0.01)),
        ("covering penalty ~ 4.87e9", math.isclose(chain.penalty, 4.87e9, rel_tol=0.01)),
        ("target e^25 ~ 7.2e10", math.isclose(chain.target_log, 7.2e10, rel_tol=0.01)),
        ("chain passes the double-exponential target", chain.passes_target),
        ("embedding-count log = 10 * 5^10 * log 60 ~ 4.00e8",
         math.isclose(up.log_bound, 10 * 5 ** 10 * math.log(60.0), rel_tol=1e-12)
         and math.isclose(up.log_bound, 4.00e8, rel_tol=0.01)),
        ("halving iteration reproduces exp(4 n N^2) at r = 2",
         math.isclose(hh.bound.log_float(), 4 * 16 * 4, rel_tol=1e-12)),
        ("liminf exponent identity theta^2/2 |_(theta=1/r) = 1/(2 r^2)", ident),
    ])


def test_criterion_13_reproducibility():
    sigs, verifies = [], []
    for name in harness.PRESET_NAMES:
        cfg = harness.preset_config(name)
        if name == "t2-desk":
            cfg.params["max_samples"] = 20
        rep1 = harness.run_experiment(cfg)
        rep2 = harness.run_experiment(cfg)
        sigs.append(harness.report_signature(rep1) == harness.report_signature(rep2))
        verifies.append(harness.verify_report(rep1)[0])
        last = rep1
    tampered = copy.deepcopy(last) if last["certificates"] else None
    if tampered is None:  # fall back to a report that carries certificates
        cfg = harness.preset_config("t1-lower-desk")
        cfg.params["certificate_pairs"] = 5
        tampered = harness.run_experiment(cfg)
    tampered["certificates"][0]["witness"][0] *= 1.1
    tamper_detected = not harness.verify_report(tampered)[0]
    _criterion(13, "reproducibility", [
        ("all presets bit-identical on re-run (non-timing fields)", all(sigs)),
        ("verify_report true on all preset outputs", all(verifies)),
        ("verify_report false on a tampered witness", tamper_detected),
    ])
