import math

import numpy as np
import pytest

from bmlab.bmdist import (
    Certificate,
    LinearMapBetween,
    bm_exact_2d,
    bm_upper,
    claim_counter,
    greedy_packing,
    identity_certificate,
    john_containment_check,
    john_ellipsoid,
    lemloc_identity_certificate,
    op_norm_exact,
    op_norm_from_l1,
    op_norm_sandwich,
    op_norm_upper,
)
from bmlab.signset import SignSet, antichain_half_subsets, greedy_sign_set
from bmlab.spaces import (
    EllipsoidalSpace,
    PolytopalSpace,
    l1_space,
    l2_space,
    lemloc_system_from_signset,
    linf_space,
    make_ex,
    make_lemloc_space,
)


def _tiny_signset(n, theta, rows):
    return SignSet(n, theta, np.array(rows, dtype=np.int8), 2 ** n, False)


class TestOpNorms:
    def test_from_l1_identity(self):
        T = _tiny_signset(3, 0.5, [[1, 1, -1]])
        assert op_norm_from_l1(np.eye(3), make_ex(T, [0])) == 1.0

    def test_from_l1_diag(self):
        T = _tiny_signset(3, 0.5, [[1, 1, -1]])
        assert op_norm_from_l1(np.diag([2.0, 0, 0]), make_ex(T, [0])) == 2.0

    def test_from_l1_sup_target_vs_sampling(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal((3, 3))
        exact = op_norm_from_l1(u, linf_space(3))
        assert math.isclose(exact, np.abs(u).max(), rel_tol=1e-12)
        # sampling oracle: random sum-norm ball points never beat the bound
        w = rng.dirichlet(np.ones(3), size=10_000) * rng.choice([-1, 1], size=(10_000, 3))
        vals = np.abs(w @ u.T).max(axis=1)
        assert vals.max() <= exact + 1e-9
        assert vals.max() >= exact - 0.05

    def test_sandwich_identity(self):
        T = _tiny_signset(3, 0.5, [[1, 1, -1]])
        Ex = make_ex(T, [0])
        lo, hi = op_norm_sandwich(np.eye(3), Ex, Ex)
        assert lo == 1.0 and hi == 3.0

    def test_sandwich_brackets_exact(self):
        rng = np.random.default_rng(1)
        T = _tiny_signset(2, 0.6, [[1, 1]])
        Ex = make_ex(T, [0])
        for _ in range(10):
            u = rng.standard_normal((2, 2))
            lo, hi = op_norm_sandwich(u, Ex, linf_space(2))
            exact = op_norm_exact(u, Ex, linf_space(2))
            assert lo - 1e-9 <= exact <= hi + 1e-9

    def test_sandwich_requires_flag(self):
        with pytest.raises(ValueError):
            op_norm_sandwich(np.eye(2), l2_space(2), linf_space(2))

    def test_lp_route_matches_vertices(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            u = rng.standard_normal((2, 2))
            a = op_norm_exact(u, l1_space(2), linf_space(2))
            b = max(
                op_norm_upper(u, l1_space(2), linf_space(2)),
                a,
            )
            assert math.isclose(a, b, rel_tol=1e-7)

    def test_cached_bounds_validated(self):
        with pytest.raises(ValueError):
            LinearMapBetween(np.eye(2), linf_space(2), linf_space(2), 2.0, 1.0)
        m = LinearMapBetween(np.eye(2), linf_space(2), linf_space(2), 1.0, 1.0)
        assert m.inverse_residual() <= 1e-10


class TestIdentityCertificates:
    def setup_method(self):
        self.T = greedy_sign_set(16, 0.5)
        self.vectors = self.T.even_size_vectors()
        self.Teven = SignSet(16, 0.5, self.vectors, self.T.pool_size, True)

    def test_hundred_sampled_pairs(self):
        K = len(self.vectors)
        ac = antichain_half_subsets(K, mode="sampled", samples=60, seed=5)
        subs = list(ac.subsets())
        rng = np.random.default_rng(6)
        for _ in range(100):
            i, j = rng.choice(len(subs), size=2, replace=False)
            c = identity_certificate(subs[i], subs[j], self.Teven)
            assert c.source_norm == 16.0
            assert c.target_norm <= 8.0
            assert c.implied_ratio >= 2.0

    def test_near_identical_subsets_still_witnessed(self):
        x = tuple(range(0, 8))
        y = tuple(range(1, 9))
        c = identity_certificate(x, y, self.Teven)
        assert c.meta["witness_index"] == 0
        assert c.implied_ratio >= 2.0

    def test_theta_n_guard(self):
        tiny = SignSet(1, 0.5, np.array([[1]], dtype=np.int8), 2, True)
        with pytest.raises(ValueError):
            identity_certificate((0,), (), tiny)

    def test_equal_subsets_rejected(self):
        with pytest.raises(ValueError):
            identity_certificate((0, 1), (0, 1), self.Teven)

    def test_lemloc_certificate(self):
        T = greedy_sign_set(8, 0.5)
        xs, xst = lemloc_system_from_signset(T)
        E = l2_space(8)
        Ex = make_lemloc_space(E, xs, xst, 0.5, 1.0, [0, 1])
        Ey = make_lemloc_space(E, xs, xst, 0.5, 1.0, [1, 2])
        c = lemloc_identity_certificate(Ex, Ey, xs[0], 0.5)
        assert c.implied_ratio >= 2.0 - 1e-9


class TestJohnEllipsoid:
    def test_square_gives_disc(self):
        je = john_ellipsoid(linf_space(2))
        assert np.abs(je.shape - np.eye(2)).max() <= 1e-6
        assert abs(je.outer_radius_factor - math.sqrt(2)) <= 1e-6
        assert je.inner_radius_factor == 1.0

    def test_euclidean_is_its_own(self):
        je = john_ellipsoid(l2_space(2))
        assert je.inner_radius_factor == je.outer_radius_factor == 1.0

    def test_diamond(self):
        je = john_ellipsoid(l1_space(2))
        assert np.abs(je.shape - np.eye(2) / math.sqrt(2)).max() <= 1e-6
        # implied distance to the round ball
        assert je.outer_radius_factor <= math.sqrt(2) + 1e-6

    def test_containment_sampled(self):
        je = john_ellipsoid(linf_space(2))
        chk = john_containment_check(linf_space(2), je, samples=10_000)
        assert chk["inner_ok"] and chk["outer_ok"]

    def test_3d_cross_polytope(self):
        je = john_ellipsoid(l1_space(3))
        assert np.abs(je.shape - np.eye(3) / math.sqrt(3)).max() <= 1e-5
        assert je.outer_radius_factor <= math.sqrt(3) + 1e-6

    def test_dim_guard(self):
        from bmlab.spaces import DimensionGuardError
        with pytest.raises(DimensionGuardError):
            john_ellipsoid(linf_space(4))


class TestBmUpper:
    def test_diamond_square_isometric(self):
        res = bm_upper(l1_space(2), linf_space(2), effort=8, seed=0)
        assert res.value <= 1 + 1e-3

    def test_round_square(self):
        res = bm_upper(l2_space(2), linf_space(2), effort=8, seed=0)
        assert res.value <= math.sqrt(2) + 1e-3
        assert res.value >= 1.0 - 1e-12

    def test_self_distance(self):
        for sp in (linf_space(2), l2_space(3)):
            assert bm_upper(sp, sp, effort=0).value <= 1 + 1e-12

    def test_product_never_below_one(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            M = rng.standard_normal((2, 2)) + 2 * np.eye(2)
            res = bm_upper(EllipsoidalSpace(2, M), linf_space(2), effort=4, seed=1)
            assert res.value >= 1.0 - 1e-12


class TestExact2d:
    def test_reference_distances(self):
        assert abs(bm_exact_2d(linf_space(2), linf_space(2)).value - 1) <= 1e-3
        assert abs(bm_exact_2d(l1_space(2), linf_space(2)).value - 1) <= 1e-3
        assert abs(bm_exact_2d(l2_space(2), linf_space(2)).value - math.sqrt(2)) <= 1e-3

    def test_symmetry(self):
        a = bm_exact_2d(l2_space(2), linf_space(2)).value
        b = bm_exact_2d(linf_space(2), l2_space(2)).value
        assert abs(a - b) <= 2e-3

    def test_scale_invariance(self):
        scaled = PolytopalSpace(2, 7.0 * l1_space(2).functionals, "7*l1")
        a = bm_exact_2d(scaled, linf_space(2)).value
        assert abs(a - 1.0) <= 2e-3

    def test_at_least_one_and_interval(self):
        res = bm_exact_2d(l2_space(2), linf_space(2))
        assert res.interval[0] >= 1.0
        assert res.interval[0] <= res.value
        assert res.value >= 1.0

    def test_upper_bound_dominates_oracle(self):
        for E, F in [(l1_space(2), linf_space(2)), (l2_space(2), linf_space(2))]:
            up = bm_upper(E, F, effort=8, seed=2).value
            ex = bm_exact_2d(E, F).value
            assert up >= ex - 1e-3

    def test_dim_guard(self):
        with pytest.raises(ValueError):
            bm_exact_2d(linf_space(3), linf_space(3))


class TestGreedyPacking:
    def test_singleton(self):
        rep = greedy_packing([linf_space(2)], 1.5)
        assert rep.accepted == [0]

    def test_isometric_copy_rejected(self):
        perm = PolytopalSpace(2, np.array([[0.0, 1.0], [1.0, 0.0]]), "permuted")
        rep = greedy_packing([linf_space(2), perm, l1_space(2)], 1.1)
        assert rep.accepted == [0, 2]
        assert rep.rejected[0]["route"] == "canonical-identical"
        assert rep.rejected[0]["upper"] == 1.0

    def test_prover_rejects_by_search(self):
        # an anisotropic scaling of the square is isometric to it after
        # rescaling axes; the search-based prover certifies closeness
        stretched = PolytopalSpace(2, np.diag([1.0, 2.0]), "stretched-box")
        rep = greedy_packing([linf_space(2), stretched], 1.05, effort=2, seed=0)
        assert rep.accepted == [0]
        assert rep.rejected and rep.rejected[0]["upper"] <= 1.05

    def test_sign_family_packing_regression(self):
        T = greedy_sign_set(16, 0.5)
        vectors = T.even_size_vectors()
        Teven = SignSet(16, 0.5, vectors, T.pool_size, True)
        ac = antichain_half_subsets(len(vectors), mode="sampled", samples=50, seed=4)
        subs = list(ac.subsets())
        fam = [make_ex(Teven, s) for s in subs]
        certifier = lambda i, j: identity_certificate(subs[i], subs[j], Teven).implied_ratio
        rep = greedy_packing(fam, 1.5, effort=0, seed=0, certifier=certifier)
        assert rep.accepted == list(range(50))  # pinned: no cheap-prover rejections
        assert all(v >= 2.0 for v in rep.pair_certificates.values())

    def test_r_guard(self):
        with pytest.raises(ValueError):
            greedy_packing([linf_space(2)], 1.0)


class TestClaimCounter:
    def test_r_near_one(self):
        n = 8
        val = claim_counter(n, 1.0001, 0.5)
        target = n * n * math.log(1 + 4 * n)  # eta -> 1 as r -> 1
        assert math.isclose(val.log_float(), target, rel_tol=5e-3)

    def test_reference_value(self):
        val = claim_counter(16, 1.5, 0.5)
        assert math.isclose(val.log_float(), 256 * math.log(193.0), rel_tol=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            claim_counter(16, 2.0, 0.5)
        with pytest.raises(ValueError):
            claim_counter(16, 3.0, 0.5)


class TestCertificateRecord:
    def test_json_round_trip_fields(self):
        c = Certificate("identity-witness", np.array([1.0, -1.0]), 2.0, 1.0, 2.0,
                        meta={"witness_index": 0})
        d = c.to_json()
        assert d["implied_ratio"] == 2.0 and d["witness"] == [1.0, -1.0]
