"""Operator norms and multiplicative distances between explicit spaces.

Distance upper bounds come from concrete maps (identity, vertex matchings,
the inscribed-ellipsoid factorisation, local search); lower bounds come
from witness certificates that re-evaluate to their stored norms.  An
exhaustive 2-d oracle closes the loop at desk scale.  General-dimension
lower bounds are deliberately out of scope: beyond witnesses, largeness is
argued by counting (see :mod:`bmlab.bounds`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .bounds import LogLevelNumber, claim_counter_generic
from .signset import SignSet
from .spaces import (
    DimensionGuardError,
    EllipsoidalSpace,
    MaxSpace,
    PolytopalSpace,
    Space,
    make_ex,
    sample_sphere,
)

__all__ = [
    "Certificate",
    "LinearMapBetween",
    "JohnEllipsoid",
    "op_norm_exact",
    "op_norm_upper",
    "op_norm_from_l1",
    "op_norm_sandwich",
    "identity_certificate",
    "lemloc_identity_certificate",
    "john_ellipsoid",
    "bm_upper",
    "bm_exact_2d",
    "greedy_packing",
    "claim_counter",
]


# ----------------------------------------------------------------------
# certificates
# ----------------------------------------------------------------------


@dataclass(eq=False)
class Certificate:
    """A distance / operator-norm lower-bound witness.

    ``implied_ratio = source_norm / target_norm`` bounds ||Id: target ->
    source|| from below (identity-witness kind) or the norm of a stored map
    (map-witness kind).  Both norms are re-evaluable from the witness.
    """

    kind: str
    witness: np.ndarray
    source_norm: float
    target_norm: float
    implied_ratio: float
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "witness": np.asarray(self.witness).tolist(),
            "source_norm": self.source_norm,
            "target_norm": self.target_norm,
            "implied_ratio": self.implied_ratio,
            "meta": {k: v for k, v in self.meta.items() if not isinstance(v, np.ndarray)},
        }


@dataclass(eq=False)
class LinearMapBetween:
    """An n x n matrix together with its source/target spaces and norm bounds."""

    matrix: np.ndarray
    source: Space
    target: Space
    op_norm_lower: float
    op_norm_upper: float

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.op_norm_lower > self.op_norm_upper + 1e-12:
            raise ValueError("cached lower bound exceeds upper bound")

    def inverse_residual(self) -> float:
        inv = np.linalg.inv(self.matrix)
        n = self.matrix.shape[0]
        return float(np.abs(self.matrix @ inv - np.eye(n)).max())


# ----------------------------------------------------------------------
# operator norms
# ----------------------------------------------------------------------


def op_norm_exact(u: np.ndarray, source: Space, target: Space) -> float:
    """||u : source -> target|| exactly, for the closed-form space types.

    Polytopal sources reduce to their ball vertices (dim guard applies);
    ellipsoidal sources admit closed forms against both target types.
    """
    u = np.asarray(u, dtype=np.float64)
    if isinstance(source, PolytopalSpace):
        V = source.vertices()
        return float(target.norms(V @ u.T).max())
    if isinstance(source, EllipsoidalSpace):
        if isinstance(target, PolytopalSpace):
            # sup over the ellipsoid of each functional, then max
            return float(np.linalg.norm(target.functionals @ u @ source.Minv, axis=1).max())
        if isinstance(target, EllipsoidalSpace):
            return float(np.linalg.svd(target.M @ u @ source.Minv, compute_uv=False)[0])
        if isinstance(target, MaxSpace):
            return max(op_norm_exact(u, source, p) for p in target.parts)
    if isinstance(source, MaxSpace):
        raise DimensionGuardError("exact operator norm from a composite-ball source")
    raise DimensionGuardError(f"unsupported space types {type(source).__name__}->{type(target).__name__}")


def _dual_gauge_lp(functionals: np.ndarray, f: np.ndarray) -> float:
    """Gauge of f in conv(+-functionals): min sum|c| with functionals^T c = f.

    This is the dual norm of the polytopal space with those functionals,
    valid in any dimension (linear program, no vertex enumeration).
    """
    k, n = functionals.shape
    # variables c+ and c-, both >= 0
    A_eq = np.hstack([functionals.T, -functionals.T])
    res = linprog(np.ones(2 * k), A_eq=A_eq, b_eq=f, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"dual gauge LP failed: {res.message}")
    return float(res.fun)


def op_norm_upper(u: np.ndarray, source: Space, target: Space) -> float:
    """Certified upper bound on ||u||, usable beyond the vertex guard.

    For polytopal source and target this is exact: the norm equals
    max_i ||u^T phi_i^target||_{source*} and the source dual norm is a
    gauge linear program.
    """
    u = np.asarray(u, dtype=np.float64)
    if isinstance(source, PolytopalSpace) and isinstance(target, PolytopalSpace):
        if source.n <= 6:
            return op_norm_exact(u, source, target)
        return max(
            _dual_gauge_lp(source.functionals, u.T @ phi) for phi in target.functionals
        )
    return op_norm_exact(u, source, target)


def op_norm_from_l1(u: np.ndarray, F: Space) -> float:
    """||u : l1^n -> F|| = max_j ||u e_j||_F (extreme points are +-e_j)."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[1] != F.n and u.shape[0] != F.n:
        raise ValueError("matrix shape incompatible with target dimension")
    return float(F.norms(u.T).max())


def op_norm_sandwich(u: np.ndarray, E_source: Space, F: Space) -> tuple[float, float]:
    """Two-sided bracket for ||u : E_source -> F|| from the coordinate sandwich.

    Requires the source norm to sit between sup|a_j| and sum|a_j| (the
    ``eq12`` flag); then the column bound is a lower bound and n times it an
    upper bound.
    """
    if not getattr(E_source, "eq12", False):
        raise ValueError("source space is not flagged as coordinate-sandwich compliant")
    lo = op_norm_from_l1(u, F)
    return lo, E_source.n * lo


def identity_certificate(x: Sequence[int], y: Sequence[int], T: SignSet) -> Certificate:
    """Witness for ||Id : E_y -> E_x|| >= 1/theta from a sign vector in x\\y.

    Picks the first index of x not in y (family order), whose sign vector s
    has norm exactly n in E_x but at most theta*n in E_y.  Requires
    theta*n >= 1 so that the coordinate part cannot dominate the target.
    """
    x = tuple(int(i) for i in x)
    y = tuple(int(i) for i in y)
    if x == y:
        raise ValueError("x and y must be distinct subsets")
    if T.theta * T.n < 1.0:
        raise ValueError(f"requires theta*n >= 1, got {T.theta * T.n}")
    diff = [i for i in x if i not in set(y)]
    if not diff:
        raise RuntimeError("x is contained in y; impossible for distinct equal-size subsets")
    w_idx = diff[0]
    s = T.vectors[w_idx].astype(np.float64)
    Ex = make_ex(T, x)
    Ey = make_ex(T, y)
    src = Ex.norm(s)
    tgt = Ey.norm(s)
    if src != float(T.n):
        raise AssertionError(f"witness norm in E_x is {src}, expected {T.n}")
    if tgt > T.theta * T.n + 1e-9:
        raise AssertionError(f"witness norm in E_y is {tgt}, above theta*n")
    return Certificate(
        "identity-witness", s, src, tgt, src / tgt,
        meta={"witness_index": w_idx, "x": x, "y": y, "n": T.n, "theta": T.theta},
    )


def lemloc_identity_certificate(E_x: Space, E_y: Space, witness: np.ndarray,
                                theta: float) -> Certificate:
    """Identity-map witness between two local-family members.

    ``witness`` is the system vector x_t for some t in x\\y; its norm is 1
    in E_x and at most theta in E_y, giving ratio >= 1/theta.
    """
    w = np.asarray(witness, dtype=np.float64)
    src = E_x.norm(w)
    tgt = E_y.norm(w)
    if src < 1.0 - 1e-9:
        raise AssertionError(f"witness norm in E_x is {src}, expected 1")
    if tgt > theta + 1e-9:
        raise AssertionError(f"witness norm in E_y is {tgt}, above theta")
    return Certificate("identity-witness", w, src, tgt, src / tgt,
                       meta={"family": "lemloc", "theta": theta})


# ----------------------------------------------------------------------
# inscribed ellipsoids
# ----------------------------------------------------------------------


@dataclass(eq=False)
class JohnEllipsoid:
    """Maximal-volume inscribed ellipsoid {B w : ||w||_2 <= 1} of a symmetric ball.

    ``inner_radius_factor`` is 1 by the rescaling convention (the ellipsoid
    is inside the ball exactly); ``outer_radius_factor`` is the smallest
    lambda with ball inside lambda * ellipsoid, at most sqrt(n).
    """

    shape: np.ndarray
    inner_radius_factor: float
    outer_radius_factor: float

    def euclidean_space(self) -> EllipsoidalSpace:
        """The space whose unit ball is this ellipsoid."""
        return EllipsoidalSpace(self.shape.shape[0], np.linalg.inv(self.shape), "john")


class JohnSolveError(RuntimeError):
    pass


def john_ellipsoid(space: Space) -> JohnEllipsoid:
    """Inscribed ellipsoid of maximal volume (origin-centred, dim <= 3).

    For a polytopal ball this maximises log det B subject to
    ||B phi_i||_2 <= 1 over symmetric positive B = L L^T (smooth small
    problem, solved by SQP with analytic gradients and then rescaled so the
    binding constraint is tight).  Ellipsoidal balls are their own
    ellipsoid.
    """
    n = space.n
    if isinstance(space, EllipsoidalSpace):
        return JohnEllipsoid(space.Minv.copy(), 1.0, 1.0)
    if not isinstance(space, PolytopalSpace):
        raise DimensionGuardError("inscribed ellipsoid needs a polytopal or ellipsoidal ball")
    if n > 3:
        raise DimensionGuardError("inscribed-ellipsoid solve limited to dim <= 3")

    phis = space.functionals
    tri = np.tril_indices(n)

    def unpack(p: np.ndarray) -> np.ndarray:
        L = np.zeros((n, n))
        L[tri] = p
        return L

    def obj(p):
        d = p[_diag_positions(n)]
        if np.any(d <= 0):
            return 1e10
        return -2.0 * np.sum(np.log(d))

    def obj_grad(p):
        g = np.zeros_like(p)
        dp = _diag_positions(n)
        g[dp] = -2.0 / p[dp]
        return g

    def cons_f(p):
        B = _B_of(unpack(p))
        w = phis @ B
        return 1.0 - np.einsum("ij,ij->i", w, w)

    def cons_jac(p):
        L = unpack(p)
        B = _B_of(L)
        k = len(phis)
        J = np.zeros((k, len(p)))
        for idx, (i, j) in enumerate(zip(*tri)):
            dL = np.zeros((n, n))
            dL[i, j] = 1.0
            dB = dL @ L.T + L @ dL.T
            J[:, idx] = -2.0 * np.einsum("ij,ij->i", phis @ B, phis @ dB)
        return J

    c0 = 0.5 / math.sqrt(float(np.max(np.einsum("ij,ij->i", phis, phis))))
    p0 = (c0 * np.eye(n))[tri]
    res = minimize(obj, p0, jac=obj_grad, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": cons_f, "jac": cons_jac}],
                   options={"maxiter": 1000, "ftol": 1e-14})
    if not res.success:
        raise JohnSolveError(f"SQP did not converge: {res.message}")
    B = _B_of(unpack(res.x))
    # rescale so the ellipsoid touches the ball exactly
    s = math.sqrt(float(np.max(np.einsum("ij,ij->i", phis @ B, phis @ B))))
    B /= s
    Binv = np.linalg.inv(B)
    outer = float(np.linalg.norm(space.vertices() @ Binv.T, axis=1).max())
    if outer > math.sqrt(n) + 1e-6:
        raise JohnSolveError(f"outer factor {outer} exceeds sqrt(n) tolerance")
    return JohnEllipsoid(B, 1.0, outer)


def _diag_positions(n: int) -> np.ndarray:
    tri = np.tril_indices(n)
    return np.array([k for k, (i, j) in enumerate(zip(*tri)) if i == j])


def _B_of(L: np.ndarray) -> np.ndarray:
    return L @ L.T


def john_containment_check(space: Space, je: JohnEllipsoid, samples: int = 10_000,
                           seed: int = 0, tol: float = 1e-6) -> dict:
    """Sampled check of ellipsoid <= ball <= sqrt(n) * ellipsoid."""
    rng = np.random.default_rng(seed)
    n = space.n
    dirs = rng.standard_normal((samples, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    ell = je.euclidean_space()
    ball_gauge = space.norms(dirs)
    ell_gauge = ell.norms(dirs)
    inner_ok = bool(np.all(ball_gauge <= ell_gauge * (1 + tol)))
    outer_ok = bool(np.all(ell_gauge <= math.sqrt(n) * ball_gauge * (1 + tol)))
    return {
        "inner_ok": inner_ok,
        "outer_ok": outer_ok,
        "max_inner_ratio": float((ball_gauge / ell_gauge).max()),
        "max_outer_ratio": float((ell_gauge / ball_gauge).max()),
    }


# ----------------------------------------------------------------------
# distance upper bounds
# ----------------------------------------------------------------------


@dataclass(eq=False)
class BmUpperResult:
    value: float
    route: str
    matrix: np.ndarray | None

    def to_json(self) -> dict:
        return {"value": self.value, "route": self.route, "bound_kind": "certified",
                "matrix": None if self.matrix is None else self.matrix.tolist()}


def _objective(u: np.ndarray, E: Space, F: Space, exact: bool) -> float:
    norm = op_norm_exact if exact else op_norm_upper
    try:
        uinv = np.linalg.inv(u)
    except np.linalg.LinAlgError:
        return math.inf
    return norm(u, E, F) * norm(uinv, F, E)


def _candidate_maps(E: Space, F: Space, effort: int, seed: int) -> list[tuple[str, np.ndarray]]:
    n = E.n
    cands: list[tuple[str, np.ndarray]] = [("identity", np.eye(n))]
    # ellipsoid alignment
    if n <= 3 and not isinstance(E, MaxSpace) and not isinstance(F, MaxSpace):
        try:
            jE, jF = john_ellipsoid(E), john_ellipsoid(F)
            cands.append(("john-align", jF.shape @ np.linalg.inv(jE.shape)))
        except (DimensionGuardError, JohnSolveError):
            pass
    # vertex matchings in the plane
    if n == 2 and isinstance(E, PolytopalSpace) and isinstance(F, PolytopalSpace):
        VE, VF = E.vertices(), F.vertices()
        if len(VE) <= 12 and len(VF) <= 12:
            for (i, j) in combinations(range(len(VE)), 2):
                A = np.column_stack([VE[i], VE[j]])
                if abs(np.linalg.det(A)) < 1e-10:
                    continue
                Ainv = np.linalg.inv(A)
                for (k, l) in product(range(len(VF)), repeat=2):
                    for sgn in (1.0, -1.0):
                        Bm = np.column_stack([VF[k], sgn * VF[l]])
                        if abs(np.linalg.det(Bm)) < 1e-10:
                            continue
                        cands.append((f"vertex-match", Bm @ Ainv))
    rng = np.random.default_rng(seed)
    for _ in range(max(0, effort)):
        cands.append(("random", rng.standard_normal((n, n))))
    return cands


def _pattern_search(u0: np.ndarray, fn: Callable[[np.ndarray], float],
                    rounds: int = 60) -> tuple[np.ndarray, float]:
    """Derivative-free coordinate pattern search on matrix entries."""
    u = u0.copy()
    best = fn(u)
    step = 0.25 * max(1.0, float(np.abs(u).max()))
    n = u.shape[0]
    for _ in range(rounds):
        improved = False
        for i in range(n):
            for j in range(n):
                for s in (step, -step):
                    v = u.copy()
                    v[i, j] += s
                    val = fn(v)
                    if val < 1.0 - 1e-9:  # submultiplicativity: ||u|| ||u^-1|| >= 1
                        raise AssertionError(f"objective {val} below 1 at an iterate")
                    if val < best * (1 - 1e-12):
                        u, best = v, val
                        improved = True
        if not improved:
            step *= 0.5
            if step < 1e-8:
                break
    return u, best


def bm_upper(E: Space, F: Space, effort: int = 32, seed: int = 0) -> BmUpperResult:
    """Upper bound on the multiplicative distance via explicit maps.

    Tries the identity, the inscribed-ellipsoid alignment, vertex matchings
    (in the plane), and ``effort`` random restarts of a pattern search on
    matrix entries.  Every bound is certified by evaluating both operator
    norms of a concrete map.  Beyond the vertex-enumeration guard the norm
    evaluations fall back to gauge linear programs (polytopal pairs only)
    and the search is skipped.
    """
    if E.n != F.n:
        raise ValueError("spaces must have equal dimension")
    exact = E.n <= 6 and not isinstance(E, MaxSpace) and not isinstance(F, MaxSpace)
    fn = lambda u: _objective(u, E, F, exact)
    best_u, best_val, best_route = None, math.inf, "none"
    for route, u in _candidate_maps(E, F, effort if exact else 0, seed):
        val = fn(u)
        if val < best_val:
            best_u, best_val, best_route = u, val, route
    if exact and best_u is not None:
        u2, v2 = _pattern_search(best_u, fn)
        if v2 < best_val:
            best_u, best_val, best_route = u2, v2, best_route + "+search"
    return BmUpperResult(best_val, best_route, best_u)


# ----------------------------------------------------------------------
# exhaustive 2-d oracle
# ----------------------------------------------------------------------


@dataclass(eq=False)
class Exact2dResult:
    value: float
    interval: tuple[float, float]
    tol: float
    grid_min: float
    lipschitz_gap: float
    matrix: np.ndarray

    def to_json(self) -> dict:
        return {"value": self.value, "interval": list(self.interval), "tol": self.tol,
                "grid_min": self.grid_min, "lipschitz_gap": self.lipschitz_gap}


def _rot(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def bm_exact_2d(E: Space, F: Space, tol: float = 1e-3,
                grid_angles: int = 48, grid_scales: int = 16) -> Exact2dResult:
    """Exhaustive-grid distance oracle in the plane.

    Every invertible map is, up to overall scale, R(a) diag(s, 1) R(b) or
    its reflected variant; the product ||u|| ||u^-1|| is scanned over a
    (a, b, s) grid with both branches and the best cells are polished by
    a simplex refinement.  Returns the refined value, plus a conservative
    interval whose lower end subtracts a finite-difference Lipschitz
    estimate of the grid error.
    """
    if E.n != 2 or F.n != 2:
        raise ValueError("oracle is 2-d only")
    angles = np.linspace(0.0, math.pi, grid_angles, endpoint=False)
    scales = np.geomspace(0.08, 1.0, grid_scales)

    # batched evaluation over the whole grid
    def batch_values() -> tuple[np.ndarray, list[tuple]]:
        mats = []
        params = []
        for refl in (False, True):
            for a in angles:
                Ra = _rot(a)
                for b in angles:
                    Rb = _rot(b) @ (np.diag([1.0, -1.0]) if refl else np.eye(2))
                    for s in scales:
                        mats.append(Ra @ np.diag([s, 1.0]) @ Rb)
                        params.append((a, b, s, refl))
        U = np.array(mats)
        vals = _batch_objective(U, E, F)
        return vals, params

    vals, params = batch_values()
    if np.any(vals < 1.0 - 1e-9):  # submultiplicativity check over the whole grid
        raise AssertionError("grid objective dipped below 1")
    order = np.argsort(vals)
    grid_min = float(vals[order[0]])

    # local Lipschitz estimate around the best cell (finite differences)
    a0, b0, s0, refl0 = params[order[0]]
    h = angles[1] - angles[0]
    lip = _local_lipschitz(E, F, a0, b0, s0, refl0, h)
    best_val, best_u = math.inf, None
    for idx in order[:6]:
        a, b, s, refl = params[idx]

        def obj(p):
            Ra = _rot(p[0])
            Rb = _rot(p[1]) @ (np.diag([1.0, -1.0]) if refl else np.eye(2))
            u = Ra @ np.diag([math.exp(p[2]), 1.0]) @ Rb
            return _objective(u, E, F, True)

        r = minimize(obj, [a, b, math.log(s)], method="Nelder-Mead",
                     options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 2000})
        if r.fun < best_val:
            best_val = float(r.fun)
            Ra = _rot(r.x[0])
            Rb = _rot(r.x[1]) @ (np.diag([1.0, -1.0]) if refl else np.eye(2))
            best_u = Ra @ np.diag([math.exp(r.x[2]), 1.0]) @ Rb
    value = min(best_val, grid_min)
    lower = max(1.0, grid_min - lip * h)
    return Exact2dResult(value, (lower, value), max(tol, value - lower if value - lower > tol else tol),
                         grid_min, lip * h, best_u)


def _batch_objective(U: np.ndarray, E: Space, F: Space) -> np.ndarray:
    """||u||*||u^-1|| for a stack of 2x2 maps (vectorised norm evaluation)."""
    Uinv = np.linalg.inv(U)

    def batch_norm(mats: np.ndarray, src: Space, tgt: Space) -> np.ndarray:
        if isinstance(src, PolytopalSpace):
            V = src.vertices()                     # (v, 2)
            img = np.einsum("gij,vj->gvi", mats, V)  # (G, v, 2)
            if isinstance(tgt, PolytopalSpace):
                return np.abs(np.einsum("gvi,ki->gvk", img, tgt.functionals)).max(axis=(1, 2))
            return np.linalg.norm(np.einsum("gvi,ki->gvk", img, tgt.M), axis=2).max(axis=1)
        # ellipsoidal source
        A = np.einsum("gij,jk->gik", mats, src.Minv)
        if isinstance(tgt, PolytopalSpace):
            rows = np.einsum("ki,gij->gkj", tgt.functionals, A)
            return np.linalg.norm(rows, axis=2).max(axis=1)
        B = np.einsum("ij,gjk->gik", tgt.M, A)
        return np.linalg.svd(B, compute_uv=False)[:, 0]

    return batch_norm(U, E, F) * batch_norm(Uinv, F, E)


def _local_lipschitz(E: Space, F: Space, a: float, b: float, s: float,
                     refl: bool, h: float) -> float:
    def val(aa, bb, ss):
        Ra = _rot(aa)
        Rb = _rot(bb) @ (np.diag([1.0, -1.0]) if refl else np.eye(2))
        return _objective(Ra @ np.diag([ss, 1.0]) @ Rb, E, F, True)

    base = val(a, b, s)
    g = max(
        abs(val(a + h, b, s) - base),
        abs(val(a, b + h, s) - base),
        abs(val(a, b, min(1.0, s * math.exp(h))) - base),
    ) / h
    return g


# ----------------------------------------------------------------------
# greedy packing and the near-ball count
# ----------------------------------------------------------------------


@dataclass(eq=False)
class PackingReport:
    accepted: list[int]
    rejected: list[dict]
    pair_certificates: dict
    r: float
    effort: int
    note: str = ("acceptance is heuristic (no distance upper bound found below r); "
                 "rejection is certified by an explicit map")

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "pair_certificates": {f"{i},{j}": v for (i, j), v in self.pair_certificates.items()},
            "r": self.r,
            "effort": self.effort,
            "note": self.note,
        }


def greedy_packing(family: Sequence[Space], r: float, effort: int = 0, seed: int = 0,
                   certifier: Callable[[int, int], float] | None = None) -> PackingReport:
    """Greedy extraction of a subfamily with pairwise distance >= r.

    Scans the family in order; a candidate is dropped only when a prover
    finds a map certifying distance < r against an accepted member.  Effort
    0 detects isometric copies by canonical functional comparison; higher
    effort runs :func:`bm_upper`.  When ``certifier`` is given, each
    accepted pair also records its certified identity-map ratio (a lower
    bound on the identity norm, not on the distance).
    """
    if r <= 1.0:
        raise ValueError("r must exceed 1")
    accepted: list[int] = []
    rejected: list[dict] = []
    keys = {}
    for i, sp in enumerate(family):
        if isinstance(sp, PolytopalSpace):
            keys[i] = sp.canonical_key()
    for i, sp in enumerate(family):
        verdict = None
        for j in accepted:
            if i in keys and j in keys and keys[i] == keys[j]:
                verdict = {"index": i, "against": j, "upper": 1.0, "route": "canonical-identical"}
                break
            if effort >= 1:
                res = bm_upper(sp, family[j], effort=max(0, effort - 1), seed=seed + i)
                if res.value < r:
                    verdict = {"index": i, "against": j, "upper": res.value, "route": res.route}
                    break
        if verdict is None:
            accepted.append(i)
        else:
            rejected.append(verdict)
    pair_certs = {}
    if certifier is not None:
        for a, b in combinations(accepted, 2):
            pair_certs[(a, b)] = certifier(a, b)
    return PackingReport(accepted, rejected, pair_certs, r, effort)


def claim_counter(n: int, r: float, theta: float) -> LogLevelNumber:
    """Near-ball count (1 + 4n/eta)^(n^2) with eta defined by 1+eta = 1/(r*theta).

    This bounds how many family members can sit within distance r of a
    fixed one; it is finite only when r*theta < 1.
    """
    if r * theta >= 1.0:
        raise ValueError(
            f"requires r*theta < 1 (eta is defined by 1+eta = 1/(r*theta)); got r*theta = {r * theta}"
        )
    eta = 1.0 / (r * theta) - 1.0
    return claim_counter_generic(n, eta, float(n) * n)
