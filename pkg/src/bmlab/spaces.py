"""Finite-dimensional normed spaces with explicitly evaluable norms.

Three closed-form families cover everything built here:

* :class:`PolytopalSpace` -- norm = max_i |phi_i(a)| over a finite list of
  functionals (houses sup-norm spaces, sum-norm spaces via sign patterns,
  and the sign-vector spaces E_x);
* :class:`EllipsoidalSpace` -- norm = ||M a||_2 after a linear change of
  basis (the Euclidean family);
* :class:`MaxSpace` -- pointwise max of two evaluators (used by the local
  families that blend a scaled base norm with witness functionals).

On top of these live unit-ball vertex enumeration, dual norms, Auerbach
bases, mesh nets of unit balls, nets of the space of subspaces, and the
embedding of any space into a sup-norm space via a dual-ball net.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Sequence

import numpy as np

from .signset import SignSet

__all__ = [
    "Space",
    "PolytopalSpace",
    "EllipsoidalSpace",
    "MaxSpace",
    "AuerbachBasis",
    "BallNet",
    "SubspaceNet",
    "EmbedResult",
    "linf_space",
    "l1_space",
    "l2_space",
    "ellipsoidal_space",
    "make_ex",
    "coordinate_sandwich_violations",
    "dual_norm",
    "dual_space",
    "enumerate_vertices",
    "auerbach_basis",
    "ball_net",
    "subspace_net",
    "verify_subspace_against_net",
    "embed_linf",
    "make_lemloc_space",
    "lemloc_system_from_signset",
    "sample_sphere",
]

VERTEX_DIM_LIMIT = 6
BALL_NET_GUARD = 10 ** 6
SUBSPACE_MATERIALIZE_LIMIT = 10 ** 5


class DimensionGuardError(ValueError):
    """An operation was asked to run beyond its resource guard."""


# ----------------------------------------------------------------------
# space types
# ----------------------------------------------------------------------


class Space:
    """Base: a dimension, a label, and a norm evaluator."""

    n: int
    label: str

    def norm(self, a: np.ndarray) -> float:
        raise NotImplementedError

    def norms(self, A: np.ndarray) -> np.ndarray:
        """Row-wise norms of a (m, n) array."""
        raise NotImplementedError

    def _check_dim(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.float64)
        if a.shape[-1] != self.n:
            raise ValueError(f"vector has dim {a.shape[-1]}, space has dim {self.n}")
        return a


@dataclass(eq=False)
class PolytopalSpace(Space):
    """Norm = max_i |phi_i(a)|; one functional stored per +- pair.

    ``functionals`` must span the dual (checked), so the unit ball
    {a : |phi_i(a)| <= 1} is bounded and the evaluator is a norm.
    """

    n: int
    functionals: np.ndarray
    label: str = "polytopal"
    eq12: bool = False  # unit-coordinate sandwich sup|a_j| <= ||a|| <= sum|a_j|
    seminorm: bool = False  # skip the spanning check (only valid inside a MaxSpace)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.functionals = np.asarray(self.functionals, dtype=np.float64)
        if self.functionals.ndim != 2 or self.functionals.shape[1] != self.n:
            raise ValueError("functionals must be a (k, n) array")
        if not self.seminorm and np.linalg.matrix_rank(self.functionals) < self.n:
            raise ValueError("functionals do not span the dual space; not a norm")
        self._vertices: np.ndarray | None = None

    def norm(self, a) -> float:
        a = self._check_dim(a)
        return float(np.abs(self.functionals @ a).max())

    def norms(self, A) -> np.ndarray:
        A = self._check_dim(A)
        return np.abs(A @ self.functionals.T).max(axis=1)

    def vertices(self) -> np.ndarray:
        """Unit-ball vertices, one per antipodal pair (dim <= 6)."""
        if self._vertices is None:
            self._vertices = enumerate_vertices(self.functionals)
        return self._vertices

    def scaled(self, c: float) -> "PolytopalSpace":
        """Space with norm c * ||.|| (functionals scaled by c)."""
        return PolytopalSpace(self.n, c * self.functionals, f"{c:g}*{self.label}")

    def is_axis_box(self) -> bool:
        """True when the ball is the coordinate box (sup-norm up to signed permutation)."""
        F = self.functionals
        if F.shape[0] != self.n:
            return False
        P = np.abs(F)
        return (np.allclose(P.sum(axis=0), 1.0, atol=1e-12)
                and np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
                and np.allclose(P * (1 - P), 0.0, atol=1e-12))

    def canonical_key(self) -> tuple:
        """Functional list up to order and sign, for isometric-copy detection."""
        rows = []
        for row in self.functionals:
            r = np.where(np.abs(row) < 1e-12, 0.0, row)
            nz = r[np.abs(r) > 0]
            if len(nz) and nz[0] < 0:
                r = -r
            rows.append(tuple(np.round(r, 12).tolist()))
        return tuple(sorted(rows))

    def to_json(self) -> dict:
        return {"kind": "polytopal", "n": self.n, "label": self.label,
                "functionals": self.functionals.tolist()}


@dataclass(eq=False)
class EllipsoidalSpace(Space):
    """Norm = ||M a||_2 for an invertible change of basis M."""

    n: int
    M: np.ndarray
    label: str = "ellipsoidal"

    def __post_init__(self) -> None:
        self.M = np.asarray(self.M, dtype=np.float64)
        if self.M.shape != (self.n, self.n):
            raise ValueError("M must be (n, n)")
        self.Minv = np.linalg.inv(self.M)

    def norm(self, a) -> float:
        a = self._check_dim(a)
        return float(np.linalg.norm(self.M @ a))

    def norms(self, A) -> np.ndarray:
        A = self._check_dim(A)
        return np.linalg.norm(A @ self.M.T, axis=1)

    def scaled(self, c: float) -> "EllipsoidalSpace":
        return EllipsoidalSpace(self.n, c * self.M, f"{c:g}*{self.label}")

    def to_json(self) -> dict:
        return {"kind": "ellipsoidal", "n": self.n, "label": self.label,
                "M": self.M.tolist()}


@dataclass(eq=False)
class MaxSpace(Space):
    """Pointwise max of component norms (intersection of unit balls)."""

    n: int
    parts: tuple
    label: str = "max"

    def __post_init__(self) -> None:
        for p in self.parts:
            if p.n != self.n:
                raise ValueError("component dimensions differ")

    def norm(self, a) -> float:
        return max(p.norm(a) for p in self.parts)

    def norms(self, A) -> np.ndarray:
        return np.max([p.norms(A) for p in self.parts], axis=0)

    def to_json(self) -> dict:
        return {"kind": "max", "n": self.n, "label": self.label,
                "parts": [p.to_json() for p in self.parts]}


def space_from_json(obj: dict) -> Space:
    kind = obj["kind"]
    if kind == "polytopal":
        return PolytopalSpace(obj["n"], np.array(obj["functionals"]), obj.get("label", "polytopal"))
    if kind == "ellipsoidal":
        return EllipsoidalSpace(obj["n"], np.array(obj["M"]), obj.get("label", "ellipsoidal"))
    if kind == "max":
        return MaxSpace(obj["n"], tuple(space_from_json(p) for p in obj["parts"]),
                        obj.get("label", "max"))
    raise ValueError(f"unknown space kind {kind!r}")


# ----------------------------------------------------------------------
# standard spaces
# ----------------------------------------------------------------------


def linf_space(n: int) -> PolytopalSpace:
    """Coordinate sup-norm."""
    return PolytopalSpace(n, np.eye(n), f"linf^{n}", eq12=True)


def l1_space(n: int) -> PolytopalSpace:
    """Coordinate sum-norm, realised by all 2^(n-1) sign functionals."""
    if n > 12:
        raise DimensionGuardError("sum-norm functional list grows as 2^(n-1); n <= 12")
    signs = np.array(list(product([1.0, -1.0], repeat=n - 1)))
    funcs = np.hstack([np.ones((len(signs), 1)), signs]) if n > 1 else np.array([[1.0]])
    return PolytopalSpace(n, funcs, f"l1^{n}")


def l2_space(n: int) -> EllipsoidalSpace:
    """Euclidean norm."""
    return EllipsoidalSpace(n, np.eye(n), f"l2^{n}")


def ellipsoidal_space(M: np.ndarray, label: str = "ellipsoidal") -> EllipsoidalSpace:
    M = np.asarray(M, dtype=np.float64)
    return EllipsoidalSpace(M.shape[0], M, label)


def coordinate_sandwich_violations(sp: PolytopalSpace, A: np.ndarray) -> int:
    """Count rows of A violating sup|a_j| <= ||a|| <= sum|a_j|.

    The upper comparison is mathematically tight (equality when a matching
    sign pattern is among the functionals), so candidates flagged by the
    fast vectorised scan are re-checked with exactly rounded sums: rounding
    is monotone, hence a true inequality can never flip under fsum.
    """
    A = np.asarray(A, dtype=np.float64)
    norms = sp.norms(A)
    sup = np.abs(A).max(axis=1)
    tot = np.abs(A).sum(axis=1)
    bad = int(np.sum(sup > norms))  # exact: the coordinate rows sit inside the max
    for i in np.nonzero(norms > tot)[0]:
        a = A[i]
        rhs = math.fsum(abs(v) for v in a)
        lhs = max(abs(math.fsum(phi * v for phi, v in zip(row, a)))
                  for row in sp.functionals)
        if lhs > rhs:
            bad += 1
    return bad


def make_ex(T: SignSet, x: Sequence[int]) -> PolytopalSpace:
    """Sign-vector space: coordinate functionals plus <., t> for t in x.

    ``x`` indexes into ``T.vectors`` and must be a subset of it.  The
    resulting norm is max(sup_j |a_j|, max_{t in x} |<a, t>|), which always
    sits between sup|a_j| and sum|a_j| (the generators have norm one).
    """
    x = tuple(int(i) for i in x)
    if any(i < 0 or i >= T.size for i in x):
        raise ValueError(f"subset indices out of range for a family of size {T.size}")
    funcs = [np.eye(T.n)]
    if x:
        funcs.append(T.vectors[list(x)].astype(np.float64))
    label = f"E_x(n={T.n},|x|={len(x)})"
    sp = PolytopalSpace(T.n, np.vstack(funcs), label, eq12=True)
    sp.meta["ex_subset"] = x
    return sp


# ----------------------------------------------------------------------
# vertex enumeration and duality
# ----------------------------------------------------------------------


def enumerate_vertices(functionals: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vertices of {a : |phi_i(a)| <= 1}, one per antipodal pair.

    Solves every n-subset of active functionals against every sign pattern
    (first sign fixed to +1) and keeps feasible solutions.  Batched solves
    keep this fast up to the dim <= 6 guard.
    """
    F = np.asarray(functionals, dtype=np.float64)
    k, n = F.shape
    if n > VERTEX_DIM_LIMIT:
        raise DimensionGuardError(f"vertex enumeration limited to dim <= {VERTEX_DIM_LIMIT}")
    if math.comb(k, n) * 2 ** (n - 1) > 4 * 10 ** 6:
        raise DimensionGuardError("too many functional subsets for vertex enumeration")
    subsets = list(combinations(range(k), n))
    signs = np.array(list(product([1.0, -1.0], repeat=n - 1)))
    signs = np.hstack([np.ones((len(signs), 1)), signs]) if n > 1 else np.array([[1.0]])
    mats = F[np.array(subsets)]                       # (S, n, n)
    dets = np.linalg.det(mats)
    good = np.abs(dets) > 1e-12 * max(1.0, np.abs(F).max()) ** n
    mats = mats[good]
    if not len(mats):
        raise ValueError("no non-degenerate functional subsets; ball unbounded?")
    # solve mats @ a = s for every sign pattern s
    sols = np.linalg.solve(mats[:, None, :, :], signs[None, :, :, None])[..., 0]
    cand = sols.reshape(-1, n)
    feas = np.abs(cand @ F.T).max(axis=1) <= 1.0 + tol
    cand = cand[feas]
    # dedup antipodal pairs
    keyed = {}
    for v in cand:
        lead = v[np.argmax(np.abs(v) > 1e-10)] if np.any(np.abs(v) > 1e-10) else 1.0
        w = v if lead >= 0 else -v
        keyed[tuple(np.round(w, 9))] = w
    return np.array(list(keyed.values()))


def dual_norm(space: Space, f: np.ndarray) -> float:
    """sup{|f(a)| : ||a|| <= 1}.

    Closed form for ellipsoidal spaces; vertex enumeration (dim <= 6) for
    polytopal ones.  Composite max-norms have no vertex list and are
    rejected.
    """
    f = np.asarray(f, dtype=np.float64)
    if isinstance(space, EllipsoidalSpace):
        return float(np.linalg.norm(space.Minv.T @ f))
    if isinstance(space, PolytopalSpace):
        V = space.vertices()
        return float(np.abs(V @ f).max())
    raise DimensionGuardError(f"dual norm unavailable for {type(space).__name__}")


def dual_space(space: Space) -> Space:
    """The dual space with an evaluable norm.

    Polytopal: the dual ball is the convex hull of the +-functionals, so the
    dual norm is polytopal with the primal vertices as functionals.
    Ellipsoidal ||M a||_2 dualises to ||M^-T f||_2.
    """
    if isinstance(space, EllipsoidalSpace):
        return EllipsoidalSpace(space.n, space.Minv.T, f"({space.label})*")
    if isinstance(space, PolytopalSpace):
        return PolytopalSpace(space.n, space.vertices(), f"({space.label})*")
    raise DimensionGuardError(f"dual space unavailable for {type(space).__name__}")


# ----------------------------------------------------------------------
# Auerbach bases
# ----------------------------------------------------------------------


@dataclass(eq=False)
class AuerbachBasis:
    """Basis with unit vectors and unit dual functionals.

    ``vectors`` holds the basis as columns, ``duals`` the coordinate
    functionals as rows (the matrix inverse), so duals @ vectors = I.
    """

    vectors: np.ndarray
    duals: np.ndarray
    quality: float

    def biorthogonality_residual(self) -> float:
        n = self.vectors.shape[0]
        return float(np.abs(self.duals @ self.vectors - np.eye(n)).max())


class AuerbachSearchError(RuntimeError):
    def __init__(self, message: str, best: AuerbachBasis):
        super().__init__(message)
        self.best = best


def _linear_max_over_ball(space: Space, f: np.ndarray) -> np.ndarray:
    """A unit-ball point maximising |f(.)| (exact for the closed forms)."""
    if isinstance(space, PolytopalSpace):
        V = space.vertices()
        vals = V @ f
        i = int(np.argmax(np.abs(vals)))
        return V[i] if vals[i] >= 0 else -V[i]
    if isinstance(space, EllipsoidalSpace):
        g = space.Minv.T @ f
        ng = np.linalg.norm(g)
        if ng == 0:
            raise ValueError("zero functional")
        return space.Minv @ (g / ng)
    raise DimensionGuardError("linear maximisation unavailable for composite norms")


def auerbach_basis(space: Space, max_rounds: int = 200) -> AuerbachBasis:
    """Basis of unit vectors whose dual functionals also have norm one.

    Found by maximising |det| over the unit ball one column at a time:
    each update replaces column j with an exact maximiser of the cofactor
    functional, so at a fixed point every dual functional has dual norm 1.
    Ellipsoidal spaces short-circuit to a closed form.
    """
    n = space.n
    if isinstance(space, EllipsoidalSpace):
        V = space.Minv.copy()
        D = space.M.copy()
        return AuerbachBasis(V, D, 1.0)
    if not isinstance(space, PolytopalSpace):
        raise DimensionGuardError("Auerbach search needs a polytopal or ellipsoidal space")
    if n > VERTEX_DIM_LIMIT:
        raise DimensionGuardError(f"dim <= {VERTEX_DIM_LIMIT} required")

    verts = space.vertices()
    # greedy volume-maximising start
    cols: list[np.ndarray] = []
    for _ in range(n):
        best_v, best_vol = None, -1.0
        for v in verts:
            M = np.column_stack(cols + [v])
            vol = abs(np.linalg.det(M.T @ M)) if M.shape[1] < n else abs(np.linalg.det(M))
            if vol > best_vol:
                best_vol, best_v = vol, v
        cols.append(best_v)
    V = np.column_stack(cols)

    det = abs(np.linalg.det(V))
    converged = False
    for _ in range(max_rounds):
        improved = False
        for j in range(n):
            cof = np.linalg.inv(V).T[:, j] * np.linalg.det(V)  # cofactor functional
            w = _linear_max_over_ball(space, cof)
            W = V.copy()
            W[:, j] = w
            d = abs(np.linalg.det(W))
            if d > det * (1.0 + 1e-12):
                V, det = W, d
                improved = True
        if not improved:
            converged = True
            break

    D = np.linalg.inv(V)
    qual = max(
        max(space.norm(V[:, j]) for j in range(n)),
        max(dual_norm(space, D[j]) for j in range(n)),
    )
    basis = AuerbachBasis(V, D, float(qual))
    if not converged or qual > 1.0 + 1e-6:
        raise AuerbachSearchError(
            f"coordinate ascent stalled at quality {qual:.3e}", basis
        )
    return basis


# ----------------------------------------------------------------------
# nets of unit balls
# ----------------------------------------------------------------------


@dataclass(eq=False)
class BallNet:
    """A mesh net of the unit ball: xi-separated points that cover it.

    ``strategy`` records how the net was built.  Grid and ring strategies
    carry an exact covering radius; pool strategies cover their candidate
    pool exactly and the whole ball only statistically.
    """

    space: Space
    xi: float
    points: np.ndarray
    strategy: str
    covering_radius_bound: float
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.points)

    def cardinality_bound(self) -> float:
        return (1.0 + 2.0 / self.xi) ** self.space.n

    def separation_ok(self, strict_tol: float = 1e-9) -> bool:
        P = self.points
        for i in range(len(P)):
            d = self.space.norms(P[i + 1:] - P[i]) if i + 1 < len(P) else np.array([])
            if d.size and d.min() < self.xi * (1.0 - 1e-9) - strict_tol:
                return False
        return True

    def covering_check(self, samples: int = 10_000, seed: int = 0,
                       grid_step: float = 1e-3) -> dict:
        """Max distance from ball points to the net.

        Uses an exhaustive grid in dim 1 and a fine mesh in dim 2;
        statistical sampling beyond that.
        """
        n = self.space.n
        if n == 1:
            radius = 1.0 / self.space.norm(np.array([1.0]))
            probe = np.arange(-radius, radius + grid_step / 2, grid_step)[:, None]
            method = "grid"
        elif n == 2:
            try:
                box = _bounding_radii(self.space)
            except DimensionGuardError:
                box = None
            if box is not None:
                g0 = np.linspace(-box[0], box[0], 201)
                g1 = np.linspace(-box[1], box[1], 201)
                probe = np.array(np.meshgrid(g0, g1)).reshape(2, -1).T
                probe = probe[self.space.norms(probe) <= 1.0]
                method = "mesh"
            else:
                rng = np.random.default_rng(seed)
                probe = _sample_ball(self.space, samples, rng)
                method = "sampled"
        else:
            rng = np.random.default_rng(seed)
            probe = _sample_ball(self.space, samples, rng)
            method = "sampled"
        dmax = 0.0
        for lo in range(0, len(probe), 2048):
            blk = probe[lo:lo + 2048]
            dists = np.stack([self.space.norms(blk - p) for p in self.points])
            dmax = max(dmax, float(dists.min(axis=0).max()))
        return {"method": method, "max_distance": dmax, "probes": len(probe)}


def _bounding_radii(space: Space) -> np.ndarray:
    """Per-axis extent of the unit ball (via dual norms of coordinates)."""
    return np.array([dual_norm(space, np.eye(space.n)[j]) for j in range(space.n)])


def _sample_ball(space: Space, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points of the unit ball, dense in norm and radius."""
    g = rng.standard_normal((count, space.n))
    ns = space.norms(g)
    ns[ns == 0] = 1.0
    radii = rng.random(count) ** (1.0 / space.n)
    return g / ns[:, None] * radii[:, None]


def sample_sphere(space: Space, count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-sphere points of the space (Gaussian directions, normalised)."""
    g = rng.standard_normal((count, space.n))
    ns = space.norms(g)
    ns[ns == 0] = 1.0
    return g / ns[:, None]


def _grid_net_axis_box(space: PolytopalSpace, xi: float) -> np.ndarray:
    """Exact net of the coordinate box: per-axis grid with spacing >= xi.

    floor(2/xi) intervals give spacing 2/k >= xi (separation) and covering
    radius 1/k <= xi; the count (k+1)^n respects (1+2/xi)^n.
    """
    k = int(math.floor(2.0 / xi))
    axis = -1.0 + np.arange(k + 1) * (2.0 / k)
    return np.array(np.meshgrid(*([axis] * space.n))).reshape(space.n, -1).T


def _ring_net_disc(delta: float) -> np.ndarray:
    """A delta-covering of the Euclidean unit disc with few points.

    Rings spaced delta apart (plus the centre); each ring gets enough
    angular samples that any point within delta/2 radially is within delta.
    """
    radii = [1.0]
    kk = 0
    while radii[-1] > 1.5 * delta:
        kk += 1
        radii.append(1.0 - kk * delta)
    pts = [np.zeros(2)]
    for rho in radii:
        if rho <= 0:
            continue
        rho_far = min(rho + delta / 2.0, 1.0)
        c = 1.0 - 3.0 * delta * delta / (8.0 * rho * rho_far)
        half_angle = math.acos(max(-1.0, min(1.0, c)))
        m = max(1, math.ceil(math.pi / half_angle))
        ang = np.arange(m) * (2.0 * math.pi / m)
        pts.extend(np.column_stack([rho * np.cos(ang), rho * np.sin(ang)]))
    return np.array(pts)


def _greedy_net_from_pool(space: Space, xi: float, pool: np.ndarray) -> np.ndarray:
    """Greedy maximal xi-separated subset of the pool, in pool order."""
    kept: list[int] = []
    K = np.empty((256, space.n))
    for i in range(len(pool)):
        p = pool[i]
        if kept and space.norms(p[None, :] - K[: len(kept)]).min() < xi * (1 - 1e-12):
            continue
        if len(kept) == K.shape[0]:
            K = np.vstack([K, np.empty_like(K)])
        K[len(kept)] = p
        kept.append(i)
    return K[: len(kept)].copy()


def ball_net(space: Space, xi: float, seed: int = 0,
             pool_size: int | None = None,
             extreme_first: bool = True) -> BallNet:
    """A xi-separated, xi-covering subset of the unit ball.

    Strategy by case:
      * xi >= 1: the origin alone covers the ball.
      * coordinate boxes: an exact axis grid (guaranteed covering xi/ something
        smaller, separation >= xi).
      * 2-d ellipsoidal: ring construction mapped through the change of basis
        (guaranteed covering, audited numerically).
      * otherwise: greedy over a candidate pool (ball vertices first when
        available, then a space-filling sample); covering is exact over the
        pool and statistical over the ball.

    The cardinality always obeys (1 + 2/xi)^n; this is asserted.
    """
    if xi <= 0:
        raise ValueError("xi must be positive")
    if (1.0 + 2.0 / xi) ** space.n > BALL_NET_GUARD:
        raise DimensionGuardError(
            f"(1+2/xi)^n = {(1.0 + 2.0 / xi) ** space.n:.3g} exceeds {BALL_NET_GUARD}"
        )

    if xi >= 1.0:
        net = BallNet(space, xi, np.zeros((1, space.n)), "origin", 1.0)
    elif space.n == 1:
        # any one-dimensional ball is an interval
        radius = 1.0 / space.norm(np.array([1.0]))
        k = int(math.floor(2.0 / xi))
        pts = (np.arange(k + 1) * (2.0 / k) - 1.0)[:, None] * radius
        net = BallNet(space, xi, pts, "grid", 1.0 / k)
    elif isinstance(space, PolytopalSpace) and space.is_axis_box():
        pts = _grid_net_axis_box(space, xi)
        k = int(math.floor(2.0 / xi))
        net = BallNet(space, xi, pts, "grid", 1.0 / k)
    elif isinstance(space, EllipsoidalSpace) and space.n == 2:
        q = _ring_net_disc(xi)
        pts = q @ space.Minv.T
        net = BallNet(space, xi, pts, "rings", xi)
        audit = net.covering_check()
        if audit["max_distance"] > xi * (1 + 1e-6):
            raise RuntimeError(f"ring net audit failed: {audit}")
        net.meta["covering_audit"] = audit
    else:
        rng = np.random.default_rng(seed)
        count = pool_size or min(200_000, max(5_000, 30 * int((1 + 2 / xi) ** space.n)))
        pool = [_sample_ball(space, count, rng)]
        if extreme_first and isinstance(space, PolytopalSpace) and space.n <= VERTEX_DIM_LIMIT:
            V = space.vertices()
            pool.insert(0, np.vstack([V, -V]))
        pts = _greedy_net_from_pool(space, xi, np.vstack(pool))
        net = BallNet(space, xi, pts, "pool-greedy", float("nan"),
                      meta={"pool": sum(len(p) for p in pool)})

    if net.size > net.cardinality_bound() + 1e-9:
        raise RuntimeError(
            f"net size {net.size} exceeds ball-packing bound {net.cardinality_bound():.3f}"
        )
    return net


# ----------------------------------------------------------------------
# nets of subspaces
# ----------------------------------------------------------------------


@dataclass(eq=False)
class SubspaceNet:
    """All n-tuples from a ball net of X, spanning candidate subspaces.

    Every n-dimensional subspace of X is within distance R of some tuple
    span (in the multiplicative distance), R = (1 + xi n)/(1 - xi n).
    Tuples are only materialised when their count stays small; the count
    and the certified radius are always available.
    """

    X: Space
    n: int
    xi: float
    R: float
    net: BallNet
    tuple_count: int
    spaces: list | None
    degenerate_skipped: int

    def tuple_bound(self) -> float:
        return (1.0 + 2.0 / self.xi) ** (self.n * self.X.n)


def _induced_subspace(X: Space, basis: np.ndarray, label: str) -> Space:
    """Span of basis columns inside X, as a space on the coefficients."""
    if isinstance(X, PolytopalSpace):
        return PolytopalSpace(basis.shape[1], X.functionals @ basis, label)
    if isinstance(X, EllipsoidalSpace):
        Mb = X.M @ basis
        # Euclidean norm of Mb @ c: realise as ellipsoidal via QR
        r = np.linalg.qr(Mb, mode="r")
        return EllipsoidalSpace(basis.shape[1], r, label)
    raise DimensionGuardError("subspaces of composite norms not supported")


def subspace_net(n: int, X: Space, xi: float, seed: int = 0,
                 materialize_limit: int = SUBSPACE_MATERIALIZE_LIMIT) -> SubspaceNet:
    """Net of the n-dimensional subspaces of X at certified radius R.

    Requires xi < 1/n so that R = (1 + xi n)/(1 - xi n) is finite.  Tuples
    with linearly dependent entries span nothing n-dimensional and are
    skipped (counted) during materialisation.
    """
    if not (0.0 < xi < 1.0 / n):
        raise ValueError(f"xi must be in (0, 1/n) = (0, {1.0/n:.4g}), got {xi}")
    net = ball_net(X, xi, seed=seed)
    R = (1.0 + xi * n) / (1.0 - xi * n)
    count = net.size ** n
    spaces = None
    skipped = 0
    if count <= materialize_limit:
        spaces = []
        for tup in product(range(net.size), repeat=n):
            B = net.points[list(tup)].T  # (m, n)
            if np.linalg.matrix_rank(B, tol=1e-10) < n:
                skipped += 1
                continue
            spaces.append(_induced_subspace(X, B, f"span{tup}"))
    return SubspaceNet(X, n, xi, R, net, count, spaces, skipped)


def verify_subspace_against_net(snet: SubspaceNet, basis: np.ndarray,
                                samples: int = 10_000, seed: int = 0) -> dict:
    """Check a test subspace against the net: snap and measure distortion.

    Takes an Auerbach basis of the induced norm, snaps each basis vector to
    its nearest net point, and evaluates the two-sided bound
    (1 - xi n) ||sum x_j e_j|| <= ||sum x_j f_j|| <= (1 + xi n) ||sum x_j e_j||
    on sampled coefficient vectors.  Reports snap distances, the observed
    ratio range, and the implied distance bound against R.
    """
    X, n, xi = snet.X, snet.n, snet.xi
    basis = np.asarray(basis, dtype=np.float64)
    E = _induced_subspace(X, basis, "test-subspace")
    ab = auerbach_basis(E)
    evecs = basis @ ab.vectors  # unit vectors of E inside X, as columns
    snap_idx = []
    snap_dist = []
    for j in range(n):
        d = X.norms(snet.net.points - evecs[:, j][None, :])
        i = int(np.argmin(d))
        snap_idx.append(i)
        snap_dist.append(float(d[i]))
    fvecs = snet.net.points[snap_idx].T

    rng = np.random.default_rng(seed)
    coeff = rng.standard_normal((samples, n))
    ne = X.norms(coeff @ evecs.T)
    nf = X.norms(coeff @ fvecs.T)
    ratios = nf / ne
    lo, hi = float(ratios.min()), float(ratios.max())
    dist_bound = hi / lo
    return {
        "snap_distances": snap_dist,
        "snap_within_xi": max(snap_dist) <= xi * (1 + 1e-9),
        "ratio_min": lo,
        "ratio_max": hi,
        "two_sided_ok": (lo >= 1 - xi * n - 1e-9) and (hi <= 1 + xi * n + 1e-9),
        "distance_bound_observed": dist_bound,
        "R": snet.R,
        "samples": samples,
    }


# ----------------------------------------------------------------------
# embedding into sup-norm spaces
# ----------------------------------------------------------------------


@dataclass(eq=False)
class EmbedResult:
    F: PolytopalSpace
    m: int
    certified_distortion: float
    observed_distortion: float
    net: BallNet
    covering_certified: bool


def embed_linf(E: Space, delta: float, samples: int = 10_000, seed: int = 0) -> EmbedResult:
    """Realise E inside a sup-norm space via a delta-net of the dual ball.

    Coordinates of the image are x -> t(x) for net points t, so the image
    norm is sup_t |t(x)| and (1 - delta)||x|| <= sup_t |t(x)| <= ||x||
    whenever the net covers the dual ball at radius delta.  The certified
    distortion is (1 - delta)^(-1); the observed one is measured on sampled
    directions.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must be in (0,1), got {delta}")
    if (1.0 + 2.0 / delta) ** E.n > BALL_NET_GUARD:
        raise DimensionGuardError("dual-ball net would exceed the resource guard")
    D = dual_space(E)
    net = ball_net(D, delta, seed=seed)
    F = PolytopalSpace(E.n, net.points, f"linf-embed({E.label})")
    rng = np.random.default_rng(seed + 1)
    dirs = sample_sphere(E, samples, rng)
    img = F.norms(dirs)
    observed = float((1.0 / img).max())  # ||x||_E = 1 on sampled directions
    certified = net.strategy in ("grid", "rings", "origin")
    return EmbedResult(F, net.size, 1.0 / (1.0 - delta), observed, net, certified)


# ----------------------------------------------------------------------
# local families around a base space
# ----------------------------------------------------------------------


class LemlocSystemError(ValueError):
    """A biorthogonal-system hypothesis failed validation."""


def validate_lemloc_system(E: Space, xs: np.ndarray, xstars: np.ndarray,
                           theta: float, C: float, tol: float = 1e-9) -> None:
    """Check ||x_t|| <= C, ||x_t*||_* <= C, x_t*(x_t) = 1, |x_s*(x_t)| <= theta."""
    xs = np.asarray(xs, dtype=np.float64)
    xstars = np.asarray(xstars, dtype=np.float64)
    for t in range(len(xs)):
        nv = E.norm(xs[t])
        if nv > C + tol:
            raise LemlocSystemError(f"||x_{t}|| = {nv:.6g} exceeds C = {C}")
        nf = dual_norm(E, xstars[t])
        if nf > C + tol:
            raise LemlocSystemError(f"||x*_{t}||_* = {nf:.6g} exceeds C = {C}")
    G = xstars @ xs.T  # G[s, t] = x_s*(x_t)
    for t in range(len(xs)):
        if abs(G[t, t] - 1.0) > tol:
            raise LemlocSystemError(f"x*_{t}(x_{t}) = {G[t, t]:.6g} != 1")
    off = np.abs(G - np.diag(np.diag(G)))
    if off.size and off.max() > theta + tol:
        s, t = np.unravel_index(np.argmax(off), off.shape)
        raise LemlocSystemError(f"|x*_{s}(x_{t})| = {off[s, t]:.6g} exceeds theta = {theta}")


def make_lemloc_space(E: Space, xs: np.ndarray, xstars: np.ndarray,
                      theta: float, C: float, x: Sequence[int],
                      validate: bool = True) -> Space:
    """Local-family member: norm = max(theta/C * ||a||_E, max_{t in x} |x_t*(a)|).

    The system (x_t, x_t*) must satisfy the biorthogonality hypotheses
    (validated unless disabled); the result then sits between theta/C and C
    times the base norm, certifying distance at most C^2/theta from E.
    """
    if validate:
        validate_lemloc_system(E, xs, xstars, theta, C)
    x = tuple(int(i) for i in x)
    scaled = E.scaled(theta / C) if hasattr(E, "scaled") else None
    if scaled is None:
        raise DimensionGuardError("base space must support scaling")
    label = f"lemloc({E.label},|x|={len(x)})"
    if not x:
        sp: Space = scaled
        sp.label = label
    else:
        witness = PolytopalSpace(E.n, np.asarray(xstars, dtype=np.float64)[list(x)],
                                 f"witness({len(x)})", seminorm=True)
        sp = MaxSpace(E.n, (scaled, witness), label)
    return sp


def lemloc_system_from_signset(T: SignSet) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean-base system from a separated sign family: x_t = x_t* = t/sqrt(n).

    Unit Euclidean norm gives C = 1; the pairwise correlation bound theta*n
    scales to |x_s*(x_t)| <= theta.
    """
    V = T.vectors.astype(np.float64) / math.sqrt(T.n)
    return V, V.copy()
