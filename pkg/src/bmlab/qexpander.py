"""Unitary tuples, averaging-channel defects, and tensor-overlap separation.

A tuple u = (u_1 .. u_n) of N x N unitaries acts on matrices by
x -> sum_j u_j x u_j*; its *defect* is the largest singular value of that
map on the traceless subspace, divided by n.  Tuples with small defect
mix well, and two tuples are separated when the spectral norm of
sum_j s_j (x) conj(t_j) stays below (1 - delta) n.  Both quantities feed
the matrix-level space families F_x and their identity-map certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bmdist import Certificate
from .bounds import LogLevelNumber

__all__ = [
    "UnitaryTuple",
    "OperatorSpaceFx",
    "SeparatedUnitaryFamily",
    "haar_tuple",
    "identity_tuple",
    "defect",
    "defect_result",
    "defect_kron",
    "overlap_norm",
    "separated_family",
    "make_fx",
    "fx_norm_level1",
    "fx_norm_levelN",
    "dn_identity_certificate",
    "trace_tail_experiment",
    "average_defect_constant",
    "identity_counterexample",
    "eps_chain",
]

UNITARITY_TOL = 1e-10
DENSE_KRON_LIMIT = 32  # materialise N^2 x N^2 matrices up to this N


@dataclass(eq=False)
class UnitaryTuple:
    """n unitary N x N matrices with a lazily cached defect."""

    n: int
    N: int
    matrices: np.ndarray
    seed: int | None = None
    _defect: float | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.matrices = np.asarray(self.matrices, dtype=np.complex128)
        if self.matrices.shape != (self.n, self.N, self.N):
            raise ValueError(f"matrices must be ({self.n}, {self.N}, {self.N})")
        res = self.unitarity_residual()
        if res > UNITARITY_TOL:
            raise ValueError(f"unitarity residual {res:.3e} exceeds {UNITARITY_TOL}")

    def unitarity_residual(self) -> float:
        eye = np.eye(self.N)
        prods = np.einsum("jba,jbc->jac", self.matrices.conj(), self.matrices)
        return float(np.abs(prods - eye[None]).max())

    @property
    def defect(self) -> float:
        if self._defect is None:
            self._defect = defect(self)
        return self._defect

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "seed": self.seed,
            "re": self.matrices.real.tolist(),
            "im": self.matrices.imag.tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "UnitaryTuple":
        mats = np.array(obj["re"]) + 1j * np.array(obj["im"])
        return UnitaryTuple(obj["n"], obj["N"], mats, obj.get("seed"))


def haar_tuple(n: int, N: int, seed: int = 0) -> UnitaryTuple:
    """Haar-distributed tuple: QR of a complex Gaussian with phase correction.

    Normalising each QR factor by the phases of the triangular diagonal makes
    the distribution exactly invariant; a fixed seed gives bit-identical
    output.
    """
    if n < 1 or N < 1:
        raise ValueError("n and N must be >= 1")
    rng = np.random.default_rng(seed)
    mats = np.empty((n, N, N), dtype=np.complex128)
    for j in range(n):
        z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
        q, r = np.linalg.qr(z)
        d = np.diagonal(r)
        mats[j] = q * (d / np.abs(d))
    return UnitaryTuple(n, N, mats, seed)


def identity_tuple(n: int, N: int) -> UnitaryTuple:
    return UnitaryTuple(n, N, np.stack([np.eye(N, dtype=np.complex128)] * n))


# ----------------------------------------------------------------------
# defect: two routes
# ----------------------------------------------------------------------


def _traceless(x: np.ndarray) -> np.ndarray:
    N = x.shape[0]
    return x - (np.trace(x) / N) * np.eye(N)


def _power_iteration_defect(u: np.ndarray, start_seed: int,
                            tol: float = 1e-10, max_iter: int = 10_000):
    """Largest singular value of the averaging map on traceless matrices.

    Applies x -> sum u_j x u_j* and its adjoint directly (never materialising
    the N^2 x N^2 matrix), re-projecting against the identity every step.
    Rayleigh quotients of the composed map increase monotonically from a
    random start, so the stop rule is a relative increment threshold.
    """
    n, N, _ = u.shape
    uh = u.conj().transpose(0, 2, 1)

    # pairwise summation over j keeps power-of-two tuple sums exact
    def phi(x):
        return np.matmul(np.matmul(u, x), uh).sum(axis=0)

    def phi_adj(x):
        return np.matmul(np.matmul(uh, x), u).sum(axis=0)

    rng = np.random.default_rng(start_seed)
    x = _traceless(rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)))
    nx = np.linalg.norm(x)
    if nx == 0:  # pragma: no cover
        return 0.0, 0, True
    x /= nx
    lam = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = _traceless(phi_adj(_traceless(phi(x))))
        lam_new = float(np.vdot(x, y).real / np.vdot(x, x).real)
        ny = float(np.linalg.norm(y))
        if ny == 0:
            return 0.0, it, True
        x = y / ny
        if it > 2 and abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            converged = True
            break
        lam = lam_new
    return math.sqrt(max(lam, 0.0)) / n, it, converged


@dataclass
class DefectResult:
    value: float
    converged: bool
    iterations: int
    starts_agree: bool


def defect_result(u: UnitaryTuple, tol: float = 1e-10, max_iter: int = 10_000) -> DefectResult:
    """Power-iteration defect with a two-start agreement check.

    Two independent random starts must agree to 1e-8, otherwise the result
    is flagged (``starts_agree`` false) rather than silently accepted.
    """
    base = (u.seed if u.seed is not None else 0) * 2 + 1
    v1, it1, c1 = _power_iteration_defect(u.matrices, base, tol, max_iter)
    v2, it2, c2 = _power_iteration_defect(u.matrices, base + 1, tol, max_iter)
    agree = abs(v1 - v2) <= 1e-8
    return DefectResult(max(v1, v2), c1 and c2, max(it1, it2), agree)


def defect(u: UnitaryTuple, **kw) -> float:
    """Defect in [0, 1]; 1 exactly for the constant-identity tuple."""
    return defect_result(u, **kw).value


def kron_overlap_matrix(s: UnitaryTuple, t: UnitaryTuple) -> np.ndarray:
    """sum_j s_j (x) conj(t_j) as a dense N^2 x N^2 matrix."""
    return np.einsum("jab,jcd->acbd", s.matrices, t.matrices.conj()).reshape(
        s.N * t.N, s.N * t.N
    )


def defect_kron(u: UnitaryTuple) -> float:
    """Dense route: ||sum u_j (x) conj(u_j) (1 - P)|| / n with P the identity projector."""
    if u.N > DENSE_KRON_LIMIT:
        raise ValueError(f"dense route limited to N <= {DENSE_KRON_LIMIT}")
    K = kron_overlap_matrix(u, u)
    v = np.eye(u.N, dtype=np.complex128).ravel() / math.sqrt(u.N)
    K1 = K - np.outer(K @ v, v.conj())
    return float(np.linalg.svd(K1, compute_uv=False)[0]) / u.n


# ----------------------------------------------------------------------
# tensor overlaps
# ----------------------------------------------------------------------


def _spectral_norm_implicit(s: np.ndarray, t: np.ndarray, seed: int = 0,
                            tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Power iteration on A*A for A = sum s_j (x) conj(t_j), applied implicitly."""
    n, N, _ = s.shape

    def A(x):  # row-major Kronecker action: A vec(x) = vec(sum_j s_j x t_j^dagger)
        return np.einsum("jab,bc,jdc->ad", s, x, t.conj(), optimize=True)

    def Ah(x):  # adjoint: sum_j s_j^dagger x t_j
        return np.einsum("jba,bc,jcd->ad", s.conj(), x, t, optimize=True)

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = Ah(A(x))
        lam_new = float(np.real(np.vdot(x, y)))
        ny = float(np.linalg.norm(y))
        if ny == 0:
            return 0.0
        x = y / ny
        if it > 2 and abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return math.sqrt(max(lam_new, 0.0))
        lam = lam_new
    return math.sqrt(max(lam, 0.0))


def overlap_norm(s: UnitaryTuple, t: UnitaryTuple) -> float:
    """Spectral norm of sum_j s_j (x) conj(t_j) in the N^2 x N^2 matrix algebra.

    Equals n exactly when t = s (the vectorised identity is an eigenvector);
    for N = 1 it reduces to the modulus of the scalar correlation.  Dense
    singular values for N <= 32, implicit power iteration beyond.
    """
    if (s.n, s.N) != (t.n, t.N):
        raise ValueError("tuples must share (n, N)")
    if s.N <= DENSE_KRON_LIMIT:
        A = kron_overlap_matrix(s, t)
        return float(np.linalg.svd(A, compute_uv=False)[0])
    return _spectral_norm_implicit(s.matrices, t.matrices)


# ----------------------------------------------------------------------
# separated families
# ----------------------------------------------------------------------


@dataclass(eq=False)
class SeparatedUnitaryFamily:
    """Tuples with defect <= epsilon and pairwise overlap <= (1-delta) n."""

    T: list
    epsilon: float
    delta: float
    pairwise_overlaps: np.ndarray
    n: int
    N: int
    stats: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.T)

    def separation_threshold(self) -> float:
        return (1.0 - self.delta) * self.n

    def verify(self) -> dict:
        """Full re-verification of membership and pairwise separation."""
        defects = [defect(u) for u in self.T]
        thr = self.separation_threshold()
        k = self.size
        ov = np.zeros((k, k))
        ok = True
        for i in range(k):
            for j in range(i, k):
                v = overlap_norm(self.T[i], self.T[j])
                ov[i, j] = ov[j, i] = v
                if i == j and abs(v - self.n) > 1e-8:
                    ok = False
                if i != j and v > thr + 1e-9:
                    ok = False
        if any(d > self.epsilon + 1e-9 for d in defects):
            ok = False
        return {
            "ok": ok,
            "defects": defects,
            "max_offdiag_overlap": float(np.max(ov - np.diag(np.diag(ov)))) if k > 1 else 0.0,
            "max_diag_error": float(np.abs(np.diag(ov) - self.n).max()) if k else 0.0,
        }


def separated_family(n: int, N: int, epsilon: float, delta: float,
                     max_samples: int, seed: int = 0,
                     target_beta: float = 0.1) -> SeparatedUnitaryFamily:
    """Rejection-sample small-defect tuples, then greedily enforce separation.

    A sampled tuple is kept when its defect is at most epsilon and its
    overlap with every accepted member stays at or below (1 - delta) n.
    The family records acceptance statistics and, for context only, the
    theoretical target size exp(target_beta * n * N^2) as a tower number.
    """
    if not (0.0 < epsilon < 1.0) or not (0.0 < delta < 1.0):
        raise ValueError("epsilon and delta must lie in (0,1)")
    thr = (1.0 - delta) * n
    accepted: list[UnitaryTuple] = []
    rej_defect = rej_overlap = 0
    for k in range(max_samples):
        u = haar_tuple(n, N, seed + k)
        if u.defect > epsilon:
            rej_defect += 1
            continue
        if any(overlap_norm(u, v) > thr for v in accepted):
            rej_overlap += 1
            continue
        accepted.append(u)
    m = len(accepted)
    ov = np.zeros((m, m))
    for i in range(m):
        for j in range(i, m):
            ov[i, j] = ov[j, i] = overlap_norm(accepted[i], accepted[j])
    stats = {
        "samples": max_samples,
        "rejected_defect": rej_defect,
        "rejected_overlap": rej_overlap,
        "target_size": LogLevelNumber.from_log(target_beta * n * N * N).to_json(),
        "target_beta": target_beta,
    }
    return SeparatedUnitaryFamily(accepted, epsilon, delta, ov, n, N, stats)


# ----------------------------------------------------------------------
# matrix-level spaces F_x
# ----------------------------------------------------------------------


@dataclass(eq=False)
class OperatorSpaceFx:
    """Span of the generators e_jj (+) [(+)_{t in x} t_j], with both norm levels.

    The scalar-level norm of coefficients a is
    max(max_j |a_j|, max_{t in x} ||sum_j a_j t_j||); the matrix-level norm
    of N x N coefficients A_j replaces products by Kronecker products.
    Generators are unitaries, so the j-th generator has norm exactly one and
    the coordinate sandwich sup|a_j| <= ||a|| <= sum|a_j| holds.
    """

    x: tuple
    n: int
    N: int
    indices: tuple = ()
    label: str = "F_x"

    def __post_init__(self) -> None:
        for t in self.x:
            if (t.n, t.N) != (self.n, self.N):
                raise ValueError("subset tuples must share (n, N)")


def make_fx(family: Sequence[UnitaryTuple], indices: Sequence[int],
            label: str | None = None) -> OperatorSpaceFx:
    idx = tuple(int(i) for i in indices)
    sub = tuple(family[i] for i in idx)
    if sub:
        n, N = sub[0].n, sub[0].N
    else:
        raise ValueError("empty subsets need explicit dimensions; use OperatorSpaceFx directly")
    return OperatorSpaceFx(sub, n, N, idx, label or f"F_x(|x|={len(idx)})")


def _spec_norm(A: np.ndarray) -> float:
    return float(np.linalg.svd(A, compute_uv=False)[0])


def fx_norm_level1(F: OperatorSpaceFx, a: Sequence[complex]) -> float:
    """Scalar-level norm max(sup_j |a_j|, max_{t in x} ||sum_j a_j t_j||)."""
    a = np.asarray(a, dtype=np.complex128)
    if a.shape != (F.n,):
        raise ValueError(f"need {F.n} scalar coefficients")
    best = float(np.abs(a).max()) if a.size else 0.0
    for t in F.x:
        best = max(best, _spec_norm(np.tensordot(a, t.matrices, axes=(0, 0))))
    return best


def fx_norm_levelN(F: OperatorSpaceFx, A: np.ndarray) -> float:
    """Matrix-level norm max(sup_j ||A_j||, max_{t in x} ||sum_j A_j (x) t_j||)."""
    A = np.asarray(A, dtype=np.complex128)
    if A.shape != (F.n, F.N, F.N):
        raise ValueError(f"need {F.n} coefficient matrices of size {F.N}")
    best = max(_spec_norm(A[j]) for j in range(F.n))
    for t in F.x:
        big = np.einsum("jab,jcd->acbd", A, t.matrices).reshape(F.N ** 2, F.N ** 2)
        best = max(best, _spec_norm(big))
    return best


def dn_identity_certificate(Fx: OperatorSpaceFx, Fy: OperatorSpaceFx,
                            family: Sequence[UnitaryTuple], delta: float) -> Certificate:
    """Matrix-level identity witness: ratio >= 1/(1-delta) for Id: F_y -> F_x.

    The witness coefficients are conj(s_j) for the first tuple s in x\\y;
    they amplify to exactly n against the s-block of F_x while every block
    of F_y stays at or below (1-delta) n.  Requires (1-delta) n >= 1.
    """
    if Fx.indices == Fy.indices:
        raise ValueError("x and y must be distinct subsets")
    if len(Fx.indices) != len(Fy.indices):
        raise ValueError("subsets must have equal cardinality")
    if (1.0 - delta) * Fx.n < 1.0:
        raise ValueError(f"requires (1-delta)*n >= 1, got {(1.0 - delta) * Fx.n}")
    diff = [i for i in Fx.indices if i not in set(Fy.indices)]
    if not diff:
        raise RuntimeError("x contained in y; impossible for equal-size distinct subsets")
    w_idx = diff[0]
    s = family[w_idx]
    A = s.matrices.conj()
    src = fx_norm_levelN(Fx, A)
    tgt = fx_norm_levelN(Fy, A)
    if abs(src - Fx.n) > 1e-8:
        raise AssertionError(f"amplified witness norm {src} differs from n = {Fx.n}")
    thr = max(1.0, (1.0 - delta) * Fx.n)
    if tgt > thr + 1e-8:
        raise AssertionError(f"target norm {tgt} exceeds (1-delta)n = {thr}")
    return Certificate(
        "identity-witness", A, src, tgt, src / tgt,
        meta={"level": Fx.N, "witness_index": w_idx,
              "x": list(Fx.indices), "y": list(Fy.indices), "delta": delta},
    )


# ----------------------------------------------------------------------
# concentration experiments
# ----------------------------------------------------------------------


@dataclass
class TraceTailResult:
    frequency: float
    reference: dict
    s: float
    samples: int
    mean: float
    std: float
    values: np.ndarray | None = None  # per-sample statistics, for CSV export

    def to_json(self) -> dict:
        return {"frequency": self.frequency, "reference": self.reference,
                "s": self.s, "samples": self.samples, "mean": self.mean, "std": self.std}


def trace_tail_experiment(n: int, N: int, s: float, samples: int,
                          seed: int = 0) -> TraceTailResult:
    """Monte-Carlo tail of Re(tr(sum v_j)/N) over Haar tuples.

    Reference curves exp(-c s^2 N^2 / n) are reported for c in
    {1/4, 1/2, 1}; the constant itself is never asserted.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    vals = np.empty(samples)
    for k in range(samples):
        tot = 0.0
        for _ in range(n):
            z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
            q, r = np.linalg.qr(z)
            d = np.diagonal(r)
            tot += np.trace(q * (d / np.abs(d))).real
        vals[k] = tot / N
    freq = float(np.mean(vals > s))
    ref = {str(c): math.exp(-c * s * s * N * N / n) for c in (0.25, 0.5, 1.0)}
    return TraceTailResult(freq, ref, s, samples, float(vals.mean()), float(vals.std()),
                           values=vals)


@dataclass
class AverageDefectRow:
    n: int
    mean_norm: float
    ratio: float
    defects: list


@dataclass
class AverageDefectResult:
    rows: list
    N: int
    samples: int
    C_emp: float

    def membership_lower_bound(self, eps: float, n: int) -> float:
        """Markov bound 1 - (C_emp/eps)/sqrt(n) on the small-defect measure."""
        return 1.0 - (self.C_emp / eps) / math.sqrt(n)

    def empirical_membership(self, eps: float, n: int) -> float:
        row = next(r for r in self.rows if r.n == n)
        return float(np.mean([d * n <= eps * n for d in row.defects]))

    def to_json(self) -> dict:
        return {"N": self.N, "samples": self.samples, "C_emp": self.C_emp,
                "rows": [{"n": r.n, "mean_norm": r.mean_norm, "ratio": r.ratio}
                         for r in self.rows]}


def average_defect_constant(n_list: Sequence[int], N: int, samples: int,
                            seed: int = 0) -> AverageDefectResult:
    """Empirical mean of ||sum u_j (x) conj(u_j) (1-P)|| over Haar tuples, per n.

    The mean scales like a constant times sqrt(n); the per-n ratio to
    sqrt(n) is tabulated and its maximum reported as the fitted constant.
    """
    rows = []
    for idx, n in enumerate(n_list):
        norms = []
        defs = []
        for k in range(samples):
            u = haar_tuple(n, N, seed + 10_000 * idx + k)
            d = u.defect
            defs.append(d)
            norms.append(d * n)
        mean = float(np.mean(norms))
        rows.append(AverageDefectRow(int(n), mean, mean / math.sqrt(n), defs))
    C = max(r.ratio for r in rows)
    return AverageDefectResult(rows, N, samples, C)


@dataclass
class CounterexampleResult:
    frequency: float
    threshold: float
    ref_exp_nN: float
    ref_exp_nN2: float
    samples: int

    def to_json(self) -> dict:
        return {"frequency": self.frequency, "threshold": self.threshold,
                "ref_exp_nN": self.ref_exp_nN, "ref_exp_nN2": self.ref_exp_nN2,
                "samples": self.samples}


def identity_counterexample(n: int, N: int, delta: float, samples: int,
                            seed: int = 0) -> CounterexampleResult:
    """Mass of the overlap neighbourhood of the constant-identity tuple.

    Against u = (I .. I) the overlap with v is just ||sum v_j||, so the
    neighbourhood {v : ||sum v_j|| > (1-delta) n} has measure bounded below
    by a per-coordinate alignment event, of order exp(-c n N).  The
    frequency is reported next to both exp(-nN) and exp(-nN^2) so the decay
    rate can be compared.
    """
    thr = (1.0 - delta) * n
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(samples):
        tot = np.zeros((N, N), dtype=np.complex128)
        for _ in range(n):
            z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
            q, r = np.linalg.qr(z)
            d = np.diagonal(r)
            tot += q * (d / np.abs(d))
        if _spec_norm(tot) > thr + 1e-9:
            hits += 1
    return CounterexampleResult(hits / samples, thr,
                                math.exp(-n * N), math.exp(-n * N * N), samples)


def eps_chain(delta: float) -> tuple[float, float, float]:
    """Parameter chain (epsilon, epsilon', xi) splitting 1 - delta.

    epsilon' = ((1-delta)/6)^3 and epsilon = (1-delta)/4 satisfy
    3 epsilon'^(1/3) + 2 epsilon = 1 - delta (re-verified); the net mesh is
    xi = epsilon'/4.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must be in (0,1), got {delta}")
    eps_prime = ((1.0 - delta) / 6.0) ** 3
    eps = (1.0 - delta) / 4.0
    xi = eps_prime / 4.0
    resid = abs(3.0 * eps_prime ** (1.0 / 3.0) + 2.0 * eps - (1.0 - delta))
    if resid > 1e-12:
        raise AssertionError(f"split identity residual {resid:.3e}")
    return eps, eps_prime, xi
