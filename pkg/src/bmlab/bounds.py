"""Tower-scale arithmetic for counting bounds.

The quantities produced by the covering / packing calculators routinely
exceed double range (they are of the order exp(exp(b*n))), so every chain
here works with :class:`LogLevelNumber`, a (level, value) representation
where level 0 means ``value``, level 1 means ``exp(value)`` and level 2
means ``exp(exp(value))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "LogLevelNumber",
    "LowerChainResult",
    "UpperChainResult",
    "MeasureChainResult",
    "HHIterationResult",
    "SphericalVariantResult",
    "lower_chain",
    "liminf_constant",
    "liminf_exponent_identity",
    "upper_chain",
    "os_claim_counter",
    "measure_chain",
    "hh_iteration",
    "spherical_variant_bound",
]

# Values above this are promoted one level up so that downstream products
# and powers stay inside double range.
_PROMOTE = 500.0


@dataclass(frozen=True, order=False)
class LogLevelNumber:
    """A magnitude stored as (level, value).

    level 0: the number is ``value`` (any finite real).
    level 1: the number is ``exp(value)`` (always positive).
    level 2: the number is ``exp(exp(value))``.

    Canonicalisation only ever promotes (level goes up when value exceeds
    the promotion threshold); representations are therefore not unique and
    comparisons are semantic, never field-wise.
    """

    level: int
    value: float

    # -- constructors -------------------------------------------------

    @staticmethod
    def of(x: float) -> "LogLevelNumber":
        """Level-0 constructor with promotion for large positive values."""
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite magnitude {x!r}")
        if x > _PROMOTE:
            return LogLevelNumber.from_log(math.log(x))
        return LogLevelNumber(0, x)

    @staticmethod
    def from_log(logx: float) -> "LogLevelNumber":
        """The number exp(logx)."""
        logx = float(logx)
        if not math.isfinite(logx):
            raise ValueError(f"non-finite exponent {logx!r}")
        if logx > _PROMOTE:
            return LogLevelNumber(2, math.log(logx))
        return LogLevelNumber(1, logx)

    @staticmethod
    def from_loglog(loglogx: float) -> "LogLevelNumber":
        """The number exp(exp(loglogx))."""
        return LogLevelNumber(2, float(loglogx))

    # -- accessors -----------------------------------------------------

    def log(self) -> "LogLevelNumber":
        """Natural log, one level down (requires a positive number)."""
        if self.level == 2:
            return LogLevelNumber(1, self.value)
        if self.level == 1:
            return LogLevelNumber(0, self.value)
        if self.value <= 0:
            raise ValueError("log of a non-positive level-0 number")
        return LogLevelNumber(0, math.log(self.value))

    def log_float(self) -> float:
        """Natural log as a float (may overflow to inf at level 2)."""
        if self.level == 0:
            if self.value <= 0:
                raise ValueError("log of a non-positive level-0 number")
            return math.log(self.value)
        if self.level == 1:
            return self.value
        try:
            return math.exp(self.value)
        except OverflowError:
            return math.inf

    def as_float(self) -> float:
        """Float value; inf when the magnitude exceeds double range."""
        if self.level == 0:
            return self.value
        try:
            if self.level == 1:
                return math.exp(self.value)
            return math.exp(math.exp(self.value))
        except OverflowError:
            return math.inf

    def is_positive(self) -> bool:
        return self.level > 0 or self.value > 0

    # -- arithmetic ----------------------------------------------------

    def __mul__(self, other: "LogLevelNumber") -> "LogLevelNumber":
        if not isinstance(other, LogLevelNumber):
            return NotImplemented
        if self.level == 0 and other.level == 0:
            raw = self.value * other.value
            if abs(raw) <= math.exp(_PROMOTE):
                return LogLevelNumber.of(raw)
        if not (self.is_positive() and other.is_positive()):
            raise ValueError("mixed-level product requires positive factors")
        return _exp_of(_add_loglevel(self.log(), other.log()))

    def __pow__(self, p: float) -> "LogLevelNumber":
        p = float(p)
        if p == 0:
            return LogLevelNumber(0, 1.0)
        if not self.is_positive():
            raise ValueError("power of a non-positive magnitude")
        return _exp_of(_scale_loglevel(self.log(), p))

    # -- order ---------------------------------------------------------

    def __lt__(self, other: "LogLevelNumber") -> bool:
        return _cmp(self, other) < 0

    def __le__(self, other: "LogLevelNumber") -> bool:
        return _cmp(self, other) <= 0

    def __gt__(self, other: "LogLevelNumber") -> bool:
        return _cmp(self, other) > 0

    def __ge__(self, other: "LogLevelNumber") -> bool:
        return _cmp(self, other) >= 0

    def eq_value(self, other: "LogLevelNumber") -> bool:
        """Semantic equality (representations may differ)."""
        return _cmp(self, other) == 0

    def __repr__(self) -> str:
        if self.level == 0:
            return f"{self.value:.6g}"
        if self.level == 1:
            return f"exp({self.value:.6g})"
        return f"exp(exp({self.value:.6g}))"

    def to_json(self) -> dict:
        return {"level": self.level, "value": self.value}


def _cmp(a: LogLevelNumber, b: LogLevelNumber) -> int:
    ap, bp = a.is_positive(), b.is_positive()
    if ap and not bp:
        return 1
    if bp and not ap:
        return -1
    if not ap and not bp:
        # both are non-positive level-0 reals
        return (a.value > b.value) - (a.value < b.value)
    if a.level == 0 and b.level == 0:
        return (a.value > b.value) - (a.value < b.value)
    return _cmp(a.log(), b.log())


def _exp_of(x: LogLevelNumber) -> LogLevelNumber:
    """exp of a LogLevelNumber, i.e. shift one level up."""
    if x.level == 0:
        return LogLevelNumber.from_log(x.value)
    if x.level == 1:
        return LogLevelNumber(2, x.value)
    raise OverflowError("triple-exponential magnitude out of representable range")


def _add_loglevel(a: LogLevelNumber, b: LogLevelNumber) -> LogLevelNumber:
    """Sum of two LogLevelNumbers, needed for products of big factors.

    Both operands come from .log() calls so they live at level <= 1 in
    all supported chains; the dominant term wins with a log1p correction.
    """
    if a.level == 0 and b.level == 0:
        s = a.value + b.value
        return LogLevelNumber.of(s) if abs(s) <= math.exp(_PROMOTE) else LogLevelNumber.from_log(math.log(s))
    hi, lo = (a, b) if _cmp(a, b) >= 0 else (b, a)
    if hi.level >= 2:
        # lo is negligible at this scale: exp(exp(v)) + anything representable
        return hi
    # hi is level 1: hi + lo = exp(hi.value) * (1 + lo/exp(hi.value))
    lo_over_hi = _ratio_float(lo, hi)
    return LogLevelNumber.from_log(hi.value + math.log1p(lo_over_hi))


def _ratio_float(lo: LogLevelNumber, hi: LogLevelNumber) -> float:
    """lo/hi as a float, assuming 0 <= lo <= hi and hi positive."""
    if not lo.is_positive():
        return 0.0
    diff = lo.log_float() - hi.log_float()
    if diff < -700:
        return 0.0
    return math.exp(diff)


def _scale_loglevel(x: LogLevelNumber, p: float) -> LogLevelNumber:
    """p * x for a log-level x (level <= 1 in supported chains)."""
    if p < 0:
        raise ValueError("negative powers not supported for tower magnitudes")
    if x.level == 0:
        raw = x.value * p
        return LogLevelNumber.of(raw)
    if x.level == 1:
        return LogLevelNumber.from_log(x.value + math.log(p))
    return LogLevelNumber(2, x.value + math.log1p(0.0))  # pragma: no cover


# ----------------------------------------------------------------------
# counting chains
# ----------------------------------------------------------------------


@dataclass
class LowerChainResult:
    x_lower: LogLevelNumber
    passes_target: bool
    n0_hint: int
    eta: float
    K: float
    log_family: float
    log_packing: float
    penalty: float
    target_log: float

    def to_json(self) -> dict:
        return {
            "x_lower": self.x_lower.to_json(),
            "passes_target": self.passes_target,
            "n0_hint": self.n0_hint,
            "intermediate": {
                "eta": self.eta,
                "K": self.K,
                "log_family": self.log_family,
                "log_packing": self.log_packing,
                "penalty": self.penalty,
                "target_log": self.target_log,
            },
        }


def _lower_chain_parts(n: float, theta: float, r: float):
    eta = 1.0 / (r * theta) - 1.0
    K = 0.5 * math.exp(theta * theta * n / 2.0)
    log_family = K / 2.0
    penalty = 4.0 * n ** 3 / eta
    log_packing = log_family - penalty
    target_log = math.exp(theta * theta * n / 4.0)
    return eta, K, log_family, penalty, log_packing, target_log


def lower_chain(n: int, theta: float, r: float) -> LowerChainResult:
    """Packing-size chain: family size minus the per-center covering cost.

    Computes eta = 1/(r*theta) - 1, K = (1/2) exp(theta^2 n / 2), a family
    of at least exp(K/2) half-subsets, and the surviving packing size
    exp(K/2 - 4 n^3 / eta).  The chain passes when the surviving log-size
    reaches the double-exponential target exp(theta^2 n / 4); ``n0_hint``
    is the smallest n for which it does.
    """
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must be in (0,1), got {theta}")
    if not (1.0 < r < 1.0 / theta):
        raise ValueError(f"r must satisfy 1 < r < 1/theta = {1.0/theta:.6g}, got {r}")
    eta, K, log_family, penalty, log_packing, target_log = _lower_chain_parts(n, theta, r)
    passes = log_packing >= target_log
    x_lower = LogLevelNumber.from_log(log_packing) if log_packing > 0 else LogLevelNumber(0, 0.0)

    def ok(m: int) -> bool:
        parts = _lower_chain_parts(m, theta, r)
        return parts[4] >= parts[5]

    hi = 8
    while not ok(hi):
        hi *= 2
        if hi > 10 ** 9:
            raise RuntimeError("no passing n found below 1e9")
    lo = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return LowerChainResult(x_lower, passes, lo, eta, K, log_family, log_packing, penalty, target_log)


def liminf_constant(r: float) -> float:
    """Asymptotic loglog growth constant 1/(2 r^2) for packing at radius r^2.

    Accepts r >= 1 (the boundary value evaluates to 1/2).  The exponent
    family theta^2/2 specialised at theta = 1/r gives the same constant;
    see :func:`liminf_exponent_identity` for the exact-arithmetic check.
    """
    if r < 1.0:
        raise ValueError(f"r must be >= 1, got {r}")
    return 1.0 / (2.0 * r * r)


def liminf_exponent_identity(r: Fraction) -> bool:
    """Exact check that theta^2/2 at theta = 1/r equals 1/(2 r^2)."""
    r = Fraction(r)
    if r <= 0:
        raise ValueError("r must be positive")
    theta = 1 / r
    return theta * theta / 2 == 1 / (2 * r * r)


@dataclass
class UpperChainResult:
    bound: LogLevelNumber
    m: float
    m_is_exact: bool
    log_bound: float
    loglog_bound: float

    def to_json(self) -> dict:
        return {
            "bound": self.bound.to_json(),
            "intermediate": {
                "m": self.m,
                "m_is_exact": self.m_is_exact,
                "log_bound": self.log_bound,
                "loglog_bound": self.loglog_bound,
            },
        }


def upper_chain(n: int, eps: float) -> UpperChainResult:
    """Covering-number upper bound via nets of subspaces of a big sup-norm space.

    With m = floor((1 + 2/eps)^n) ambient coordinates and mesh eps/n, the
    covering count is at most (3n/eps)^(n*m); returned as a tower number
    whose log is n * m * log(3n/eps).
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must be in (0,1), got {eps}")
    if n < 1:
        raise ValueError("n must be >= 1")
    log_m = n * math.log1p(2.0 / eps)
    factor = math.log(3.0 * n / eps)
    if log_m < math.log(2 ** 53):
        m = float(math.floor((1.0 + 2.0 / eps) ** n))
        m_exact = True
        log_bound = n * m * factor
        loglog = math.log(log_bound)
        bound = LogLevelNumber.from_log(log_bound)
    else:
        m = math.inf
        m_exact = False
        loglog = math.log(n) + log_m + math.log(factor)
        bound = LogLevelNumber.from_loglog(loglog)
        log_bound = math.inf
    return UpperChainResult(bound, m, m_exact, log_bound, loglog)


def claim_counter_generic(n: int, eta: float, exponent: float) -> LogLevelNumber:
    """(1 + 4n/eta)^exponent as a tower number."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    return LogLevelNumber.from_log(exponent * math.log1p(4.0 * n / eta))


def os_claim_counter(n: int, r: float, delta: float) -> LogLevelNumber:
    """Matrix-level near-ball count (1+4n/eta)^(2 n^2), eta from 1+eta = 1/(r(1-delta)).

    The exponent is exactly twice the scalar-level count, reflecting the
    doubled parameter count of complex matrices.
    """
    theta = 1.0 - delta
    if r * theta >= 1.0:
        raise ValueError(
            f"requires r*(1-delta) < 1 (eta is defined by 1+eta = 1/(r(1-delta))); got {r * theta}"
        )
    eta = 1.0 / (r * theta) - 1.0
    return claim_counter_generic(n, eta, 2.0 * n * n)


@dataclass
class MeasureChainResult:
    bound: LogLevelNumber
    n_delta_hint: int
    eps: float
    eps_prime: float
    xi: float
    c_delta: float
    net_log: float
    tail_log: float

    def to_json(self) -> dict:
        return {
            "bound": self.bound.to_json(),
            "n_delta_hint": self.n_delta_hint,
            "intermediate": {
                "eps": self.eps,
                "eps_prime": self.eps_prime,
                "xi": self.xi,
                "c_delta": self.c_delta,
                "net_log": self.net_log,
                "tail_log": self.tail_log,
            },
        }


def measure_chain(n: int, N: int, delta: float, c_assumed: float = 0.5,
                  gamma: float = 6.0) -> MeasureChainResult:
    """Bad-set measure bound (4 gamma/eps')^(4 N^2) * exp(-c (eps'/2)^2 N^2 n).

    ``c_assumed`` stands in for the unnamed absolute constant of the trace
    tail and ``gamma`` for the unitary-net constant; both are reported, never
    asserted.  ``n_delta_hint`` is the smallest n at which the net factor is
    absorbed, i.e. (4 gamma/eps')^4 <= exp(c_delta * n) with
    c_delta = (1/2) c (eps'/2)^2.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must be in (0,1), got {delta}")
    if N < 1 or n < 1:
        raise ValueError("n and N must be >= 1")
    if c_assumed <= 0:
        raise ValueError("c_assumed must be positive")
    eps_prime = ((1.0 - delta) / 6.0) ** 3
    eps = (1.0 - delta) / 4.0
    xi = eps_prime / 4.0
    net_log = 4.0 * N * N * math.log(4.0 * gamma / eps_prime)
    tail_log = c_assumed * (eps_prime / 2.0) ** 2 * N * N * n
    c_delta = 0.5 * c_assumed * (eps_prime / 2.0) ** 2
    bound = LogLevelNumber.from_log(net_log - tail_log)
    hint = max(1, math.ceil(4.0 * math.log(4.0 * gamma / eps_prime) / c_delta))
    return MeasureChainResult(bound, hint, eps, eps_prime, xi, c_delta, net_log, tail_log)


@dataclass
class HHIterationResult:
    bound: LogLevelNumber
    headline: LogLevelNumber | None
    condition_holds: bool
    condition_n: float
    k: int
    r_rounded: float
    r_requested: float

    def to_json(self) -> dict:
        return {
            "bound": self.bound.to_json(),
            "headline": self.headline.to_json() if self.headline is not None else None,
            "condition_holds": self.condition_holds,
            "condition_n": self.condition_n,
            "k": self.k,
            "r_rounded": self.r_rounded,
            "r_requested": self.r_requested,
        }


def hh_iteration(n: int, N: int, r: float) -> HHIterationResult:
    """Halving iteration for sup-norm embeddings of homogeneous Hilbertian spaces.

    The radius is rounded to the nearest power of two 2^(k+1), k >= 0, and
    the iterated embedding-size bound 2^k * exp(4 n N^2 / 2^k) is returned.
    When n >= (r log r)/4 the 2^k factor is absorbed and the simplified
    headline exp(8 n N^2 / 2^k) is also reported (its radius parameter is
    r/2 = 2^k, i.e. the pre-doubling radius of the iteration step).
    """
    if n < 1 or N < 1:
        raise ValueError("n and N must be >= 1")
    if r < 1.5:
        raise ValueError("r must round to a power of two >= 2")
    k = max(0, round(math.log2(r)) - 1)
    r_rounded = 2.0 ** (k + 1)
    half = 2.0 ** k
    bound_log = k * math.log(2.0) + 4.0 * n * N * N / half
    bound = LogLevelNumber.from_log(bound_log)
    condition_n = r_rounded * math.log(r_rounded) / 4.0
    holds = n >= condition_n
    headline = LogLevelNumber.from_log(8.0 * n * N * N / half) if holds else None
    return HHIterationResult(bound, headline, holds, condition_n, k, r_rounded, float(r))


@dataclass
class SphericalVariantResult:
    bound: LogLevelNumber
    significant: bool
    log_bound: float
    threshold: float

    def to_json(self) -> dict:
        return {
            "bound": self.bound.to_json(),
            "significant": self.significant,
            "log_bound": self.log_bound,
            "threshold": self.threshold,
        }


def spherical_variant_bound(n: int, theta: float, K_theta: int,
                            gamma: float = math.sqrt(2.0 / math.pi)) -> SphericalVariantResult:
    """Packing bound gamma * 2^K * K^(-1/2) * exp(-4 n^2/theta^2) from a spherical code.

    ``significant`` flags whether K_theta exceeds the 4 n^2/theta^2 threshold
    at which the exponential penalty is beaten.
    """
    if K_theta < 2:
        raise ValueError("K_theta must be >= 2")
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must be in (0,1), got {theta}")
    threshold = 4.0 * n * n / (theta * theta)
    log_bound = (math.log(gamma) + K_theta * math.log(2.0)
                 - 0.5 * math.log(K_theta) - threshold)
    return SphericalVariantResult(
        LogLevelNumber.from_log(log_bound),
        K_theta > threshold,
        log_bound,
        threshold,
    )
