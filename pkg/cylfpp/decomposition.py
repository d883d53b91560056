"""
decomposition.py
----------------
Block decomposition of T_n(G), the beta schedule used by the
renormalization argument, CLT threshold exponents, the Lyapounov plug-in
diagnostic, and the two scalar inequalities behind the moment bounds.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegenerateSampleError, InsufficientDataError
from .passage import SearchScratch, _weight_list, side_to_side_time

logger = logging.getLogger(__name__)

SCHEDULE_TOL = 1e-12
BISECTION_TOL = 1e-12
Y_ROUNDING = 1e-9


@dataclass(frozen=True)
class Decomposition:
    """T_n = X_1 + ... + X_{m+1} + Y with X_i the side-to-side time of block i."""

    l: int
    m: int
    rem: int
    X: tuple
    Y: float
    total: float

    @property
    def block_sum(self):
        return math.fsum(self.X)


def block_times(graph, weights, l):
    """
    Split [0, n] into m = n // l blocks of length l plus a remainder block.

    X_{m+1} is 0 when l divides n.
    """
    if graph.a != 0:
        raise ValueError(f"block decomposition needs span [0, n], got {graph.span}")
    n = graph.b
    if not 1 <= l <= n:
        raise ValueError(f"block length must satisfy 1 <= l <= n={n}, got l={l}")
    m, rem = divmod(n, l)
    wl = _weight_list(graph, weights)
    scratch = SearchScratch(graph.vertex_count)

    X = [
        side_to_side_time(graph, wl, (i - 1) * l, i * l, scratch).value
        for i in range(1, m + 1)
    ]
    X.append(side_to_side_time(graph, wl, m * l, n, scratch).value if rem else 0.0)
    total = side_to_side_time(graph, wl, 0, n, scratch).value
    Y = total - math.fsum(X)
    if Y < 0:
        if Y < -Y_ROUNDING * max(1.0, total):
            raise RuntimeError(f"negative decomposition error Y={Y} for T_n={total}")
        Y = 0.0
    return Decomposition(l=l, m=m, rem=rem, X=tuple(X), Y=Y, total=total)


def block_length(n, beta):
    """l = max(floor(n^beta), 1)."""
    return max(int(math.floor(n**beta)), 1)


def diameter_block_warning(diameter, l):
    """Warn when D^2 is not small compared to the block length."""
    if diameter * diameter > l:
        logger.warning(
            "Base graph diameter D=%d has D^2=%d > block length %d; "
            "block moment bounds may not apply",
            diameter,
            diameter * diameter,
            l,
        )
        return True
    return False


@dataclass(frozen=True)
class Schedule:
    q: int
    theta: float
    t: int
    r: float
    betas: tuple
    alpha_star: float
    alpha_limit: float


def beta_schedule(q, theta, t):
    """
    Closed-form solution of the block-length recursion.

    With r = 1 - 1/(2q):
        beta_i = 1 - q theta (1 - r^i) / (theta + (q-1)(2+theta)(1 - r^t))
        alpha* = (q-1)(1 - r^t) / (theta + (q-1)(2+theta)(1 - r^t))

    The recursion is stated for t >= 2; t = 1 is accepted and reduces to a
    single equation.
    """
    if q < 2 or int(q) != q:
        raise ValueError(f"q must be an integer >= 2, got {q}")
    if theta < 1:
        raise ValueError(f"theta must be >= 1, got {theta}")
    if t < 1 or int(t) != t:
        raise ValueError(f"t must be an integer >= 1, got {t}")
    q, t = int(q), int(t)
    r = 1.0 - 1.0 / (2 * q)
    rt = 1.0 - r**t
    denom = theta + (q - 1) * (2 + theta) * rt
    betas = tuple(1.0 - q * theta * (1.0 - r**i) / denom for i in range(1, t + 1))
    return Schedule(
        q=q,
        theta=float(theta),
        t=t,
        r=r,
        betas=betas,
        alpha_star=(q - 1) * rt / denom,
        alpha_limit=(q - 1) / (theta + (q - 1) * (2 + theta)),
    )


@dataclass(frozen=True)
class ScheduleReport:
    satisfied: bool
    margins: dict = field(default_factory=dict)


def verify_schedule(schedule, alpha):
    """
    Slack of every sufficient condition for the block recursion at ``alpha``.

    Conditions (beta_0 = 1):
        2 alpha < beta_t < ... < beta_1                                  (strict)
        alpha <= (1 - 2(beta_i - beta_{i+1}) - (1 - beta_i)/q) / (2+theta)   i < t
        alpha <= ((q-1)/q) (1 - beta_t) / theta
    """
    q, theta = schedule.q, schedule.theta
    betas = (1.0,) + tuple(schedule.betas)
    t = schedule.t
    margins = {}
    strict = []
    margins["chain_2alpha_beta_t"] = betas[t] - 2 * alpha
    strict.append("chain_2alpha_beta_t")
    for i in range(1, t):
        key = f"chain_beta_{i + 1}_beta_{i}"
        margins[key] = betas[i] - betas[i + 1]
        strict.append(key)
    for i in range(t):
        bound = (1 - 2 * (betas[i] - betas[i + 1]) - (1 - betas[i]) / q) / (2 + theta)
        margins[f"step_{i}"] = bound - alpha
    margins["final"] = (q - 1) / q * (1 - betas[t]) / theta - alpha

    satisfied = all(
        margins[key] > 0 if key in strict else margins[key] >= -SCHEDULE_TOL
        for key in margins
    )
    return ScheduleReport(satisfied=satisfied, margins=margins)


@dataclass(frozen=True)
class Threshold:
    box_form: object
    general_form: float


def alpha_threshold(p, theta=None, d=None):
    """
    Largest admissible exponent alpha for h_n = o(n^alpha) given E[omega^p] < inf.

    general_form = 1 / (2 + theta + theta * min(2p/(p-2), 1/(q-1))) with
    q = floor(p/2); the second term enters only for q >= 2. box_form is the
    same bound written for the box base of dimension d (theta = d - 1).
    """
    if not p > 2:
        raise ValueError(f"p must be > 2, got {p}")
    if theta is None:
        if d is None:
            raise ValueError("either theta or d is required")
        theta = d - 1
    if theta < 1:
        raise ValueError(f"theta must be >= 1, got {theta}")

    def bound(th):
        first = 2.0 if math.isinf(p) else 2 * p / (p - 2)
        q = math.inf if math.isinf(p) else math.floor(p / 2)
        if q >= 2:
            first = min(first, 0.0 if math.isinf(q) else 1.0 / (q - 1))
        return 1.0 / (2 + th + th * first)

    general = bound(theta)
    box = None
    if d is not None:
        if p < 4:
            box = 1.0 / (d + 1 + 2 * p * (d - 1) / (p - 2))
        elif math.isinf(p):
            box = 1.0 / (d + 1)
        else:
            box = 1.0 / (d + 1 + (d - 1) / (math.floor(p / 2) - 1))
    return Threshold(box_form=box, general_form=general)


def single_block_condition(p, theta, beta, alpha):
    """alpha <= ((p-2)/p) (1 - beta) / theta: one renormalization step suffices."""
    return alpha <= (p - 2) / p * (1 - beta) / theta


def lyapounov_ratio(samples, m, p):
    """
    m * E|T - mean|^p / (m * Var)^(p/2) with plug-in moments of ``samples``.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {x.size}")
    centered = x - x.mean()
    variance = np.mean(centered**2)
    if variance == 0:
        raise DegenerateSampleError("block samples have zero variance")
    central = np.mean(np.abs(centered) ** p)
    return float(m * central / (m * variance) ** (p / 2))


@dataclass(frozen=True)
class InequalityCheck:
    lhs: object
    rhs: object
    holds: object


def power_mean_gap_bound(x, y, p):
    """
    | x|x|^(p-2) - y|y|^(p-2) | <= max(1, (p-1)/2) |x - y| (|x|^(p-2) + |y|^(p-2)).

    Vectorized over numpy inputs. Both sides are homogeneous of degree p-1,
    so ``holds`` is decided on x and y divided by max(|x|, |y|), with an
    allowance for float rounding; ``lhs`` and ``rhs`` are scaled back.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 2):
        raise ValueError("p must be > 2")
    scale = np.maximum(np.abs(x), np.abs(y))
    scale = np.where(scale > 0, scale, 1.0)
    xs, ys = x / scale, y / scale
    ax, ay = np.abs(xs), np.abs(ys)
    lhs = np.abs(xs * ax ** (p - 2) - ys * ay ** (p - 2))
    rhs = np.maximum(1.0, (p - 1) / 2) * np.abs(xs - ys) * (ax ** (p - 2) + ay ** (p - 2))
    rounding = 8 * np.finfo(float).eps * (ax ** (p - 1) + ay ** (p - 1)) + np.finfo(float).tiny
    holds = lhs <= rhs + rounding
    with np.errstate(over="ignore", invalid="ignore"):
        factor = scale ** (p - 1)
        lhs = np.where(lhs > 0, lhs * factor, 0.0)
        rhs = np.where(rhs > 0, rhs * factor, 0.0)
    if lhs.ndim == 0:
        return InequalityCheck(float(lhs), float(rhs), bool(holds))
    return InequalityCheck(lhs, rhs, holds)


@dataclass(frozen=True)
class RootBound:
    y_star: float
    bound: float
    holds: bool


def root_dominance_bound(a, b, beta):
    """
    y* = sup{y >= 0 : y^beta <= a + b y} by bisection, and the check
    y*^(beta-1) <= a^((beta-1)/beta) + b.
    """
    if a < 0 or b < 0:
        raise ValueError("a and b must be >= 0")
    if not beta > 1:
        raise ValueError(f"beta must be > 1, got {beta}")

    def f(y):
        return y**beta - a - b * y

    lo = 0.0
    hi = 1.0 + b ** (1.0 / (beta - 1)) + a ** (1.0 / beta) + 1.0
    while f(hi) <= 0:
        hi *= 2
    # f(lo) <= 0 < f(hi)
    for _ in range(4096):
        if hi - lo <= BISECTION_TOL * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    bound = a ** ((beta - 1) / beta) + b
    lhs = lo ** (beta - 1)
    return RootBound(y_star=lo, bound=bound, holds=lhs <= bound + 1e-9 * max(1.0, bound))


def _partitions(total, smallest):
    """Partitions of ``total`` into parts >= ``smallest``, nondecreasing."""
    if total == 0:
        yield ()
        return
    for part in range(smallest, total + 1):
        for rest in _partitions(total - part, part):
            yield (part,) + rest


def iid_moment_constants(q):
    """
    Exact (A_q, B_q) with E[S_m^{2q}] <= A_q m^q E[Y^2]^q + B_q m E[Y^{2q}]
    for sums S_m of m i.i.d. centered Y.
    """
    if q < 2 or q > 5:
        raise ValueError(f"constants are tabulated for 2 <= q <= 5, got {q}")
    A = Fraction(0)
    B = Fraction(0)
    for parts in _partitions(2 * q, 2):
        coef = Fraction(math.factorial(2 * q))
        for size in set(parts):
            count = parts.count(size)
            coef /= math.factorial(size) ** count * math.factorial(count)
        blocks = len(parts)
        A += (blocks - 1) * coef
        B += (q - blocks) * coef
    return A / (q - 1), B / (q - 1)


def iid_moment_bound(m, q, second_moment, top_moment):
    """A_q m^q E[Y^2]^q + B_q m E[Y^{2q}]."""
    A, B = iid_moment_constants(q)
    return float(A) * m**q * second_moment**q + float(B) * m * top_moment
