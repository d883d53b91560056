"""
stats.py
--------
Statistical checks on simulated passage times: normality of the
standardized values, mean and variance scaling in n, the T <= a <= t
sandwich with stochastic domination of the decomposition error, the
Brownian covariance of the rescaled point-to-point process, and the
stability of geodesic lengths.

Every check is a pure function of sample arrays (or moment accumulators)
and returns a report dataclass whose ``checks`` map names to booleans.
"""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .accumulator import MomentAccumulator
from .decomposition import lyapounov_ratio
from .errors import DegenerateSampleError, InsufficientDataError
from .weights import distribution_moment

logger = logging.getLogger(__name__)

MIN_NORMALITY_SAMPLES = 50
MIN_DONSKER_PATHS = 500
QQ_POINTS = 200


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    return value


class _Report:
    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self):
        data = _jsonable(asdict(self))
        data["passed"] = self.passed
        return data


@dataclass(frozen=True)
class NormalityReport(_Report):
    size: int
    mean: float
    std: float
    skewness: float
    excess_kurtosis: float
    ks_statistic: float
    ks_pvalue: float
    anderson_statistic: float
    checks: dict = field(default_factory=dict)


def ks_statistic(values, cdf=stats.norm.cdf):
    """Two-sided Kolmogorov distance between the empirical CDF of ``values`` and ``cdf``."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    F = cdf(x)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def standardize(samples):
    x = np.asarray(samples, dtype=float)
    std = x.std(ddof=1)
    if not std > 0:
        raise DegenerateSampleError("sample has zero variance")
    return (x - x.mean()) / std


def normality_diagnostics(samples, min_pvalue=0.01, max_abs_skewness=None):
    """
    Standardize with the sample mean and variance, then compare with N(0,1).

    The KS p-value uses the asymptotic Kolmogorov law, so it is approximate
    for plug-in standardization.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < MIN_NORMALITY_SAMPLES:
        raise InsufficientDataError(
            f"normality needs >= {MIN_NORMALITY_SAMPLES} samples, got {x.size}"
        )
    z = standardize(x)
    D = ks_statistic(z)
    pvalue = float(np.clip(stats.kstwobign.sf(D * math.sqrt(x.size)), 0.0, 1.0))
    skewness = float(stats.skew(z))
    kurtosis = float(stats.kurtosis(z))
    checks = {"ks_pvalue": pvalue > min_pvalue}
    if max_abs_skewness is not None:
        checks["skewness"] = abs(skewness) < max_abs_skewness
    return NormalityReport(
        size=int(x.size),
        mean=float(x.mean()),
        std=float(x.std(ddof=1)),
        skewness=skewness,
        excess_kurtosis=kurtosis,
        ks_statistic=D,
        ks_pvalue=pvalue,
        anderson_statistic=float(stats.anderson(z, dist="norm").statistic),
        checks=checks,
    )


def qq_points(samples, count=QQ_POINTS):
    """Normal quantiles against standardized empirical quantiles."""
    z = np.sort(standardize(samples))
    probs = (np.arange(1, z.size + 1) - 0.5) / z.size
    if z.size > count:
        index = np.linspace(0, z.size - 1, count).round().astype(int)
        z, probs = z[index], probs[index]
    return stats.norm.ppf(probs), z


def _summary(values):
    if isinstance(values, MomentAccumulator):
        return values
    return MomentAccumulator.from_values(values)


@dataclass(frozen=True)
class ScalingReport(_Report):
    ns: list
    mean_per_n: list
    mean_se_per_n: list
    variance_per_n: list
    variance_se_per_n: list
    nu_hat: float
    details: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)


def _sorted_runs(runs):
    if len(runs) < 2:
        raise InsufficientDataError(f"scaling checks need >= 2 values of n, got {len(runs)}")
    return sorted(runs)


def _jackknife_variance_se(x):
    """Jackknife standard error of the unbiased sample variance."""
    n = x.size
    c = x - x.mean()
    s2 = np.dot(c, c) / (n - 1)
    loo = ((n - 1) * s2 - n / (n - 1) * c**2) / (n - 2)
    return float(math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def mean_convergence_check(runs, mu=None, diameter=None, z=3.0):
    """
    Mean scaling of T_n for a fixed base graph.

    Args:
        runs: mapping n -> samples (array) or MomentAccumulator.
        mu: E[omega]; enables mu_hat_n <= mu n and the fixed-G bound.
        diameter: diameter D of G; enables |mu_hat_n - n nu_hat| <= mu D.
        z: number of standard errors allowed.

    Returns:
        ScalingReport with nu_hat = mu_hat_N / N at the largest N.
    """
    ns = _sorted_runs(runs)
    accs = [_summary(runs[n]) for n in ns]
    means = [acc.mean for acc in accs]
    ses = [0.0 if not acc.std_error > 0 else acc.std_error for acc in accs]
    N = ns[-1]
    nu = means[-1] / N
    nu_se = ses[-1] / N
    checks = {}
    details = {}

    lower = [nu * n - m <= z * math.hypot(se, n * nu_se) for n, m, se in zip(ns, means, ses)]
    checks["lower_linear"] = all(lower)
    if mu is not None:
        checks["upper_linear"] = all(m <= mu * n + z * se for n, m, se in zip(ns, means, ses))

    index = {n: i for i, n in enumerate(ns)}
    subadditive = []
    for i, n in enumerate(ns):
        for m in ns[i:]:
            if n + m in index:
                j = index[n + m]
                slack = means[i] + means[index[m]] - means[j]
                se = math.sqrt(ses[i] ** 2 + ses[index[m]] ** 2 + ses[j] ** 2)
                subadditive.append({"n": n, "m": m, "slack": slack, "ok": slack >= -z * se})
    details["subadditivity"] = subadditive
    if subadditive:
        checks["subadditivity"] = all(item["ok"] for item in subadditive)

    if mu is not None and diameter is not None:
        gaps = [abs(m - n * nu) for n, m in zip(ns, means)]
        details["fixed_graph_gap"] = gaps
        checks["fixed_graph_gap"] = all(
            gap <= mu * diameter + z * math.hypot(se, n * nu_se)
            for n, gap, se in zip(ns, gaps, ses)
        )
    details["mean_over_n"] = [m / n for n, m in zip(ns, means)]

    variances = [acc.variance / n if acc.count > 1 else math.nan for n, acc in zip(ns, accs)]
    variance_ses = [
        acc.variance_std_error / n if acc.count > 3 else math.nan for n, acc in zip(ns, accs)
    ]
    return ScalingReport(
        ns=list(ns),
        mean_per_n=[m / n for n, m in zip(ns, means)],
        mean_se_per_n=[se / n for n, se in zip(ns, ses)],
        variance_per_n=variances,
        variance_se_per_n=variance_ses,
        nu_hat=nu,
        details=details,
        checks=checks,
    )


def variance_scaling_check(runs, edge_count=None, z=3.0, ratio_tolerance=2.0):
    """
    Linear variance growth: sigma_hat_n^2 > 0, sigma_hat_n^2 / n bounded,
    and consecutive values of sigma_hat_n^2 / n agreeing within ``z``
    combined standard errors.

    Raw samples get jackknife standard errors; accumulators use the
    moment-based standard error of the sample variance.
    """
    ns = _sorted_runs(runs)
    means, mean_ses, ratios, ratio_ses = [], [], [], []
    for n in ns:
        values = runs[n]
        acc = _summary(values)
        if acc.count < 4:
            raise InsufficientDataError(f"n={n}: need >= 4 samples, got {acc.count}")
        if isinstance(values, MomentAccumulator):
            se = acc.variance_std_error
        else:
            se = _jackknife_variance_se(np.asarray(values, dtype=float))
        means.append(acc.mean / n)
        mean_ses.append(acc.std_error / n)
        ratios.append(acc.variance / n)
        ratio_ses.append(se / n)

    degenerate = not all(r > 0 for r in ratios)
    checks = {"positive": not degenerate}
    details = {"degenerate": degenerate}
    if not degenerate:
        spread = max(ratios) / min(ratios)
        details["max_min_ratio"] = spread
        checks["bounded"] = spread <= ratio_tolerance
        steps = []
        for i in range(len(ns) - 1):
            gap = abs(ratios[i + 1] - ratios[i])
            se = math.hypot(ratio_ses[i], ratio_ses[i + 1])
            steps.append({"n": ns[i], "next": ns[i + 1], "gap": gap, "ok": gap <= z * se})
        details["stabilization"] = steps
        checks["stabilization"] = all(step["ok"] for step in steps)
    else:
        logger.warning("Variance is zero for some n; scaling bounds do not apply")
    if edge_count is not None:
        details["lower_constant"] = [r * edge_count for r in ratios]
    return ScalingReport(
        ns=list(ns),
        mean_per_n=means,
        mean_se_per_n=mean_ses,
        variance_per_n=ratios,
        variance_se_per_n=ratio_ses,
        nu_hat=means[-1],
        details=details,
        checks=checks,
    )


@dataclass(frozen=True)
class SandwichReport(_Report):
    replicates: int
    ordering_violations: list
    details: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)


def sandwich_and_domination_check(
    samples,
    dist=None,
    diameter=None,
    block_count=None,
    p=2.0,
    level=0.001,
    z=3.0,
):
    """
    Per-replicate ordering T <= a <= t, the moment bound on t - T, the mean
    chain E[a] <= E[t] <= E[T] + 2 mu D, and domination of the decomposition
    error Y by an independent sum S_mD of m*D weights.

    ``samples`` maps functional names (T, a, t, Y, S_mD) to per-replicate
    arrays; absent names skip the checks that need them.
    """
    present = {k: np.asarray(v, dtype=float) for k, v in samples.items() if k in ("T", "a", "t", "Y", "S_mD")}
    if not present:
        raise InsufficientDataError("no T, a, t, Y or S_mD samples")
    lengths = {k: v.size for k, v in present.items()}
    if len(set(lengths.values())) != 1:
        raise ValueError(f"mismatched replicate counts {lengths}")
    count = next(iter(lengths.values()))
    checks = {}
    details = {}

    order = [k for k in ("T", "a", "t") if k in present]
    bad = np.zeros(count, dtype=bool)
    for lo, hi in zip(order, order[1:]):
        bad |= present[lo] > present[hi]
    if "T" in present and "t" in present:
        bad |= present["T"] > present["t"]
    violations = np.flatnonzero(bad).tolist()
    if len(order) >= 2:
        checks["ordering"] = not violations
        if violations:
            logger.warning("Ordering T <= a <= t fails in replicates %s", violations[:20])

    mu = dist.mean if dist is not None else None
    if dist is not None and diameter is not None and "T" in present and "t" in present:
        gap = np.abs(present["t"] - present["T"]) ** p
        se = gap.std(ddof=1) / math.sqrt(count) if count > 1 else 0.0
        bound = (2 * diameter) ** p * distribution_moment(dist, p)
        details["gap_moment"] = {"empirical": float(gap.mean()), "bound": bound, "se": se}
        checks["gap_moment"] = gap.mean() <= bound + z * se

    def mean_se(key):
        x = present[key]
        return x.mean(), (x.std(ddof=1) / math.sqrt(count) if count > 1 else 0.0)

    if "a" in present and "t" in present:
        (ma, sa), (mt, st) = mean_se("a"), mean_se("t")
        checks["mean_a_le_t"] = ma <= mt + z * math.hypot(sa, st)
    if "t" in present and "T" in present and mu is not None and diameter is not None:
        (mt, st), (mT, sT) = mean_se("t"), mean_se("T")
        checks["mean_t_le_T_plus"] = mt <= mT + 2 * mu * diameter + z * math.hypot(st, sT)

    if "Y" in present:
        checks["error_nonnegative"] = bool(np.all(present["Y"] >= 0))
        if mu is not None and diameter is not None and block_count is not None:
            mY, sY = mean_se("Y")
            bound = block_count * diameter * mu
            details["error_mean"] = {"empirical": float(mY), "bound": bound, "se": sY}
            checks["error_mean"] = mY <= bound + z * sY
    if "Y" in present and "S_mD" in present:
        # H0: F_S <= F_Y everywhere, i.e. Y is stochastically below S_mD
        result = stats.ks_2samp(present["S_mD"], present["Y"], alternative="greater")
        details["domination"] = {
            "statistic": float(result.statistic),
            "pvalue": float(result.pvalue),
            "level": level,
        }
        checks["domination"] = result.pvalue >= level
    return SandwichReport(
        replicates=int(count), ordering_violations=violations, details=details, checks=checks
    )


@dataclass(frozen=True)
class DonskerReport(_Report):
    grid: list
    paths: int
    nu_hat: float
    sigma2_hat: float
    covariance: list
    max_deviation: float
    increment_correlations: list
    increment_variances: list
    checks: dict = field(default_factory=dict)


def donsker_covariance_check(paths, grid, n, nu=None, sigma2=None, tolerance=0.1, z=3.0):
    """
    Covariance of W(t_j) = (t_{floor(n t_j)} - floor(n t_j) nu) / sqrt(n sigma^2)
    against min(s, t).

    Args:
        paths: array (P, g) of point-to-point times at columns floor(n t_j).
        grid: increasing t_1 < ... < t_g in (0, 1].
        n: cylinder length.
        nu, sigma2: time constant and variance per unit length; estimated
            from the last grid column when omitted.
    """
    X = np.asarray(paths, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if X.ndim != 2 or X.shape[1] != grid.size:
        raise ValueError(f"paths must have shape (P, {grid.size}), got {X.shape}")
    P = X.shape[0]
    if P < MIN_DONSKER_PATHS:
        raise InsufficientDataError(f"need >= {MIN_DONSKER_PATHS} paths, got {P}")
    columns = np.floor(n * grid)
    last = columns[-1]
    if nu is None:
        nu = X[:, -1].mean() / last
    if sigma2 is None:
        sigma2 = X[:, -1].var(ddof=1) / last
    if not sigma2 > 0:
        raise DegenerateSampleError("sigma^2 estimate is zero")

    W = (X - columns * nu) / math.sqrt(n * sigma2)
    C = np.cov(W, rowvar=False).reshape(grid.size, grid.size)
    target = np.minimum.outer(grid, grid)
    deviation = float(np.max(np.abs(C - target)))

    increments = np.diff(np.column_stack([np.zeros(P), W]), axis=1)
    widths = np.diff(np.concatenate([[0.0], grid]))
    band = z / math.sqrt(P)
    correlations = []
    if grid.size > 1:
        R = np.corrcoef(increments, rowvar=False)
        for i in range(grid.size):
            for j in range(i + 1, grid.size):
                correlations.append({"i": i, "j": j, "value": float(R[i, j])})
    variances = []
    for j in range(grid.size):
        inc = increments[:, j]
        c = inc - inc.mean()
        var = np.dot(c, c) / (P - 1)
        se = math.sqrt(max(np.mean(c**4) - var**2, 0.0) / P)
        variances.append(
            {"interval": j, "value": float(var), "target": float(widths[j]), "se": se}
        )
    checks = {
        "max_deviation": deviation < tolerance,
        "increment_correlation": all(abs(c["value"]) <= band for c in correlations),
        "increment_variance": all(
            abs(v["value"] - v["target"]) <= z * v["se"] for v in variances
        ),
    }
    return DonskerReport(
        grid=grid.tolist(),
        paths=P,
        nu_hat=float(nu),
        sigma2_hat=float(sigma2),
        covariance=C.tolist(),
        max_deviation=deviation,
        increment_correlations=correlations,
        increment_variances=variances,
        checks=checks,
    )


@dataclass(frozen=True)
class TailReport(_Report):
    ns: list
    quantiles: dict
    ratios: list
    moments: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)


def tail_geodesic_check(pi_runs, p=None, quantile=0.999, tolerance=1.25):
    """
    Stability of the upper tail of pi_n / n across n.

    Args:
        pi_runs: mapping n -> geodesic edge counts.
        p: when given, E[(pi_n/n)^(p/2)] is reported per n and its
            consecutive ratios must stay within ``tolerance``.
    """
    ns = sorted(pi_runs)
    if not ns:
        raise InsufficientDataError("no geodesic length samples")
    levels = (0.5, 0.9, 0.99, quantile)
    quantiles = {}
    tails = []
    moments = []
    for n in ns:
        x = np.asarray(pi_runs[n], dtype=float) / n
        qs = np.quantile(x, levels)
        quantiles[n] = {f"{level:g}": float(v) for level, v in zip(levels, qs)}
        tails.append(float(qs[-1]))
        if p is not None:
            moments.append(float(np.mean(x ** (p / 2))))
    ratios = [b / a for a, b in zip(tails, tails[1:])]
    checks = {"tail_stability": all(1 / tolerance <= r <= tolerance for r in ratios)}
    if p is not None:
        trend = [b / a for a, b in zip(moments, moments[1:])]
        checks["moment_bounded"] = all(r <= tolerance for r in trend)
    return TailReport(ns=ns, quantiles=quantiles, ratios=ratios, moments=moments, checks=checks)


@dataclass(frozen=True)
class MomentBoundReport(_Report):
    p: float
    empirical: float
    bound: float
    se: float
    checks: dict = field(default_factory=dict)


def essential_moment_bound_check(t_samples, L_samples, dist, p=2.0, z=3.0):
    """
    E|t - E t|^p against
    (2p)^(p/2) E[L^(p/2)] E[omega^2]^(p/2) + 2^(p/2) (2p)^(p-2) E[L] E[omega^p].
    """
    t = np.asarray(t_samples, dtype=float)
    L = np.asarray(L_samples, dtype=float)
    if t.size != L.size or t.size < 2:
        raise InsufficientDataError("need matching t and L samples, at least 2")
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    gap = np.abs(t - t.mean()) ** p
    se = float(gap.std(ddof=1) / math.sqrt(t.size))
    second = distribution_moment(dist, 2)
    bound = (2 * p) ** (p / 2) * np.mean(L ** (p / 2)) * second ** (p / 2) + 2 ** (
        p / 2
    ) * (2 * p) ** (p - 2) * L.mean() * distribution_moment(dist, p)
    empirical = float(gap.mean())
    return MomentBoundReport(
        p=p,
        empirical=empirical,
        bound=float(bound),
        se=se,
        checks={"moment_bound": empirical <= bound + z * se},
    )


def lyapounov_trend(block_runs, p):
    """
    lyapounov_ratio for each n from ``{n: (block samples, m)}``; the ratio
    should decrease as n grows.
    """
    ns = sorted(block_runs)
    ratios = [lyapounov_ratio(block_runs[n][0], block_runs[n][1], p) for n in ns]
    return {
        "ns": ns,
        "ratios": ratios,
        "decreasing": all(b <= a for a, b in zip(ratios, ratios[1:])),
    }


def report_table(name, report):
    """Human-readable one-check-per-line summary."""
    lines = [f"{name}: {'PASS' if report.passed else 'FAIL'}"]
    for check, ok in report.checks.items():
        lines.append(f"  {check:<24} {'ok' if ok else 'FAILED'}")
    return "\n".join(lines)
