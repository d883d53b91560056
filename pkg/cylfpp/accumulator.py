"""
accumulator.py
--------------
Mergeable streaming moments: count, mean, central moment sums M2..M8,
minimum and maximum.
"""

import math

import numpy as np
from scipy.special import binom

MAX_ORDER = 8


class MomentAccumulator:
    """
    Central moment sums M_p = sum (x - mean)^p for p = 2..8.

    Two accumulators combine with the pairwise update formula, so chunk
    summaries can be built independently and merged.
    """

    def __init__(self, count=0, mean=0.0, moments=None, minimum=math.inf, maximum=-math.inf):
        self.count = int(count)
        self.mean = float(mean)
        self.moments = np.zeros(MAX_ORDER + 1)
        if moments is not None:
            self.moments[2 : MAX_ORDER + 1] = moments
        self.minimum = float(minimum)
        self.maximum = float(maximum)

    @classmethod
    def from_values(cls, values):
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            return cls()
        mean = float(np.mean(x))
        centered = x - mean
        moments = [float(np.sum(centered**p)) for p in range(2, MAX_ORDER + 1)]
        return cls(x.size, mean, moments, float(x.min()), float(x.max()))

    def add(self, value):
        return self.merge(MomentAccumulator.from_values([value]))

    def update(self, values):
        return self.merge(MomentAccumulator.from_values(values))

    def merge(self, other):
        return merge_accumulators(self, other)

    def copy(self):
        return MomentAccumulator(
            self.count, self.mean, self.moments[2:], self.minimum, self.maximum
        )

    def M(self, p):
        return float(self.moments[p])

    def central_moment(self, p):
        """Population central moment M_p / n."""
        return self.M(p) / self.count if self.count else math.nan

    @property
    def variance(self):
        """Unbiased sample variance."""
        if self.count < 2:
            return math.nan
        return self.M(2) / (self.count - 1)

    @property
    def std_error(self):
        if self.count < 2:
            return math.nan
        return math.sqrt(self.variance / self.count)

    @property
    def variance_std_error(self):
        """Large-sample standard error of the sample variance from M2 and M4."""
        n = self.count
        if n < 4:
            return math.nan
        m2 = self.central_moment(2)
        m4 = self.central_moment(4)
        return math.sqrt(max(m4 - (n - 3) / (n - 1) * m2 * m2, 0.0) / n)

    @property
    def skewness(self):
        m2 = self.central_moment(2)
        if not m2 > 0:
            return math.nan
        return self.central_moment(3) / m2**1.5

    @property
    def excess_kurtosis(self):
        m2 = self.central_moment(2)
        if not m2 > 0:
            return math.nan
        return self.central_moment(4) / m2**2 - 3.0

    def to_dict(self):
        return {
            "count": self.count,
            "mean": self.mean,
            "moments": [float(v) for v in self.moments[2:]],
            "min": self.minimum if self.count else None,
            "max": self.maximum if self.count else None,
            "variance": self.variance if self.count > 1 else None,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            data["count"],
            data["mean"],
            data["moments"],
            math.inf if data.get("min") is None else data["min"],
            -math.inf if data.get("max") is None else data["max"],
        )

    def __repr__(self):
        return f"MomentAccumulator(count={self.count}, mean={self.mean:g}, M2={self.M(2):g})"


def merge_accumulators(x, y):
    """Combine two accumulators as if their samples were concatenated."""
    if y.count == 0:
        return x.copy()
    if x.count == 0:
        return y.copy()
    na, nb = x.count, y.count
    n = na + nb
    delta = y.mean - x.mean
    mean = x.mean + delta * nb / n
    Ma, Mb = x.moments, y.moments
    moments = np.zeros(MAX_ORDER + 1)
    for p in range(2, MAX_ORDER + 1):
        total = Ma[p] + Mb[p]
        for k in range(1, p - 1):
            total += (
                binom(p, k)
                * delta**k
                * ((-nb / n) ** k * Ma[p - k] + (na / n) ** k * Mb[p - k])
            )
        total += (na * nb * delta / n) ** p * (
            1.0 / nb ** (p - 1) - (-1.0 / na) ** (p - 1)
        )
        moments[p] = total
    return MomentAccumulator(
        n, mean, moments[2:], min(x.minimum, y.minimum), max(x.maximum, y.maximum)
    )
