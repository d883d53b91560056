"""
weights.py
----------
Edge-weight laws, their moments, admissibility, the h-transform used in the
variance lower bound, counter-based random streams, and sampling onto
cylinder edges.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, stats
from scipy.special import gamma

from . import readers

logger = logging.getLogger(__name__)

FAMILIES = ("deterministic", "exponential", "uniform", "shifted_bernoulli", "empirical")

# Bond percolation thresholds of Z^d. d=2 is exact; the rest are published
# numerical estimates, not derived here.
BOND_PERCOLATION_THRESHOLDS = {
    2: 0.5,
    3: 0.2488126,
    4: 0.1601314,
    5: 0.118172,
    6: 0.0942019,
    7: 0.0786752,
}

QUADRATURE_TAIL = 1e-12
QUADRATURE_TOL = 1e-10

# Sub-stream keys under a replicate stream.
STRIP_LEFT = 1
STRIP_RIGHT = 2
DOMINATION = 3


def bond_percolation_threshold(d):
    try:
        return BOND_PERCOLATION_THRESHOLDS[d]
    except KeyError:
        raise ValueError(
            f"no default bond percolation threshold for d={d}; pass p_c explicitly"
        ) from None


@dataclass(frozen=True)
class WeightDistribution:
    """
    An edge-weight law F on [0, inf).

    ``params`` depend on the family:
    deterministic (c,), exponential (rate,), uniform (a, b),
    shifted_bernoulli (lam, delta, p_atom) meaning lam w.p. p_atom else
    lam + delta, empirical () with ``support``/``probs`` set.
    """

    family: str
    params: tuple = ()
    support: tuple = ()
    probs: tuple = ()

    def __post_init__(self):
        p = self.params
        if self.family == "deterministic":
            self._require(len(p) == 1 and p[0] >= 0, "deterministic needs c >= 0")
        elif self.family == "exponential":
            self._require(len(p) == 1 and p[0] > 0, "exponential needs rate > 0")
        elif self.family == "uniform":
            self._require(len(p) == 2 and 0 <= p[0] < p[1], "uniform needs 0 <= a < b")
        elif self.family == "shifted_bernoulli":
            self._require(
                len(p) == 3 and p[0] >= 0 and p[1] > 0 and 0 <= p[2] <= 1,
                "shifted_bernoulli needs lam >= 0, delta > 0, 0 <= p_atom <= 1",
            )
        elif self.family == "empirical":
            s, q = self.support, self.probs
            self._require(len(s) == len(q) and len(s) > 0, "empirical needs matching support/probs")
            self._require(all(x >= 0 for x in s), "empirical support must be >= 0")
            self._require(all(b > a for a, b in zip(s, s[1:])), "empirical support must be strictly increasing")
            self._require(all(x > 0 for x in q), "empirical probabilities must be > 0")
            self._require(abs(math.fsum(q) - 1.0) <= 1e-12, "empirical probabilities must sum to 1")
        else:
            raise ValueError(f"unknown distribution family {self.family!r}")

    def _require(self, condition, message):
        if not condition:
            raise ValueError(f"{message}, got {self}")

    @classmethod
    def deterministic(cls, c):
        return cls("deterministic", (float(c),))

    @classmethod
    def exponential(cls, rate=1.0):
        return cls("exponential", (float(rate),))

    @classmethod
    def uniform(cls, a=0.0, b=1.0):
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def shifted_bernoulli(cls, lam, delta, p_atom):
        return cls("shifted_bernoulli", (float(lam), float(delta), float(p_atom)))

    @classmethod
    def empirical(cls, support, probs):
        pairs = sorted(zip((float(x) for x in support), (float(p) for p in probs)))
        return cls(
            "empirical",
            support=tuple(x for x, _ in pairs),
            probs=tuple(p for _, p in pairs),
        )

    @property
    def is_discrete(self):
        return self.family in ("deterministic", "shifted_bernoulli", "empirical")

    def atoms(self):
        """Support points and masses of a discrete law."""
        if self.family == "deterministic":
            return np.array(self.params), np.array([1.0])
        if self.family == "shifted_bernoulli":
            lam, delta, p_atom = self.params
            return np.array([lam, lam + delta]), np.array([p_atom, 1.0 - p_atom])
        if self.family == "empirical":
            return np.array(self.support), np.array(self.probs)
        raise ValueError(f"{self.family} has no atoms")

    def scipy_law(self):
        """Frozen scipy.stats law of a continuous family."""
        if self.family == "exponential":
            return stats.expon(scale=1.0 / self.params[0])
        if self.family == "uniform":
            a, b = self.params
            return stats.uniform(loc=a, scale=b - a)
        raise ValueError(f"{self.family} is not continuous")

    @property
    def mean(self):
        if self.family == "exponential":
            return 1.0 / self.params[0]
        if self.family == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        values, masses = self.atoms()
        return float(np.dot(values, masses))

    @property
    def variance(self):
        if self.family == "exponential":
            return 1.0 / self.params[0] ** 2
        if self.family == "uniform":
            return (self.params[1] - self.params[0]) ** 2 / 12.0
        values, masses = self.atoms()
        return float(np.dot((values - self.mean) ** 2, masses))

    @property
    def support_min(self):
        if self.family == "exponential":
            return 0.0
        if self.family == "uniform":
            return self.params[0]
        values, masses = self.atoms()
        return float(values[masses > 0][0])

    @property
    def atom_mass(self):
        """F(lambda): the probability of the support minimum."""
        if not self.is_discrete:
            return 0.0
        values, masses = self.atoms()
        return float(masses[masses > 0][0])

    @property
    def is_degenerate(self):
        if not self.is_discrete:
            return False
        return int(np.count_nonzero(self.atoms()[1] > 0)) < 2

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if not self.is_discrete:
            return self.scipy_law().cdf(x)
        values, masses = self.atoms()
        return (x[..., None] >= values) @ masses

    def sample(self, generator, size):
        if self.family == "deterministic":
            return np.full(size, self.params[0])
        if self.family == "exponential":
            return generator.exponential(1.0 / self.params[0], size)
        if self.family == "uniform":
            return generator.uniform(self.params[0], self.params[1], size)
        if self.family == "shifted_bernoulli":
            lam, delta, p_atom = self.params
            return lam + delta * (generator.random(size) >= p_atom)
        values, masses = self.atoms()
        return generator.choice(values, size=size, p=masses)

    def to_dict(self):
        return {
            "family": self.family,
            "params": list(self.params),
            "support": list(self.support),
            "probs": list(self.probs),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            data["family"],
            tuple(data.get("params", ())),
            tuple(data.get("support", ())),
            tuple(data.get("probs", ())),
        )

    def __str__(self):
        if self.family == "empirical":
            return f"empirical[{len(self.support)} atoms]"
        return f"{self.family}:" + ",".join(f"{p:g}" for p in self.params)


def parse_distribution(text):
    """
    Parse ``family:params``, e.g. ``exponential:1``, ``uniform:0,1``,
    ``shifted_bernoulli:0,1,0.4`` or ``empirical:path/to/law.txt``.
    """
    family, _, rest = text.strip().partition(":")
    family = family.strip()
    if family not in FAMILIES:
        raise ValueError(f"unknown distribution family {family!r}")
    if family == "empirical":
        support, probs = readers.read_empirical_law(rest.strip())
        return WeightDistribution.empirical(support, probs)
    try:
        params = tuple(float(x) for x in rest.split(",") if x.strip())
    except ValueError:
        raise ValueError(f"cannot parse parameters of {text!r}") from None
    if family == "exponential" and not params:
        params = (1.0,)
    return WeightDistribution(family, params)


def quadrature_expectation(dist, func):
    """
    E[func(omega)] by adaptive quadrature on [lambda, quantile(1 - 1e-12)]
    for continuous laws, or an exact sum over atoms.
    """
    if dist.is_discrete:
        values, masses = dist.atoms()
        return float(sum(m * func(v) for v, m in zip(values, masses)))
    law = dist.scipy_law()
    upper = law.ppf(1.0 - QUADRATURE_TAIL)
    value, _ = integrate.quad(
        lambda x: func(x) * law.pdf(x),
        dist.support_min,
        upper,
        epsabs=0.0,
        epsrel=QUADRATURE_TOL,
        limit=200,
    )
    return value


def distribution_moment(dist, p):
    """Raw moment E[omega^p] for p >= 1."""
    if p < 1:
        raise ValueError(f"moment order must be >= 1, got p={p}")
    if dist.family == "exponential":
        return float(gamma(p + 1.0) / dist.params[0] ** p)
    if dist.family == "uniform":
        a, b = dist.params
        return (b ** (p + 1) - a ** (p + 1)) / ((p + 1) * (b - a))
    values, masses = dist.atoms()
    return float(np.dot(values**p, masses))


class Verdict(Enum):
    ADMISSIBLE = "admissible"
    INADMISSIBLE = "inadmissible"
    DEGENERATE = "degenerate"


def admissibility_check(dist, d, p_c=None):
    """
    Classify F: admissible iff nondegenerate, supported on [0, inf), and
    F(lambda) < p_c(d).
    """
    if p_c is None:
        p_c = bond_percolation_threshold(d)
    if not 0 < p_c < 1:
        raise ValueError(f"p_c must lie in (0, 1), got {p_c}")
    if dist.is_degenerate:
        return Verdict.DEGENERATE
    if dist.support_min < 0 or dist.atom_mass >= p_c:
        return Verdict.INADMISSIBLE
    return Verdict.ADMISSIBLE


@dataclass(frozen=True)
class HTransform:
    """x -> E[(x - eta)_+] with eta ~ dist."""

    dist: WeightDistribution

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = self.dist
        if d.family == "exponential":
            rate = d.params[0]
            xp = np.maximum(x, 0.0)
            return xp + np.expm1(-rate * xp) / rate
        if d.family == "uniform":
            a, b = d.params
            inside = (np.clip(x, a, b) - a) ** 2 / (2.0 * (b - a))
            return np.where(x >= b, x - 0.5 * (a + b), inside)
        values, masses = d.atoms()
        return np.maximum(x[..., None] - values, 0.0) @ masses

    def quadrature(self, x):
        """Integral of F from lambda to x, numerically."""
        lam = self.dist.support_min
        if x <= lam:
            return 0.0
        if self.dist.is_discrete:
            values, _ = self.dist.atoms()
            inner = [float(v) for v in values if lam < v < x]
            value, _ = integrate.quad(
                lambda y: float(self.dist.cdf(y)), lam, x, points=inner or None, limit=200
            )
            return value
        law = self.dist.scipy_law()
        value, _ = integrate.quad(law.cdf, lam, x, epsabs=0.0, epsrel=QUADRATURE_TOL)
        return value

    @property
    def support_min(self):
        return 0.0

    @property
    def atom_mass(self):
        return self.dist.atom_mass


def h_transform(dist):
    if dist.is_degenerate:
        raise ValueError(f"h-transform needs a nondegenerate law, got {dist}")
    return HTransform(dist)


class RngStream:
    """
    Counter-based stream keyed by (master seed, namespace, stream id, *subkey).

    Each key yields an independent Philox generator, so replicate i draws
    the same numbers regardless of which worker runs it.
    """

    def __init__(self, master_seed, stream_id, namespace=0, subkey=()):
        if master_seed < 0 or stream_id < 0 or namespace < 0:
            raise ValueError("seed, stream id and namespace must be non-negative")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self.namespace = int(namespace)
        self.subkey = tuple(int(k) for k in subkey)
        seed = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.namespace, self.stream_id) + self.subkey,
        )
        self.generator = np.random.Generator(np.random.Philox(seed))

    def spawn(self, *key):
        return RngStream(self.master_seed, self.stream_id, self.namespace, self.subkey + key)

    def clone(self):
        other = RngStream(self.master_seed, self.stream_id, self.namespace, self.subkey)
        other.state = self.state
        return other

    @property
    def state(self):
        return self.generator.bit_generator.state

    @state.setter
    def state(self, value):
        self.generator.bit_generator.state = value

    @property
    def provenance(self):
        return (self.master_seed, self.stream_id, self.namespace) + self.subkey

    def __repr__(self):
        return f"RngStream{self.provenance}"


def derive_stream(master_seed, stream_id, namespace=0):
    return RngStream(master_seed, stream_id, namespace)


@dataclass(frozen=True, eq=False)
class WeightConfig:
    """Edge weights in canonical edge order with their provenance."""

    values: np.ndarray
    provenance: tuple
    enumeration_hash: str

    def __post_init__(self):
        if self.values.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(self.values < 0):
            raise ValueError("edge weights must be >= 0")

    def __len__(self):
        return len(self.values)


def sample_weights(graph, dist, stream):
    """i.i.d. draws from ``dist`` for every edge of ``graph``, in canonical order."""
    values = np.asarray(dist.sample(stream.generator, graph.edge_count), dtype=float)
    return WeightConfig(values, stream.provenance, graph.enumeration_hash)


def transform_weights(config, transform):
    """omega -> h(omega) edgewise."""
    return WeightConfig(
        np.asarray(transform(config.values), dtype=float),
        config.provenance,
        config.enumeration_hash,
    )
