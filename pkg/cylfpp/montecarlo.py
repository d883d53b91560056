"""
montecarlo.py
-------------
Replication harness: runs R independent replicates of the passage
functionals, accumulates mergeable moment summaries, and persists raw
samples with a JSON manifest.

Replicate i always draws from stream id i of the plan's namespace.
Replicates are processed in fixed-size chunks whose summaries are merged in
chunk order, so the output does not depend on the worker count.
"""

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from functools import lru_cache
from itertools import repeat
from typing import NamedTuple

import numpy as np

from . import __version__, readers, writers
from .accumulator import MomentAccumulator
from .decomposition import block_times, diameter_block_warning
from .errors import MarginCapError, SchemaVersionError
from .graph import DEFAULT_VERTEX_BUDGET, GraphSpec, graph_metrics
from .passage import (
    SearchScratch,
    core_cylinder,
    cylinder_point_time,
    essential_edge_count,
    side_to_side_time,
    strip_point_time,
)
from .weights import DOMINATION, WeightDistribution, derive_stream, sample_weights

logger = logging.getLogger(__name__)

FUNCTIONALS = ("T", "t", "a", "pi", "L", "blocks", "process")
SCHEMA_VERSION = "cylfpp-results/1"
CHUNK_SIZE = 64
RETENTION_LIMIT = 10**6

SAMPLES_FILE = "samples.csv"


@dataclass(frozen=True)
class ExperimentPlan:
    """
    What to simulate: base graph, length n, weight law, functionals, R and
    the master seed.

    ``margin`` is the initial strip margin for ``a``; ``block_length`` is
    required by ``blocks``; ``process_grid`` (0 < t_1 < ... <= 1) by
    ``process``.
    """

    base: GraphSpec
    n: int
    distribution: WeightDistribution
    functionals: tuple = ("T",)
    replicates: int = 1
    master_seed: int = 0
    margin: int = 1
    margin_cap: object = None
    block_length: object = None
    process_grid: tuple = ()
    retain_samples: object = None
    namespace: int = 0
    max_vertices: int = DEFAULT_VERTEX_BUDGET

    def __post_init__(self):
        functionals = tuple("pi" if f == "π" else f for f in self.functionals)
        object.__setattr__(self, "functionals", functionals)
        object.__setattr__(self, "process_grid", tuple(float(x) for x in self.process_grid))
        if not functionals:
            raise ValueError("functional set must be nonempty")
        unknown = [f for f in functionals if f not in FUNCTIONALS]
        if unknown:
            raise ValueError(f"unknown functionals {unknown}, expected a subset of {FUNCTIONALS}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.master_seed < 0:
            raise ValueError(f"master seed must be >= 0, got {self.master_seed}")
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if "blocks" in functionals:
            if self.block_length is None or not 1 <= self.block_length <= self.n:
                raise ValueError(
                    f"blocks needs 1 <= block_length <= n={self.n}, got {self.block_length}"
                )
        if "process" in functionals:
            grid = self.process_grid
            if not grid or grid[0] <= 0 or grid[-1] > 1 or any(
                b <= a for a, b in zip(grid, grid[1:])
            ):
                raise ValueError(f"process grid must be increasing in (0, 1], got {grid}")

    @classmethod
    def box(cls, n, h, d, distribution, **kwargs):
        return cls(base=GraphSpec.box(h, d), n=n, distribution=distribution, **kwargs)

    @property
    def retains(self):
        if self.retain_samples is None:
            return self.replicates <= RETENTION_LIMIT
        return bool(self.retain_samples)

    @property
    def block_count(self):
        return self.n // self.block_length if self.block_length else 0

    def sample_keys(self):
        """Names of the per-replicate values, in storage order."""
        keys = []
        fs = self.functionals
        for name in ("T", "t"):
            if name in fs:
                keys.append(name)
        if "a" in fs:
            keys += ["a", "window"]
        for name in ("pi", "L"):
            if name in fs:
                keys.append(name)
        if "blocks" in fs:
            keys += [f"X{i}" for i in range(1, self.block_count + 2)]
            keys += ["Xsum", "Y", "S_mD"]
        if "process" in fs:
            keys += [process_key(tj) for tj in self.process_grid]
        return keys

    def to_dict(self):
        return {
            "base": self.base.to_dict(),
            "n": self.n,
            "distribution": self.distribution.to_dict(),
            "functionals": list(self.functionals),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "margin": self.margin,
            "margin_cap": self.margin_cap,
            "block_length": self.block_length,
            "process_grid": list(self.process_grid),
            "retain_samples": self.retain_samples,
            "namespace": self.namespace,
            "max_vertices": self.max_vertices,
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["base"] = GraphSpec.from_dict(data["base"])
        data["distribution"] = WeightDistribution.from_dict(data["distribution"])
        data["functionals"] = tuple(data["functionals"])
        data["process_grid"] = tuple(data.get("process_grid", ()))
        return cls(**data)


def process_key(tj):
    return f"t@{tj:g}"


@dataclass(frozen=True)
class RunManifest:
    """
    Plan echo, code version and per-key summaries of one run.

    All wall-clock data lives in ``timing`` so that it can be masked when
    comparing runs.
    """

    plan: dict
    version: str
    summaries: dict
    sample_file: object = None
    timing: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def accumulators(self):
        return {k: MomentAccumulator.from_dict(v) for k, v in self.summaries.items()}

    def experiment_plan(self):
        return ExperimentPlan.from_dict(self.plan)

    def to_dict(self):
        return asdict(self)

    def masked(self):
        data = self.to_dict()
        data.pop("timing")
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(
            plan=data["plan"],
            version=data["version"],
            summaries=data["summaries"],
            sample_file=data.get("sample_file"),
            timing=data.get("timing", {}),
            schema_version=data["schema_version"],
        )


class ExperimentRun(NamedTuple):
    manifest: RunManifest
    samples: dict


def run_replicate(plan, replicate):
    """All requested functionals for one replicate, keyed as in ``sample_keys``."""
    n = plan.n
    fs = plan.functionals
    stream = derive_stream(plan.master_seed, replicate, plan.namespace)
    graph = core_cylinder(plan.base, n, plan.max_vertices)
    weights = sample_weights(graph, plan.distribution, stream)
    wl = weights.values.tolist()
    scratch = SearchScratch(graph.vertex_count)
    out = {}

    if "T" in fs:
        out["T"] = side_to_side_time(graph, wl, 0, n, scratch).value
    if "t" in fs or "pi" in fs or "L" in fs:
        point = cylinder_point_time(graph, wl, scratch=scratch)
        out["t"] = point.value
        out["pi"] = float(point.pi)
        if "L" in fs:
            report = essential_edge_count(graph, wl, "cylinder_point", scratch=scratch)
            out["L"] = float(report.L)
    if "a" in fs:
        try:
            strip = strip_point_time(
                n,
                dist=plan.distribution,
                stream=stream,
                initial_margin=plan.margin,
                margin_cap=plan.margin_cap,
                core_weights=weights,
                base=plan.base,
                max_vertices=plan.max_vertices,
            )
        except MarginCapError as exc:
            raise MarginCapError(exc.n, exc.margin, exc.cap, replicate=replicate) from exc
        out["a"] = strip.value
        out["window"] = float(strip.window_used)
    if "blocks" in fs:
        dec = block_times(graph, wl, plan.block_length)
        for i, x in enumerate(dec.X, start=1):
            out[f"X{i}"] = x
        out["Xsum"] = dec.block_sum
        out["Y"] = dec.Y
        diameter = _base_diameter(plan.base)
        extra = plan.distribution.sample(stream.spawn(DOMINATION).generator, dec.m * diameter)
        out["S_mD"] = math.fsum(extra)
    if "process" in fs:
        for tj in plan.process_grid:
            column = math.floor(n * tj)
            value = 0.0
            if column > 0:
                value = cylinder_point_time(graph, wl, n=column, scratch=scratch).value
            out[process_key(tj)] = value
    return out


@lru_cache(maxsize=16)
def _base_diameter(base):
    return graph_metrics(base).diameter


def run_chunk(plan, start, stop):
    """Replicates ``start..stop-1`` as arrays keyed by sample name."""
    keys = plan.sample_keys()
    values = {k: np.empty(stop - start) for k in keys}
    for offset, i in enumerate(range(start, stop)):
        row = run_replicate(plan, i)
        for k in keys:
            values[k][offset] = row[k]
    return values


def chunk_bounds(count, size=CHUNK_SIZE):
    return [(s, min(s + size, count)) for s in range(0, count, size)]


def _map_chunks(plan, bounds, workers):
    if workers <= 1:
        for start, stop in bounds:
            yield run_chunk(plan, start, stop)
        return
    starts = [s for s, _ in bounds]
    stops = [e for _, e in bounds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(run_chunk, repeat(plan), starts, stops)


def summarize_samples(samples, keys=None, size=CHUNK_SIZE):
    """Chunked accumulation identical to the one done while running."""
    keys = list(samples) if keys is None else keys
    summaries = {}
    for key in keys:
        values = np.asarray(samples[key], dtype=float)
        acc = MomentAccumulator()
        for start, stop in chunk_bounds(len(values), size):
            acc = acc.merge(MomentAccumulator.from_values(values[start:stop]))
        summaries[key] = acc
    return summaries


def run_experiment(plan, workers=1, output_dir=None):
    """
    Run every replicate of ``plan``.

    Returns:
        ExperimentRun(manifest, samples); ``samples`` is empty when raw
        samples are not retained.

    Raises:
        GraphBudgetError: the cylinder exceeds ``plan.max_vertices``.
        MarginCapError: a strip window hit its cap; carries the replicate id.
    """
    started = datetime.now(timezone.utc)
    clock = time.perf_counter()
    core_cylinder(plan.base, plan.n, plan.max_vertices)
    if "blocks" in plan.functionals:
        diameter_block_warning(_base_diameter(plan.base), plan.block_length)

    keys = plan.sample_keys()
    bounds = chunk_bounds(plan.replicates)
    accumulators = {k: MomentAccumulator() for k in keys}
    retained = {k: [] for k in keys}
    logger.info(
        "Running %d replicates of %s (n=%d, %s) in %d chunks on %d worker(s)",
        plan.replicates,
        ",".join(plan.functionals),
        plan.n,
        plan.distribution,
        len(bounds),
        max(workers, 1),
    )
    for index, values in enumerate(_map_chunks(plan, bounds, workers)):
        for k in keys:
            accumulators[k] = accumulators[k].merge(MomentAccumulator.from_values(values[k]))
            if plan.retains:
                retained[k].append(values[k])
        logger.debug("Chunk %d/%d done", index + 1, len(bounds))

    samples = {k: np.concatenate(v) for k, v in retained.items()} if plan.retains else {}
    manifest = RunManifest(
        plan=plan.to_dict(),
        version=__version__,
        summaries={k: acc.to_dict() for k, acc in accumulators.items()},
        sample_file=SAMPLES_FILE if samples else None,
        timing={
            "started": started.isoformat(),
            "wall_time": time.perf_counter() - clock,
        },
    )
    if output_dir is not None:
        persist_results(manifest, samples, output_dir)
    return ExperimentRun(manifest, samples)


def persist_results(manifest, samples, path):
    """Write ``manifest.json`` and, when present, ``samples.csv`` under ``path``."""
    writers.ensure_directory(path)
    manifest_path, samples_path = readers.result_paths(path)
    if samples:
        keys = [k for k in ExperimentPlan.from_dict(manifest.plan).sample_keys() if k in samples]
        keys += [k for k in samples if k not in keys]
        writers.write_samples(samples_path, samples, keys)
        manifest = replace(manifest, sample_file=SAMPLES_FILE)
    else:
        manifest = replace(manifest, sample_file=None)
    writers.write_manifest(manifest_path, manifest.to_dict())
    return manifest


def load_results(path):
    """
    Read a result directory written by :func:`persist_results`.

    Raises:
        SchemaVersionError: the manifest has another schema version.
        OSError: the files cannot be read.
    """
    manifest_path, _ = readers.result_paths(path)
    data = readers.read_manifest(manifest_path)
    found = data.get("schema_version")
    if found != SCHEMA_VERSION:
        raise SchemaVersionError(found, SCHEMA_VERSION)
    manifest = RunManifest.from_dict(data)
    samples = {}
    if manifest.sample_file:
        samples = readers.read_samples(os.path.join(path, manifest.sample_file))
    return manifest, samples


@dataclass(frozen=True)
class SweepPoint:
    index: int
    n: int
    h: object = None
    alpha: object = None

    @property
    def label(self):
        h = "G" if self.h is None else self.h
        return f"point{self.index:03d}_n{self.n}_h{h}"


@dataclass
class SweepResult:
    runs: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def manifests(self):
        return [run.manifest for _, run in self.runs]


def sweep_grid(ns, hs=None, alphas=None):
    """Grid points over n x h, or over n x alpha with h = floor(n^alpha)."""
    if hs and alphas:
        raise ValueError("give either an h grid or an alpha grid, not both")
    points = []
    for n in ns:
        if alphas:
            for alpha in alphas:
                h = int(math.floor(n**alpha + 1e-9))
                points.append(SweepPoint(len(points), n, h, alpha))
        elif hs:
            for h in hs:
                points.append(SweepPoint(len(points), n, h))
        else:
            points.append(SweepPoint(len(points), n))
    return points


def sweep(base_plan, ns, hs=None, alphas=None, workers=1, output_dir=None):
    """
    One run per grid point, all under the base plan's master seed with
    namespace ``index + 1``. A failing point is recorded and the sweep goes on.
    """
    points = sweep_grid(ns, hs, alphas)
    if not points:
        raise ValueError("sweep grid is empty")
    result = SweepResult()
    for point in points:
        try:
            base = base_plan.base
            if point.h is not None:
                if base.kind != "box":
                    raise ValueError("an h grid needs a box base graph")
                base = GraphSpec.box(point.h, base.d)
            plan = replace(base_plan, n=point.n, base=base, namespace=point.index + 1)
            directory = None if output_dir is None else os.path.join(output_dir, point.label)
            result.runs.append((point, run_experiment(plan, workers, directory)))
        except Exception as exc:
            logger.error("Sweep point %s failed: %s", point.label, exc)
            result.failures.append((point, f"{type(exc).__name__}: {exc}"))
    logger.info("Sweep finished: %d ok, %d failed", len(result.runs), len(result.failures))
    return result
