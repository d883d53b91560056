"""
passage.py
----------
Exact passage times on cylinders: side-to-side T_{a,b}(G), cylinder
point-to-point t_n(G), strip point-to-point a_n via an adaptive window,
geodesic extraction and essential-edge counts.

All searches are Dijkstra with a binary heap. Ties are broken towards the
smallest predecessor edge id, so geodesics are reproducible.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import MarginCapError
from .graph import DEFAULT_VERTEX_BUDGET, GraphSpec, build_cylinder
from .weights import STRIP_LEFT, STRIP_RIGHT, WeightConfig, sample_weights

logger = logging.getLogger(__name__)

VARIANTS = ("side_to_side", "cylinder_point", "strip_point")

ESSENTIAL_RTOL = 1e-12


class SearchScratch:
    """Distance/predecessor buffers reused across searches on one graph."""

    def __init__(self, vertex_count):
        self.vertex_count = vertex_count
        self.dist = [math.inf] * vertex_count
        self.pred = [-1] * vertex_count
        self.done = bytearray(vertex_count)
        self.touched = []

    def reset(self):
        dist, pred, done = self.dist, self.pred, self.done
        for x in self.touched:
            dist[x] = math.inf
            pred[x] = -1
            done[x] = 0
        self.touched = []


@dataclass(frozen=True)
class PassageQuery:
    """
    Sources, targets, allowed vertex-id range and forbidden edges of a search.

    Every source starts at distance ``start``.
    """

    sources: tuple
    targets: tuple
    vertex_range: tuple
    forbidden: frozenset = frozenset()
    start: float = 0.0

    def forbid(self, edge):
        return PassageQuery(
            self.sources, self.targets, self.vertex_range, self.forbidden | {edge}, self.start
        )


@dataclass(frozen=True)
class ShortestPath:
    value: float
    geodesic: tuple
    source: object = None
    target: object = None

    @property
    def connected(self):
        return self.target is not None


@dataclass(frozen=True)
class PassageResult:
    variant: str
    value: float
    geodesic: tuple = field(repr=False)
    window_used: object = None

    @property
    def pi(self):
        return len(self.geodesic)


@dataclass(frozen=True)
class EssentialEdgeReport:
    L: int
    candidates_tested: int
    edges: tuple = ()


def _weight_list(graph, weights):
    if isinstance(weights, WeightConfig):
        if weights.enumeration_hash != graph.enumeration_hash:
            raise ValueError(
                f"weights enumerate edges of another graph "
                f"({weights.enumeration_hash[:12]} != {graph.enumeration_hash[:12]})"
            )
        weights = weights.values
    values = weights
    if isinstance(values, list):
        return values
    values = np.asarray(values, dtype=float)
    if len(values) != graph.edge_count:
        raise ValueError(
            f"weight vector has {len(values)} entries, graph has {graph.edge_count} edges"
        )
    if np.any(values < 0):
        raise ValueError("edge weights must be >= 0")
    return values.tolist()


def _search(graph, wl, query, scratch):
    adjacency = graph.adjacency
    us, ws = graph.endpoints
    lo, hi = query.vertex_range
    forbidden = query.forbidden
    targets = set(query.targets)
    dist, pred, done = scratch.dist, scratch.pred, scratch.done
    touched = scratch.touched
    heap = []
    start = query.start
    for s in query.sources:
        if dist[s] == math.inf:
            touched.append(s)
            dist[s] = start
            heap.append((start, s))
    heapq.heapify(heap)

    found = None
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = 1
        if u in targets:
            found = u
            break
        for x, e in adjacency[u]:
            if done[x] or x < lo or x >= hi or e in forbidden:
                continue
            nd = d + wl[e]
            dx = dist[x]
            if nd < dx:
                if dx == math.inf:
                    touched.append(x)
                dist[x] = nd
                pred[x] = e
                heapq.heappush(heap, (nd, x))
            elif nd == dx and e < pred[x]:
                pred[x] = e

    if found is None:
        scratch.reset()
        return ShortestPath(math.inf, ())

    path = []
    x = found
    while pred[x] != -1:
        e = pred[x]
        path.append(e)
        x = us[e] + ws[e] - x
    path.reverse()
    result = ShortestPath(dist[found], tuple(path), x, found)
    scratch.reset()
    return result


def solve(graph, weights, query, scratch=None):
    """Run one search for ``query``; ``weights`` may be a prepared list."""
    if scratch is None or scratch.vertex_count != graph.vertex_count:
        scratch = SearchScratch(graph.vertex_count)
    return _search(graph, _weight_list(graph, weights), query, scratch)


def shortest_path(graph, weights, sources, targets, forbidden=None, scratch=None):
    """
    Minimum path weight from any source to any target avoiding ``forbidden``.

    Returns:
        ShortestPath; ``connected`` is False when no path exists.
    """
    sources = tuple(int(s) for s in sources)
    targets = tuple(int(t) for t in targets)
    if not sources or not targets:
        raise ValueError("sources and targets must be nonempty")
    query = PassageQuery(
        sources, targets, (0, graph.vertex_count), frozenset(forbidden or ())
    )
    return solve(graph, weights, query, scratch)


def side_to_side_query(graph, a, b):
    if not (graph.a <= a < b <= graph.b):
        raise ValueError(f"need {graph.a} <= a < b <= {graph.b}, got a={a}, b={b}")
    forbidden = frozenset(graph.vertical_edges(a)) | frozenset(graph.vertical_edges(b))
    return PassageQuery(
        tuple(graph.column_vertices(a).tolist()),
        tuple(graph.column_vertices(b).tolist()),
        graph.vertex_range(a, b),
        forbidden,
    )


def cylinder_point_query(graph, n=None):
    n = graph.b if n is None else n
    if graph.a != 0 or not 1 <= n <= graph.b:
        raise ValueError(f"cylinder point time needs span [0, n], got {graph.span} and n={n}")
    o = graph.origin
    return PassageQuery(
        (graph.encode(0, o),), (graph.encode(n, o),), graph.vertex_range(0, n)
    )


def strip_point_query(window, n=None):
    n = window.a + window.b if n is None else n
    o = window.origin
    return PassageQuery(
        (window.encode(0, o),), (window.encode(n, o),), (0, window.vertex_count)
    )


def side_to_side_time(graph, weights, a=None, b=None, scratch=None):
    """
    T_{a,b}(G): minimum weight over paths from column a to column b.

    Vertical edges inside columns a and b never help, so they are excluded
    and the value does not depend on their weights.
    """
    a = graph.a if a is None else a
    b = graph.b if b is None else b
    path = solve(graph, weights, side_to_side_query(graph, a, b), scratch)
    return PassageResult("side_to_side", path.value, path.geodesic)


def cylinder_point_time(graph, weights, n=None, scratch=None):
    """t_n(G) from (0, o) to (n, o) inside [0, n] x G."""
    path = solve(graph, weights, cylinder_point_query(graph, n), scratch)
    return PassageResult("cylinder_point", path.value, path.geodesic)


def straight_line_time(graph, weights, c0=0, c1=None):
    """Weight of the straight path along the origin from column c0 to c1."""
    c1 = graph.b if c1 is None else c1
    values = weights.values if isinstance(weights, WeightConfig) else np.asarray(weights)
    return math.fsum(values[graph.straight_line(c0, c1)])


@lru_cache(maxsize=32)
def strip_window(base, n, margin, max_vertices=DEFAULT_VERTEX_BUDGET):
    """The window [-margin, n + margin] x G used for a_n."""
    return build_cylinder(-margin, n + margin, base, max_vertices=max_vertices)


@lru_cache(maxsize=8)
def core_cylinder(base, n, max_vertices=DEFAULT_VERTEX_BUDGET):
    return build_cylinder(0, n, base, max_vertices=max_vertices)


def window_weights(core, base, n, margin, dist, stream, window=None):
    """
    Weights of the window [-margin, n + margin] x G extending ``core``.

    Extension column j on either side is drawn from its own sub-stream, so
    growing the margin keeps every earlier weight.
    """
    v = base.size
    k = len(base.edge_array)
    left = [
        dist.sample(stream.spawn(STRIP_LEFT, j).generator, k + v)
        for j in range(margin, 0, -1)
    ]
    right = [
        dist.sample(stream.spawn(STRIP_RIGHT, j).generator, v + k)
        for j in range(1, margin + 1)
    ]
    values = np.concatenate(left + [core.values] + right).astype(float)
    if window is None:
        window = strip_window(base, n, margin)
    return WeightConfig(values, core.provenance, window.enumeration_hash)


def _seeded_distance(window, wl, sources, targets, start, scratch):
    query = PassageQuery(sources, targets, (0, window.vertex_count), start=start)
    return _search(window, wl, query, scratch).value


def escape_lower_bound(window, weights, n, scratch=None):
    """
    Lower bound on every strip path from (0, o) to (n, o) that leaves ``window``.

    Such a path first meets a boundary column on one side, and its last
    boundary vertex lies on that side or the other one; in between it may
    cross the window. Each pattern is bounded by chained searches inside the
    window, the later ones seeded with the earlier distances so the bound
    follows the same left-to-right summation as any path weight.
    """
    wl = _weight_list(window, weights)
    if scratch is None or scratch.vertex_count != window.vertex_count:
        scratch = SearchScratch(window.vertex_count)
    o = window.origin
    source = (window.encode(0, o),)
    target = (window.encode(n, o),)
    left = tuple(window.column_vertices(window.a).tolist())
    right = tuple(window.column_vertices(window.b).tolist())

    bounds = []
    for near, far in ((left, right), (right, left)):
        reach = _seeded_distance(window, wl, source, near, 0.0, scratch)
        bounds.append(_seeded_distance(window, wl, near, target, reach, scratch))
        across = _seeded_distance(window, wl, near, far, reach, scratch)
        bounds.append(_seeded_distance(window, wl, far, target, across, scratch))
    return min(bounds)


def strip_point_time(
    n,
    h=None,
    d=None,
    dist=None,
    stream=None,
    initial_margin=1,
    margin_cap=None,
    core_weights=None,
    base=None,
    max_vertices=DEFAULT_VERTEX_BUDGET,
):
    """
    a_n: minimum weight from (0, o) to (n, o) in the infinite strip Z x G.

    The search runs on [-margin, n + margin] x G. The window value is
    accepted once its geodesic stays off the boundary columns and it does
    not exceed ``escape_lower_bound``, so no path leaving the window can do
    better. Otherwise the margin doubles and only the new columns get fresh
    weights. ``core_weights`` fixes the weights on [0, n] x G (shared with T
    and t of the same replicate); otherwise they are drawn from ``stream``.

    Raises:
        MarginCapError: the margin would exceed ``margin_cap`` (default 8n).
    """
    if base is None:
        base = GraphSpec.box(h, d)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if initial_margin < 0:
        raise ValueError(f"initial margin must be >= 0, got {initial_margin}")
    cap = 8 * n if margin_cap is None else margin_cap
    if core_weights is None:
        core_weights = sample_weights(core_cylinder(base, n, max_vertices), dist, stream)

    margin = initial_margin
    while True:
        window = strip_window(base, n, margin, max_vertices)
        weights = window_weights(core_weights, base, n, margin, dist, stream, window)
        wl = _weight_list(window, weights)
        scratch = SearchScratch(window.vertex_count)
        path = _search(window, wl, strip_point_query(window, n), scratch)
        columns = [window.column_of(path.source)]
        for e in path.geodesic:
            columns.append(window.column_of(window.edge_u[e]))
            columns.append(window.column_of(window.edge_w[e]))
        if min(columns) > -margin and max(columns) < n + margin:
            bound = escape_lower_bound(window, wl, n, scratch)
            if path.value <= bound:
                return PassageResult("strip_point", path.value, path.geodesic, margin)
            logger.debug(
                "Strip value %.17g above escape bound %.17g at margin %d", path.value, bound, margin
            )
        if margin >= cap:
            raise MarginCapError(n, margin, cap)
        grown = min(max(1, 2 * margin), cap)
        logger.debug("Strip window not certified; margin %d -> %d", margin, grown)
        margin = grown


def essential_edge_count(graph, weights, variant, span=None, n=None, scratch=None):
    """
    L: the number of edges whose deletion strictly increases the passage value.

    Essential edges lie on every geodesic, so only the edges of one computed
    geodesic are tested.
    """
    if variant == "side_to_side":
        a, b = span if span is not None else graph.span
        query = side_to_side_query(graph, a, b)
    elif variant == "cylinder_point":
        query = cylinder_point_query(graph, n)
    elif variant == "strip_point":
        query = strip_point_query(graph, n)
    else:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    if scratch is None:
        scratch = SearchScratch(graph.vertex_count)
    wl = _weight_list(graph, weights)
    base = _search(graph, wl, query, scratch)
    if not base.connected:
        raise ValueError("passage value is infinite; essential edges undefined")
    threshold = base.value + ESSENTIAL_RTOL * max(1.0, abs(base.value))
    essential = []
    for e in base.geodesic:
        if _search(graph, wl, query.forbid(e), scratch).value > threshold:
            essential.append(e)
    return EssentialEdgeReport(len(essential), len(base.geodesic), tuple(essential))
