"""
graph.py
--------
Base graphs G and cylinder product graphs [a,b] x G.

Vertices of a cylinder are dense integer ids, column-major:
``id = (column - a) * v + base_vertex``. Edges follow the canonical order
used everywhere weights are sampled: columns ascending; inside a column the
vertical edges in base-edge-list order, then the horizontal edges to the
next column in base-vertex order.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import DisconnectedGraphError, GraphBudgetError

logger = logging.getLogger(__name__)

DEFAULT_VERTEX_BUDGET = 10**7

HORIZONTAL = 0
VERTICAL = 1


@dataclass(frozen=True)
class GraphSpec:
    """
    Description of a base graph G with a distinguished origin.

    Use :meth:`box` for ``[-h,h]^(d-1)`` with nearest-neighbour edges, or
    :meth:`explicit` for an arbitrary finite connected graph.
    """

    kind: str
    h: int = 0
    d: int = 2
    vertex_count: int = 0
    edges: tuple = ()
    origin: int = 0

    def __post_init__(self):
        if self.kind == "box":
            if self.d < 2:
                raise ValueError(f"dimension must be >= 2, got d={self.d}")
            if self.h < 0:
                raise ValueError(f"half-width must be >= 0, got h={self.h}")
        elif self.kind == "explicit":
            if self.vertex_count < 1:
                raise ValueError("explicit graph needs at least one vertex")
            for u, w in self.edges:
                if not (0 <= u < self.vertex_count and 0 <= w < self.vertex_count):
                    raise ValueError(f"edge ({u}, {w}) references a missing vertex")
                if u == w:
                    raise ValueError(f"self-loop at vertex {u}")
            if not 0 <= self.origin < self.vertex_count:
                raise ValueError(f"origin {self.origin} is not a vertex")
        else:
            raise ValueError(f"unknown graph kind {self.kind!r}")

    @classmethod
    def box(cls, h, d):
        return cls(kind="box", h=int(h), d=int(d))

    @classmethod
    def explicit(cls, vertex_count, edges, origin=0):
        edges = tuple((int(u), int(w)) for u, w in edges)
        return cls(
            kind="explicit",
            vertex_count=int(vertex_count),
            edges=edges,
            origin=int(origin),
        )

    @property
    def size(self):
        """Number of vertices of G."""
        if self.kind == "box":
            return (2 * self.h + 1) ** (self.d - 1)
        return self.vertex_count

    @cached_property
    def edge_array(self):
        """Base edges as an ``(k, 2)`` int64 array in canonical base order."""
        if self.kind == "explicit":
            return np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        side = 2 * self.h + 1
        dims = self.d - 1
        index = np.arange(side**dims, dtype=np.int64).reshape((side,) * dims)
        lows, highs, axes = [], [], []
        for axis in range(dims):
            lo = np.take(index, np.arange(side - 1), axis=axis).ravel()
            hi = np.take(index, np.arange(1, side), axis=axis).ravel()
            lows.append(lo)
            highs.append(hi)
            axes.append(np.full(lo.size, axis))
        if not lows:
            return np.zeros((0, 2), dtype=np.int64)
        lo = np.concatenate(lows)
        hi = np.concatenate(highs)
        ax = np.concatenate(axes)
        # vertex-major, axis-minor
        order = np.lexsort((ax, lo))
        return np.stack([lo[order], hi[order]], axis=1)

    @property
    def origin_index(self):
        if self.kind == "box":
            return (self.size - 1) // 2
        return self.origin

    def to_dict(self):
        if self.kind == "box":
            return {"kind": "box", "h": self.h, "d": self.d}
        return {
            "kind": "explicit",
            "vertex_count": self.vertex_count,
            "edges": [list(e) for e in self.edges],
            "origin": self.origin,
        }

    @classmethod
    def from_dict(cls, data):
        if data["kind"] == "box":
            return cls.box(data["h"], data["d"])
        return cls.explicit(data["vertex_count"], data["edges"], data["origin"])


@dataclass(frozen=True)
class GraphMetrics:
    vertex_count: int
    edge_count: int
    diameter: int


def _adjacency_matrix(base):
    v = base.size
    edges = base.edge_array
    data = np.ones(len(edges), dtype=np.int8)
    return coo_matrix((data, (edges[:, 0], edges[:, 1])), shape=(v, v)).tocsr()


def check_connected(base):
    """Raise :class:`DisconnectedGraphError` unless G is connected."""
    if base.kind == "box":
        return
    components, labels = connected_components(_adjacency_matrix(base), directed=False)
    if components > 1:
        stray = np.flatnonzero(labels != labels[base.origin_index])
        raise DisconnectedGraphError(int(stray[0]), int(components))


def graph_metrics(base):
    """
    Exact vertex count, edge count and diameter of G.

    The diameter is the largest breadth-first distance over all sources.
    """
    check_connected(base)
    v = base.size
    k = len(base.edge_array)
    if v == 1:
        return GraphMetrics(vertex_count=1, edge_count=k, diameter=0)
    distances = shortest_path(
        _adjacency_matrix(base), method="D", directed=False, unweighted=True
    )
    return GraphMetrics(vertex_count=v, edge_count=k, diameter=int(distances.max()))


@dataclass(frozen=True, eq=False)
class CylinderGraph:
    """
    The product graph [a,b] x G with dense vertex ids and canonical edges.

    ``edge_u``/``edge_w`` hold endpoint ids, ``edge_kind`` is
    :data:`HORIZONTAL` or :data:`VERTICAL`, ``edge_column`` is the column of
    the lower endpoint.
    """

    a: int
    b: int
    base: GraphSpec
    edge_u: np.ndarray = field(repr=False)
    edge_w: np.ndarray = field(repr=False)
    edge_kind: np.ndarray = field(repr=False)
    edge_column: np.ndarray = field(repr=False)

    @property
    def span(self):
        return (self.a, self.b)

    @property
    def columns(self):
        return self.b - self.a + 1

    @property
    def base_size(self):
        return self.base.size

    @property
    def base_edge_count(self):
        return len(self.base.edge_array)

    @property
    def origin(self):
        return self.base.origin_index

    @property
    def vertex_count(self):
        return self.columns * self.base_size

    @property
    def edge_count(self):
        return len(self.edge_u)

    def encode(self, column, u):
        if not self.a <= column <= self.b:
            raise ValueError(f"column {column} outside span [{self.a}, {self.b}]")
        return (column - self.a) * self.base_size + u

    def decode(self, vertex):
        column, u = divmod(int(vertex), self.base_size)
        return column + self.a, u

    def column_of(self, vertex):
        return int(vertex) // self.base_size + self.a

    def column_vertices(self, column):
        start = self.encode(column, 0)
        return np.arange(start, start + self.base_size, dtype=np.int64)

    def vertex_range(self, c0, c1):
        """Half-open id range of the vertices in columns ``c0..c1``."""
        return self.encode(c0, 0), self.encode(c1, 0) + self.base_size

    def column_edge_slice(self, column):
        """Slice of the edges owned by ``column`` (its verticals, then horizontals)."""
        block = self.base_edge_count + self.base_size
        start = (column - self.a) * block
        stop = start + (self.base_edge_count if column == self.b else block)
        return slice(start, stop)

    def vertical_edges(self, column):
        start = self.column_edge_slice(column).start
        return range(start, start + self.base_edge_count)

    def horizontal_edge(self, column, u):
        """Id of the edge (column, u) -- (column + 1, u)."""
        if not self.a <= column < self.b:
            raise ValueError(f"no horizontal edge leaves column {column}")
        return self.column_edge_slice(column).start + self.base_edge_count + u

    def straight_line(self, c0, c1):
        """Edge ids of the straight path along the origin from c0 to c1."""
        return [self.horizontal_edge(c, self.origin) for c in range(c0, c1)]

    @cached_property
    def enumeration_hash(self):
        digest = hashlib.sha256()
        digest.update(np.array([self.a, self.b, self.base_size], dtype=np.int64).tobytes())
        digest.update(self.edge_u.tobytes())
        digest.update(self.edge_w.tobytes())
        return digest.hexdigest()

    @cached_property
    def endpoints(self):
        return self.edge_u.tolist(), self.edge_w.tolist()

    @cached_property
    def adjacency(self):
        """Per-vertex list of ``(neighbour, edge id)`` in edge-id order."""
        adjacency = [[] for _ in range(self.vertex_count)]
        us, ws = self.endpoints
        for e, (u, w) in enumerate(zip(us, ws)):
            adjacency[u].append((w, e))
            adjacency[w].append((u, e))
        return adjacency

    @cached_property
    def edge_lookup(self):
        us, ws = self.endpoints
        return {(min(u, w), max(u, w)): e for e, (u, w) in enumerate(zip(us, ws))}


def build_cylinder(a, b, base, max_vertices=DEFAULT_VERTEX_BUDGET):
    """Build [a,b] x G in canonical edge order."""
    if b < a:
        raise ValueError(f"empty span [{a}, {b}]")
    v = base.size
    columns = b - a + 1
    vertex_count = columns * v
    if vertex_count > max_vertices or vertex_count >= np.iinfo(np.int64).max:
        raise GraphBudgetError(vertex_count, max_vertices)

    base_edges = base.edge_array
    k = len(base_edges)
    offsets = (np.arange(columns - 1, dtype=np.int64) * v)[:, None]
    span_v = np.arange(v, dtype=np.int64)[None, :]

    vert_u = offsets + base_edges[:, 0][None, :]
    vert_w = offsets + base_edges[:, 1][None, :]
    hor_u = offsets + span_v
    hor_w = hor_u + v
    last = (columns - 1) * v

    edge_u = np.concatenate(
        [np.concatenate([vert_u, hor_u], axis=1).ravel(), last + base_edges[:, 0]]
    )
    edge_w = np.concatenate(
        [np.concatenate([vert_w, hor_w], axis=1).ravel(), last + base_edges[:, 1]]
    )
    block_kind = np.concatenate(
        [np.full(k, VERTICAL, dtype=np.int8), np.full(v, HORIZONTAL, dtype=np.int8)]
    )
    edge_kind = np.concatenate(
        [np.tile(block_kind, columns - 1), np.full(k, VERTICAL, dtype=np.int8)]
    )
    edge_column = np.concatenate(
        [
            np.repeat(np.arange(a, b, dtype=np.int64), k + v),
            np.full(k, b, dtype=np.int64),
        ]
    )
    logger.debug(
        "Built cylinder [%d, %d] x G: %d vertices, %d edges",
        a,
        b,
        vertex_count,
        len(edge_u),
    )
    return CylinderGraph(
        a=a,
        b=b,
        base=base,
        edge_u=edge_u,
        edge_w=edge_w,
        edge_kind=edge_kind,
        edge_column=edge_column,
    )


def build_box_cylinder(n, h, d, margin=0, max_vertices=DEFAULT_VERTEX_BUDGET):
    """
    Cylinder ``[-margin, n+margin] x [-h,h]^(d-1)``.

    ``margin=0`` gives exactly ``[0,n] x [-h,h]^(d-1)``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    base = GraphSpec.box(h, d)
    return build_cylinder(-margin, n + margin, base, max_vertices=max_vertices)


def build_product_cylinder(n, base, max_vertices=DEFAULT_VERTEX_BUDGET):
    """Cylinder ``[0,n] x G`` for an explicit (or box) base graph."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    check_connected(base)
    return build_cylinder(0, n, base, max_vertices=max_vertices)


def box_vertex_embedding(h_small, h_large, d):
    """Base-vertex ids of box(h_small, d) inside box(h_large, d), same coordinates."""
    if h_small > h_large:
        raise ValueError("smaller box must not exceed the larger one")
    dims = d - 1
    small_side = 2 * h_small + 1
    large_side = 2 * h_large + 1
    coords = np.indices((small_side,) * dims).reshape(dims, -1) + (h_large - h_small)
    return np.ravel_multi_index(tuple(coords), (large_side,) * dims)


def embed_edges(small, large, base_map):
    """
    Edge ids in ``large`` of every edge of ``small``.

    ``base_map[u]`` is the base vertex of ``large`` that plays the role of
    base vertex ``u`` of ``small``; spans must share their columns.
    """
    ids = np.empty(small.edge_count, dtype=np.int64)
    lookup = large.edge_lookup
    us, ws = small.endpoints
    for e, (u, w) in enumerate(zip(us, ws)):
        cu, bu = small.decode(u)
        cw, bw = small.decode(w)
        x = large.encode(cu, int(base_map[bu]))
        y = large.encode(cw, int(base_map[bw]))
        ids[e] = lookup[(min(x, y), max(x, y))]
    return ids
