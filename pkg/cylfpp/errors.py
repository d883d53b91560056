"""
errors.py
---------
Exception types raised by cylfpp.
"""


class CylfppError(Exception):
    """Base class for all cylfpp errors."""


class ConfigError(CylfppError, ValueError):
    """Invalid, unknown or missing configuration key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")

    def __reduce__(self):
        return type(self), (self.key, str(self).split(": ", 1)[-1])


class GraphBudgetError(CylfppError, ValueError):
    """Cylinder vertex count exceeds the configured budget."""

    def __init__(self, vertex_count, budget):
        self.vertex_count = vertex_count
        self.budget = budget
        super().__init__(
            f"cylinder would have {vertex_count} vertices, budget is {budget}"
        )

    def __reduce__(self):
        return type(self), (self.vertex_count, self.budget)


class DisconnectedGraphError(CylfppError, ValueError):
    """Base graph is not connected."""

    def __init__(self, representative, components):
        self.representative = representative
        self.components = components
        super().__init__(
            f"base graph has {components} components; vertex {representative} "
            "is not connected to the origin"
        )

    def __reduce__(self):
        return type(self), (self.representative, self.components)


class MarginCapError(CylfppError, RuntimeError):
    """Adaptive strip window reached its cap without certifying the geodesic."""

    def __init__(self, n, margin, cap, replicate=None):
        self.n = n
        self.margin = margin
        self.cap = cap
        self.replicate = replicate
        where = "" if replicate is None else f" (replicate {replicate})"
        super().__init__(
            f"strip geodesic for n={n} still touches the window boundary at "
            f"margin {margin}; cap is {cap} columns{where}"
        )

    def __reduce__(self):
        return type(self), (self.n, self.margin, self.cap, self.replicate)


class DegenerateSampleError(CylfppError, ValueError):
    """Sample has zero spread where a check requires a positive variance."""


class InsufficientDataError(CylfppError, ValueError):
    """Too few samples or grid points for a check."""


class SchemaVersionError(CylfppError, ValueError):
    """Persisted results were written with a different schema version."""

    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"schema version {found!r}, expected {expected!r}")

    def __reduce__(self):
        return type(self), (self.found, self.expected)
