"""
readers.py
----------
Readers for the plain-text inputs of cylfpp: base graphs, empirical weight
laws, config files, and persisted result directories.

Text inputs share one convention: blank lines and lines starting with ``*``
or ``#`` are comments, and everything after ``|`` on a line is an inline
comment.
"""

import csv
import json
import logging
import os
from collections import defaultdict

import numpy as np

from .errors import ConfigError
from .graph import GraphSpec

logger = logging.getLogger(__name__)


def clean_lines(path):
    """Yield ``(line_number, text)`` for the non-comment content of a file."""
    with open(path, "r") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.split("|", 1)[0].strip()
            if not line or line.startswith("*") or line.startswith("#"):
                continue
            yield number, line


def parse_line(line):
    """Splits a line into values, converting to int/float where possible."""
    converted = []
    for part in line.replace(",", " ").split():
        try:
            converted.append(int(part))
        except ValueError:
            try:
                converted.append(float(part))
            except ValueError:
                converted.append(part)
    return converted


def read_edge_list(path):
    """
    Read an explicit base graph.

    Format::

        vertices 6        | vertex count
        origin 0          | optional, defaults to 0
        0 1               | one edge per line
        1 2

    A first line of three integers ``v k origin`` is accepted as a
    header; the file must then list exactly k edges.

    Returns:
        GraphSpec of kind ``explicit``.
    """
    vertex_count = None
    expected = None
    origin = 0
    edges = []
    for index, (number, line) in enumerate(clean_lines(path)):
        values = parse_line(line)
        if index == 0 and len(values) == 3 and all(isinstance(x, int) for x in values):
            vertex_count, expected, origin = values
        elif values[0] == "vertices":
            vertex_count = int(values[1])
        elif values[0] == "origin":
            origin = int(values[1])
        elif len(values) == 2 and all(isinstance(x, int) for x in values):
            edges.append((values[0], values[1]))
        else:
            raise ValueError(f"{path}:{number}: cannot parse edge line {line!r}")
    if expected is not None and len(edges) != expected:
        raise ValueError(f"{path}: header announces {expected} edges, found {len(edges)}")
    if vertex_count is None:
        if not edges:
            raise ValueError(f"{path}: no vertices and no edges")
        vertex_count = 1 + max(max(e) for e in edges)
    logger.info("Read base graph %s: %d vertices, %d edges", path, vertex_count, len(edges))
    return GraphSpec.explicit(vertex_count, edges, origin)


def read_empirical_law(path):
    """
    Read a two-column ``value probability`` file.

    Returns:
        (support, probabilities) as tuples sorted by value.
    """
    rows = []
    for number, line in clean_lines(path):
        values = parse_line(line)
        if len(values) != 2:
            raise ValueError(f"{path}:{number}: expected 'value probability'")
        rows.append((float(values[0]), float(values[1])))
    if not rows:
        raise ValueError(f"{path}: empirical law has no atoms")
    rows.sort()
    support = tuple(v for v, _ in rows)
    probs = tuple(p for _, p in rows)
    return support, probs


def read_config_file(path):
    """
    Read ``key = value`` pairs.

    Returns:
        dict of raw string values keyed by underscore names.
    """
    values = {}
    for number, line in clean_lines(path):
        if "=" not in line:
            raise ConfigError(f"line {number}", f"expected 'key = value' in {path}")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        values[key] = value.strip()
    return values


def read_manifest(path):
    with open(path, "r") as f:
        return json.load(f)


def read_samples(path):
    """
    Read a ``replicate,functional,value`` CSV.

    Returns:
        dict functional -> float array indexed by replicate.
    """
    columns = defaultdict(dict)
    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != ["replicate", "functional", "value"]:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            columns[row["functional"]][int(row["replicate"])] = float(row["value"])
    samples = {}
    for key, by_replicate in columns.items():
        count = max(by_replicate) + 1
        values = np.full(count, np.nan)
        for i, value in by_replicate.items():
            values[i] = value
        samples[key] = values
    return samples


def result_paths(directory):
    return (
        os.path.join(directory, "manifest.json"),
        os.path.join(directory, "samples.csv"),
    )
