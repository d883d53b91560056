"""
This module handles writing all output files of cylfpp: run manifests, raw
sample tables, verification reports and the CSV side files for plotting.
"""

import csv
import json
import logging
import os

logger = logging.getLogger(__name__)


def ensure_directory(path):
    os.makedirs(path, exist_ok=True)
    return path


def format_value(value):
    """17 significant digits: float -> text -> float is exact."""
    return f"{value:.17g}"


def write_json(path, data):
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, allow_nan=True)
        f.write("\n")
    logger.debug("Wrote %s", path)


def write_manifest(path, manifest):
    write_json(path, manifest)


def write_samples(path, samples, keys=None):
    """
    Write raw per-replicate values as ``replicate,functional,value`` rows,
    replicate-major, functionals in ``keys`` order.
    """
    keys = list(samples) if keys is None else list(keys)
    count = len(samples[keys[0]]) if keys else 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["replicate", "functional", "value"])
        for i in range(count):
            for key in keys:
                writer.writerow([i, key, format_value(float(samples[key][i]))])
    logger.info("Wrote %d replicates x %d functionals to %s", count, len(keys), path)


def write_report(path, report):
    write_json(path, report)
    logger.info("Wrote report %s", path)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def schedule_rows(schedule, report, threshold=None):
    """Rows ``quantity,index,value`` describing a beta schedule."""
    rows = [("q", "", schedule.q), ("theta", "", f"{schedule.theta:g}"), ("t", "", schedule.t)]
    rows.append(("r", "", f"{schedule.r:.6f}"))
    for i, beta in enumerate(schedule.betas, start=1):
        rows.append(("beta", i, f"{beta:.6f}"))
    rows.append(("alpha_star", "", f"{schedule.alpha_star:.6f}"))
    rows.append(("alpha_limit", "", f"{schedule.alpha_limit:.6f}"))
    for key, slack in report.margins.items():
        rows.append(("slack", key, f"{slack:.3e}"))
    rows.append(("satisfied", "", int(report.satisfied)))
    if threshold is not None:
        if threshold.box_form is not None:
            rows.append(("alpha_box", "", f"{threshold.box_form:.6f}"))
        rows.append(("alpha_general", "", f"{threshold.general_form:.6f}"))
    return rows


def write_schedule(stream, schedule, report, threshold=None):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["quantity", "index", "value"])
    for row in schedule_rows(schedule, report, threshold):
        writer.writerow(row)
