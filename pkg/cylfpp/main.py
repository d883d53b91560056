"""
main.py
-------
Command-line entry point: binds flags and key=value config files to
experiments, sweeps, beta schedules and verification reports.

Exit statuses: 0 success, 1 a check failed, 2 configuration error,
3 runtime failure. Human-readable text goes to stderr through logging;
data goes to files in the output directory.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, readers, writers
from .decomposition import alpha_threshold, beta_schedule, lyapounov_ratio, verify_schedule
from .errors import ConfigError, InsufficientDataError
from .graph import DEFAULT_VERTEX_BUDGET, GraphSpec, graph_metrics
from .montecarlo import ExperimentPlan, load_results, process_key, run_experiment, sweep
from .stats import (
    donsker_covariance_check,
    essential_moment_bound_check,
    mean_convergence_check,
    normality_diagnostics,
    qq_points,
    report_table,
    sandwich_and_domination_check,
    tail_geodesic_check,
    variance_scaling_check,
)
from .weights import parse_distribution

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

ENV_OUTPUT = "CYLFPP_OUTPUT"
COMMANDS = ("simulate", "sweep", "schedule", "verify", "analyze")
CHECKS = ("sandwich", "normality", "donsker", "essential", "lyapounov")


def _bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _list(convert):
    def parse(text):
        if isinstance(text, (list, tuple)):
            return [convert(x) for x in text]
        return [convert(x) for x in str(text).replace(",", " ").split()]

    parse.__name__ = f"list of {convert.__name__}"
    return parse


# key -> (converter, help)
KEYS = {
    "n": (int, "cylinder length (columns 0..n)"),
    "h": (int, "half-width of the box base [-h,h]^(d-1)"),
    "d": (int, "dimension; the base box has d-1 axes"),
    "base_file": (str, "explicit base graph (edge list) instead of a box"),
    "margin": (int, "initial strip margin for the a functional (default 1)"),
    "margin_cap": (int, "largest strip margin before failing (default 8n)"),
    "max_vertices": (int, f"cylinder vertex budget (default {DEFAULT_VERTEX_BUDGET})"),
    "dist": (str, "weight law family:params, e.g. exponential:1 or uniform:0,1"),
    "reps": (int, "number of replicates R"),
    "seed": (int, "master seed"),
    "functionals": (_list(str), "comma list from T,t,a,pi,L,blocks,process (default T)"),
    "block_length": (int, "block length l for the blocks functional"),
    "process_grid": (_list(float), "comma list 0 < t_1 < ... <= 1 for the process functional"),
    "retain_samples": (_bool, "keep raw samples (default: when R <= 10^6)"),
    "ns": (_list(int), "comma list of cylinder lengths"),
    "hs": (_list(int), "comma list of half-widths"),
    "alphas": (_list(float), "comma list of exponents, h = floor(n^alpha)"),
    "q": (int, "integer q >= 2 of the beta schedule"),
    "theta": (float, "growth exponent theta >= 1 of the base graphs"),
    "t": (int, "schedule depth t >= 1"),
    "p": (float, "moment order p > 2"),
    "checks": (_list(str), "comma list from " + ",".join(CHECKS) + " (default: all applicable)"),
    "functional": (str, "functional used by normality and scaling checks (default T)"),
    "max_skewness": (float, "largest |skewness| accepted by the normality check (default 0.2)"),
    "input": (str, "result directory to verify"),
    "inputs": (_list(str), "comma list of result directories, one per n"),
    "workers": (int, "worker processes (default 1)"),
    "output": (str, f"output directory (default ${ENV_OUTPUT} or ./output)"),
}

PLAN_KEYS = [
    "h", "d", "base_file", "margin", "margin_cap", "max_vertices", "dist", "reps",
    "seed", "functionals", "block_length", "process_grid", "retain_samples",
    "workers", "output",
]
COMMAND_KEYS = {
    "simulate": ["n"] + PLAN_KEYS,
    "sweep": ["ns", "hs", "alphas"] + PLAN_KEYS,
    "schedule": ["q", "theta", "t", "p", "d", "output"],
    "verify": ["input", "checks", "functional", "max_skewness", "p", "output"],
    "analyze": ["inputs", "functional", "p", "output"],
}
REQUIRED = {
    "simulate": ["n", "dist", "reps", "seed"],
    "sweep": ["ns", "dist", "reps", "seed"],
    "schedule": ["q", "theta", "t"],
    "verify": ["input"],
    "analyze": ["inputs"],
}


@dataclass
class Config:
    """Validated settings of one command."""

    command: str
    n: object = None
    h: object = None
    d: object = None
    base_file: object = None
    margin: int = 1
    margin_cap: object = None
    max_vertices: int = DEFAULT_VERTEX_BUDGET
    dist: object = None
    reps: object = None
    seed: object = None
    functionals: list = field(default_factory=lambda: ["T"])
    block_length: object = None
    process_grid: list = field(default_factory=list)
    retain_samples: object = None
    ns: list = field(default_factory=list)
    hs: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    q: object = None
    theta: object = None
    t: object = None
    p: object = None
    checks: object = None
    functional: str = "T"
    max_skewness: float = 0.2
    input: object = None
    inputs: list = field(default_factory=list)
    workers: int = 1
    output: str = field(default_factory=lambda: os.environ.get(ENV_OUTPUT, "output"))
    verbose: bool = False
    quiet: bool = False

    def base_graph(self, h=None):
        if self.base_file:
            try:
                return readers.read_edge_list(self.base_file)
            except (OSError, ValueError) as exc:
                raise ConfigError("base_file", str(exc)) from exc
        h = self.h if h is None else h
        if h is None or self.d is None:
            raise ConfigError("h" if h is None else "d", "missing required field (or give base_file)")
        try:
            return GraphSpec.box(h, self.d)
        except ValueError as exc:
            raise ConfigError("d" if self.d < 2 else "h", str(exc)) from exc

    def to_plan(self, n=None, h=None):
        """Build the ExperimentPlan described by this config."""
        try:
            distribution = parse_distribution(self.dist)
        except (OSError, ValueError) as exc:
            raise ConfigError("dist", str(exc)) from exc
        try:
            return ExperimentPlan(
                base=self.base_graph(h),
                n=self.n if n is None else n,
                distribution=distribution,
                functionals=tuple(self.functionals),
                replicates=self.reps,
                master_seed=self.seed,
                margin=self.margin,
                margin_cap=self.margin_cap,
                block_length=self.block_length,
                process_grid=tuple(self.process_grid),
                retain_samples=self.retain_samples,
                max_vertices=self.max_vertices,
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("plan", str(exc)) from exc


def build_parser():
    """Top-level parser and the subparser of every command."""
    parser = argparse.ArgumentParser(
        prog="cylfpp",
        description="First-passage percolation on thin cylinders",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  cylfpp simulate --n 100 --h 2 --d 2 --dist exponential:1 --reps 100 --seed 7
  cylfpp sweep --ns 1024,4096 --alphas 0.3 --d 2 --dist exponential:1 --reps 500 --seed 1
  cylfpp schedule --q 2 --theta 1 --t 2
  cylfpp verify --input output
  cylfpp analyze --inputs runs/n2000,runs/n4000
        """,
    )
    parser.add_argument("--version", action="version", version=f"cylfpp {__version__}")
    subparsers = parser.add_subparsers(dest="command")
    commands = {}
    for command in COMMANDS:
        sub = subparsers.add_parser(
            command,
            help=f"{command} (see cylfpp {command} --help)",
            allow_abbrev=False,
            argument_default=argparse.SUPPRESS,
        )
        sub.add_argument("--config", help="key = value config file; flags override it")
        sub.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        sub.add_argument("--quiet", action="store_true", help="warnings and errors only")
        for key in COMMAND_KEYS[command]:
            _, text = KEYS[key]
            sub.add_argument("--" + key.replace("_", "-"), dest=key, metavar=key.upper(), help=text)
        commands[command] = sub
    return parser, commands


def parse_config(argv=None):
    """
    Parse flags (and an optional ``--config`` file) into a Config.

    Flags override file values. Unknown keys, bad values and missing
    required fields raise ConfigError naming the key.
    """
    parser, _ = build_parser()
    args, extras = parser.parse_known_args(argv)
    if extras:
        token = next((x for x in extras if x.startswith("-")), extras[0])
        raise ConfigError(token.lstrip("-").split("=", 1)[0].replace("-", "_"), "unknown key")
    command = getattr(args, "command", None)
    if command is None:
        raise ConfigError("command", f"missing subcommand, one of {', '.join(COMMANDS)}")
    given = vars(args)
    allowed = COMMAND_KEYS[command]

    raw = {}
    if "config" in given:
        try:
            file_values = readers.read_config_file(given["config"])
        except OSError as exc:
            raise ConfigError("config", str(exc)) from exc
        for key in file_values:
            if key not in allowed:
                raise ConfigError(key, "unknown key")
        raw.update(file_values)
    raw.update({k: v for k, v in given.items() if k in allowed})

    values = {}
    for key, text in raw.items():
        convert, _ = KEYS[key]
        try:
            values[key] = convert(text)
        except (TypeError, ValueError):
            raise ConfigError(key, f"expected {convert.__name__}, got {text!r}") from None
    for key in REQUIRED[command]:
        if key not in values:
            raise ConfigError(key, "missing required field")
    if command == "sweep" and not values.get("base_file"):
        if "d" not in values:
            raise ConfigError("d", "missing required field (or give base_file)")
        if not values.get("hs") and not values.get("alphas"):
            raise ConfigError("hs", "give hs or alphas for a box base")
    return Config(
        command=command,
        verbose=given.get("verbose", False),
        quiet=given.get("quiet", False),
        **values,
    )


def run_simulate(cfg):
    plan = cfg.to_plan()
    run = run_experiment(plan, workers=cfg.workers, output_dir=cfg.output)
    for key, summary in run.manifest.summaries.items():
        logger.info("%-8s mean %.6g  variance %s", key, summary["mean"], summary["variance"])
    logger.info("Results written to %s", cfg.output)
    return EXIT_OK


def run_sweep(cfg):
    ns = sorted(cfg.ns)
    h0 = cfg.hs[0] if cfg.hs else 0
    base_plan = cfg.to_plan(n=ns[-1], h=None if cfg.base_file else h0)
    result = sweep(
        base_plan,
        ns,
        hs=cfg.hs or None,
        alphas=cfg.alphas or None,
        workers=cfg.workers,
        output_dir=cfg.output,
    )
    index = {
        "runs": [
            {"n": p.n, "h": p.h, "alpha": p.alpha, "directory": p.label, "namespace": p.index + 1}
            for p, _ in result.runs
        ],
        "failures": [{"n": p.n, "h": p.h, "alpha": p.alpha, "error": msg} for p, msg in result.failures],
    }
    writers.ensure_directory(cfg.output)
    writers.write_json(os.path.join(cfg.output, "sweep.json"), index)
    return EXIT_RUNTIME if result.failures else EXIT_OK


def run_schedule(cfg):
    try:
        schedule = beta_schedule(cfg.q, cfg.theta, cfg.t)
        threshold = alpha_threshold(cfg.p, cfg.theta, cfg.d) if cfg.p is not None else None
    except ValueError as exc:
        raise ConfigError("schedule", str(exc)) from exc
    report = verify_schedule(schedule, schedule.alpha_star)
    writers.ensure_directory(cfg.output)
    path = os.path.join(cfg.output, "schedule.csv")
    with open(path, "w", newline="") as f:
        writers.write_schedule(f, schedule, report, threshold)
    writers.write_schedule(sys.stdout, schedule, report, threshold)
    logger.info("Schedule written to %s", path)
    return EXIT_OK


def _applicable_checks(samples, cfg):
    keys = set(samples)
    count = len(next(iter(samples.values()))) if samples else 0
    chosen = []
    if len(keys & {"T", "a", "t"}) >= 2 or "Y" in keys:
        chosen.append("sandwich")
    if cfg.functional in keys and count >= 50:
        chosen.append("normality")
    if any(k.startswith("t@") for k in keys) and count >= 500:
        chosen.append("donsker")
    if {"t", "L"} <= keys and count >= 2:
        chosen.append("essential")
    if "X1" in keys and count >= 2:
        chosen.append("lyapounov")
    return chosen


def run_verify(cfg):
    manifest, samples = load_results(cfg.input)
    if not samples:
        raise InsufficientDataError(f"{cfg.input} has no raw samples to verify")
    plan = manifest.experiment_plan()
    checks = cfg.checks or _applicable_checks(samples, cfg)
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise ConfigError("checks", f"unknown checks {unknown}")
    diameter = graph_metrics(plan.base).diameter
    p = cfg.p if cfg.p is not None else 2.0
    writers.ensure_directory(cfg.output)

    reports = {}
    data = {}
    for check in checks:
        if check == "sandwich":
            reports[check] = sandwich_and_domination_check(
                samples,
                dist=plan.distribution,
                diameter=diameter,
                block_count=plan.block_count if "blocks" in plan.functionals else None,
                p=p,
            )
        elif check == "normality":
            values = samples[cfg.functional]
            reports[check] = normality_diagnostics(values, max_abs_skewness=cfg.max_skewness)
            theory, empirical = qq_points(values)
            writers.write_csv(
                os.path.join(cfg.output, "qq.csv"), ["normal", "empirical"], zip(theory, empirical)
            )
        elif check == "donsker":
            keys = [process_key(tj) for tj in plan.process_grid]
            paths = np.column_stack([samples[k] for k in keys])
            report = donsker_covariance_check(paths, plan.process_grid, plan.n)
            reports[check] = report
            header = ["s"] + [f"{tj:g}" for tj in plan.process_grid]
            rows = [[f"{s:g}"] + row for s, row in zip(plan.process_grid, report.covariance)]
            writers.write_csv(os.path.join(cfg.output, "covariance.csv"), header, rows)
        elif check == "essential":
            reports[check] = essential_moment_bound_check(
                samples["t"], samples["L"], plan.distribution, p=p
            )
        elif check == "lyapounov":
            order = p if p > 2 else 4.0
            ratio = lyapounov_ratio(samples["X1"], plan.block_count, order)
            logger.info("Lyapounov ratio of the blocks (p=%g): %.6g", order, ratio)
            data[check] = {"ratio": ratio, "m": plan.block_count, "p": order}

    for name, report in reports.items():
        logger.info("%s", report_table(name, report))
        data[name] = report.to_dict()
    passed = all(r.passed for r in reports.values())
    data["passed"] = passed
    writers.write_report(os.path.join(cfg.output, "report.json"), data)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def run_analyze(cfg):
    loaded = [load_results(path) for path in cfg.inputs]
    plans = [manifest.experiment_plan() for manifest, _ in loaded]
    first = plans[0]
    for plan in plans[1:]:
        if plan.base != first.base or plan.distribution != first.distribution:
            raise ConfigError("inputs", "runs differ in base graph or weight law")
    if len({plan.n for plan in plans}) != len(plans):
        raise ConfigError("inputs", "two runs share the same n")

    runs = {}
    pis = {}
    for plan, (manifest, samples) in zip(plans, loaded):
        if cfg.functional in samples:
            runs[plan.n] = samples[cfg.functional]
        else:
            runs[plan.n] = manifest.accumulators()[cfg.functional]
        if "pi" in samples:
            pis[plan.n] = samples["pi"]

    metrics = graph_metrics(first.base)
    reports = {
        "mean": mean_convergence_check(
            runs, mu=first.distribution.mean, diameter=metrics.diameter
        ),
        "variance": variance_scaling_check(runs, edge_count=metrics.edge_count),
    }
    if len(pis) == len(plans):
        reports["tail"] = tail_geodesic_check(pis, p=cfg.p)
    data = {}
    for name, report in reports.items():
        logger.info("%s", report_table(name, report))
        data[name] = report.to_dict()
    passed = all(r.passed for r in reports.values())
    data["passed"] = passed
    writers.ensure_directory(cfg.output)
    writers.write_report(os.path.join(cfg.output, "report.json"), data)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


HANDLERS = {
    "simulate": run_simulate,
    "sweep": run_sweep,
    "schedule": run_schedule,
    "verify": run_verify,
    "analyze": run_analyze,
}


def execute_command(command, cfg):
    """Run one command and map its outcome to an exit status."""
    if command not in HANDLERS:
        logger.error("Unknown command %r", command)
        return EXIT_CONFIG
    try:
        return HANDLERS[command](cfg)
    except ConfigError as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    except Exception as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        logger.debug("Traceback", exc_info=True)
        return EXIT_RUNTIME


def main(argv=None):
    """
    Command-line interface for cylfpp.
    """
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    if cfg.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif cfg.quiet:
        logging.getLogger().setLevel(logging.WARNING)
    return execute_command(cfg.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
