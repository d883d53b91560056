"""
Tests for the command-line surface: config parsing, exit statuses and the
files each command writes.
"""

import json
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from cylfpp import __version__
from cylfpp.errors import ConfigError
from cylfpp.main import (
    COMMAND_KEYS,
    COMMANDS,
    EXIT_CHECK_FAILED,
    EXIT_CONFIG,
    EXIT_OK,
    build_parser,
    main,
    parse_config,
)
from cylfpp.montecarlo import ExperimentPlan, RunManifest, persist_results, summarize_samples
from cylfpp.weights import WeightDistribution

SIMULATE = ["simulate", "--n", "4", "--h", "1", "--d", "2", "--reps", "3", "--seed", "1"]


def write_results(directory, T, a, t):
    """Persist a hand-made exponential run on the box h=1, d=2, n=4."""
    plan = ExperimentPlan.box(
        4, 1, 2, WeightDistribution.exponential(1.0), functionals=("T", "t", "a"), replicates=len(T)
    )
    samples = {"T": np.array(T), "t": np.array(t), "a": np.array(a)}
    manifest = RunManifest(
        plan=plan.to_dict(),
        version=__version__,
        summaries={k: acc.to_dict() for k, acc in summarize_samples(samples).items()},
    )
    persist_results(manifest, samples, str(directory))
    return str(directory)


def test_parse_minimal():
    cfg = parse_config(SIMULATE + ["--dist", "exponential:1"])
    assert cfg.command == "simulate"
    assert (cfg.n, cfg.h, cfg.d, cfg.reps, cfg.seed) == (4, 1, 2, 3, 1)
    assert cfg.functionals == ["T"]
    assert cfg.margin == 1
    plan = cfg.to_plan()
    assert plan.distribution == WeightDistribution.exponential(1.0)
    assert plan.base.h == 1


def test_parse_lists_and_flags():
    cfg = parse_config(
        SIMULATE
        + ["--dist", "uniform:0,1", "--functionals", "T,t,blocks", "--block-length", "2", "--retain-samples", "no", "-v"]
    )
    assert cfg.functionals == ["T", "t", "blocks"]
    assert cfg.block_length == 2
    assert cfg.retain_samples is False
    assert cfg.verbose


def test_unknown_key():
    with pytest.raises(ConfigError) as info:
        parse_config(SIMULATE + ["--dist", "exponential:1", "--foo", "3"])
    assert info.value.key == "foo"


def test_bad_value():
    argv = ["simulate", "--n", "abc", "--h", "1", "--d", "2", "--dist", "exponential:1", "--reps", "3", "--seed", "1"]
    with pytest.raises(ConfigError) as info:
        parse_config(argv)
    assert info.value.key == "n"


def test_missing_required():
    argv = ["simulate", "--n", "4", "--h", "1", "--d", "2", "--dist", "exponential:1", "--reps", "3"]
    with pytest.raises(ConfigError) as info:
        parse_config(argv)
    assert info.value.key == "seed"
    with pytest.raises(ConfigError) as info:
        parse_config([])
    assert info.value.key == "command"


def test_sweep_needs_a_width_grid():
    with pytest.raises(ConfigError) as info:
        parse_config(["sweep", "--ns", "4,8", "--d", "2", "--dist", "exponential:1", "--reps", "2", "--seed", "1"])
    assert info.value.key == "hs"


def test_config_file_and_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "* small exponential run\n"
        "n = 10\n"
        "h = 1            | half-width\n"
        "d = 2\n"
        "dist = exponential:1\n"
        "reps = 5\n"
        "seed = 3\n"
    )
    cfg = parse_config(["simulate", "--config", str(path), "--n", "20"])
    assert cfg.n == 20
    assert cfg.reps == 5
    assert cfg.dist == "exponential:1"

    path.write_text("n = 10\nq = 2\n")
    with pytest.raises(ConfigError) as info:
        parse_config(["simulate", "--config", str(path)])
    assert info.value.key == "q"


def test_help_lists_every_flag():
    _, commands = build_parser()
    assert set(commands) == set(COMMANDS)
    for command, sub in commands.items():
        text = sub.format_help()
        for key in COMMAND_KEYS[command]:
            assert "--" + key.replace("_", "-") in text, (command, key)


def test_schedule_command(tmp_path, capsys):
    status = main(["schedule", "--q", "2", "--theta", "1", "--t", "2", "--output", str(tmp_path)])
    assert status == EXIT_OK
    out = capsys.readouterr().out
    assert "0.783784" in out
    assert "0.621622" in out
    assert "alpha_star" in out
    assert (tmp_path / "schedule.csv").read_text() == out


def test_schedule_rejects_bad_depth(tmp_path):
    status = main(["schedule", "--q", "1", "--theta", "1", "--t", "2", "--output", str(tmp_path)])
    assert status == EXIT_CONFIG


def test_bad_distribution(tmp_path):
    status = main(SIMULATE + ["--dist", "lognormal:1", "--output", str(tmp_path)])
    assert status == EXIT_CONFIG
    assert not (tmp_path / "manifest.json").exists()


def test_simulate_writes_results(tmp_path):
    status = main(SIMULATE + ["--dist", "exponential:1", "--functionals", "T,t,a", "--output", str(tmp_path)])
    assert status == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["summaries"]["T"]["count"] == 3
    assert (tmp_path / "samples.csv").exists()

    assert main(["verify", "--input", str(tmp_path), "--output", str(tmp_path / "check")]) == EXIT_OK
    report = json.loads((tmp_path / "check" / "report.json").read_text())
    assert report["passed"]
    assert report["sandwich"]["ordering_violations"] == []


def test_verify_reports_violation(tmp_path):
    run = write_results(tmp_path / "run", T=[1.0, 2.0, 3.0], a=[1.5, 1.0, 3.5], t=[2.0, 3.0, 4.0])
    out = tmp_path / "report"
    assert main(["verify", "--input", run, "--output", str(out)]) == EXIT_CHECK_FAILED
    report = json.loads((out / "report.json").read_text())
    assert not report["passed"]
    assert report["sandwich"]["ordering_violations"] == [1]


def test_verify_passes(tmp_path):
    run = write_results(tmp_path / "run", T=[1.0, 2.0, 3.0], a=[1.5, 2.5, 3.5], t=[2.0, 3.0, 4.0])
    out = tmp_path / "report"
    assert main(["verify", "--input", run, "--output", str(out), "--checks", "sandwich"]) == EXIT_OK
    assert json.loads((out / "report.json").read_text())["passed"]
    status = main(["verify", "--input", run, "--output", str(out), "--checks", "bogus"])
    assert status == EXIT_CONFIG


def test_verify_normality_checks_skewness(tmp_path):
    """Near-normal but skewed values pass KS and fail the default skewness bound."""
    from scipy import stats

    z = stats.norm.ppf((np.arange(200) + 0.5) / 200)
    T = 100.0 + z + 0.1 * (z**2 - 1)
    run = write_results(tmp_path / "run", T=T, a=T + 0.5, t=T + 1.0)
    out = tmp_path / "report"
    argv = ["verify", "--input", run, "--output", str(out), "--checks", "normality"]
    assert main(argv) == EXIT_CHECK_FAILED
    report = json.loads((out / "report.json").read_text())
    assert report["normality"]["checks"]["ks_pvalue"]
    assert not report["normality"]["checks"]["skewness"]
    assert report["normality"]["skewness"] > 0.2

    assert main(argv + ["--max-skewness", "1.0"]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["normality"]["checks"]["skewness"]


def test_sweep_command(tmp_path):
    argv = ["sweep", "--ns", "4,8", "--hs", "1", "--d", "2", "--dist", "exponential:1", "--reps", "3", "--seed", "2"]
    assert main(argv + ["--output", str(tmp_path)]) == EXIT_OK
    index = json.loads((tmp_path / "sweep.json").read_text())
    assert [run["n"] for run in index["runs"]] == [4, 8]
    assert [run["namespace"] for run in index["runs"]] == [1, 2]
    assert index["failures"] == []
    for run in index["runs"]:
        assert (tmp_path / run["directory"] / "manifest.json").exists()


def test_analyze_deterministic_runs(tmp_path):
    """Zero variance fails the variance scaling check."""
    dirs = []
    for n in (4, 8):
        out = tmp_path / f"n{n}"
        argv = ["simulate", "--n", str(n), "--h", "1", "--d", "2", "--dist", "deterministic:1", "--reps", "5", "--seed", "1"]
        assert main(argv + ["--output", str(out)]) == EXIT_OK
        dirs.append(str(out))
    report_dir = tmp_path / "analysis"
    status = main(["analyze", "--inputs", ",".join(dirs), "--output", str(report_dir)])
    assert status == EXIT_CHECK_FAILED
    report = json.loads((report_dir / "report.json").read_text())
    assert report["mean"]["passed"]
    assert report["mean"]["nu_hat"] == 1.0
    assert not report["variance"]["checks"]["positive"]

    status = main(["analyze", "--inputs", f"{dirs[0]},{dirs[0]}", "--output", str(report_dir)])
    assert status == EXIT_CONFIG


if __name__ == "__main__":
    test_parse_minimal()
    test_parse_lists_and_flags()
    test_unknown_key()
    test_bad_value()
    test_missing_required()
    test_sweep_needs_a_width_grid()
    test_help_lists_every_flag()
    print("All tests passed!")
