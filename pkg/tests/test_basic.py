"""
Basic tests for cylfpp package.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))


def test_package_import():
    """Test that the package can be imported."""
    import cylfpp

    assert cylfpp is not None


def test_version():
    """Test that version is defined."""
    import cylfpp

    assert hasattr(cylfpp, "__version__")
    assert cylfpp.__version__ == "1.0.0"


def test_main_callable():
    """Test that the command-line entry point is exposed."""
    import cylfpp

    assert callable(cylfpp.main)


def test_public_api():
    """Test that every exported name resolves."""
    import cylfpp

    for name in cylfpp.__all__:
        assert hasattr(cylfpp, name), name


def test_runtime_requirements():
    """Test that requirements.txt lists the runtime stack and ships with sdists."""
    root = os.path.join(os.path.dirname(__file__), "..")
    with open(os.path.join(root, "requirements.txt"), encoding="utf-8") as fh:
        names = {line.split(">=")[0].strip() for line in fh if line.strip() and not line.startswith("#")}
    assert names == {"numpy", "scipy"}
    with open(os.path.join(root, "MANIFEST.in"), encoding="utf-8") as fh:
        assert "include requirements.txt" in fh.read().splitlines()
    with open(os.path.join(root, "setup.py"), encoding="utf-8") as fh:
        assert "numpy>=" not in fh.read()


def test_small_end_to_end(tmp_path):
    """Simulate a small run through the public API and read it back."""
    from cylfpp import ExperimentPlan, WeightDistribution, run_experiment
    from cylfpp.montecarlo import load_results

    plan = ExperimentPlan.box(
        6, 1, 2, WeightDistribution.exponential(1.0), functionals=("T", "t", "a"), replicates=5, master_seed=3
    )
    run = run_experiment(plan, output_dir=str(tmp_path))
    manifest, samples = load_results(str(tmp_path))
    assert manifest.masked() == run.manifest.masked()
    assert set(samples) == {"T", "t", "a", "window"}
    assert (samples["T"] <= samples["a"]).all()
    assert (samples["a"] <= samples["t"]).all()
    print("✅ End-to-end run passed")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    test_package_import()
    test_version()
    test_main_callable()
    test_public_api()
    with tempfile.TemporaryDirectory() as tmp:
        test_small_end_to_end(Path(tmp))
    print("All tests passed!")
