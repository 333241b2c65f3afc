import numpy as np
import pytest

from starnls import make_graph
from starnls.graph import PmlConfig


@pytest.fixture(scope="session")
def spectral_graph():
    """N=3 balanced graph used throughout the spectral examples."""
    return make_graph(3, [1.0, np.sqrt(2.0), np.sqrt(2.0)], 40.0, 0.05,
                      PmlConfig(strength=0.0))


@pytest.fixture(scope="session")
def experiment_graph():
    """Graph of the time-dependent experiments (alpha_1^2 = 1/2)."""
    return make_graph(3, [1.0 / np.sqrt(2.0), 1.0, 1.0], 40.0, 0.05,
                      PmlConfig(width=5.0, strength=5.0, exponent=3))


@pytest.fixture(scope="session")
def coarse_graph():
    """Small cheap graph for integration unit tests."""
    return make_graph(3, [1.0, np.sqrt(2.0), np.sqrt(2.0)], 20.0, 0.1,
                      PmlConfig(width=4.0, strength=0.0, exponent=3))


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    """Run every bundled preset once; shared by the acceptance tests."""
    from starnls.cli import PRESETS, preset_config, run_experiment

    base = tmp_path_factory.mktemp("preset_runs")
    out = {}
    for name in PRESETS:
        cfg = preset_config(name, output_dir=str(base / name))
        manifest = run_experiment(cfg)
        out[name] = (cfg, manifest)
    return out


def load_diagnostics(run_dir):
    import csv

    with open(f"{run_dir}/diagnostics.csv") as fh:
        rows = list(csv.DictReader(fh))
    out = {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
    out["max_edge"] = out["max_edge"].astype(int)
    return out


def load_modulation(run_dir):
    import csv

    with open(f"{run_dir}/modulation.csv") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
