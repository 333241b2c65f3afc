import json

import numpy as np
import pytest

from starnls.cli import (ConfigError, PRESETS, PresetNotFoundError, main,
                         preset_config, run_experiment, spectrum_report,
                         validate_config)
from starnls.evolve import load_checkpoint


def _tiny_config(tmp_path, **overrides):
    doc = {
        "graph": {"n_edges": 3, "alpha": [1.0, np.sqrt(2), np.sqrt(2)],
                  "edge_length": 10.0, "dx": 0.1,
                  "pml": {"width": 3.0, "strength": 0.0}},
        "initial": {"kind": "shifted", "omega": 1.0, "a": 0.3},
        "dt": 0.01, "t_end": 2.0, "output_every": 20,
        "output_dir": str(tmp_path / "run"),
    }
    doc.update(overrides)
    return doc


def test_validate_rejects_unknown_keys(tmp_path):
    doc = _tiny_config(tmp_path)
    doc["grpah"] = {}
    with pytest.raises(ConfigError, match="unknown keys"):
        validate_config(doc)
    doc = _tiny_config(tmp_path)
    doc["graph"]["pml"]["widht"] = 1.0
    with pytest.raises(ConfigError, match="unknown keys"):
        validate_config(doc)
    doc = _tiny_config(tmp_path)
    doc["initial"]["bogus"] = 1
    with pytest.raises(ConfigError):
        validate_config(doc)


def test_validate_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError, match="missing"):
        validate_config({"graph": {}, "initial": {"kind": "shifted"}})
    doc = _tiny_config(tmp_path, t_end=2.005)
    with pytest.raises(ConfigError, match="multiple"):
        validate_config(doc)
    doc = _tiny_config(tmp_path)
    doc["initial"] = {"kind": "warp_drive"}
    with pytest.raises(ConfigError, match="unknown initial kind"):
        validate_config(doc)


def test_presets_table():
    table = PRESETS
    assert set(table) == {"eig_unstable", "eig_stable", "phase_reversal",
                          "phase_half"}
    assert table["eig_unstable"]["initial"] == {
        "kind": "eigenperturbed", "a": -0.55, "eps": 0.1}
    assert table["eig_stable"]["initial"]["a"] == 0.55
    pr = table["phase_reversal"]["initial"]
    assert pr["a"] == -1.0
    mu = complex(pr["mu"][0], pr["mu"][1])
    # only the dynamics-consistent sign (P(0) < 0) is bundled --
    # pure imaginary with |mu| = 0.1
    assert mu.real == 0.0 and abs(abs(mu.imag) - 0.1) < 1e-15
    ph = table["phase_half"]["initial"]
    assert ph["a"] == 0.0 and ph["mu"] == [0.0, -0.02]
    with pytest.raises(PresetNotFoundError):
        preset_config("not_a_preset")


def test_run_experiment_artifacts(tmp_path):
    cfg = validate_config(_tiny_config(tmp_path, snapshot_every=5,
                                       track_modulation=True))
    manifest = run_experiment(cfg)
    assert manifest["status"] == "success"
    out = tmp_path / "run"
    assert (out / "diagnostics.csv").exists()
    assert (out / "modulation.csv").exists()
    assert (out / "manifest.json").exists()
    snaps = sorted((out / "snapshots").glob("snap_*.chk"))
    assert snaps
    f, t, header = load_checkpoint(snaps[0])
    assert t == 0.0 and header["n_edges"] == 3

    rows = (out / "diagnostics.csv").read_text().strip().split("\n")
    n_steps = round(cfg.t_end / cfg.dt)
    assert len(rows) - 1 == 1 + n_steps // cfg.output_every


def test_reruns_byte_identical(tmp_path):
    doc1 = _tiny_config(tmp_path, output_dir=str(tmp_path / "a"),
                        track_modulation=True)
    doc2 = _tiny_config(tmp_path, output_dir=str(tmp_path / "b"),
                        track_modulation=True)
    run_experiment(validate_config(doc1))
    run_experiment(validate_config(doc2))
    for name in ("diagnostics.csv", "modulation.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b


def test_main_presets_and_validation(tmp_path, capsys):
    assert main(["presets"]) == 0
    listed = json.loads(capsys.readouterr().out)
    assert "phase_half" in listed

    assert main(["simulate"]) == 2
    badcfg = tmp_path / "bad.json"
    badcfg.write_text(json.dumps({"nope": 1}))
    assert main(["simulate", "--config", str(badcfg)]) == 2


def test_main_simulate_and_decompose(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps(_tiny_config(tmp_path)))
    assert main(["simulate", "--config", str(cfgfile)]) == 0
    capsys.readouterr()
    snap = sorted((tmp_path / "run" / "snapshots").glob("*.chk"))[0]
    assert main(["decompose", str(snap), "--guess", "0,1,0.3"]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["converged"] and abs(fit["a"] - 0.3) < 1e-6


def test_main_blowup_exit_code(tmp_path, monkeypatch):
    from starnls import evolve

    def explode(self, f0, t_end, observer=None, output_every=50,
                blowup_factor=1e3):
        raise evolve.BlowUpError(0.25)

    monkeypatch.setattr(evolve.Stepper, "run", explode)
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps(_tiny_config(tmp_path)))
    assert main(["simulate", "--config", str(cfgfile)]) == 3
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["status"] == "blowup" and manifest["t_failure"] == 0.25


def test_sweep(tmp_path):
    docs = [_tiny_config(tmp_path, output_dir=str(tmp_path / f"s{i}"))
            for i in range(2)]
    sweep = tmp_path / "sweep.json"
    sweep.write_text(json.dumps(docs))
    assert main(["simulate", "--sweep", str(sweep)]) == 0
    for i in range(2):
        assert (tmp_path / f"s{i}" / "diagnostics.csv").exists()


def test_spectrum_report_columns(tmp_path):
    out = tmp_path / "spec.csv"
    rows = spectrum_report(out, edge_length=30.0, dx=0.05, a_values=(0.3,))
    header = out.read_text().split("\n")[0].split(",")
    assert header == ["a", "lambda0", "lambda_zero", "lambda1_numeric",
                      "lambda1_formula_as_printed", "lambda1_formula_sech2"]
    a, l0, lz, l1, printed, sech2 = rows[0]
    assert abs(l0 + 3.0) < 2e-3 and abs(lz) < 2e-3
    assert abs(l1 - sech2) < 1e-3


def test_reduced_report(tmp_path):
    from starnls.cli import reduced_report
    info = reduced_report(tmp_path / "red", t_end=5.0,
                          eps_values=(0.2, 0.1))
    assert (tmp_path / "red" / "trajectory.csv").exists()
    assert (tmp_path / "red" / "escape_times.csv").exists()
    assert info["slope"] is not None


def test_half_soliton_tracking_columns(tmp_path):
    doc = _tiny_config(tmp_path, track_modulation=True,
                       track_half_soliton=True)
    doc["initial"] = {"kind": "shifted", "omega": 1.0, "a": 0.0}
    run_experiment(validate_config(doc))
    header = (tmp_path / "run" / "modulation.csv").read_text().split("\n")[0]
    for col in ("c_1", "c_2", "b_1", "b_2"):
        assert col in header.split(",")


def test_eig_unstable_concentrates_on_edge_three(preset_runs):
    from starnls.evolve import load_checkpoint
    from tests.conftest import load_diagnostics

    cfg, _ = preset_runs["eig_unstable"]
    d = load_diagnostics(cfg.output_dir)
    assert d["asymmetry"][-1] < 0          # ||u_2|| < ||u_3||
    assert d["max_edge"][-1] == 3
    from pathlib import Path
    snaps = sorted((Path(cfg.output_dir) / "snapshots").glob("snap_*.chk"))
    f, t, header = load_checkpoint(snaps[-1])
    assert t == cfg.t_end
    dx = header["dx"]
    m2 = dx[1] * float(np.sum(np.abs(f.edges[1]) ** 2))
    m3 = dx[2] * float(np.sum(np.abs(f.edges[2]) ** 2))
    # more than half of the outgoing mass-fraction imbalance on edge 3
    assert (m3 - m2) / (m3 + m2) > 0.5
