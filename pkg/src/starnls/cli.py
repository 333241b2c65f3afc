"""Batch experiment runner, spectrum/reduced reports, and persistence.

Subcommands: simulate, spectrum, reduced, decompose, presets.
Config is a single strict-schema JSON document (unknown keys are errors).
Exit codes: 0 success, 2 validation error, 3 numerical failure.

The four bundled presets reproduce the time-dependent experiments of the
drift-instability study on the N=3 balanced graph with alpha =
(1/sqrt(2), 1, 1): eigenfunction perturbations of the shifted state at
a = -0.55 and a = +0.55 (eps = 0.1), and phase-modulated states at a = -1
(|mu| = 0.1, pure imaginary) and a = 0 (mu = -0.02i).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .evolve import BlowUpError, Stepper, load_checkpoint, save_checkpoint
from .functionals import Diagnostics, diagnostics
from .graph import GraphFunction, InvalidParameterError, PmlConfig, StarGraph, make_graph
from .modulation import decompose, track
from .reduced import (ReducedCoefficients, ReducedState, escape_time,
                      integrate)
from .spectral import (assemble, eigenpairs, kernel_basis,
                       lambda1_closed_form, lambda1_eigenpair)
from .states import (eigenfunction_perturbed_state, line_soliton,
                     phase_modulated_state, shifted_state)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_GRAPH_KEYS = {"n_edges", "alpha", "edge_length", "dx", "pml"}
_PML_KEYS = {"width", "strength", "exponent", "absorption"}
_INITIAL_KINDS = {
    "shifted": {"omega", "a", "theta"},
    "eigenperturbed": {"a", "eps"},
    "phase_modulated": {"a", "mu"},
    "line_soliton": {"v", "x0", "t"},
}
_TOP_KEYS = {"graph", "initial", "dt", "t_end", "output_every",
             "snapshot_every", "track_modulation", "track_half_soliton",
             "output_dir", "seed"}


@dataclass
class RunConfig:
    graph: dict
    initial: dict
    dt: float
    t_end: float
    output_every: int = 50
    snapshot_every: int = 0        # checkpoints every k-th output (0: ends only)
    track_modulation: bool = False
    track_half_soliton: bool = False
    output_dir: str = "run"
    seed: int = 0

    def resolved(self) -> dict:
        return {
            "graph": self.graph, "initial": self.initial, "dt": self.dt,
            "t_end": self.t_end, "output_every": self.output_every,
            "snapshot_every": self.snapshot_every,
            "track_modulation": self.track_modulation,
            "track_half_soliton": self.track_half_soliton,
            "output_dir": self.output_dir, "seed": self.seed,
        }


def _require_keys(d: dict, allowed: set, required: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def _complex_from(v, where: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"{where}: expected number or [re, im] pair, got {v!r}")


def validate_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys(doc, _TOP_KEYS, {"graph", "initial", "dt", "t_end"}, "config")
    gd = doc["graph"]
    _require_keys(gd, _GRAPH_KEYS, {"n_edges", "alpha", "edge_length", "dx"},
                  "config.graph")
    pml = gd.get("pml", {})
    _require_keys(pml, _PML_KEYS, set(), "config.graph.pml")
    ind = doc["initial"]
    if "kind" not in ind:
        raise ConfigError("config.initial needs a 'kind'")
    kind = ind["kind"]
    if kind not in _INITIAL_KINDS:
        raise ConfigError(
            f"unknown initial kind {kind!r}; choose from {sorted(_INITIAL_KINDS)}")
    _require_keys({k: v for k, v in ind.items() if k != "kind"},
                  _INITIAL_KINDS[kind], set(), f"config.initial[{kind}]")
    cfg = RunConfig(
        graph=gd, initial=ind, dt=float(doc["dt"]), t_end=float(doc["t_end"]),
        output_every=int(doc.get("output_every", 50)),
        snapshot_every=int(doc.get("snapshot_every", 0)),
        track_modulation=bool(doc.get("track_modulation", False)),
        track_half_soliton=bool(doc.get("track_half_soliton", False)),
        output_dir=str(doc.get("output_dir", "run")),
        seed=int(doc.get("seed", 0)),
    )
    if cfg.dt <= 0 or cfg.t_end <= 0:
        raise ConfigError("dt and t_end must be positive")
    if cfg.output_every < 1:
        raise ConfigError("output_every must be >= 1")
    n = cfg.t_end / cfg.dt
    if abs(n - round(n)) > 1e-9 * max(n, 1.0):
        raise ConfigError("t_end must be an integer multiple of dt")
    return cfg


def build_graph(cfg: RunConfig) -> StarGraph:
    gd = cfg.graph
    pml = PmlConfig(**gd.get("pml", {}))
    return make_graph(gd["n_edges"], gd["alpha"], gd["edge_length"],
                      gd["dx"], pml)


def build_initial(cfg: RunConfig, g: StarGraph) -> GraphFunction:
    ind = cfg.initial
    kind = ind["kind"]
    if kind == "shifted":
        return shifted_state(g, float(ind.get("omega", 1.0)),
                             float(ind.get("a", 0.0)),
                             float(ind.get("theta", 0.0))).astype(complex)
    if kind == "eigenperturbed":
        return eigenfunction_perturbed_state(
            g, float(ind["a"]), _complex_from(ind["eps"], "eps")).astype(complex)
    if kind == "phase_modulated":
        return phase_modulated_state(
            g, float(ind["a"]), _complex_from(ind["mu"], "mu"))
    if kind == "line_soliton":
        return line_soliton(g, float(ind["v"]), float(ind["x0"]),
                            float(ind.get("t", 0.0)))
    raise ConfigError(f"unhandled initial kind {kind}")


# ---------------------------------------------------------------------------
# presets: the four bundled drift-instability experiments
# ---------------------------------------------------------------------------

_ALPHA_EXPERIMENT = [1.0 / math.sqrt(2.0), 1.0, 1.0]
_GRAPH_EXPERIMENT = {
    "n_edges": 3, "alpha": _ALPHA_EXPERIMENT, "edge_length": 40.0, "dx": 0.05,
    "pml": {"width": 5.0, "strength": 5.0, "exponent": 3},
}

PRESETS = {
    "eig_unstable": {
        "graph": _GRAPH_EXPERIMENT,
        "initial": {"kind": "eigenperturbed", "a": -0.55, "eps": 0.1},
        "dt": 0.002, "t_end": 20.0, "output_every": 50, "snapshot_every": 5,
        "track_modulation": False,
    },
    "eig_stable": {
        "graph": _GRAPH_EXPERIMENT,
        "initial": {"kind": "eigenperturbed", "a": 0.55, "eps": 0.1},
        "dt": 0.002, "t_end": 60.0, "output_every": 50, "snapshot_every": 5,
        "track_modulation": True,
    },
    # only Im(mu) < 0 produces the intended reversal dynamics here:
    # P(0) < 0 growing monotonically through zero
    "phase_reversal": {
        "graph": _GRAPH_EXPERIMENT,
        "initial": {"kind": "phase_modulated", "a": -1.0, "mu": [0.0, -0.1]},
        "dt": 0.002, "t_end": 25.0, "output_every": 50, "snapshot_every": 5,
        "track_modulation": False,
    },
    "phase_half": {
        "graph": _GRAPH_EXPERIMENT,
        "initial": {"kind": "phase_modulated", "a": 0.0, "mu": [0.0, -0.02]},
        "dt": 0.002, "t_end": 140.0, "output_every": 50, "snapshot_every": 5,
        "track_modulation": True,
    },
}


class PresetNotFoundError(KeyError):
    pass


def preset_config(name: str, output_dir: str | None = None) -> RunConfig:
    if name not in PRESETS:
        raise PresetNotFoundError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    doc = json.loads(json.dumps(PRESETS[name]))   # deep copy
    if output_dir is not None:
        doc["output_dir"] = output_dir
    return validate_config(doc)


def list_presets() -> dict:
    return json.loads(json.dumps(PRESETS))


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------

def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))       # shortest round-trip, deterministic
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def _write_csv(path: Path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(fields)
        for row in rows:
            wr.writerow([_csv_cell(v) for v in row])


def run_experiment(cfg: RunConfig) -> dict:
    """Execute one configured run; writes artifacts into cfg.output_dir.

    Artifacts: diagnostics.csv, modulation.csv (when tracking), field
    checkpoints under snapshots/, manifest.json.  Returns the manifest.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    snapdir = out / "snapshots"
    snapdir.mkdir(exist_ok=True)
    g = build_graph(cfg)
    f0 = build_initial(cfg, g)
    stepper = Stepper(g, cfg.dt)

    snapshots: list = []
    snap_count = [0]
    output_index = [0]

    def observer(t: float, f: GraphFunction) -> None:
        idx = output_index[0]
        output_index[0] += 1
        if cfg.snapshot_every and idx % cfg.snapshot_every == 0:
            save_checkpoint(snapdir / f"snap_{snap_count[0]:05d}.chk", f, t,
                            params={"index": snap_count[0]})
            snap_count[0] += 1
        if cfg.track_modulation:
            snapshots.append((t, f))

    status = "success"
    t_fail = None
    wall = time.time()
    try:
        f_end, diags = stepper.run(f0, cfg.t_end, observer=observer,
                                   output_every=cfg.output_every)
    except BlowUpError as exc:
        status = "blowup"
        t_fail = exc.t
        f_end, diags = None, []
    wall = time.time() - wall

    if diags:
        _write_csv(out / "diagnostics.csv", Diagnostics.CSV_FIELDS,
                   [d.row() for d in diags])
    mod_complete = None
    if status == "success" and cfg.track_modulation:
        a0 = float(cfg.initial.get("a", 0.0))
        tr = track(snapshots, guess=(0.0, 1.0, a0),
                   half_soliton=cfg.track_half_soliton)
        mod_complete = tr.complete
        fields = ["t", "theta", "omega", "a", "remainder_norm", "residual",
                  "converged", "a_dot_fit", "a_dot_pred"]
        nm1 = g.n_edges - 1
        if tr.c is not None:
            fields += [f"c_{j+1}" for j in range(nm1)]
            fields += [f"b_{j+1}" for j in range(nm1)]
        rows = []
        for i in range(len(tr)):
            row = [tr.t[i], tr.theta[i], tr.omega[i], tr.a[i],
                   tr.remainder_norm[i], tr.residual[i],
                   bool(tr.converged[i]), tr.a_dot_fit[i], tr.a_dot_pred[i]]
            if tr.c is not None:
                row += list(tr.c[i]) + list(tr.b[i])
            rows.append(row)
        _write_csv(out / "modulation.csv", fields, rows)
    if status == "success" and not cfg.snapshot_every:
        save_checkpoint(snapdir / "snap_final.chk", f_end, cfg.t_end, {})

    manifest = {
        "config": cfg.resolved(),
        "version": __version__,
        "status": status,
        "t_failure": t_fail,
        "modulation_complete": mod_complete,
        "n_outputs": len(diags),
        "wall_seconds": wall,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def spectrum_report(out_path, alpha=(1.0, math.sqrt(2), math.sqrt(2)),
                    edge_length=60.0, dx=0.025,
                    a_values=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6)) -> list:
    """CSV of (a, lambda_0, lambda_zero, lambda_1 numeric, both formulas)."""
    g = make_graph(3, list(alpha), edge_length, dx, PmlConfig(strength=0.0))
    rows = []
    for a in a_values:
        op = assemble("plus", g, 1.0, a)
        evs = [l for l, _ in eigenpairs(op, 4)]
        lam1, _ = lambda1_eigenpair(g, 1.0, a)
        rows.append([a, evs[0], evs[1], lam1,
                     lambda1_closed_form(a, "as_printed"),
                     lambda1_closed_form(a, "sech_squared")])
    _write_csv(Path(out_path),
               ["a", "lambda0", "lambda_zero", "lambda1_numeric",
                "lambda1_formula_as_printed", "lambda1_formula_sech2"], rows)
    return rows


def reduced_report(out_dir, alpha=(1.0, math.sqrt(2), math.sqrt(2)),
                   t_end=20.0, dt=1e-3,
                   eps_values=(0.2, 0.1, 0.05, 0.025)) -> dict:
    """Trajectory CSV plus the escape-time scaling table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = make_graph(3, list(alpha), 40.0, 0.05, PmlConfig(strength=0.0))
    coeffs = ReducedCoefficients.from_kernel_basis(kernel_basis(g))
    nm1 = g.n_edges - 1
    s0 = ReducedState(gamma=np.full(nm1, 0.01), beta=np.zeros(nm1))
    traj = integrate(s0, coeffs, t_end, dt, record_every=10)
    fields = (["t"] + [f"gamma_{j+1}" for j in range(nm1)]
              + [f"beta_{j+1}" for j in range(nm1)] + ["H0"])
    rows = [[traj.t[i], *traj.gamma[i], *traj.beta[i], traj.h0[i]]
            for i in range(len(traj.t))]
    _write_csv(out / "trajectory.csv", fields, rows)

    table = []
    for eps in eps_values:
        res = escape_time(eps, eps ** 1.5 / 2.0, coeffs)
        table.append([eps, eps ** 1.5 / 2.0, res.t_escape, res.escaped])
    _write_csv(out / "escape_times.csv",
               ["eps", "delta", "t_escape", "escaped"], table)
    slope = None
    ts = [row[2] for row in table if row[3]]
    if len(ts) == len(table):
        slope = float(np.polyfit(np.log(eps_values), np.log(ts), 1)[0])
    with open(out / "escape_scaling.json", "w") as fh:
        json.dump({"eps": list(eps_values), "t_escape": ts,
                   "loglog_slope": slope}, fh, indent=2)
    return {"trajectory_blown_up": traj.blown_up, "slope": slope}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="starnls",
        description="NLS on balanced star graphs: simulations and reports")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment")
    sim.add_argument("--config", type=Path, help="JSON run config")
    sim.add_argument("--preset", help="named preset experiment")
    sim.add_argument("--out", help="output directory override")
    sim.add_argument("--sweep", type=Path,
                     help="JSON list of configs fanned out over threads")

    spec = sub.add_parser("spectrum", help="eigenvalue branch report")
    spec.add_argument("--out", default="spectrum.csv")

    red = sub.add_parser("reduced", help="reduced-system trajectory and scaling")
    red.add_argument("--out", default="reduced_out")

    dec = sub.add_parser("decompose", help="one-shot modulation fit")
    dec.add_argument("checkpoint", type=Path)
    dec.add_argument("--guess", default="0,1,0",
                     help="theta,omega,a starting point")
    dec.add_argument("--half-soliton", action="store_true")

    sub.add_parser("presets", help="list preset experiments")
    return ap


def _cmd_simulate(args) -> int:
    if bool(args.config) == bool(args.preset) and not args.sweep:
        print("simulate: provide exactly one of --config/--preset", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.sweep:
            docs = json.loads(Path(args.sweep).read_text())
            if not isinstance(docs, list):
                raise ConfigError("sweep file must hold a JSON list of configs")
            cfgs = [validate_config(d) for d in docs]
            import concurrent.futures as cf
            with cf.ThreadPoolExecutor() as ex:
                manifests = list(ex.map(run_experiment, cfgs))
            failed = any(m["status"] != "success" for m in manifests)
            return EXIT_NUMERICAL if failed else EXIT_OK
        if args.preset:
            cfg = preset_config(args.preset, output_dir=args.out)
        else:
            doc = json.loads(Path(args.config).read_text())
            cfg = validate_config(doc)
            if args.out:
                cfg.output_dir = args.out
    except (ConfigError, PresetNotFoundError, InvalidParameterError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    manifest = run_experiment(cfg)
    print(json.dumps({"status": manifest["status"],
                      "output_dir": cfg.output_dir}, indent=2))
    return EXIT_OK if manifest["status"] == "success" else EXIT_NUMERICAL


def _cmd_decompose(args) -> int:
    try:
        f, t, _ = load_checkpoint(args.checkpoint)
        guess = tuple(float(v) for v in args.guess.split(","))
        if len(guess) != 3:
            raise ConfigError("--guess needs theta,omega,a")
    except Exception as exc:
        print(f"decompose: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    fit = decompose(f, guess, half_soliton=args.half_soliton)
    print(json.dumps({
        "t": t, "theta": fit.theta, "omega": fit.omega, "a": fit.a,
        "remainder_norm": fit.remainder_norm, "residual": fit.residual,
        "converged": fit.converged, "iterations": fit.iterations,
    }, indent=2))
    return EXIT_OK if fit.converged else EXIT_NUMERICAL


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "spectrum":
        spectrum_report(args.out)
        print(f"wrote {args.out}")
        return EXIT_OK
    if args.command == "reduced":
        info = reduced_report(args.out)
        print(json.dumps(info, indent=2))
        return EXIT_OK
    if args.command == "decompose":
        return _cmd_decompose(args)
    if args.command == "presets":
        print(json.dumps(list_presets(), indent=2))
        return EXIT_OK
    return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
