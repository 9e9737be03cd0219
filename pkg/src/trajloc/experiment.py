"""Experiment configuration, trajectory ensembles, parameter sweeps and file products.

A configuration is one JSON document::

    {
      "model": {"name": "xxz", "params": {"Delta": 0.7, "Jprime": 2.0}},
      "initial_state": {"kind": "random", "seed": 1},
      "trajectories": 100,
      "seed": 0,
      "trajectory": {"dt": 0.001, "sample_stride": "auto", "relaxation_span": 10},
      "t_end": 20.0,
      "snapshot_times": [0.0, 5.0, 50.0],
      "outputs": ["quasi_csv"],
      "sweep": {"x": {"name": "Jprime", "values": [-2, 0, 2]},
                "y": {"name": "Delta", "values": [-2, 0, 2]}}
    }

A sweep axis is either an explicit ``values`` list or ``{"name": ..., "range":
[lo, hi], "points": n}`` (``points`` defaults to 9). ``trajloc sweep`` on the
xxz model without a ``sweep`` block uses a 9 x 9 grid over J' and Delta in
[-2, 2].

``initial_state.kind`` is ``random`` (with ``seed``), ``coherent`` (dimer only,
optional ``scale``), ``bec`` (chain only) or ``file`` (``path`` to a ``.npy``
array or a JSON list of ``[re, im]`` pairs).
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .liouvillian import SpectralData, purity, spectral_decomposition, steady_state
from .models import (
    PRNG_ALGORITHM, PRESETS, bec_state, coherent_initial_dimer, make_params, random_initial_state,
)
from .observables import (
    bound_check, center_of_mass, cm_callback, ipr, ipr_alt, pure_quasiprobabilities, write_quasi_csv,
)
from .unraveling import (
    TrajectoryConfig, converged_steady_ensemble, evolve_ensemble, gap_scaled, spectral_gap,
    trajectory_seeds,
)

log = logging.getLogger(__name__)

FLOAT_FMT = ".17g"
GRID_POINTS = 9
DEFAULT_GRIDS = {
    "xxz": {"x": {"name": "Jprime", "range": [-2.0, 2.0]}, "y": {"name": "Delta", "range": [-2.0, 2.0]}},
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass
class ExperimentConfig:
    model: str
    params: dict
    initial_state: dict = field(default_factory=lambda: {"kind": "random", "seed": 1})
    trajectories: int = 100
    seed: int = 0
    trajectory: dict = field(default_factory=dict)
    t_end: float = 20.0
    snapshot_times: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    sweep: dict | None = None

    def __post_init__(self):
        if self.model not in PRESETS:
            raise ConfigError(f"model.name: unknown preset {self.model!r}; choose from {sorted(PRESETS)}")
        try:
            make_params(self.model, self.params)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"model.params: {exc}") from exc
        if int(self.trajectories) < 1:
            raise ConfigError("trajectories: must be >= 1")
        kind = self.initial_state.get("kind")
        if kind not in ("random", "coherent", "bec", "file"):
            raise ConfigError(f"initial_state.kind: unknown kind {kind!r}")
        if kind == "coherent" and self.model != "bh_dimer":
            raise ConfigError("initial_state.kind: coherent states are defined for bh_dimer only")
        if kind == "bec" and self.model != "bh_chain":
            raise ConfigError("initial_state.kind: bec is defined for bh_chain only")
        if kind == "file" and not Path(self.initial_state.get("path", "")).is_file():
            raise ConfigError(f"initial_state.path: file {self.initial_state.get('path')!r} does not exist")
        allowed = {f.name for f in fields(TrajectoryConfig)} | {"relaxation_span"}
        bad = set(self.trajectory) - allowed
        if bad:
            raise ConfigError(f"trajectory: unknown field(s) {sorted(bad)}")
        try:
            self._base_trajectory_config()
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"trajectory: {exc}") from exc
        if self.sweep is not None:
            valid = {f.name for f in fields(PRESETS[self.model][0])}
            self.sweep = copy.deepcopy(self.sweep)
            for axis in ("x", "y"):
                ax = self.sweep.get(axis)
                if ax and "range" in ax and "values" not in ax:
                    try:
                        lo, hi = (float(v) for v in ax.pop("range"))
                        n = int(ax.pop("points", GRID_POINTS))
                    except (TypeError, ValueError) as exc:
                        raise ConfigError(f"sweep.{axis}.range: expected [lo, hi] ({exc})") from exc
                    ax["values"] = np.linspace(lo, hi, n).tolist()
                if not ax or not ax.get("values"):
                    raise ConfigError(f"sweep.{axis}: needs a parameter name and a non-empty value list")
                if ax.get("name") not in valid:
                    raise ConfigError(f"sweep.{axis}.name: {ax.get('name')!r} is not a {self.model} parameter")

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        doc = copy.deepcopy(doc)
        model = doc.pop("model", None)
        if not isinstance(model, dict) or "name" not in model:
            raise ConfigError("model: expected {\"name\": ..., \"params\": {...}}")
        known = {f.name for f in fields(cls)} - {"model", "params"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown top-level field(s) {sorted(unknown)}")
        return cls(model=model["name"], params=dict(model.get("params", {})), **doc)

    @classmethod
    def from_file(cls, path) -> ExperimentConfig:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = {"name": d.pop("model"), "params": d.pop("params")}
        return d

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    def _base_trajectory_config(self) -> TrajectoryConfig:
        opts = {k: v for k, v in self.trajectory.items() if k != "relaxation_span"}
        if opts.get("sample_stride", "auto") == "auto":
            opts.pop("sample_stride", None)
        opts.setdefault("seed", self.seed)
        return TrajectoryConfig(**opts)

    def trajectory_config(self, spectral: SpectralData) -> TrajectoryConfig:
        cfg = self._base_trajectory_config()
        if self.trajectory.get("sample_stride", "auto") == "auto":
            cfg = gap_scaled(cfg, spectral_gap(spectral.eigenvalues), self.trajectory.get("relaxation_span", 10.0))
        return cfg

    def with_params(self, **overrides) -> ExperimentConfig:
        new = copy.deepcopy(self)
        new.params.update(overrides)
        new.sweep = None
        return new

    def build(self):
        return PRESETS[self.model][1](make_params(self.model, self.params))

    def initial_psi(self, spec) -> np.ndarray:
        kind = self.initial_state["kind"]
        if kind == "random":
            return random_initial_state(spec.meta["basis"], int(self.initial_state.get("seed", 1)))
        if kind == "coherent":
            return coherent_initial_dimer(make_params(self.model, self.params), self.initial_state.get("scale", 3.0))
        if kind == "bec":
            p = make_params(self.model, self.params)
            return bec_state(p.N, p.N_b)
        path = Path(self.initial_state["path"])
        if path.suffix == ".npy":
            psi = np.load(path).astype(complex)
        else:
            psi = np.array([complex(re, im) for re, im in json.loads(path.read_text())])
        if psi.shape != (spec.dim,):
            raise ConfigError(f"initial_state.path: vector length {psi.size} != dimension {spec.dim}")
        return psi / np.linalg.norm(psi)


def load_config(path=None, preset: str | None = None, seed: int | None = None) -> ExperimentConfig:
    if path is not None:
        doc = json.loads(Path(path).read_text())
    else:
        doc = {"model": {"name": preset or "xxz", "params": {}}}
    if preset is not None:
        doc.setdefault("model", {})["name"] = preset
        doc["model"].setdefault("params", {})
    if seed is not None:
        doc["seed"] = seed
    if doc["model"]["name"] == "bh_dimer":
        doc.setdefault("initial_state", {"kind": "coherent"})
    return ExperimentConfig.from_dict(doc)


def _f(x) -> str:
    return format(float(x), FLOAT_FMT)


def _prepare(config: ExperimentConfig):
    spec = config.build()
    spectral = spectral_decomposition(spec)
    return spec, spectral


def cmd_spectrum(config: ExperimentConfig, out) -> dict:
    """Eigenvalue table plus |p_alpha| CSVs of one trajectory at the requested snapshot times."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    spec, spectral = _prepare(config)
    spectral.to_json(out / "spectrum.json")
    if "eigenoperators" in config.outputs:
        spectral.dump_eigenoperators(out / "eigenoperators")
    psi0 = config.initial_psi(spec)
    tcfg = config.trajectory_config(spectral)
    seed = trajectory_seeds(config.seed, 1)[0]
    files = []
    times = sorted(float(t) for t in config.snapshot_times)
    if times:
        run = evolve_ensemble(psi0, spec, replace(tcfg, sample_stride=1), [seed], times[-1])
        for t in times:
            s = int(round(t / tcfg.dt))
            p = pure_quasiprobabilities(spectral, run.psi[s, 0])[0]
            name = f"quasi_t{t:g}.csv"
            write_quasi_csv(out / name, p, spectral)
            files.append(name)
    if "steady_snapshot" in config.outputs:
        res = converged_steady_ensemble(psi0, spec, tcfg, [seed], cm_callback(spec, spectral))[0]
        write_quasi_csv(out / "quasi_tss.csv", pure_quasiprobabilities(spectral, res.psi)[0], spectral)
        files.append("quasi_tss.csv")
    summary = {
        "config_hash": config.config_hash(), "code_version": __version__,
        "n_eigenvalues": int(spectral.eigenvalues.size),
        "purity_ss": purity(steady_state(spectral)),
        "condition_number": spectral.condition_number,
        "mean_eigenvalue": [spectral.mean_eigenvalue.real, spectral.mean_eigenvalue.imag],
        "seed": seed, "snapshots": files,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    return summary


def cmd_trajectory(config: ExperimentConfig, out) -> dict:
    """JSON-lines per-sample log of M trajectories and the mean/std series of CM and IPR."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    spec, spectral = _prepare(config)
    tcfg = config._base_trajectory_config()
    if config.trajectory.get("sample_stride", "auto") == "auto":
        # logs default to 200 samples over the run
        tcfg = replace(tcfg, sample_stride=max(1, int(round(config.t_end / (200 * tcfg.dt)))))
    seeds = trajectory_seeds(config.seed, int(config.trajectories))
    run = evolve_ensemble(config.initial_psi(spec), spec, tcfg, seeds, config.t_end)
    S, M = run.psi.shape[:2]
    cm = np.empty((S, M))
    ip = np.empty((S, M))
    p0 = np.empty((S, M), dtype=complex)
    for s in range(S):
        p = pure_quasiprobabilities(spectral, run.psi[s])
        cm[s], ip[s], p0[s] = center_of_mass(p, spectral), ipr(p), p[:, spectral.steady_index]
    with open(out / "trajectories.jsonl", "w") as fh:
        for m in range(M):
            jt = [j[0] for j in run.jumps[m]]
            for s, t in enumerate(run.times):
                rec = {"m": m, "t": float(t), "cm": float(cm[s, m]), "ipr": float(ip[s, m]),
                       "p0_re": float(p0[s, m].real), "p0_im": float(p0[s, m].imag),
                       "jumps_so_far": int(np.searchsorted(jt, t + 1e-12))}
                fh.write(json.dumps(rec) + "\n")
    summary = {
        "config_hash": config.config_hash(), "code_version": __version__, "prng": PRNG_ALGORITHM,
        "seeds": seeds, "dt": tcfg.dt, "sample_stride": tcfg.sample_stride,
        "times": run.times.tolist(),
        "mean_cm": cm.mean(axis=1).tolist(), "std_cm": cm.std(axis=1).tolist(),
        "mean_ipr": ip.mean(axis=1).tolist(), "std_ipr": ip.std(axis=1).tolist(),
        "n_jumps": [len(j) for j in run.jumps],
    }
    (out / "summary.json").write_text(json.dumps(summary))
    return summary


def summarize_trajectory_log(path) -> dict:
    """Recompute ensemble mean/std series of CM and IPR from a trajectories.jsonl file."""
    rows = [json.loads(line) for line in Path(path).read_text().splitlines()]
    M = max(r["m"] for r in rows) + 1
    times = sorted({r["t"] for r in rows})
    tindex = {t: i for i, t in enumerate(times)}
    cm = np.empty((len(times), M))
    ip = np.empty((len(times), M))
    for r in rows:
        cm[tindex[r["t"]], r["m"]] = r["cm"]
        ip[tindex[r["t"]], r["m"]] = r["ipr"]
    return {"times": times, "mean_cm": cm.mean(axis=1).tolist(), "std_cm": cm.std(axis=1).tolist(),
            "mean_ipr": ip.mean(axis=1).tolist(), "std_ipr": ip.std(axis=1).tolist()}


# ---------------------------------------------------------------- sweeps

def aggregate(per_traj: list[dict]) -> dict:
    """Cell aggregates from per-trajectory entries, summed in trajectory order."""
    cm = np.array([r["cm"] for r in per_traj])
    ip = np.array([r["ipr"] for r in per_traj])
    p0 = np.array([r["p0_re"] for r in per_traj])
    n = cm.size
    se = (lambda x: float(x.std(ddof=1) / np.sqrt(n))) if n > 1 else (lambda x: 0.0)
    return {
        "n": n,
        "mean_cm": float(cm.mean()), "std_cm": float(cm.std()), "se_cm": se(cm),
        "mean_ipr": float(ip.mean()), "std_ipr": float(ip.std()), "se_ipr": se(ip),
        "mean_p0": float(p0.mean()), "se_p0": se(p0),
        "converged_fraction": float(np.mean([r["converged"] for r in per_traj])),
    }


def run_cell(config: ExperimentConfig, cell_index: int = 0) -> dict:
    """Converged steady-state ensemble for one parameter point; returns a RunRecord dict."""
    started = time.time()
    spec, spectral = _prepare(config)
    tcfg = config.trajectory_config(spectral)
    seeds = trajectory_seeds(config.seed, int(config.trajectories), cell=cell_index)
    psi0 = config.initial_psi(spec)
    results = converged_steady_ensemble(psi0, spec, tcfg, seeds, cm_callback(spec, spectral))
    P = pure_quasiprobabilities(spectral, np.array([r.psi for r in results]))
    cms, iprs, alts = center_of_mass(P, spectral), ipr(P), ipr_alt(P)
    p0 = P[:, spectral.steady_index]
    per_traj = [
        {"m": m, "seed": r.seed, "t_ss": r.t, "converged": bool(r.converged),
         "cm": float(cms[m]), "ipr": float(iprs[m]), "ipr_alt": float(alts[m]),
         "p0_re": float(p0[m].real), "p0_im": float(p0[m].imag), "n_jumps": len(r.jumps)}
        for m, r in enumerate(results)
    ]
    p_ss = purity(steady_state(spectral))
    rep = bound_check(p0, iprs, p_ss)
    return {
        "config_hash": config.config_hash(),
        "code_version": __version__,
        "prng": PRNG_ALGORITHM,
        "cell_index": cell_index,
        "params": dict(config.params),
        "trajectory_config": asdict(tcfg),
        "purity_ss": p_ss,
        "spectral_gap": spectral_gap(spectral.eigenvalues),
        "deg_tol": spectral.deg_tol,
        "trajectories": per_traj,
        "aggregates": aggregate(per_traj),
        "bound": {"p0_margin": rep.p0_margin, "ipr_margin": rep.ipr_margin,
                  "p0_consistent": rep.p0_consistent, "bound_holds": rep.bound_holds},
        "started": started,
        "finished": time.time(),
    }


def _cell_configs(config: ExperimentConfig):
    sx, sy = config.sweep["x"], config.sweep["y"]
    cells = []
    for i, vx in enumerate(sx["values"]):
        for j, vy in enumerate(sy["values"]):
            cells.append((i * len(sy["values"]) + j, i, j, config.with_params(**{sx["name"]: vx, sy["name"]: vy})))
    return cells


def _run_cell_to_file(args):
    index, i, j, cfg, out = args
    path = out / f"cell_{i:03d}_{j:03d}.json"
    try:
        rec = run_cell(cfg, index)
        path.write_text(json.dumps(rec))
        (out / f"cell_{i:03d}_{j:03d}.error.json").unlink(missing_ok=True)
        return path.name, None
    except Exception as exc:  # quarantined, sweep continues
        err = {"cell_index": index, "params": cfg.params, "error": f"{type(exc).__name__}: {exc}",
               "traceback": traceback.format_exc()}
        (out / f"cell_{i:03d}_{j:03d}.error.json").write_text(json.dumps(err, indent=1))
        return path.name, err["error"]


def cmd_sweep(config: ExperimentConfig, out, threads: int = 1) -> dict:
    """Run every grid cell not yet present in ``out`` and write heatmap/scatter CSVs."""
    if config.sweep is None:
        if config.model not in DEFAULT_GRIDS:
            raise ConfigError(f"sweep: missing grid definition (no default grid for {config.model})")
        config = replace(config, sweep=DEFAULT_GRIDS[config.model])
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_config.json").write_text(json.dumps(config.to_dict(), indent=1))
    todo = []
    for index, i, j, cfg in _cell_configs(config):
        if (out / f"cell_{i:03d}_{j:03d}.json").exists():
            continue
        todo.append((index, i, j, cfg, out))
    if threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run_cell_to_file, todo))
    else:
        outcomes = [_run_cell_to_file(t) for t in todo]
    failures = {name: err for name, err in outcomes if err}
    for name, err in failures.items():
        log.warning("cell %s quarantined: %s", name, err)
    return write_sweep_tables(config, out)


def load_records(config: ExperimentConfig, out) -> list[dict]:
    out = Path(out)
    recs = []
    for _, i, j, _ in _cell_configs(config):
        path = out / f"cell_{i:03d}_{j:03d}.json"
        if path.exists():
            rec = json.loads(path.read_text())
            rec["grid"] = (i, j)
            recs.append(rec)
    return recs


def write_sweep_tables(config: ExperimentConfig, out) -> dict:
    out = Path(out)
    sx, sy = config.sweep["x"]["name"], config.sweep["y"]["name"]
    recs = load_records(config, out)
    with open(out / "heatmap.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([sx, sy, "P_ss", "mean_cm", "std_cm", "mean_ipr", "std_ipr"])
        for r in recs:
            a = r["aggregates"]
            w.writerow([_f(r["params"][sx]), _f(r["params"][sy]), _f(r["purity_ss"]),
                        _f(a["mean_cm"]), _f(a["std_cm"]), _f(a["mean_ipr"]), _f(a["std_ipr"])])
    with open(out / "scatter.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["P_ss", "cm", "ipr", "cm_err", "ipr_err"])
        for r in recs:
            a = r["aggregates"]
            w.writerow([_f(r["purity_ss"]), _f(a["mean_cm"]), _f(a["mean_ipr"]), _f(a["std_cm"]), _f(a["std_ipr"])])
    quarantined = sorted(p.name for p in out.glob("cell_*.error.json"))
    n_cells = len(config.sweep["x"]["values"]) * len(config.sweep["y"]["values"])
    summary = {"cells": n_cells, "completed": len(recs), "quarantined": quarantined}
    (out / "sweep_summary.json").write_text(json.dumps(summary, indent=1))
    return summary


def replay_check(record: dict) -> bool:
    """True when a RunRecord's aggregates equal a recomputation from its per-trajectory entries."""
    return aggregate(record["trajectories"]) == record["aggregates"]
