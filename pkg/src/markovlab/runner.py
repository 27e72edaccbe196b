"""Scenario runs and the verdict suite."""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .closedform.discrepancy import check_against_oracle, closedform_states_safe
from .config import DEFAULT_GRIDS, RunConfig, params_from_dict
from .diagnostics import (coherence_series, markovianity_verdict, offdiag_measures,
                          truncation_valid_times)
from .errors import InsufficientSamples
from .evolution import Trajectory, _fmt, propagate_oracle, write_manifest, write_trajectory_csv
from .greens import green_solution_for, single_excitation_trajectory
from .models import build
from .zassenhaus import zassenhaus_trajectory

OUT_ENV = "MARKOVLAB_OUT"


def output_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "markovlab_out"))


def resolve_output(cfg: RunConfig) -> Path:
    if cfg.output is None:
        return output_root() / cfg.model
    p = Path(cfg.output)
    return p if p.is_absolute() else output_root() / p


@dataclass
class RunResult:
    outdir: Path
    trajectories: dict
    verdict: dict
    discrepancy: Optional[dict] = None
    files: list = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return self.discrepancy is not None and self.discrepancy["kind"] == "DISCREPANCY"


def _variants_for(tag: str, cfg: RunConfig) -> dict:
    if tag == "model1":
        return {"renormalize": cfg.variant("renormalize")}
    if tag == "model2":
        return {"weighting": cfg.variant("weighting"), "envelope": cfg.variant("envelope")}
    if tag == "model3":
        return {"normalization": cfg.variant("normalization")}
    return {}


def model5_amplitudes(model) -> np.ndarray:
    n = len(model.extras["e_s"])
    amps = model.params.system_amplitudes
    if amps is None:
        return np.ones(n + 1) / np.sqrt(n + 1)
    a = np.asarray(amps, dtype=complex)
    if a.size != n + 1:
        raise ValueError(f"model5 amplitudes must have {n + 1} entries (vacuum first)")
    return a


def compute_paths(cfg: RunConfig, model=None) -> tuple:
    """Trajectories for every selected path, plus the closed-form DISCREPANCY record."""
    model = model or build(cfg.model, cfg.params)
    times = cfg.times
    trajs, record, extra = {}, None, {}
    if cfg.model == "model5":
        sol = green_solution_for(model, times)
        traj = single_excitation_trajectory(sol, model5_amplitudes(model))
        for p in cfg.paths:
            if p.startswith("zassenhaus"):
                raise ValueError("model5 has no Zassenhaus path")
            trajs[p] = traj
        extra["greens"] = sol
        return model, trajs, record, extra
    for p in cfg.paths:
        if p == "oracle":
            trajs[p] = propagate_oracle(model, times)
        elif p == "closedform":
            v = _variants_for(cfg.model, cfg)
            reading = cfg.variant("reading")
            states, errors = closedform_states_safe(model, times, reading, **v)
            trajs[p] = Trajectory(times, states, "closedform", model.tag, {"reading": reading, **v})
            rec = check_against_oracle(model, times, reading, cfg.tolerances.get("closedform", 1e-6),
                                       **v)
            record = rec.to_dict()
        else:
            k = int(p.split(":")[1])
            trajs[p] = zassenhaus_trajectory(model, times, k, cfg.variant("split"), cfg.variant("form"))
    return model, trajs, record, extra


def _metrics(traj: Trajectory) -> dict:
    l1, mx = offdiag_measures(traj.states)
    return {"l1_offdiag": l1, "max_offdiag": mx}


def _write_comparison(path: Path, times, trajs: dict) -> Path:
    pairs = list(itertools.combinations(sorted(trajs), 2))
    cols = ["t"] + [f"maxabs_{a}__{b}" for a, b in pairs]
    lines = [",".join(cols)]
    diffs = []
    for a, b in pairs:
        with np.errstate(invalid="ignore"):
            d = np.abs(trajs[a].states - trajs[b].states).max(axis=(1, 2))
        diffs.append(d)
    for k, t in enumerate(times):
        lines.append(",".join([_fmt(t)] + [_fmt(d[k]) for d in diffs]))
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_greens(path: Path, sol) -> Path:
    n = sol.g.shape[1]
    idx = [(i, j) for i in range(n) for j in range(n)]
    cols = ["t"]
    cols += [f"{p}_G_{i}_{j}" for i, j in idx for p in ("re", "im")]
    cols += [f"{p}_c_{i}_{j}" for i, j in idx for p in ("re", "im")]
    c = sol.c
    lines = [",".join(cols)]
    for k, t in enumerate(sol.times):
        row = [_fmt(t)]
        row += [_fmt(v) for i, j in idx for v in (sol.g[k, i, j].real, sol.g[k, i, j].imag)]
        row += [_fmt(v) for i, j in idx for v in (c[k, i, j].real, c[k, i, j].imag)]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def coherence_record(traj: Trajectory, fit_window: Optional[float] = None) -> dict:
    try:
        return coherence_series(traj, fit_window=fit_window).to_dict()
    except InsufficientSamples as exc:
        return {"classification": "insufficient-samples", "error": str(exc)}


def run(cfg: RunConfig, outdir: Optional[Path] = None) -> RunResult:
    """Compute every path and write CSV, comparison, verdict, DISCREPANCY and manifest files."""
    outdir = Path(outdir) if outdir is not None else resolve_output(cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    model, trajs, record, extra = compute_paths(cfg)
    files = []
    for name, traj in trajs.items():
        metrics = _metrics(traj)
        if "greens" in extra:
            c = extra["greens"].c
            for i in range(c.shape[1]):
                metrics[f"c_{i}_{i}"] = c[:, i, i].real
        files.append(write_trajectory_csv(traj, outdir / f"trajectory_{name.replace(':', '')}.csv", metrics))
    if "greens" in extra:
        files.append(_write_greens(outdir / "greens.csv", extra["greens"]))
    files.append(_write_comparison(outdir / "comparison.csv", cfg.times, trajs))
    first = trajs["oracle"] if "oracle" in trajs else next(iter(trajs.values()))
    verdict = markovianity_verdict(model, cfg.times if cfg.model in ("model5", "model4b") else None)
    verdict = {"model": cfg.model, "commutator": verdict.get("commutator"),
               "coherence": coherence_record(first), "verdict": verdict["verdict"],
               "details": {k: v for k, v in verdict.items() if k not in ("model", "commutator", "verdict")}}
    files.append(write_manifest(outdir / "verdict.json", verdict))
    if record is not None:
        files.append(write_manifest(outdir / ("DISCREPANCY.json" if record["kind"] == "DISCREPANCY"
                                              else "closedform_check.json"), record))
    invariants = {}
    for name, traj in trajs.items():
        with np.errstate(invalid="ignore"):
            invariants[name] = traj.invariant_report()
    manifest = {"version": __version__, "config": cfg.to_dict(), "files": [f.name for f in files],
                "invariants": invariants,
                "discrepancy": None if record is None else record["kind"]}
    if "greens" in extra:
        manifest["spectrum"] = model.extras["spectral"].to_dict()
    files.append(write_manifest(outdir / "manifest.json", manifest))
    return RunResult(outdir, trajs, verdict, record, files)


# ------------------------------------------------------------------ suite

EXPECTED = {
    "model1": {"verdict": "Markovian", "coherence": "constant-diagonal"},
    "model2": {"verdict": "Markovian", "commutator": "commuting", "coherence": "oscillatory"},
    "model3": {"verdict": "non-Markovian", "commutator": "general", "coherence": "oscillatory"},
    "model4a": {"verdict": "Markovian", "commutator": "commuting", "coherence": "oscillatory"},
    "model4b": {"commutator": "scalar-commutator", "coherence": "gaussian-decay"},
    "model5": {"verdict": "Markovian", "coherence": "monotone-decay"},
}


def suite_times(model) -> np.ndarray:
    t_end, n = DEFAULT_GRIDS[model.tag]
    if model.tag == "model4b":
        valid = truncation_valid_times(model, np.linspace(0.0, 15.0, 151))
        t_end = float(valid[-1])
    return np.linspace(0.0, t_end, n)


def suite_row(tag: str, overrides: Optional[dict] = None) -> dict:
    params = params_from_dict(tag, overrides)
    model = build(tag, params)
    times = suite_times(model)
    if tag == "model5":
        traj = single_excitation_trajectory(green_solution_for(model, times), model5_amplitudes(model))
    else:
        traj = propagate_oracle(model, times, check_truncation=tag != "model4b")
    v = markovianity_verdict(model, times if tag in ("model4b", "model5") else None)
    coh = coherence_record(traj)
    inv = traj.invariant_report()
    inv_ok = (inv["max_hermiticity_error"] <= 1e-10 and inv["max_trace_error"] <= 1e-9
              and inv["min_eigenvalue"] >= -1e-9)
    got = {"verdict": v["verdict"], "commutator": v["commutator"]["classification"],
           "coherence": coh["classification"]}
    exp = EXPECTED[tag]
    mismatches = [k for k, val in exp.items() if got[k] != val]
    return {"model": tag, **got, "expected": exp, "invariants": inv, "invariants_ok": inv_ok,
            "t_end": float(times[-1]), "n_points": int(times.size),
            "passed": not mismatches and inv_ok, "mismatches": mismatches,
            "overrides": overrides or {}}


def suite(overrides: Optional[dict] = None, tags=None) -> list:
    overrides = overrides or {}
    return [suite_row(t, overrides.get(t)) for t in (tags or EXPECTED)]


def suite_table(rows: list) -> str:
    head = f"{'model':<8} {'commutator':<18} {'verdict':<14} {'coherence':<18} {'result'}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r['model']:<8} {r['commutator']:<18} {r['verdict']:<14} {r['coherence']:<18} "
                     f"{'PASS' if r['passed'] else 'FAIL'}")
    return "\n".join(lines) + "\n"


def write_suite(rows: list, outdir: Path) -> list:
    outdir.mkdir(parents=True, exist_ok=True)
    j = write_manifest(outdir / "suite.json", {"rows": rows, "all_passed": all(r["passed"] for r in rows)})
    t = outdir / "suite.txt"
    t.write_text(suite_table(rows))
    return [j, t]


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())
