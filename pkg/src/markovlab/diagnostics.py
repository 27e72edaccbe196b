"""Markovianity and coherence classification.

Markovianity is judged two ways: the commutator C_H = [H_E, H_SE] (zero means
Markovian) and the single-environment-state criterion (the environment
reduced density stays rank one).  Coherence is judged from the off-diagonal
magnitudes of a reduced trajectory with fixed, reproducible rules.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import constants as C
from .errors import DimensionMismatch, InsufficientSamples
from .evolution import SpectralPropagator, Trajectory, joint_density, propagate_oracle, to_system_env_order
from .linalg import SpaceLayout, as_operator, commutator, frobenius, opnorm

COMMUTATOR_CLASSES = ("commuting", "scalar-commutator", "general")
COHERENCE_CLASSES = ("constant-diagonal", "gaussian-decay", "monotone-decay", "oscillatory", "inconclusive")


@dataclass
class CommutatorReport:
    norm_ch: float
    nearest_scalar: complex
    residual: float
    classification: str
    scale: float
    guarded_dim: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nearest_scalar"] = [self.nearest_scalar.real, self.nearest_scalar.imag]
        return d


def guarded_indices(layout: Optional[SpaceLayout], dim: int) -> np.ndarray:
    """Basis indices whose Fock labels all lie below the top quarter of their ladder.

    Without a layout the operator is taken to act on a single Fock ladder.
    """
    if layout is None:
        keep = int(math.ceil((1 - C.GUARD_TOP_FRACTION) * dim))
        return np.arange(max(keep, 1))
    grids = np.indices(layout.dims).reshape(len(layout.dims), -1)
    ok = np.ones(grids.shape[1], dtype=bool)
    for k, f in enumerate(layout.factors):
        if f.kind == "fock":
            ok &= grids[k] < int(math.ceil((1 - C.GUARD_TOP_FRACTION) * f.dim))
    return np.flatnonzero(ok)


def commutator_report(h_e, h_se, layout: Optional[SpaceLayout] = None,
                      guard: Optional[np.ndarray] = None) -> CommutatorReport:
    """Norm of [H_E, H_SE] and the nearest scalar κ̂ on the guarded sub-block.

    κ̂ = Tr(C_sub)/d_sub minimises ||C_sub - κ I||_F; on the full space the
    trace vanishes identically, so the fit uses the guarded block only.
    """
    h_e, h_se = as_operator(h_e), as_operator(h_se)
    if h_e.shape != h_se.shape:
        raise DimensionMismatch(f"H_E {h_e.shape} vs H_SE {h_se.shape}")
    ch = commutator(h_e, h_se)
    norm_ch = opnorm(ch)
    scale = opnorm(h_e) * opnorm(h_se) + 1.0
    idx = guard if guard is not None else guarded_indices(layout, ch.shape[0])
    sub = ch[np.ix_(idx, idx)]
    kappa = complex(np.trace(sub) / sub.shape[0])
    residual = frobenius(sub - kappa * np.eye(sub.shape[0]))
    if norm_ch <= C.COMMUTING_TOL * scale:
        cls = "commuting"
    elif residual <= C.SCALAR_RESIDUAL_TOL * scale and abs(kappa) > C.COMMUTING_TOL * scale:
        cls = "scalar-commutator"
    else:
        cls = "general"
    return CommutatorReport(norm_ch, kappa, residual, cls, scale, int(idx.size))


def model_commutator(model) -> dict:
    """Commutator classification of a model; the measurement model is judged per branch."""
    if model.tag in ("model4a", "model4b"):
        h_e = model.extras["h_e_env"]
        branches = [commutator_report(h_e, h) for h in model.extras["h_se_family"]]
        classes = {b.classification for b in branches}
        cls = classes.pop() if len(classes) == 1 else "general"
        return {"classification": cls, "per_branch": [b.to_dict() for b in branches],
                "reports": branches}
    if model.tag == "model5":
        return {"classification": "not-applicable", "reports": []}
    rep = commutator_report(model.h_e, model.h_se, model.layout)
    return {"classification": rep.classification, **rep.to_dict(), "reports": [rep]}


@dataclass
class CoherenceReport:
    times: np.ndarray
    l1_offdiag: np.ndarray
    max_offdiag: np.ndarray
    classification: str
    revival_ratio: float
    gaussian_coefficient: float = float("nan")
    gaussian_r2: float = float("nan")
    derivative_sign_changes: int = 0
    fit_window: Optional[float] = None
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "revival_ratio": self.revival_ratio,
            "gaussian_coefficient": self.gaussian_coefficient,
            "gaussian_r2": self.gaussian_r2,
            "derivative_sign_changes": self.derivative_sign_changes,
            "fit_window": self.fit_window,
            "initial_max_offdiag": float(self.max_offdiag[0]),
            "final_max_offdiag": float(self.max_offdiag[-1]),
            "n_samples": int(self.times.size),
            **self.notes,
        }


def offdiag_measures(states: np.ndarray) -> tuple:
    """(l1 off-diagonal sum, max off-diagonal magnitude) per time."""
    mag = np.abs(np.asarray(states))
    d = mag.shape[1]
    mask = ~np.eye(d, dtype=bool)
    off = mag[:, mask] if d > 1 else np.zeros((mag.shape[0], 1))
    return off.sum(axis=1), off.max(axis=1)


def gaussian_fit(times: np.ndarray, series: np.ndarray) -> tuple:
    """Least-squares fit log(series) ≈ a + b t²; returns (b, R²)."""
    y = np.log(np.maximum(series, 1e-300))
    x = np.asarray(times, float) ** 2
    a = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    ss_res = float(np.sum((y - a @ coef) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return float(coef[1]), r2


def derivative_sign_changes(series: np.ndarray, slack: float = C.MONOTONE_SLACK) -> int:
    """Sign changes of the finite difference, ignoring steps below ``slack``."""
    d = np.diff(series)
    s = np.sign(np.where(np.abs(d) > slack, d, 0.0))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def coherence_series(traj: Trajectory, fit_window: Optional[float] = None,
                     period: Optional[float] = None, thresholds: Optional[dict] = None) -> CoherenceReport:
    """Classify the off-diagonal dynamics of a reduced trajectory.

    Rules, checked in order:
      constant-diagonal: every off-diagonal magnitude below 1e-10;
      gaussian-decay: log(max_offdiag) fits a + b t² with R² ≥ 0.99 and b < 0;
      monotone-decay: non-increasing within 1e-9 and final < 0.01 × initial;
      oscillatory: revival ratio ≥ 0.1 and at least two derivative sign changes;
      inconclusive otherwise.
    The revival ratio is the maximum over the second half of the window
    divided by the initial value.
    """
    th = {"constant": C.CONSTANT_DIAGONAL_TOL, "r2": C.GAUSSIAN_R2, "slack": C.MONOTONE_SLACK,
          "floor": C.DECAY_FLOOR, "revival": C.REVIVAL_RATIO}
    th.update(thresholds or {})
    times = traj.times
    if times.size < C.MIN_SAMPLES:
        raise InsufficientSamples(f"{times.size} samples, need at least {C.MIN_SAMPLES}")
    notes = {}
    if period is not None and times[-1] - times[0] < 3 * period:
        notes["short_window"] = f"window {times[-1] - times[0]:g} shorter than 3 periods ({3 * period:g})"
    l1, mx = offdiag_measures(traj.states)
    init = mx[0]
    late = mx[times >= times[0] + 0.5 * (times[-1] - times[0])]
    revival = float(late.max() / init) if init > 0 else 0.0
    changes = derivative_sign_changes(mx, th["slack"])
    fit_mask = times <= fit_window if fit_window is not None else np.ones(times.size, bool)
    b, r2 = (gaussian_fit(times[fit_mask], mx[fit_mask]) if init > 0 and fit_mask.sum() >= 3
             else (float("nan"), float("nan")))
    decaying = bool(np.all(np.diff(mx) <= th["slack"]))
    if mx.max() < th["constant"]:
        cls = "constant-diagonal"
    elif np.isfinite(r2) and r2 >= th["r2"] and b < 0:
        cls = "gaussian-decay"
    elif decaying and mx[-1] < th["floor"] * init:
        cls = "monotone-decay"
    elif revival >= th["revival"] and changes >= 2:
        cls = "oscillatory"
    else:
        cls = "inconclusive"
    return CoherenceReport(times, l1, mx, cls, revival, b, r2, changes, fit_window, notes)


def fock_top_population(rho_env: np.ndarray, fraction: float = C.GUARD_TOP_FRACTION) -> float:
    d = rho_env.shape[0]
    start = int(math.ceil((1 - fraction) * d))
    return float(np.real(np.trace(rho_env[start:, start:])))


def truncation_valid_times(model, times: Sequence[float], tol: float = C.TOP_LEVEL_POPULATION_TOL) -> np.ndarray:
    """Longest prefix of ``times`` with environment weight on the top Fock quarter ≤ tol."""
    env = propagate_oracle(model, times, keep="environment", check_truncation=False)
    times = np.asarray(times, float)
    ok = np.array([fock_top_population(r) <= tol for r in env.states])
    stop = int(np.argmin(ok)) if not ok.all() else ok.size
    return times[:stop]


def environment_rank_report(model, times: Sequence[float]) -> dict:
    """Dynamical single-state criterion: second eigenvalue of Tr_S ρ(t)."""
    env = propagate_oracle(model, times, keep="environment", check_truncation=False)
    second = [float(np.sort(np.linalg.eigvalsh(0.5 * (r + r.conj().T)))[-2]) if r.shape[0] > 1 else 0.0
              for r in env.states]
    worst = max(second)
    return {"pure_initial": bool(model.initial.env_is_pure), "max_second_eigenvalue": worst,
            "rank_one": bool(model.initial.env_is_pure and worst <= C.RANK_ONE_TOL)}


def projective_rank_report(model, times: Sequence[float]) -> dict:
    """Projective single-state reading: the environment restricted to its initial state.

    The state P ρ(t) P with P = |α><α| on the environment is rank one in the
    environment by construction; the retained weight is reported.
    """
    prop = SpectralPropagator(model.h)
    rho0 = joint_density(model.layout, model.initial.system_rho, model.initial.env_rho)
    v = model.initial.env_vector
    ds, de = model.layout.system_dim, model.layout.environment_dim
    weights = []
    for t in times:
        u = prop.at(t)
        r4 = to_system_env_order(u @ rho0 @ u.conj().T, model.layout).reshape(ds, de, ds, de)
        proj = np.einsum("a,iajb,b->ij", v.conj(), r4, v)
        weights.append(float(np.real(np.trace(proj))))
    return {"pure_initial": bool(model.initial.env_is_pure), "min_retained_weight": min(weights),
            "rank_one": bool(model.initial.env_is_pure)}


def dissipation_constancy(model, times: Sequence[float]) -> dict:
    from .greens import green_solution_for

    sol = green_solution_for(model, times)
    c = sol.c
    dev = float(np.max(np.abs(c - c[-1])))
    return {"max_deviation_from_final": dev, "constant": dev <= C.DISSIPATION_CONSTANT_TOL,
            "c_final": np.real(np.diag(c[-1])).tolist()}


def markovianity_verdict(model, times: Optional[Sequence[float]] = None) -> dict:
    """Both Markovianity criteria, reported separately, and the combined verdict.

    Markovian if the environment stays in a single pure state or if the
    commutator vanishes.  The single-state criterion for the ladder-coupled
    spin uses the projective reading (both readings are reported).  The
    Green's-function model is Markovian when c(t) is constant.
    """
    times = np.linspace(0.0, 10.0, 21) if times is None else np.asarray(times, float)
    out = {"model": model.tag}
    if model.tag == "model5":
        dc = dissipation_constancy(model, times)
        out.update(commutator={"classification": "not-applicable"}, dissipation=dc,
                   verdict="Markovian" if dc["constant"] else "non-Markovian")
        return out
    comm = model_commutator(model)
    comm.pop("reports")
    dyn = environment_rank_report(model, times)
    single = {"dynamical": dyn}
    if model.tag == "model1":
        single["projective"] = projective_rank_report(model, times)
        single["used"] = "projective"
        single_ok = single["projective"]["rank_one"]
    else:
        single["used"] = "dynamical"
        single_ok = dyn["rank_one"]
    commuting = comm["classification"] == "commuting"
    out.update(commutator=comm, single_state=single,
               criteria={"single_state": bool(single_ok), "commutator": commuting},
               verdict="Markovian" if (single_ok or commuting) else "non-Markovian")
    return out


def coherence_of(model_tag: str, traj: Trajectory, **kw) -> dict:
    rep = coherence_series(traj, **kw)
    return {"model": model_tag, **rep.to_dict()}
