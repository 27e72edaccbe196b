"""Closed-form trajectories and their comparison against the oracle.

A comparison that exceeds its tolerance, or a closed form that cannot be
evaluated at all (divergent series, unmet tail bound), yields a
:class:`DiscrepancyRecord` with ``passed = False``.  The oracle is always
treated as ground truth.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import MarkovLabError
from ..evolution import Trajectory, propagate_oracle, propagate_super
from ..models import ModelInstance
from .model1 import model1_rho_diag, model1_trajectory, projected_oracle_diag
from .model2 import environment_weights, model2_rho
from .model3 import model3_rho
from .model4 import model4_rho, model4_rho_printed_diagonal


@dataclass
class DiscrepancyRecord:
    model: str
    reading: str
    variants: dict
    tolerance: float
    times: list
    max_deviation_per_time: list
    max_deviation: float
    worst_element: Optional[list]
    passed: bool
    error: Optional[str] = None
    notes: dict = field(default_factory=dict)

    @property
    def is_discrepancy(self) -> bool:
        return not self.passed

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kind"] = "DISCREPANCY" if not self.passed else "MATCH"
        return out


def _amps(model: ModelInstance):
    init = model.initial
    return init.system_amplitudes if init.system_amplitudes is not None else init.system_rho


def closedform_state(model: ModelInstance, t: float, reading: str = "pinned", **variants) -> np.ndarray:
    """Closed-form reduced density at one time for any finite model tag."""
    tag = model.tag
    if tag == "model1":
        return np.diag(model1_rho_diag(model, _amps(model), t, variants.get("renormalize", False)).diag)
    if tag == "model2":
        return model2_rho(model.params, _amps(model), t, variants.get("weighting", "uniform"), reading,
                          variants.get("envelope", "per-element"), variants.get("n_out"))
    if tag == "model3":
        return model3_rho(model.params, _amps(model), t, reading, variants.get("normalization", "amplitudes"))
    if tag in ("model4a", "model4b"):
        f = model4_rho if reading == "pinned" else model4_rho_printed_diagonal
        return f(model, t)
    raise ValueError(f"no closed form for {tag}")


def closedform_trajectory(model: ModelInstance, times: Sequence[float], reading: str = "pinned",
                          **variants) -> Trajectory:
    """Closed-form reduced trajectory; raises if any time point cannot be evaluated."""
    times = np.asarray(times, dtype=float)
    if model.tag == "model1":
        return model1_trajectory(model, times, variants.get("renormalize", False))
    states = [closedform_state(model, t, reading, **variants) for t in times]
    return Trajectory(times, np.array(states, dtype=complex), "closedform", model.tag,
                      {"reading": reading, **variants})


def reference_trajectory(model: ModelInstance, times: Sequence[float], **variants) -> Trajectory:
    """Oracle trajectory with the environment weighting the closed form declares."""
    if model.tag == "model2" and variants.get("weighting", "uniform") != "uniform":
        _, w = environment_weights(model.params.j_values, variants["weighting"])
        return propagate_super(model, times, env_weights=np.diag(w).astype(complex))
    if model.tag == "model1":
        diags = [projected_oracle_diag(model, t) for t in times]
        return Trajectory(np.asarray(times, float), np.array([np.diag(d) for d in diags]).astype(complex),
                          "oracle", model.tag, {"path": "projected"})
    return propagate_oracle(model, times)


def compare_states(a: np.ndarray, b: np.ndarray, block: Optional[int] = None):
    if block is not None:
        a, b = a[:, :block, :block], b[:, :block, :block]
    dev = np.abs(a - b)
    per_t = dev.max(axis=(1, 2))
    worst = np.unravel_index(int(np.argmax(dev)), dev.shape)
    return per_t, [int(x) for x in worst]


def closedform_states_safe(model: ModelInstance, times: Sequence[float], reading: str = "pinned",
                           **variants) -> tuple:
    """Closed-form states with NaN where evaluation fails, plus {index: error}."""
    states, errors = [], {}
    shape = None
    for k, t in enumerate(times):
        try:
            st = np.asarray(closedform_state(model, t, reading, **variants), dtype=complex)
            shape = st.shape
            states.append(st)
        except (MarkovLabError, FloatingPointError, OverflowError) as exc:
            errors[k] = f"{type(exc).__name__}: {exc}"
            states.append(None)
    if shape is None:
        shape = (model.layout.system_dim,) * 2
    states = [np.full(shape, np.nan, dtype=complex) if s is None else s for s in states]
    return np.array(states), errors


def check_against_oracle(model: ModelInstance, times: Sequence[float], reading: str = "pinned",
                         tol: float = 1e-6, block: Optional[int] = None,
                         oracle: Optional[Trajectory] = None, **variants) -> DiscrepancyRecord:
    """Compare the closed form with the oracle; never raises for numeric failures."""
    times = np.asarray(times, dtype=float)
    ref = oracle if oracle is not None else reference_trajectory(model, times, **variants)
    extra = {"n_out": block} if (block is not None and model.tag == "model2") else {}
    cf, errors = closedform_states_safe(model, times, reading, **variants, **extra)
    with np.errstate(invalid="ignore", over="ignore"):
        per_t, worst = compare_states(cf, ref.states, block)
    per_t = np.where(np.isnan(per_t), np.inf, per_t)
    mx = float(np.max(per_t)) if per_t.size else 0.0
    passed = bool(np.isfinite(mx) and mx <= tol)
    notes = {}
    if model.tag == "model1":
        notes["trace_deficit"] = [float(1 - np.real(np.trace(s))) for s in cf]
    err = None
    if errors:
        notes["failed_times"] = {str(times[k]): v for k, v in errors.items()}
        err = f"{len(errors)} of {len(times)} time points could not be evaluated; first: {next(iter(errors.values()))}"
    return DiscrepancyRecord(model.tag, reading, dict(variants), tol, times.tolist(),
                             [float(x) for x in per_t], mx, worst if np.isfinite(mx) else None,
                             passed, err, notes)
