"""Brute-force evolution oracle and the super-matrix reduction.

The joint state is propagated exactly with U(t) = exp(-iHt) from one
eigendecomposition of H, then reduced by partial trace.  The same reduced
state is also assembled through the four-index super-matrix C, which maps
initial system amplitudes to the reduced density.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import constants as C
from .errors import DensityInvariantViolation, DimensionMismatch, TruncationTooSmall
from .linalg import SpaceLayout, hermitian_eigh, kron, partial_trace
from .models import ModelInstance

SOURCES = ("oracle", "closedform", "zassenhaus")


@dataclass
class Trajectory:
    """Time grid plus the reduced density matrix at every time."""

    times: np.ndarray
    states: np.ndarray
    source: str
    tag: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=complex)
        if self.states.ndim != 3 or self.states.shape[0] != self.times.size:
            raise DimensionMismatch("states must have shape (len(times), d, d)")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if self.source.split(":")[0] not in SOURCES:
            raise ValueError(f"unknown trajectory source {self.source!r}")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def invariant_report(self) -> dict:
        herm = np.abs(self.states - np.conj(np.transpose(self.states, (0, 2, 1)))).max(axis=(1, 2))
        traces = np.einsum("tii->t", self.states)
        hs = 0.5 * (self.states + np.conj(np.transpose(self.states, (0, 2, 1))))
        min_eig = np.linalg.eigvalsh(hs).min(axis=1)
        return {
            "max_hermiticity_error": float(herm.max()),
            "max_trace_error": float(np.abs(traces - 1.0).max()),
            "min_eigenvalue": float(min_eig.min()),
        }

    def check_invariants(self, allow_trace_deficit: bool = False) -> dict:
        """Raise DensityInvariantViolation unless every state is a valid density."""
        rep = self.invariant_report()
        if rep["max_hermiticity_error"] > C.RHO_HERMITIAN_TOL:
            raise DensityInvariantViolation(f"non-Hermitian state: {rep}")
        if not allow_trace_deficit and rep["max_trace_error"] > C.RHO_TRACE_TOL:
            raise DensityInvariantViolation(f"trace not preserved: {rep}")
        if rep["min_eigenvalue"] < -C.RHO_POSITIVITY_TOL:
            raise DensityInvariantViolation(f"negative eigenvalue: {rep}")
        return rep


class SpectralPropagator:
    """exp(-iHt) for many t from a single eigendecomposition of H."""

    def __init__(self, h: np.ndarray):
        self.w, self.v = hermitian_eigh(h)
        self.vh = self.v.conj().T

    def at(self, t: float) -> np.ndarray:
        return (self.v * np.exp(-1j * self.w * t)) @ self.vh


# ------------------------------------------------------------- index helpers

def _order_perm(layout: SpaceLayout) -> list:
    return list(layout.system_indices) + list(layout.environment_indices)


def to_system_env_order(op: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    """Permute tensor factors so the row index reads (system, environment)."""
    dims = layout.dims
    n = len(dims)
    perm = _order_perm(layout)
    t = op.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    return t.reshape(layout.dim, layout.dim)


def from_system_env_order(op: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    dims = layout.dims
    n = len(dims)
    perm = _order_perm(layout)
    inv = list(np.argsort(perm))
    pdims = tuple(dims[p] for p in perm)
    t = op.reshape(pdims + pdims).transpose(inv + [n + p for p in inv])
    return t.reshape(layout.dim, layout.dim)


def joint_density(layout: SpaceLayout, rho_s: np.ndarray, rho_e: np.ndarray) -> np.ndarray:
    """ρ_S ⊗ ρ_E placed in layout factor order."""
    return from_system_env_order(kron(rho_s, rho_e), layout)


def _top_fock_population(rho: np.ndarray, layout: SpaceLayout) -> float:
    pops = np.real(np.diag(rho)).reshape(layout.dims)
    worst = 0.0
    for k, f in enumerate(layout.factors):
        if f.kind == "fock":
            top = np.take(pops, f.param, axis=k)
            worst = max(worst, float(np.sum(top)))
    return worst


def _unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


# ------------------------------------------------------------------- oracle

def propagate_oracle(model: ModelInstance, times: Sequence[float], keep: str = "system",
                     check_truncation: bool = True) -> Trajectory:
    """Exact joint propagation followed by partial trace at each time."""
    layout = model.layout
    if layout is None:
        raise ValueError(f"{model.tag} has no finite tensor-space Hamiltonian")
    prop = SpectralPropagator(model.h)
    rho0 = joint_density(layout, model.initial.system_rho, model.initial.env_rho)
    states = []
    worst_u = worst_top = 0.0
    for t in times:
        u = prop.at(t)
        err = _unitarity_error(u)
        if err > C.UNITARY_TOL:
            raise ArithmeticError(f"propagator not unitary at t={t}: {err:.3e}")
        worst_u = max(worst_u, err)
        rho = u @ rho0 @ u.conj().T
        top = _top_fock_population(rho, layout)
        worst_top = max(worst_top, top)
        if check_truncation and top > C.TOP_LEVEL_POPULATION_TOL:
            raise TruncationTooSmall(f"top Fock population {top:.3e} at t={t}")
        states.append(partial_trace(rho, layout, keep))
    meta = {"path": "partial-trace", "keep": keep, "max_unitarity_error": worst_u,
            "max_top_fock_population": worst_top}
    return Trajectory(np.asarray(times, dtype=float), np.array(states), "oracle", model.tag, meta)


def propagate_joint(model: ModelInstance, t: float) -> np.ndarray:
    """Full joint density at time t (layout order)."""
    u = SpectralPropagator(model.h).at(t)
    rho0 = joint_density(model.layout, model.initial.system_rho, model.initial.env_rho)
    return u @ rho0 @ u.conj().T


# ------------------------------------------------------------- super-matrix

@dataclass(frozen=True)
class SuperMatrixC:
    """C[i1, i2, j1, j2] at time t."""

    t: float
    c: np.ndarray

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    def as_matrix(self) -> np.ndarray:
        d = self.dim
        return self.c.reshape(d * d, d * d)


def _u4(u: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    ds, de = layout.system_dim, layout.environment_dim
    return to_system_env_order(u, layout).reshape(ds, de, ds, de)


def super_matrix_from_unitary(u: np.ndarray, layout: SpaceLayout, env_weights: np.ndarray,
                              t: float = float("nan")) -> SuperMatrixC:
    # U4[j, g, i, a] = <j g|U|i a>
    u4 = _u4(u, layout)
    c = np.einsum("ab,jgia,lgkb->ikjl", env_weights, u4, u4.conj(), optimize=True)
    return SuperMatrixC(t, c)


def super_matrix_c(model: ModelInstance, t: float, env_weights: Optional[np.ndarray] = None,
                   propagator: Optional[SpectralPropagator] = None) -> SuperMatrixC:
    """C_{(i1,i2),(j1,j2)}(t) = Σ d_{a1 a2} <j1 g|U|i1 a1> <j2 g|U|i2 a2>*."""
    prop = propagator or SpectralPropagator(model.h)
    d = model.initial.env_rho if env_weights is None else np.asarray(env_weights, dtype=complex)
    return super_matrix_from_unitary(prop.at(t), model.layout, d, t)


def assemble_rho_from_c(c: SuperMatrixC, amplitudes) -> np.ndarray:
    """ρ_S(t) from C and either amplitudes c_i or a full initial matrix c_{i1 i2}."""
    a = np.asarray(amplitudes, dtype=complex)
    cc = np.outer(a, a.conj()) if a.ndim == 1 else a
    if cc.shape != (c.dim, c.dim):
        raise DimensionMismatch("amplitude dimension does not match C")
    return np.einsum("ik,ikjl->jl", cc, c.c)


def propagate_super(model: ModelInstance, times: Sequence[float],
                    env_weights: Optional[np.ndarray] = None) -> Trajectory:
    """Reduced trajectory assembled through the super-matrix C."""
    prop = SpectralPropagator(model.h)
    init = model.initial
    amps = init.system_amplitudes if init.system_amplitudes is not None else init.system_rho
    states = [assemble_rho_from_c(super_matrix_c(model, t, env_weights, prop), amps) for t in times]
    return Trajectory(np.asarray(times, dtype=float), np.array(states), "oracle", model.tag,
                      {"path": "super-matrix"})


# ---------------------------------------------------------------------- I/O

def _fmt(x: float) -> str:
    return "%.17g" % x


def rho_columns(d: int) -> list:
    cols = []
    for i in range(d):
        for j in range(d):
            cols += [f"re_rho_{i}_{j}", f"im_rho_{i}_{j}"]
    return cols


def write_trajectory_csv(traj: Trajectory, path, metrics: Optional[dict] = None) -> Path:
    """One row per time: t, re/im of each entry (row-major), then metric columns."""
    path = Path(path)
    metrics = metrics or {}
    names = list(metrics)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + rho_columns(traj.dim) + names)
        for k, t in enumerate(traj.times):
            row = [_fmt(t)]
            for z in traj.states[k].ravel():
                row += [_fmt(z.real), _fmt(z.imag)]
            row += [_fmt(float(np.real(metrics[n][k]))) for n in names]
            w.writerow(row)
    return path


def read_trajectory_csv(path, source: str = "oracle") -> tuple:
    """Inverse of :func:`write_trajectory_csv`; returns (trajectory, metrics)."""
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    n_rho = sum(1 for h in header if h.startswith(("re_rho_", "im_rho_")))
    d = int(round(np.sqrt(n_rho // 2)))
    vals = body[:, 1:1 + n_rho]
    states = (vals[:, 0::2] + 1j * vals[:, 1::2]).reshape(-1, d, d)
    metrics = {h: body[:, 1 + n_rho + k] for k, h in enumerate(header[1 + n_rho:])}
    return Trajectory(body[:, 0], states, source), metrics


def write_manifest(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
