"""Diagonal closed form for the ladder-coupled spin with one environment state |α>.

ρ^{(mm)}_S(t) = |c_m|² |u_{mα}(t)|² with u_{mα} = <m α|U(t)|m α>.  The sum of
these entries is below one whenever amplitude leaks to other Fock states; the
deficit is reported and renormalisation is opt-in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..evolution import SpectralPropagator, Trajectory, joint_density, to_system_env_order
from ..models import ModelInstance


@dataclass(frozen=True)
class Model1Diagonal:
    diag: np.ndarray
    trace_deficit: float


def model1_u(model: ModelInstance, t: float, propagator=None) -> np.ndarray:
    """u_{mα}(t) for every spin basis state m."""
    prop = propagator or SpectralPropagator(model.h)
    ds, de = model.layout.system_dim, model.layout.environment_dim
    u4 = to_system_env_order(prop.at(t), model.layout).reshape(ds, de, ds, de)
    a = model.params.alpha0
    return np.array([u4[m, a, m, a] for m in range(ds)])


def model1_rho_diag(model: ModelInstance, amplitudes, t: float, renormalize: bool = False,
                    propagator=None) -> Model1Diagonal:
    """|c_m|² |u_{mα}(t)|² and the trace deficit 1 - Σ_m of it."""
    c = np.asarray(amplitudes, dtype=complex)
    pops = np.abs(c) ** 2 if c.ndim == 1 else np.real(np.diag(c))
    diag = pops * np.abs(model1_u(model, t, propagator)) ** 2
    deficit = float(1.0 - diag.sum())
    if renormalize and diag.sum() > 0:
        diag = diag / diag.sum()
    return Model1Diagonal(diag, deficit)


def model1_trajectory(model: ModelInstance, times: Sequence[float], renormalize: bool = False) -> Trajectory:
    prop = SpectralPropagator(model.h)
    init = model.initial
    amps = init.system_amplitudes if init.system_amplitudes is not None else init.system_rho
    res = [model1_rho_diag(model, amps, t, renormalize, prop) for t in times]
    states = np.array([np.diag(r.diag).astype(complex) for r in res])
    meta = {"mode": "literal-diagonal", "renormalized": renormalize,
            "trace_deficit": [r.trace_deficit for r in res]}
    return Trajectory(np.asarray(times, float), states, "closedform", model.tag, meta)


def projected_oracle_diag(model: ModelInstance, t: float, propagator=None) -> np.ndarray:
    """Diagonal of <α|ρ(t)|α> (environment restricted to the single state |α>)."""
    prop = propagator or SpectralPropagator(model.h)
    u = prop.at(t)
    rho = u @ joint_density(model.layout, model.initial.system_rho, model.initial.env_rho) @ u.conj().T
    ds, de = model.layout.system_dim, model.layout.environment_dim
    r4 = to_system_env_order(rho, model.layout).reshape(ds, de, ds, de)
    a = model.params.alpha0
    return np.real(np.diag(r4[:, a, :, a]))
