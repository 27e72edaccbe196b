"""Closed form of the measurement model.

With |γ^i(t)> = exp(-itH_E^i)|γ> and H_E^i = ε_i + H_E + H_SE^i,

    ρ_{ii} = |c_i|²,   ρ_{ii'} = c_i c_{i'}* <γ^{i'}(t)|γ^i(t)>.

Expanding |γ> = Σ a_γ |γ> in the H_E eigenbasis gives the element

    M^{ii'}_{γγ'} = c_i c_{i'}* a_γ a_{γ'}* <γ'| e^{itH_E^{i'}} e^{-itH_E^i} |γ>

whose sum over γ, γ' is ρ_{ii'}.  The ``printed`` reading keeps the literal
phase order e^{+it(ε_i - ε_{i'})} e^{+it(E_γ - E_γ')} with the single-branch
coupling exponentials and the e^{κt²/2} factor for case b.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..evolution import Trajectory
from ..linalg import expm_unitary, hermitian_eigh
from ..models import ModelInstance


def _branch_hamiltonians(inst: ModelInstance) -> list:
    h_e = inst.extras["h_e_env"]
    eps = inst.params.energies
    d = h_e.shape[0]
    return [eps[i] * np.eye(d) + h_e + h for i, h in enumerate(inst.extras["h_se_family"])]


def _amplitudes(inst: ModelInstance) -> np.ndarray:
    init = inst.initial
    if init.system_amplitudes is not None:
        return np.outer(init.system_amplitudes, np.conj(init.system_amplitudes))
    return init.system_rho


def branch_states(inst: ModelInstance, t: float) -> list:
    """|γ^i(t)> for every level i."""
    gamma = inst.initial.env_vector
    return [expm_unitary(h, t) @ gamma for h in _branch_hamiltonians(inst)]


def model4_rho(inst: ModelInstance, t: float) -> np.ndarray:
    cc = _amplitudes(inst)
    states = branch_states(inst, t)
    n = len(states)
    rho = np.array(cc, dtype=complex)
    for i in range(n):
        for k in range(n):
            if i != k:
                rho[i, k] = cc[i, k] * np.vdot(states[k], states[i])
    return rho


def model4_trajectory(inst: ModelInstance, times: Sequence[float]) -> Trajectory:
    states = np.array([model4_rho(inst, t) for t in times])
    return Trajectory(np.asarray(times, float), states, "closedform", inst.tag)


def model4_M_element(i: int, i_prime: int, gamma: int, gamma_prime: int, inst: ModelInstance,
                     t: float, reading: str = "pinned") -> complex:
    """Contribution of the H_E eigenstates (γ, γ') to ρ_{i i'}(t)."""
    h_e = inst.extras["h_e_env"]
    e, v = hermitian_eigh(h_e)
    a = v.conj().T @ inst.initial.env_vector
    cc = _amplitudes(inst)[i, i_prime]
    fam = inst.extras["h_se_family"]
    eps = inst.params.energies
    if reading == "pinned":
        hs = _branch_hamiltonians(inst)
        # <γ'| e^{itH^{i'}} e^{-itH^i} |γ> in the H_E eigenbasis
        w = v.conj().T @ expm_unitary(hs[i_prime], -t) @ expm_unitary(hs[i], t) @ v
        return complex(cc * a[gamma] * np.conj(a[gamma_prime]) * w[gamma_prime, gamma])
    if reading == "printed":
        ui = v.conj().T @ expm_unitary(fam[i], -t) @ v
        uim = v.conj().T @ expm_unitary(fam[i], t) @ v
        val = (cc * np.exp(1j * t * (eps[i] - eps[i_prime])) * np.exp(1j * t * (e[gamma] - e[gamma_prime]))
               * ui[gamma, gamma_prime] * uim[gamma_prime, gamma])
        if inst.extras.get("case") == "b":
            val *= np.exp(inst.params.kappa * t * t / 2)
        return complex(val)
    raise ValueError("reading must be 'pinned' or 'printed'")


def model4_rho_printed_diagonal(inst: ModelInstance, t: float) -> np.ndarray:
    """Off-diagonal entries from the printed diagonal-in-E form, summed over γ with weights |a_γ|²."""
    h_e = inst.extras["h_e_env"]
    _, v = hermitian_eigh(h_e)
    a = v.conj().T @ inst.initial.env_vector
    fam = inst.extras["h_se_family"]
    eps = inst.params.energies
    cc = _amplitudes(inst)
    rho = np.array(cc, dtype=complex)
    n = len(fam)
    for i in range(n):
        for k in range(n):
            if i == k:
                continue
            p = np.diag(v.conj().T @ expm_unitary(fam[i], -t) @ v)
            q = np.diag(v.conj().T @ expm_unitary(fam[k], t) @ v)
            val = cc[i, k] * np.exp(1j * t * (eps[i] - eps[k])) * np.sum(np.abs(a) ** 2 * p * q)
            if inst.extras.get("case") == "b":
                val *= np.exp(inst.params.kappa * t * t / 2)
            rho[i, k] = val
    return rho
