"""Closed form of the oscillator system coupled through Ĵ² to a spin environment.

Because H_E and H_SE are both diagonal in |j m>, the propagator restricted to
one environment state is the driven oscillator with g = ηj(j+1), and

    C_{(n1 n2)(n3 n4)}(t) = Σ_{jm} w_{jm} I⁻_{n3 n1}(t) I⁺_{n2 n4}(t)

with I⁻ = <n3|U_j|n1> and I⁺ = <n2|U_j†|n4>.  The environment phase
e^{-iωmt} cancels between the two factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import IndexOverflow
from .. import constants as C
from ..operators import spin_j_labels
from ..linalg import Factor
from ..models import ModelParams
from .oscillator import exact_element, intermediates, printed_element

WEIGHTINGS = ("uniform", "inverse-jhat", "inverse-jhat4")


@dataclass(frozen=True)
class Model2Intermediates:
    d1_t: float
    d2_t: float
    psi_t: float


def model2_intermediates(params: ModelParams, j: float, t: float, reading: str = "pinned"):
    g = params.eta * j * (j + 1)
    d1, d2, psi = intermediates(params.omega_s, g, t, reading)
    return Model2Intermediates(d1, d2, psi)


def model2_I_element(n_row: int, n_col: int, j: float, params: ModelParams, t: float,
                     sign: str = "-", reading: str = "pinned") -> complex:
    """I⁻_{n_row n_col} = <n_row|U_j|n_col> (sign '-') or I⁺ = <n_row|U_j†|n_col> (sign '+')."""
    if max(n_row, n_col) > C.MAX_SERIES_INDEX:
        raise IndexOverflow(f"Fock index {max(n_row, n_col)} exceeds {C.MAX_SERIES_INDEX}")
    if sign not in "+-" or len(sign) != 1:
        raise ValueError("sign must be '+' or '-'")
    g = params.eta * j * (j + 1)
    w = params.omega_s
    if reading == "pinned":
        if sign == "-":
            return exact_element(n_row, n_col, w, g, t)
        return np.conj(exact_element(n_col, n_row, w, g, t))
    if reading == "printed":
        return printed_element(n_row, n_col, w, g, t, conjugate=(sign == "+"), d2_on_l=(sign == "+"))
    raise ValueError("reading must be 'pinned' or 'printed'")


def environment_weights(j_values: Sequence[float], weighting: str = "uniform") -> tuple:
    """(j label, weight) for every environment basis state |j m>."""
    js = spin_j_labels(Factor.spin(*j_values))
    jhat = 2 * js + 1
    if weighting == "uniform":
        w = np.full(js.size, 1.0 / js.size)
    elif weighting == "inverse-jhat":
        w = 1.0 / jhat
    elif weighting == "inverse-jhat4":
        w = 1.0 / jhat ** 4
    else:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}")
    return js, w


def model2_super_matrix(params: ModelParams, t: float, n_in: Sequence[int], n_out: int,
                        weighting: str = "uniform", reading: str = "pinned",
                        envelope: str = "per-element") -> np.ndarray:
    """C[i1, i2, n3, n4] for input labels ``n_in`` and outputs 0..n_out-1.

    ``envelope="single"`` divides each product by one e^{Ψ} so that ρ carries a
    single envelope factor rather than one per matrix element.
    """
    js, w = environment_weights(params.j_values, weighting)
    n_in = list(n_in)
    out = np.zeros((len(n_in), len(n_in), n_out, n_out), dtype=complex)
    for j in np.unique(js):
        wj = float(np.sum(w[js == j]))
        im = np.array([[model2_I_element(n3, n1, j, params, t, "-", reading) for n1 in n_in]
                       for n3 in range(n_out)])
        ip = np.array([[model2_I_element(n2, n4, j, params, t, "+", reading) for n4 in range(n_out)]
                       for n2 in n_in])
        blk = wj * np.einsum("ca,bd->abcd", im, ip)
        if envelope == "single":
            blk = blk * np.exp(-model2_intermediates(params, j, t, reading).psi_t)
        elif envelope != "per-element":
            raise ValueError("envelope must be 'per-element' or 'single'")
        out += blk
    return out


def model2_rho(params: ModelParams, amplitudes, t: float, weighting: str = "uniform",
               reading: str = "pinned", envelope: str = "per-element",
               n_out: Optional[int] = None) -> np.ndarray:
    """ρ^{n3 n4}_S(t) = Σ c_{n1} c*_{n2} C_{(n1 n2)(n3 n4)}(t) for n3, n4 < n_out."""
    a = np.asarray(amplitudes, dtype=complex)
    cc = np.outer(a, a.conj()) if a.ndim == 1 else a
    n_out = params.n_max + 1 if n_out is None else n_out
    support = [n for n in range(cc.shape[0]) if np.any(cc[n] != 0) or np.any(cc[:, n] != 0)]
    cmat = model2_super_matrix(params, t, support, n_out, weighting, reading, envelope)
    sub = cc[np.ix_(support, support)]
    return np.einsum("ik,ikjl->jl", sub, cmat)
