"""Closed form of the spin system coupled through Ĵ² to a boson environment.

Restricted to |j m>, H = ωm + βb†b + γ(j)(b† + b) with γ(j) = ηj(j+1), so

    ρ^{j1 m1, j2 m2}_S(t) = c_1 c_2* e^{-iω(m1 - m2)t} Ω_E(j1, j2, t),
    Ω_E = Σ_n E_{n,0}(j1) conj(E_{n,0}(j2)) / n!     (vacuum environment)

where E_{n,n'}(j) = sqrt(n! n'!) <n|U_bos(j)|n'>.  The n sum is infinite and
is truncated adaptively; since U_bos|0> is a coherent state, the tail of
Σ|<n|U|0>|² is a Poisson survival function, which gives a rigorous bound on
the remainder by Cauchy-Schwarz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .. import constants as C
from ..errors import IndexOverflow, TailTooLarge
from ..linalg import Factor
from ..models import ModelParams
from ..operators import spin_j_labels, spin_m_values
from .oscillator import exact_element, intermediates, printed_element
from .series import compensated_sum


@dataclass(frozen=True)
class Model3Intermediates:
    alpha_t: float
    zeta_t: float
    gamma_j: float
    psi1_t: float
    psi2_t: float


def gamma_of(params: ModelParams, j: float) -> float:
    return params.eta * j * (j + 1)


def model3_intermediates(params: ModelParams, j1: float, j2: float, t: float,
                         reading: str = "pinned") -> Model3Intermediates:
    g1, g2 = gamma_of(params, j1), gamma_of(params, j2)
    a1, z1, p1 = intermediates(params.beta, g1, t, reading)
    _, _, p2 = intermediates(params.beta, g2, t, reading)
    return Model3Intermediates(a1, z1, g1, p1, p2)


def model3_E_polynomial(n: int, n_prime: int, j: float, params: ModelParams, t: float,
                        conjugated: bool = False, reading: str = "pinned") -> complex:
    """Bosonic polynomial E_{n,n'}(j, t), or its conjugate partner.

    pinned: E_{n,n'} = sqrt(n! n'!) <n|U_bos(j)|n'>; ``conjugated`` returns
    conj(E_{n,n'}).  printed: the literal combinatorial sum; ``conjugated``
    evaluates the printed conjugate polynomial whose subscripts are written in
    the order (n″, n), here passed as (n_prime, n).
    """
    if max(n, n_prime) > C.MAX_SERIES_INDEX:
        raise IndexOverflow(f"Fock index {max(n, n_prime)} exceeds {C.MAX_SERIES_INDEX}")
    g, w = gamma_of(params, j), params.beta
    if reading == "pinned":
        norm = math.exp(0.5 * (gammaln(n + 1) + gammaln(n_prime + 1)))
        val = norm * exact_element(n, n_prime, w, g, t)
        return complex(np.conj(val)) if conjugated else complex(val)
    if reading == "printed":
        if conjugated:
            return printed_element(n_prime, n, w, g, t, conjugate=True)
        return printed_element(n, n_prime, w, g, t, conjugate=False)
    raise ValueError("reading must be 'pinned' or 'printed'")


@dataclass(frozen=True)
class OmegaResult:
    value: complex
    n_terms: int
    tail_bound: float


def model3_omega(params: ModelParams, j1: float, j2: float, t: float, reading: str = "pinned",
                 printed_cap: int = 4, rel_tol: float = C.OMEGA_RELATIVE_TAIL_TOL) -> OmegaResult:
    """Environment factor Ω_E(j1, j2, t) for the vacuum environment."""
    if reading == "printed":
        return _omega_printed(params, j1, j2, t, printed_cap)
    b = params.beta
    mu = []
    for j in (j1, j2):
        d1, d2, _ = intermediates(b, gamma_of(params, j), t, "pinned")
        mu.append(d1 * d1 + d2 * d2)
    terms = []
    for n in range(C.MAX_SERIES_INDEX + 1):
        # E_{n,0}(j1) conj(E_{n,0}(j2)) / n! = <n|U1|0> conj(<n|U2|0>)
        terms.append(exact_element(n, 0, b, gamma_of(params, j1), t)
                     * np.conj(exact_element(n, 0, b, gamma_of(params, j2), t)))
        tail = math.sqrt(poisson.sf(n, mu[0]) * poisson.sf(n, mu[1]))
        total = compensated_sum(terms)
        if tail <= max(rel_tol * abs(total), 1e-300) and tail <= C.SERIES_TAIL_TOL:
            return OmegaResult(total, n + 1, tail)
    raise TailTooLarge(f"Ω tail {tail:.3e} not converged within {C.MAX_SERIES_INDEX} terms")


def _omega_printed(params, j1, j2, t, cap) -> OmegaResult:
    """Literal double-free sum over n', n'' up to ``cap``; the tail is estimated by the last shell."""
    def partial(nc):
        terms = []
        for n in range(nc + 1):
            for n1 in range(nc + 1):
                for n2 in range(nc + 1):
                    e1 = model3_E_polynomial(n, n1, j1, params, t, False, "printed")
                    e2 = model3_E_polynomial(n, n2, j2, params, t, True, "printed")
                    lw = gammaln(n + 1) + 0.5 * (gammaln(n1 + 1) + gammaln(n2 + 1))
                    terms.append(e1 * e2 * math.exp(-lw))
        return compensated_sum(terms)

    full, prev = partial(cap), partial(cap - 1)
    return OmegaResult(full, (cap + 1) ** 3, abs(full - prev))


def model3_rho(params: ModelParams, amplitudes=None, t: float = 0.0, reading: str = "pinned",
               normalization: str = "amplitudes") -> np.ndarray:
    """ρ_S(t) in the |j m> basis.

    ``normalization="amplitudes"`` uses c_1 c_2* from the given amplitudes;
    ``"inverse-sqrt-jhat"`` replaces it with 1/sqrt(ĵ1 ĵ2) literally.
    """
    spin = Factor.spin(*params.j_values)
    js, ms = spin_j_labels(spin), spin_m_values(spin)
    d = spin.dim
    if normalization == "amplitudes":
        a = np.asarray(amplitudes, dtype=complex)
        cc = np.outer(a, a.conj()) if a.ndim == 1 else a
    elif normalization == "inverse-sqrt-jhat":
        jhat = 2 * js + 1
        cc = 1.0 / np.sqrt(np.outer(jhat, jhat))
    else:
        raise ValueError("normalization must be 'amplitudes' or 'inverse-sqrt-jhat'")
    omegas = {}
    for j1 in np.unique(js):
        for j2 in np.unique(js):
            omegas[(j1, j2)] = model3_omega(params, j1, j2, t, reading).value
    rho = np.zeros((d, d), dtype=complex)
    for p in range(d):
        for q in range(d):
            if cc[p, q] == 0:
                continue
            rho[p, q] = cc[p, q] * np.exp(-1j * params.omega * (ms[p] - ms[q]) * t) * omegas[(js[p], js[q])]
    return rho
