"""Zassenhaus product expansion e^{X+Y} = e^X e^Y e^{-c2/2!} e^{-c3/3!} ...

Terms up to order 4 are written out as nested commutators.  Higher orders
come from the recursion on formal power series in a scaling parameter s:

    W_1(s) = e^{-sY} e^{-sX} e^{s(X+Y)},   C_k = [s^k] W_{k-1},
    W_k(s) = e^{-s^k C_k} W_{k-1}(s),      c_k = -k! C_k.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .evolution import Trajectory, joint_density
from .linalg import as_operator, commutator, expm_antihermitian, frobenius, opnorm, partial_trace
from .models import ModelInstance

MAX_ORDER = 8
FORMS = ("standard", "printed", "recursive")
SPLITS = ("free", "environment")


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ZassenhausTerms:
    order: int
    terms: tuple  # (c2, c3, ..., c_order)

    def term(self, k: int) -> np.ndarray:
        return self.terms[k - 2]


def _series_exp(a: np.ndarray, power: int, degree: int) -> list:
    """Coefficients of exp(s^power a) up to s^degree."""
    d = a.shape[0]
    out = [np.zeros((d, d), dtype=complex) for _ in range(degree + 1)]
    term = np.eye(d, dtype=complex)
    n = 0
    while n * power <= degree:
        out[n * power] = out[n * power] + term
        n += 1
        term = term @ a / n
    return out


def _series_mul(p: list, q: list, degree: int) -> list:
    d = p[0].shape[0]
    out = [np.zeros((d, d), dtype=complex) for _ in range(degree + 1)]
    for i, pi in enumerate(p):
        if not pi.any():
            continue
        for j in range(degree + 1 - i):
            if q[j].any():
                out[i + j] += pi @ q[j]
    return out


def _recursive_terms(x: np.ndarray, y: np.ndarray, order: int) -> list:
    w = _series_mul(_series_mul(_series_exp(-y, 1, order), _series_exp(-x, 1, order), order),
                    _series_exp(x + y, 1, order), order)
    out = []
    for k in range(2, order + 1):
        ck = w[k].copy()
        out.append(-math.factorial(k) * ck)
        w = _series_mul(_series_exp(-ck, k, order), w, order)
    return out


def zassenhaus_terms(x, y, order: int = 4, form: str = "standard") -> ZassenhausTerms:
    """Terms [c2 .. c_order].

    ``standard`` uses the nested-commutator closed forms
    c3 = 2[[X,Y],Y] + [[X,Y],X] and
    c4 = [[[X,Y],X],X] + 3[[[X,Y],X],Y] + 3[[[X,Y],Y],Y] up to order 4 and the
    recursion beyond.  ``printed`` replaces c4 with
    c3 + 3[[[X,Y],Y],Y] + [[[X,Y],X],Y] + [[X,Y],[X,Y]].  ``recursive`` uses the
    recursion for every order.
    """
    x, y = as_operator(x), as_operator(y)
    if not 2 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in 2..{MAX_ORDER}")
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    if form == "recursive":
        return ZassenhausTerms(order, tuple(_recursive_terms(x, y, order)))
    c2 = commutator(x, y)
    c2y, c2x = commutator(c2, y), commutator(c2, x)
    c3 = 2 * c2y + c2x
    terms = [c2, c3]
    if form == "standard":
        c4 = commutator(c2x, x) + 3 * commutator(c2x, y) + 3 * commutator(c2y, y)
    else:
        c4 = c3 + 3 * commutator(c2y, y) + commutator(c2x, y) + commutator(c2, c2)
    terms.append(c4)
    if order > 4:
        terms += _recursive_terms(x, y, order)[3:]
    return ZassenhausTerms(order, tuple(terms[:order - 1]))


def _exp(a: np.ndarray) -> np.ndarray:
    if np.max(np.abs(a + a.conj().T)) <= 1e-12 * max(1.0, np.max(np.abs(a))):
        return expm_antihermitian(0.5 * (a - a.conj().T))
    return expm(a)


def zassenhaus_product(x, y, order: int = 4, form: str = "standard") -> np.ndarray:
    """Truncated ordered product e^X e^Y e^{-c2/2!} ... e^{-c_order/order!}."""
    x, y = as_operator(x), as_operator(y)
    zt = zassenhaus_terms(x, y, order, form)
    out = _exp(x) @ _exp(y)
    for k, ck in enumerate(zt.terms, start=2):
        out = out @ _exp(-ck / math.factorial(k))
    return out


def convergence_time(h_e, h_se, norm: str = "spectral") -> float:
    """ln 2 / (2 (||H_E|| + ||H_SE||)); +inf when both norms vanish."""
    f = opnorm if norm == "spectral" else frobenius
    total = f(h_e) + f(h_se)
    return math.inf if total == 0 else math.log(2.0) / (2.0 * total)


def split_model(model: ModelInstance, split: str = "free") -> tuple:
    """Hermitian (H_x, H_y) so that X = -it H_x and Y = -it H_y.

    ``free``: H_x = H_S + H_E, H_y = H_SE.  ``environment``: H_x = H_S + H_SE,
    H_y = H_E, which makes the order-2 product exact whenever H_E commutes with
    both H_S and H_SE.
    """
    if split == "free":
        return model.h_s + model.h_e, model.h_se
    if split == "environment":
        return model.h_s + model.h_se, model.h_e
    raise ValueError(f"split must be one of {SPLITS}")


def zassenhaus_propagator(h_x, h_y, order: int, t: float, form: str = "standard",
                          t_max: Optional[float] = None) -> np.ndarray:
    """Truncated product approximation of exp(-it(H_x + H_y)).

    Warns (does not refuse) when t exceeds ``t_max``.
    """
    if t_max is not None and abs(t) > t_max:
        warnings.warn(f"t={t:g} beyond the convergence estimate {t_max:.4g}", ConvergenceWarning,
                      stacklevel=2)
    return zassenhaus_product(-1j * t * as_operator(h_x), -1j * t * as_operator(h_y), order, form)


def zassenhaus_trajectory(model: ModelInstance, times: Sequence[float], order: int = 4,
                          split: str = "free", form: str = "standard", warn: bool = True) -> Trajectory:
    h_x, h_y = split_model(model, split)
    t_max = convergence_time(model.h_e, model.h_se) if warn else None
    rho0 = joint_density(model.layout, model.initial.system_rho, model.initial.env_rho)
    states = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        for t in times:
            u = zassenhaus_propagator(h_x, h_y, order, t, form, t_max)
            states.append(partial_trace(u @ rho0 @ u.conj().T, model.layout))
    meta = {"order": order, "split": split, "form": form, "convergence_time": t_max,
            "beyond_convergence": len(caught)}
    for w in caught[:1]:
        warnings.warn(f"{len(caught)} time points {w.message}", ConvergenceWarning, stacklevel=2)
    return Trajectory(np.asarray(times, float), np.array(states), f"zassenhaus:{order}", model.tag, meta)
