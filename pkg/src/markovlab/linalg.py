"""Dense complex linear algebra for operators on tensor-product spaces.

Operators are plain ``numpy`` complex arrays of shape ``(dim, dim)``.  The
space they act on is described by a :class:`SpaceLayout`, an ordered list of
tensor factors with a system/environment split.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from . import constants as C
from .errors import DimensionMismatch, NonHermitianInput

__all__ = [
    "Factor",
    "SpaceLayout",
    "as_operator",
    "kron",
    "commutator",
    "is_hermitian",
    "hermitian_eigh",
    "expm_unitary",
    "expm_antihermitian",
    "partial_trace",
    "opnorm",
]


def _half_integer(j) -> Fraction:
    f = Fraction(j).limit_denominator(2)
    if f < 0 or abs(float(f) - float(j)) > 1e-12 or (2 * f).denominator != 1:
        raise ValueError(f"spin quantum number must be a non-negative half-integer, got {j!r}")
    return f


@dataclass(frozen=True)
class Factor:
    """One tensor factor of a layout.

    ``kind`` is ``"spin"`` (``param`` is a tuple of j values; several values
    mean a direct sum of multiplets, ordered as listed with m descending
    inside each), ``"fock"`` (``param`` is the truncation ``n_max``) or
    ``"level"`` (``param`` is the number of levels of a plain N-level system).
    """

    kind: str
    param: object

    def __post_init__(self):
        if self.kind == "spin":
            js = self.param if isinstance(self.param, (tuple, list)) else (self.param,)
            js = tuple(float(_half_integer(j)) for j in js)
            if not js:
                raise ValueError("spin factor needs at least one j")
            object.__setattr__(self, "param", js)
        elif self.kind == "fock":
            if int(self.param) != self.param or self.param < 0:
                raise ValueError("n_max must be a non-negative integer")
            object.__setattr__(self, "param", int(self.param))
        elif self.kind == "level":
            if int(self.param) != self.param or self.param < 1:
                raise ValueError("level count must be a positive integer")
            object.__setattr__(self, "param", int(self.param))
        else:
            raise ValueError(f"unknown factor kind {self.kind!r}")

    @classmethod
    def spin(cls, *js) -> "Factor":
        if len(js) == 1 and isinstance(js[0], (tuple, list)):
            js = tuple(js[0])
        return cls("spin", tuple(js))

    @classmethod
    def fock(cls, n_max: int) -> "Factor":
        return cls("fock", n_max)

    @classmethod
    def level(cls, n: int) -> "Factor":
        return cls("level", n)

    @property
    def dim(self) -> int:
        if self.kind == "spin":
            return int(sum(round(2 * j) + 1 for j in self.param))
        if self.kind == "fock":
            return self.param + 1
        return self.param

    def to_dict(self) -> dict:
        param = list(self.param) if self.kind == "spin" else self.param
        return {"kind": self.kind, "param": param}


@dataclass(frozen=True)
class SpaceLayout:
    factors: tuple
    system_indices: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        system = tuple(sorted(set(int(i) for i in self.system_indices)))
        if not factors:
            raise ValueError("layout needs at least one factor")
        if any(i < 0 or i >= len(factors) for i in system):
            raise ValueError("system index out of range")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "system_indices", system)

    @property
    def environment_indices(self) -> tuple:
        return tuple(i for i in range(len(self.factors)) if i not in self.system_indices)

    @property
    def dims(self) -> tuple:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def system_dim(self) -> int:
        return int(np.prod([self.dims[i] for i in self.system_indices]))

    @property
    def environment_dim(self) -> int:
        return int(np.prod([self.dims[i] for i in self.environment_indices]))

    def to_dict(self) -> dict:
        return {
            "factors": [f.to_dict() for f in self.factors],
            "system_indices": list(self.system_indices),
        }


def as_operator(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def kron(*ops) -> np.ndarray:
    """Kronecker product, ``kron(a, b)[i*db + k, j*db + l] = a[i, j] * b[k, l]``."""
    return reduce(np.kron, (as_operator(o) for o in ops))


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def _scale(a) -> float:
    return max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)


def is_hermitian(a, tol: float = C.HERMITIAN_TOL) -> bool:
    a = as_operator(a)
    return float(np.max(np.abs(a - a.conj().T))) <= tol * _scale(a)


def hermitian_eigh(h, tol: float = C.HERMITIAN_TOL, residual_tol: float = C.EIG_RESIDUAL_TOL):
    """Eigendecomposition ``h = V diag(w) V†`` with Hermiticity and residual checks."""
    h = as_operator(h)
    if not is_hermitian(h, tol):
        raise NonHermitianInput(
            f"max|h - h†| = {np.max(np.abs(h - h.conj().T)):.3e} exceeds tolerance")
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    residual = np.linalg.norm(h @ v - v * w, 2) if h.size else 0.0
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    if residual > residual_tol * scale:
        raise ArithmeticError(f"eigendecomposition residual {residual:.3e} too large")
    return w, v


def expm_unitary(h, t: float, tol: float = C.HERMITIAN_TOL) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` through its eigendecomposition."""
    w, v = hermitian_eigh(h, tol)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def expm_antihermitian(a, tol: float = C.HERMITIAN_TOL) -> np.ndarray:
    """``exp(a)`` for anti-Hermitian ``a`` (so the result is unitary)."""
    return expm_unitary(1j * as_operator(a), 1.0, tol)


def partial_trace(rho, layout: SpaceLayout, keep: str = "system") -> np.ndarray:
    """Trace out either the environment (``keep="system"``) or the system factors."""
    rho = as_operator(rho)
    if rho.shape[0] != layout.dim:
        raise DimensionMismatch(f"rho has dim {rho.shape[0]}, layout has dim {layout.dim}")
    if keep == "system":
        kept, traced = layout.system_indices, layout.environment_indices
    elif keep == "environment":
        kept, traced = layout.environment_indices, layout.system_indices
    else:
        raise ValueError("keep must be 'system' or 'environment'")
    dims = layout.dims
    n = len(dims)
    t = rho.reshape(dims + dims)
    perm = list(kept) + list(traced) + [n + i for i in kept] + [n + i for i in traced]
    dk = int(np.prod([dims[i] for i in kept]))
    dt = int(np.prod([dims[i] for i in traced]))
    t = t.transpose(perm).reshape(dk, dt, dk, dt)
    return np.trace(t, axis1=1, axis2=3)


def opnorm(a) -> float:
    """Spectral norm (largest singular value)."""
    a = as_operator(a)
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def frobenius(a) -> float:
    return float(np.linalg.norm(as_operator(a), "fro"))


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def projector(vec: Sequence[complex]) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1, 1)
    return v @ v.conj().T
