"""Angular-momentum and boson operators on single factors, and their embedding.

Spin bases are ordered |j, m> with m descending; a spin factor holding several
multiplets is the direct sum in the order the j values are listed.  Fock bases
are ordered n = 0 .. n_max.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .linalg import Factor, SpaceLayout, as_operator, kron

__all__ = [
    "spin_m_values",
    "spin_j_labels",
    "jz",
    "jplus",
    "jminus",
    "jsquared",
    "boson_annihilate",
    "boson_create",
    "number",
    "position",
    "momentum",
    "embed",
]


def _as_factor(f, kind: str) -> Factor:
    if isinstance(f, Factor):
        if f.kind != kind:
            raise ValueError(f"expected a {kind} factor, got {f.kind}")
        return f
    return Factor(kind, f)


def spin_m_values(s) -> np.ndarray:
    """m label of every basis state of a spin factor."""
    s = _as_factor(s, "spin")
    out = []
    for j in s.param:
        n = int(round(2 * j)) + 1
        out.extend(j - k for k in range(n))
    return np.array(out, dtype=float)


def spin_j_labels(s) -> np.ndarray:
    """j label of every basis state of a spin factor."""
    s = _as_factor(s, "spin")
    out = []
    for j in s.param:
        out.extend([j] * (int(round(2 * j)) + 1))
    return np.array(out, dtype=float)


def _block_diag(blocks) -> np.ndarray:
    dim = sum(b.shape[0] for b in blocks)
    out = np.zeros((dim, dim), dtype=complex)
    k = 0
    for b in blocks:
        n = b.shape[0]
        out[k:k + n, k:k + n] = b
        k += n
    return out


def _jplus_single(j: float) -> np.ndarray:
    n = int(round(2 * j)) + 1
    m = j - np.arange(n)
    out = np.zeros((n, n), dtype=complex)
    # column k holds |j, m_k>, row k-1 holds |j, m_k + 1>
    for k in range(1, n):
        out[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    return out


def jz(s) -> np.ndarray:
    return np.diag(spin_m_values(s)).astype(complex)


def jplus(s) -> np.ndarray:
    s = _as_factor(s, "spin")
    return _block_diag([_jplus_single(j) for j in s.param])


def jminus(s) -> np.ndarray:
    return jplus(s).conj().T


def jsquared(s) -> np.ndarray:
    j = spin_j_labels(s)
    return np.diag(j * (j + 1)).astype(complex)


def boson_annihilate(f) -> np.ndarray:
    f = _as_factor(f, "fock")
    return np.diag(np.sqrt(np.arange(1, f.param + 1)), 1).astype(complex)


def boson_create(f) -> np.ndarray:
    return boson_annihilate(f).conj().T


def number(f) -> np.ndarray:
    f = _as_factor(f, "fock")
    return np.diag(np.arange(f.param + 1)).astype(complex)


def position(f) -> np.ndarray:
    """x = (a + a†)/√2 on a truncated Fock factor."""
    a = boson_annihilate(f)
    return (a + a.conj().T) / np.sqrt(2.0)


def momentum(f) -> np.ndarray:
    """p = i(a† − a)/√2, so that [x, p] = i away from the truncation edge."""
    a = boson_annihilate(f)
    return 1j * (a.conj().T - a) / np.sqrt(2.0)


def embed(op, position: int, layout: SpaceLayout) -> np.ndarray:
    """I ⊗ … ⊗ op ⊗ … ⊗ I with ``op`` placed on factor ``position``."""
    op = as_operator(op)
    if not 0 <= position < len(layout.factors):
        raise DimensionMismatch(f"factor position {position} out of range")
    d = layout.dims[position]
    if op.shape[0] != d:
        raise DimensionMismatch(f"operator dim {op.shape[0]} != factor dim {d}")
    parts = [op if k == position else np.eye(dk, dtype=complex) for k, dk in enumerate(layout.dims)]
    return kron(*parts)
