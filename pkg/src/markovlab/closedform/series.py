"""Evaluator for the triple sums that arise from normal-ordered displacement products.

Both the oscillator-system and the spin-system closed forms reduce to

    S(r, c) = Σ_{k ≤ r, l ≤ c, m ≥ max(k, l)} x1^{r-k} y1^{m-k} x2^{m-l} y2^{c-l} W(r, c, k, l, m)

which is the matrix element <r| e^{x1 a†} e^{y1 a} e^{x2 a†} e^{y2 a} |c> up to
the weight convention.  The index ranges follow from requiring every
factorial argument to be non-negative; the m index is unbounded above, so the
sum is infinite and is truncated with an explicit ratio-test tail bound.

Terms are formed in log-magnitude/phase form (so large factorials never
overflow), sorted by descending magnitude and summed with ``math.fsum`` on
real and imaginary parts separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .. import constants as C
from ..errors import IndexOverflow, SeriesDivergence, TailTooLarge

WEIGHTS = ("exact", "printed")


@dataclass(frozen=True)
class SeriesResult:
    value: complex
    tail_bound: float
    n_terms: int
    m_max: int


def _lf(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def _log_weight(r, c, k, l, m, weight):
    if weight == "exact":
        # sqrt(r! c!) m! / (k! l! (r-k)! (m-k)! (m-l)! (c-l)!)
        return (0.5 * (_lf(r) + _lf(c)) + _lf(m) - _lf(k) - _lf(l)
                - _lf(r - k) - _lf(m - k) - _lf(m - l) - _lf(c - l))
    # r! c! (m!)^2 / ((r-k)! (m-k)! (m-l)! (c-l)!)
    return (_lf(r) + _lf(c) + 2 * _lf(m)
            - _lf(r - k) - _lf(m - k) - _lf(m - l) - _lf(c - l))


def _ratio_bound(weight, x, k, l):
    """Upper bound on the m -> m+1 weight ratio for all m + 1 >= x (x > max(k, l))."""
    if weight == "exact":
        return x / ((x - k) * (x - l))
    return x * x / ((x - k) * (x - l))


def _logpow(logabs: float, e):
    """log|z|^e with the convention 0^0 = 1."""
    e = np.asarray(e, dtype=float)
    if np.isneginf(logabs):
        return np.where(e == 0, 0.0, -np.inf)
    return e * logabs


def _polar(z: complex):
    return (math.log(abs(z)) if z != 0 else -math.inf), (math.atan2(z.imag, z.real) if z != 0 else 0.0)


def compensated_sum(terms) -> complex:
    """Sum complex terms in order of descending magnitude with fsum on each part."""
    terms = np.asarray(terms, dtype=complex).ravel()
    if terms.size == 0:
        return 0j
    order = np.argsort(-np.abs(terms), kind="stable")
    t = terms[order]
    return complex(math.fsum(t.real), math.fsum(t.imag))


def ladder_sum(r: int, c: int, x1: complex, y1: complex, x2: complex, y2: complex,
               weight: str = "exact", scale: float = 1.0, tol: float = C.SERIES_TAIL_TOL,
               max_index: int = C.MAX_SERIES_INDEX, l_factor: complex = 1.0) -> SeriesResult:
    """Evaluate S(r, c) so that ``scale * tail`` stays below ``tol``.

    ``scale`` is the magnitude of any prefactor the caller multiplies the
    sum by, so the tail criterion applies to the final quantity.
    ``l_factor`` multiplies each term by ``l_factor**l`` (used to reproduce a
    variant exponent pattern; 1 leaves the sum unchanged).
    """
    if weight not in WEIGHTS:
        raise ValueError(f"weight must be one of {WEIGHTS}")
    if r < 0 or c < 0:
        raise ValueError("indices must be non-negative")
    if r > max_index or c > max_index:
        raise IndexOverflow(f"index {max(r, c)} exceeds factorial table limit {max_index}")
    lx1, px1 = _polar(complex(x1))
    ly1, py1 = _polar(complex(y1))
    lx2, px2 = _polar(complex(x2))
    ly2, py2 = _polar(complex(y2))
    llf, plf = _polar(complex(l_factor))
    q0 = abs(complex(y1) * complex(x2))
    pairs = [(k, l) for k in range(r + 1) for l in range(c + 1)]
    per_pair_tol = tol / max(scale, 1e-300) / len(pairs)
    chunks = []
    tail_total = 0.0
    m_hi = 0
    for k, l in pairs:
        m0 = max(k, l)
        m_end = m0 + 16
        while True:
            if m_end > max_index + 1:
                q = q0 * _ratio_bound(weight, max_index + 1, k, l)
                if q >= 1:
                    raise SeriesDivergence(
                        f"ratio bound {q:.3g} >= 1: series diverges (|y1 x2| = {q0:.3g})")
                raise TailTooLarge(f"tail not below {tol:g} within index {max_index}")
            m = np.arange(m0, m_end)
            logt = (_logpow(lx1, r - k) + _logpow(ly1, m - k) + _logpow(lx2, m - l)
                    + _logpow(ly2, c - l) + _logpow(llf, l) + _log_weight(r, c, k, l, m, weight))
            if q0 == 0:
                tail = 0.0
                break
            q = q0 * _ratio_bound(weight, m_end, k, l)
            if q < 1:
                tail = math.exp(logt[-1]) * q / (1 - q) if np.isfinite(logt[-1]) else 0.0
                if tail <= per_pair_tol:
                    break
            m_end = m0 + 2 * (m_end - m0)
        phase = ((r - k) * px1 + (m - k) * py1 + (m - l) * px2 + (c - l) * py2 + l * plf)
        finite = np.isfinite(logt)
        chunks.append(np.exp(logt[finite]) * np.exp(1j * phase[finite]))
        tail_total += tail
        m_hi = max(m_hi, int(m[-1]))
    terms = np.concatenate(chunks) if chunks else np.zeros(0, complex)
    return SeriesResult(compensated_sum(terms), tail_total, int(terms.size), m_hi)


def ladder_sum_bruteforce(r, c, x1, y1, x2, y2, weight="exact", box: int = 60,
                          l_factor: complex = 1.0) -> complex:
    """Direct triple loop over a fixed index box with exact factorials (test oracle)."""
    f = math.factorial
    s = 0j
    for k in range(r + 1):
        for l in range(c + 1):
            for m in range(max(k, l), box):
                if weight == "exact":
                    w = math.sqrt(f(r) * f(c)) * f(m) / (f(k) * f(l) * f(r - k) * f(m - k) * f(m - l) * f(c - l))
                else:
                    w = f(r) * f(c) * f(m) ** 2 / (f(r - k) * f(m - k) * f(m - l) * f(c - l))
                s += x1 ** (r - k) * y1 ** (m - k) * x2 ** (m - l) * y2 ** (c - l) * l_factor ** l * w
    return s
