"""Matrix elements of the linearly driven oscillator exp(-it(w a†a + g(a† + a))).

Two readings are provided.

``exact``: the element that the oscillator actually has,

    <r|U|c> = e^{-iwtr} e^{iφ} e^{Ψ + i d1 d2} S(r, c),
    d1 = g sin(wt)/w,  d2 = g (1 - cos wt)/w,  Ψ = -(d1² + d2²)/2,
    φ = (g/w)² (wt - sin wt),

with S the ladder sum at x1 = y1 = -i d1, x2 = d2, y2 = -d2 and the exact
weights.  It reduces to δ_rc e^{-iwtr} as g -> 0 and to δ_rc at t = 0.

``printed``: the literal combinatorial form with weights r! c! (m!)², a
single e^{∓iwt} prefactor, d2 = w (1 - cos gt)/g and Ψ built from that d2.
It is kept so that its deviation from the oracle can be reported.
"""

from __future__ import annotations

import cmath
import math

from .series import ladder_sum

READINGS = ("pinned", "printed")


def sin_over(w: float, t: float) -> float:
    """sin(wt)/w, continuous at w = 0."""
    x = w * t
    if abs(x) < 1e-4:
        return t * (1 - x * x / 6 + x ** 4 / 120)
    return math.sin(x) / w


def one_minus_cos_over(w: float, t: float) -> float:
    """(1 - cos wt)/w, continuous at w = 0."""
    x = w * t
    if abs(x) < 1e-4:
        return t * x / 2 * (1 - x * x / 12)
    return 2 * math.sin(x / 2) ** 2 / w


def phase_phi(w: float, g: float, t: float) -> float:
    """(g/w)² (wt - sin wt), continuous at w = 0."""
    x = w * t
    if abs(x) < 1e-3:
        return g * g * t * t * x / 6 * (1 - x * x / 20)
    return g * g * (x - math.sin(x)) / (w * w)


def intermediates(w: float, g: float, t: float, reading: str = "pinned"):
    """(d1, d2, Ψ) for the given reading."""
    d1 = g * sin_over(w, t)
    if reading == "pinned":
        d2 = g * one_minus_cos_over(w, t)
    elif reading == "printed":
        d2 = w * one_minus_cos_over(g, t)
    else:
        raise ValueError(f"reading must be one of {READINGS}")
    return d1, d2, -(d1 * d1 + d2 * d2) / 2


def exact_element(r: int, c: int, w: float, g: float, t: float, **kw) -> complex:
    """<r| exp(-it(w a†a + g(a† + a))) |c>."""
    d1, d2, psi = intermediates(w, g, t, "pinned")
    pref = cmath.exp(-1j * w * t * r + 1j * phase_phi(w, g, t) + psi + 1j * d1 * d2)
    s = ladder_sum(r, c, -1j * d1, -1j * d1, d2, -d2, "exact", scale=abs(pref), **kw)
    return pref * s.value


def printed_element(r: int, c: int, w: float, g: float, t: float, conjugate: bool = False,
                    d2_on_l: bool = False, **kw) -> complex:
    """Literal combinatorial form; ``conjugate`` flips the signs of i as printed for U†.

    ``d2_on_l`` reproduces the exponent pattern n + p₃ - p₄ of the printed
    conjugate element, i.e. an extra d2^l on every term.
    """
    d1, d2, psi = intermediates(w, g, t, "printed")
    s_i = 1j if conjugate else -1j
    pref = cmath.exp(s_i * w * t + psi)
    s = ladder_sum(r, c, s_i * d1, s_i * d1, d2, -d2, "printed", scale=abs(pref),
                   l_factor=d2 if d2_on_l else 1.0, **kw)
    return pref * s.value
