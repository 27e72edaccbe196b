import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from markovlab.closedform.oscillator import (exact_element, intermediates, one_minus_cos_over,
                                             phase_phi, printed_element, sin_over)
from markovlab.closedform.series import compensated_sum, ladder_sum, ladder_sum_bruteforce
from markovlab.errors import IndexOverflow, SeriesDivergence
from markovlab.linalg import Factor
from markovlab import operators as ops

small = st.floats(-0.6, 0.6)


@given(st.integers(0, 4), st.integers(0, 4), small, small, small, small)
def test_ladder_sum_matches_bruteforce(r, c, a, b, x, y):
    s = ladder_sum(r, c, a, 1j * b, x, y)
    ref = ladder_sum_bruteforce(r, c, a, 1j * b, x, y, box=60)
    assert abs(s.value - ref) <= 1e-10 * max(1.0, abs(ref))
    assert s.tail_bound < 1e-10


@pytest.mark.parametrize("r,c", [(0, 0), (1, 2), (3, 1)])
def test_printed_weights_match_bruteforce(r, c):
    s = ladder_sum(r, c, 0.2, -0.3j, 0.25, -0.1, weight="printed")
    ref = ladder_sum_bruteforce(r, c, 0.2, -0.3j, 0.25, -0.1, weight="printed", box=80)
    assert s.value == pytest.approx(ref, rel=1e-10)


def test_ladder_sum_index_limit():
    with pytest.raises(IndexOverflow):
        ladder_sum(401, 0, 0.1, 0.1, 0.1, 0.1)


def test_ladder_sum_divergence_detected():
    with pytest.raises(SeriesDivergence):
        ladder_sum(0, 0, 0.1, 1.1, 1.1, 0.1, weight="printed")


def test_compensated_sum_cancellation():
    terms = [1e16, 1.0, -1e16, 1j, -1j * 1e16, 1j * 1e16]
    assert compensated_sum(terms) == 1 + 1j


def test_small_argument_branches_are_continuous():
    for f in (sin_over, one_minus_cos_over):
        # the series branch switches at wt = 1e-4
        assert f(0.99999e-4, 1.0) == pytest.approx(f(1.00001e-4, 1.0), rel=1e-4)
    assert phase_phi(1e-5, 0.3, 2.0) == pytest.approx(0.09 * 8 * 1e-5 / 6, rel=1e-6)
    assert sin_over(0.0, 3.0) == 3.0


def _oscillator(w, g, n_max=60):
    f = Factor.fock(n_max)
    a = ops.boson_annihilate(f)
    return w * ops.number(f) + g * (a + a.conj().T)


@pytest.mark.parametrize("w,g,t", [(1.0, 0.3, 0.7), (1.0, 0.8, 2.2), (0.5, 0.2, 5.0), (1.3, 0.0, 1.0)])
def test_exact_element_matches_expm(w, g, t):
    u = expm(-1j * t * _oscillator(w, g))
    for r in range(5):
        for c in range(5):
            assert abs(exact_element(r, c, w, g, t) - u[r, c]) < 1e-11


def test_exact_element_limits():
    assert exact_element(2, 2, 1.0, 0.5, 0.0) == pytest.approx(1.0)
    assert exact_element(3, 3, 0.7, 0.0, 2.0) == pytest.approx(np.exp(-0.7j * 2.0 * 3))
    assert abs(exact_element(1, 3, 0.7, 0.0, 2.0)) == 0


@pytest.mark.parametrize("n", range(5))
def test_printed_element_at_zero_time(n):
    # all exponents vanish at t = 0 except the k = l = m = n term with weight (n!)^4
    assert printed_element(n, n, 1.0, 0.4, 0.0) == pytest.approx(math.factorial(n) ** 4)


def test_printed_conjugate_with_l_exponent_vanishes_at_zero():
    assert printed_element(1, 1, 1.0, 0.4, 0.0, conjugate=True, d2_on_l=True) == 0
    assert printed_element(0, 0, 1.0, 0.4, 0.0, conjugate=True, d2_on_l=True) == 1


def test_printed_d2_uses_swapped_frequencies():
    _, d2p, _ = intermediates(1.0, 0.4, 2.0, "pinned")
    _, d2r, _ = intermediates(1.0, 0.4, 2.0, "printed")
    assert d2p == pytest.approx(0.4 * (1 - math.cos(2.0)))
    assert d2r == pytest.approx((1 - math.cos(0.8)) / 0.4)
