import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from markovlab.evolution import propagate_oracle
from markovlab.models import build, default_params
from markovlab.zassenhaus import (ConvergenceWarning, convergence_time, split_model, zassenhaus_product,
                                  zassenhaus_propagator, zassenhaus_terms, zassenhaus_trajectory)

from conftest import random_hermitian


def _pair(seed, n=4):
    rng = np.random.default_rng(seed)
    return -1j * random_hermitian(rng, n), -1j * random_hermitian(rng, n)


def empirical_order(order, form="standard", seed=3):
    x, y = _pair(seed)
    ss = np.array([0.02, 0.01, 0.005])
    errs = [np.linalg.norm(zassenhaus_product(s * x, s * y, order, form) - expm(s * (x + y)), 2) for s in ss]
    return np.polyfit(np.log(ss), np.log(errs), 1)[0]


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_convergence_order(k):
    assert empirical_order(k) >= k + 0.8


def test_printed_fourth_term_loses_an_order():
    assert empirical_order(4, "printed") < 3.5


@given(st.integers(0, 10_000))
def test_recursion_reproduces_closed_forms(seed):
    x, y = _pair(seed, 3)
    std = zassenhaus_terms(x, y, 4, "standard").terms
    rec = zassenhaus_terms(x, y, 4, "recursive").terms
    for a, b in zip(std, rec):
        assert np.max(np.abs(a - b)) <= 1e-11 * max(1.0, np.max(np.abs(a)))


def test_second_term_is_commutator():
    x, y = _pair(1)
    assert np.allclose(zassenhaus_terms(x, y, 2).term(2), x @ y - y @ x)


def test_commuting_inputs_exact_at_order_two():
    d1, d2 = np.diag([0.3, -1.0, 2.0]), np.diag([1.5, 0.2, -0.7])
    v = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))[0]
    x, y = -1j * v @ d1 @ v.T, -1j * v @ d2 @ v.T
    assert np.max(np.abs(zassenhaus_product(x, y, 2) - expm(x + y))) < 1e-12


def test_central_commutator_exact_at_order_two():
    x = np.zeros((3, 3), complex)
    y = np.zeros((3, 3), complex)
    x[0, 1], y[1, 2] = 0.7, -1.3
    assert np.max(np.abs(zassenhaus_product(x, y, 2) - expm(x + y))) < 1e-12


@given(st.integers(2, 8), st.integers(0, 1000), st.floats(0.01, 3.0))
def test_truncated_products_are_unitary(order, seed, s):
    x, y = _pair(seed, 3)
    u = zassenhaus_product(s * x, s * y, order)
    assert np.max(np.abs(u @ u.conj().T - np.eye(3))) < 1e-12


def test_order_bounds():
    x, y = _pair(0)
    with pytest.raises(ValueError):
        zassenhaus_terms(x, y, 1)
    with pytest.raises(ValueError):
        zassenhaus_terms(x, y, 9)


def test_convergence_time():
    assert convergence_time(np.zeros((2, 2)), np.zeros((2, 2))) == math.inf
    assert convergence_time(np.eye(2), np.eye(2)) == pytest.approx(math.log(2) / 4)


def test_warns_beyond_convergence_time():
    x, y = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    with pytest.warns(ConvergenceWarning):
        zassenhaus_propagator(x, y, 2, 5.0, t_max=0.1)


def test_environment_split_exact_for_model2():
    m = build("model2", default_params("model2").with_(n_max=10))
    ts = np.linspace(0, 5, 6)
    ref = propagate_oracle(m, ts, check_truncation=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        z = zassenhaus_trajectory(m, ts, 2, split="environment")
    assert np.max(np.abs(z.states - ref.states)) < 1e-12
    hx, hy = split_model(m, "free")
    assert np.allclose(hx + hy, m.h)


def test_free_split_improves_with_order_at_short_times():
    m = build("model3", default_params("model3").with_(n_max=10))
    ts = np.linspace(0, 0.1, 3)
    ref = propagate_oracle(m, ts, check_truncation=False)
    errs = [np.max(np.abs(zassenhaus_trajectory(m, ts, k, warn=False).states - ref.states)) for k in (2, 3, 4)]
    assert errs[0] > errs[1] > errs[2]
