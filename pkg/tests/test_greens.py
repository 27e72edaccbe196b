import numpy as np
import pytest
from scipy.integrate import quad

from markovlab.errors import ConfigError, StepTooLarge, TailTooLarge
from markovlab.greens import (DeltaKernel, KernelTable, SpectralDensity, dissipation_matrix, kernel,
                              lorentzian_oracle, single_excitation_trajectory, solve_greens)


def test_flat_kernel_is_a_delta_marker():
    k = kernel(SpectralDensity.flat(0.3, 2), np.linspace(0, 1, 11))
    assert isinstance(k, DeltaKernel)
    assert np.allclose(k.j0, 0.3 * np.eye(2))


def test_zero_spectrum_gives_zero_kernel():
    k = kernel(SpectralDensity.lorentzian(0.0, 1.0), np.linspace(0, 1, 11))
    assert isinstance(k, KernelTable) and not np.any(k.values)


@pytest.mark.parametrize("s", [0.0, 0.4, 1.7])
def test_lorentzian_kernel_matches_quadrature(s):
    sp = SpectralDensity.lorentzian(0.7, 1.3, center=0.5)
    v = kernel(sp, [0.0, s]).values[-1, 0, 0] if s else kernel(sp, [0.0, 1.0]).values[0, 0, 0]
    # shift to u = ω - ω0; the profile is even in u, leaving a Fourier cosine integral
    prof = lambda u: sp(u + sp.center)[0, 0, 0].real
    if s:
        half = quad(prof, 0, np.inf, weight="cos", wvar=s)[0]
    else:
        half = quad(prof, 0, np.inf)[0]
    expect = np.exp(-1j * sp.center * s) * 2 * half / np.pi
    assert abs(v - expect) < 1e-8


def test_tabulated_kernel_matches_lorentzian():
    sp = SpectralDensity.lorentzian(0.5, 2.0)
    w = np.linspace(-4000, 4000, 400001)
    tab = SpectralDensity("tabulated", 1, table=(w, sp(w) * (np.abs(w) < 3999)[:, None, None]))
    lags = np.linspace(0, 1, 6)
    a = kernel(tab, lags).values[:, 0, 0]
    b = kernel(sp, lags).values[:, 0, 0]
    assert np.max(np.abs(a[1:] - b[1:])) < 1e-2


def test_tabulated_tail_check():
    w = np.linspace(-5, 5, 101)
    sp = SpectralDensity("tabulated", 1, table=(w, np.ones((101, 1, 1))))
    with pytest.raises(TailTooLarge):
        kernel(sp, [0.0, 0.1])


def test_tabulated_rejects_non_psd():
    w = np.linspace(-5, 5, 3)
    with pytest.raises(ConfigError):
        SpectralDensity("tabulated", 1, table=(w, -np.ones((3, 1, 1))))


def test_flat_path_is_analytic():
    e = np.array([1.0, 2.5])
    ts = np.linspace(0, 10, 41)
    sol = solve_greens(e, SpectralDensity.flat(0.2, 2), ts)
    expect = np.array([np.diag(np.exp(-1j * (e - 0.2j) * t)) for t in ts])
    assert np.max(np.abs(sol.g - expect)) < 1e-12
    assert np.max(np.abs(dissipation_matrix(sol) - 0.2 * np.eye(2))) < 1e-8


def test_zero_coupling_is_pure_phase():
    ts = np.linspace(0, 5, 51)
    sol = solve_greens([1.0, -0.5], SpectralDensity.lorentzian(0.0, 1.0, n=2), ts)
    assert np.allclose(np.abs(np.diagonal(sol.g, axis1=1, axis2=2)), 1.0, atol=1e-13)
    assert np.max(np.abs(sol.c)) < 1e-13


def test_lorentzian_matches_auxiliary_ode():
    sp = SpectralDensity.lorentzian(0.3, 1.0, center=0.5)
    ts = np.arange(0, 5 + 1e-9, 2.5e-4)
    sol = solve_greens([1.0], sp, ts)
    assert np.max(np.abs(sol.g[:, 0, 0] - lorentzian_oracle(1.0, sp, ts))) < 1e-7


def test_second_order_convergence():
    sp = SpectralDensity.lorentzian(0.3, 1.0, center=0.5)
    errs = []
    for h in (0.004, 0.002, 0.001):
        ts = np.arange(0, 4 + h / 2, h)
        errs.append(np.max(np.abs(solve_greens([1.0], sp, ts).g[:, 0, 0] - lorentzian_oracle(1.0, sp, ts))))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(slopes - 2) < 0.1)


def test_contractive_and_hermitian_dissipation():
    sp = SpectralDensity.lorentzian(0.4, 2.0, n=2)
    ts = np.linspace(0, 8, 801)
    sol = solve_greens([0.5, 1.5], sp, ts)
    assert np.allclose(sol.g[0], np.eye(2))
    assert sol.max_norm <= 1 + 1e-6
    c = sol.c
    assert np.max(np.abs(c - np.conj(np.transpose(c, (0, 2, 1))))) <= 1e-13


def test_lorentzian_approaches_flat_as_width_grows():
    # the error of the narrow-kernel approximation shrinks like 1/λ
    j0, e = 0.1, np.array([1.0])
    devs = []
    for lam in (20.0, 40.0, 80.0):
        h = 0.1 / lam
        ts = np.arange(0, 4 + h / 2, h)
        sol = solve_greens(e, SpectralDensity.lorentzian(j0, lam), ts)
        flat = np.exp(-1j * (e[0] - 1j * j0) * ts)
        devs.append(np.max(np.abs(sol.g[:, 0, 0] - flat)))
    ratios = np.array(devs[:-1]) / np.array(devs[1:])
    assert np.all(np.abs(ratios - 2) < 0.2)


def test_step_guard():
    with pytest.raises(StepTooLarge):
        solve_greens([10.0], SpectralDensity.lorentzian(0.1, 1.0), np.linspace(0, 10, 11))
    with pytest.raises(StepTooLarge):
        solve_greens([0.1], SpectralDensity.lorentzian(0.1, 100.0), np.linspace(0, 1, 101))


def test_grid_must_be_uniform_from_zero():
    sp = SpectralDensity.lorentzian(0.1, 1.0)
    with pytest.raises(ValueError):
        solve_greens([0.1], sp, [0.0, 0.01, 0.03])
    with pytest.raises(ValueError):
        solve_greens([0.1], sp, [0.5, 0.51, 0.52])


def test_sum_of_baths():
    ts = np.linspace(0, 5, 501)
    a = solve_greens([1.0], [SpectralDensity.flat(0.1), SpectralDensity.lorentzian(0.0, 1.0)], ts)
    assert np.allclose(a.g[:, 0, 0], np.exp(-(1j + 0.1) * ts), atol=1e-4)
    b = solve_greens([1.0], [SpectralDensity.lorentzian(0.1, 2.0), SpectralDensity.lorentzian(0.1, 2.0)], ts)
    c = solve_greens([1.0], SpectralDensity.lorentzian(0.2, 2.0), ts)
    assert np.allclose(b.g, c.g, atol=1e-14)


def test_single_excitation_trajectory_is_a_density():
    ts = np.linspace(0, 30, 61)
    sol = solve_greens([1.0, 2.0], SpectralDensity.flat(0.2, 2), ts)
    tr = single_excitation_trajectory(sol, [1, 1, 1j])
    tr.check_invariants()
    assert abs(tr.states[-1, 0, 1]) < abs(tr.states[0, 0, 1]) * np.exp(-0.2 * 30) * 1.0001


def test_spectral_dict_roundtrip():
    for sp in (SpectralDensity.flat(0.3), SpectralDensity.lorentzian(0.2, 3.0, 0.5)):
        assert SpectralDensity.from_dict(sp.to_dict(), sp.n) == sp
    with pytest.raises(ConfigError):
        SpectralDensity.from_dict({"kind": "flat", "j0": 0.1, "bogus": 1})
