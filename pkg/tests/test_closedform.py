import numpy as np
import pytest

from markovlab.closedform import (check_against_oracle, closedform_trajectory, model2_I_element,
                                  model3_E_polynomial, model3_omega, model3_rho, model4_M_element,
                                  model4_rho)
from markovlab.closedform.discrepancy import reference_trajectory
from markovlab.closedform.model1 import model1_rho_diag, projected_oracle_diag
from markovlab.closedform.model2 import environment_weights, model2_rho
from markovlab.evolution import propagate_oracle
from markovlab.models import build, default_params

TIMES = np.linspace(0, 10, 10)


def model2_low_fock(j):
    amps = np.ones(5) / np.sqrt(5)
    return build("model2", default_params("model2").with_(n_max=30, j_values=(j,),
                                                          system_amplitudes=tuple(amps)))


@pytest.mark.parametrize("j", [0.5, 1.0])
def test_model2_pinned_matches_oracle(j):
    rec = check_against_oracle(model2_low_fock(j), TIMES, "pinned", 1e-6, block=5)
    assert rec.passed, rec.error
    assert rec.max_deviation < 1e-11


def test_model2_printed_is_flagged():
    rec = check_against_oracle(model2_low_fock(0.5), TIMES, "printed", 1e-6, block=5)
    assert not rec.passed
    d = rec.to_dict()
    assert d["kind"] == "DISCREPANCY"
    assert len(d["max_deviation_per_time"]) == len(TIMES)


def test_model2_I_element_conjugate_relation():
    p = default_params("model2")
    for a, b in [(0, 0), (1, 2), (3, 1)]:
        lhs = model2_I_element(a, b, 0.5, p, 1.7, "+")
        rhs = np.conj(model2_I_element(b, a, 0.5, p, 1.7, "-"))
        assert lhs == pytest.approx(rhs, abs=1e-14)


def test_model2_weighted_variants_match_weighted_oracle():
    m = build("model2", default_params("model2").with_(j_values=(0.5, 1.0), n_max=16))
    for weighting in ("inverse-jhat", "inverse-jhat4"):
        rec = check_against_oracle(m, TIMES[:4], "pinned", 1e-6, block=4, weighting=weighting)
        assert rec.passed, (weighting, rec.max_deviation)


def test_environment_weights():
    js, w = environment_weights((0.5, 1.0), "inverse-jhat")
    assert js.tolist() == [0.5, 0.5, 1, 1, 1]
    assert np.allclose(w, [0.5, 0.5, 1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(environment_weights((0.5,), "inverse-jhat4")[1], [1 / 16, 1 / 16])


def test_model2_single_envelope_differs():
    p = default_params("model2")
    amps = np.array([1, 1]) / np.sqrt(2)
    a = model2_rho(p, amps, 2.0, envelope="per-element", n_out=3)
    b = model2_rho(p, amps, 2.0, envelope="single", n_out=3)
    assert np.max(np.abs(a - b)) > 1e-3


@pytest.mark.parametrize("j", [(0.5,), (1.0,), (0.5, 1.0)])
def test_model3_pinned_matches_oracle(j):
    m = build("model3", default_params("model3").with_(j_values=j))
    rec = check_against_oracle(m, TIMES, "pinned", 1e-6)
    assert rec.passed, rec.error
    assert rec.max_deviation < 1e-10


def test_model3_omega_properties():
    p = default_params("model3")
    assert model3_omega(p, 1.0, 0.5, 0.0).value == pytest.approx(1.0)
    r = model3_omega(p, 1.0, 1.0, 3.3)
    # equal j: Ω is the norm of the displaced vacuum
    assert r.value == pytest.approx(1.0, abs=1e-12)
    assert r.tail_bound <= 1e-10


def test_model3_E_polynomial_conjugate():
    p = default_params("model3")
    e = model3_E_polynomial(2, 1, 1.0, p, 0.9)
    assert model3_E_polynomial(2, 1, 1.0, p, 0.9, conjugated=True) == pytest.approx(np.conj(e))


def test_model3_inverse_sqrt_jhat_normalisation():
    p = default_params("model3")
    rho = model3_rho(p, None, 0.0, normalization="inverse-sqrt-jhat")
    assert rho[0, 0] == pytest.approx(0.5)
    assert rho[2, 2] == pytest.approx(1 / 3)


def test_model1_closed_form_matches_projection_and_reports_deficit():
    m = build("model1")
    for t in (0.0, 1.3, 4.0):
        r = model1_rho_diag(m, m.initial.system_rho, t)
        assert np.allclose(r.diag, projected_oracle_diag(m, t), atol=1e-13)
        assert r.trace_deficit == pytest.approx(1 - r.diag.sum())
    assert model1_rho_diag(m, m.initial.system_rho, 1.3).trace_deficit > 1e-3
    ren = model1_rho_diag(m, m.initial.system_rho, 1.3, renormalize=True)
    assert ren.diag.sum() == pytest.approx(1.0)


def test_model1_reference_is_projected():
    tr = reference_trajectory(build("model1"), [0.0, 1.0])
    assert tr.meta["path"] == "projected"


@pytest.mark.parametrize("tag", ["model4a", "model4b"])
def test_model4_pinned_matches_oracle(tag):
    m = build(tag)
    ts = np.linspace(0, 3, 7)
    rec = check_against_oracle(m, ts, "pinned", 1e-10)
    assert rec.passed


def test_model4_M_elements_sum_to_rho():
    m = build("model4a", default_params("model4a").with_(n_max=16, env_amplitude=0.8))
    t = 1.1
    d = m.extras["h_e_env"].shape[0]
    total = sum(model4_M_element(0, 1, g, gp, m, t) for g in range(d) for gp in range(d))
    assert total == pytest.approx(model4_rho(m, t)[0, 1], abs=1e-12)


@pytest.mark.parametrize("tag", ["model4a", "model4b"])
def test_model4_printed_is_flagged(tag):
    rec = check_against_oracle(build(tag), np.linspace(0, 3, 7), "printed", 1e-6)
    assert not rec.passed and rec.max_deviation > 1e-3


def test_closedform_trajectory_model1_literal():
    tr = closedform_trajectory(build("model1"), [0.0, 2.0])
    assert tr.meta["mode"] == "literal-diagonal"
    assert len(tr.meta["trace_deficit"]) == 2


def test_printed_failures_are_recorded_not_raised():
    m = build("model2")
    rec = check_against_oracle(m, np.linspace(0, 10, 10), "printed")
    assert not rec.passed
    if rec.error:
        assert rec.notes["failed_times"]
