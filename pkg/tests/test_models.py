import numpy as np
import pytest

from markovlab.errors import CommutationViolation, ConfigError, TruncationTooSmall
from markovlab.linalg import commutator, is_hermitian, opnorm
from markovlab.models import (TAGS, ModelParams, build, build_model4, coherent_vector, default_params,
                              excitation_number, model3_default_amplitudes)


@pytest.mark.parametrize("tag", [t for t in TAGS if t != "model5"])
def test_default_models_are_hermitian_and_normalised(tag):
    m = build(tag)
    assert is_hermitian(m.h)
    assert np.trace(m.initial.system_rho).real == pytest.approx(1.0)
    assert np.trace(m.initial.env_rho).real == pytest.approx(1.0)
    assert m.h.shape[0] == m.layout.dim


def test_model1_conserves_excitations():
    m = build("model1")
    n = excitation_number(m)
    assert opnorm(commutator(m.h, n)) < 1e-12


def test_model1_rejects_two_spins():
    with pytest.raises(ConfigError):
        build("model1", default_params("model1").with_(j_values=(0.5, 1.0)))


def test_model2_truncation_guard():
    with pytest.raises(TruncationTooSmall):
        build("model2", default_params("model2").with_(n_max=4, j_values=(1.0,)))


def test_model2_operators_commute():
    m = build("model2")
    assert opnorm(commutator(m.h_e, m.h_se)) < 1e-12


def test_model3_default_amplitudes():
    c = model3_default_amplitudes((0.5, 1.0))
    assert np.nonzero(c)[0].tolist() == [0, 2]
    single = model3_default_amplitudes((1.0,))
    assert np.ptp(np.abs(single)) == 0
    built = build("model3").initial.system_amplitudes
    assert np.allclose(np.abs(built) ** 2, [0.5, 0, 0.5, 0, 0])


def test_model4a_requires_commuting_family():
    p = default_params("model4a")
    m = build("model4b")
    with pytest.raises(CommutationViolation):
        build_model4(p, "a", m.extras["h_e_env"], m.extras["h_se_family"])


def test_model4_top_quarter_guard():
    with pytest.raises(TruncationTooSmall):
        build("model4a", default_params("model4a").with_(env_amplitude=5.0, n_max=30))


def test_coherent_vector_statistics():
    v = coherent_vector(1.5, 40)
    n = np.arange(41)
    assert np.sum(n * np.abs(v) ** 2) == pytest.approx(2.25, rel=1e-12)


def test_params_validation():
    with pytest.raises(ConfigError):
        ModelParams(kappa=0.5)
    with pytest.raises(ConfigError):
        ModelParams(system_state="weird")
    with pytest.raises(ConfigError):
        ModelParams(eta=float("nan"))


def test_amplitudes_are_padded_and_normalised():
    m = build("model2", default_params("model2").with_(system_amplitudes=(1, 1j, 1)))
    c = m.initial.system_amplitudes
    assert c.size == 13
    assert np.allclose(c[:3], np.array([1, 1j, 1]) / np.sqrt(3))


def test_model5_has_no_tensor_space():
    m = build("model5")
    assert m.layout is None
    assert m.extras["spectral"].kind == "flat"
