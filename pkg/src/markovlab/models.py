"""The five model Hamiltonians as concrete (H_S, H_E, H_SE, layout, initial state) bundles.

Every builder returns a :class:`ModelInstance` whose operators are embedded in
the full tensor space.  The system always sits on factor 0 and the
environment on factor 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from . import constants as C
from . import operators as ops
from .errors import CommutationViolation, ConfigError, TruncationTooSmall
from .linalg import Factor, SpaceLayout, commutator, is_hermitian, kron, opnorm, projector
from .operators import embed

TAGS = ("model1", "model2", "model3", "model4a", "model4b", "model5")

ENV_WEIGHTINGS = ("pure-uniform", "mixed")


@dataclass(frozen=True)
class ModelParams:
    """Parameter set shared by all models; each model reads only what it needs.

    ``energies``, ``eta_branches`` and ``env_amplitude`` belong to the
    measurement model (system level energies, per-level coupling and the
    coherent-state label of the initial environment).  ``e_s`` and
    ``spectral`` belong to the Green's-function model.
    """

    omega_s: float = 1.0
    omega: float = 1.0
    beta: float = 1.0
    eta: float = 0.4
    kappa: float = 0.0
    j_values: tuple = (0.5,)
    n_max: int = 12
    alpha0: int = 1
    system_amplitudes: Optional[tuple] = None
    system_state: str = "pure"
    env_weighting: str = "pure-uniform"
    energies: tuple = (0.0, 1.0)
    eta_branches: tuple = (0.3, 0.7)
    env_amplitude: float = 0.0
    e_s: tuple = (1.0,)
    spectral: dict = field(default_factory=lambda: {"kind": "flat", "j0": 0.1})

    def __post_init__(self):
        for name in ("omega_s", "omega", "beta", "eta", "kappa", "env_amplitude"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ConfigError(f"{name} must be finite")
        if self.kappa > 0:
            raise ConfigError("kappa must be <= 0")
        object.__setattr__(self, "j_values", tuple(float(j) for j in self.j_values))
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))
        object.__setattr__(self, "eta_branches", tuple(float(e) for e in self.eta_branches))
        object.__setattr__(self, "e_s", tuple(float(e) for e in self.e_s))
        if self.system_amplitudes is not None:
            object.__setattr__(self, "system_amplitudes",
                               tuple(complex(c) for c in self.system_amplitudes))
        if self.system_state not in ("pure", "incoherent"):
            raise ConfigError("system_state must be 'pure' or 'incoherent'")
        if self.env_weighting not in ENV_WEIGHTINGS:
            raise ConfigError(f"env_weighting must be one of {ENV_WEIGHTINGS}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ConfigError("n_max must be a non-negative integer")
        if int(self.alpha0) != self.alpha0 or self.alpha0 < 0:
            raise ConfigError("alpha0 must be a non-negative integer")
        if not self.j_values:
            raise ConfigError("j_values must not be empty")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = [_plain(x) for x in v]
            elif isinstance(v, dict):
                v = dict(v)
            out[f.name] = v
        return out

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)


def _plain(x):
    if isinstance(x, complex):
        return x.real if x.imag == 0 else [x.real, x.imag]
    return x


@dataclass(frozen=True)
class InitialState:
    """Initial system amplitudes (or density) and environment density.

    ``system_rho`` is always populated; ``system_amplitudes`` is ``None`` for
    mixed system states.  ``env_vector`` is ``None`` when the environment
    density is not pure.
    """

    system_rho: np.ndarray
    env_rho: np.ndarray
    system_amplitudes: Optional[np.ndarray] = None
    env_vector: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.system_amplitudes is not None:
            c = np.asarray(self.system_amplitudes, dtype=complex)
            if abs(np.vdot(c, c).real - 1.0) > C.NORMALIZATION_TOL:
                raise ValueError("system amplitudes are not normalised")
        if abs(np.trace(self.system_rho).real - 1.0) > C.NORMALIZATION_TOL:
            raise ValueError("system density does not have unit trace")
        if self.env_vector is not None:
            rho = self.env_rho
            if np.max(np.abs(rho @ rho - rho)) > C.IDEMPOTENCY_TOL:
                raise ValueError("environment density built from a pure state is not idempotent")

    @property
    def env_is_pure(self) -> bool:
        rho = self.env_rho
        return bool(np.max(np.abs(rho @ rho - rho)) <= C.IDEMPOTENCY_TOL)


@dataclass(frozen=True)
class ModelInstance:
    tag: str
    params: ModelParams
    layout: Optional[SpaceLayout]
    h_s: Optional[np.ndarray]
    h_e: Optional[np.ndarray]
    h_se: Optional[np.ndarray]
    initial: Optional[InitialState]
    extras: dict = field(default_factory=dict)

    @property
    def h(self) -> np.ndarray:
        return self.h_s + self.h_e + self.h_se

    @property
    def system_dim(self) -> int:
        return self.layout.system_dim

    @property
    def environment_dim(self) -> int:
        return self.layout.environment_dim


def default_params(tag: str) -> ModelParams:
    """Configuration defaults for each model tag."""
    if tag == "model1":
        return ModelParams(omega_s=1.0, beta=1.0, eta=1.0, j_values=(0.5,), n_max=12,
                           alpha0=1, system_state="incoherent")
    if tag == "model2":
        return ModelParams(omega_s=1.0, omega=1.0, eta=0.4, j_values=(0.5,), n_max=12)
    if tag == "model3":
        return ModelParams(omega=1.0, beta=1.0, eta=0.4, j_values=(0.5, 1.0), n_max=20)
    if tag == "model4a":
        return ModelParams(beta=1.0, n_max=40, energies=(0.0, 1.0), eta_branches=(0.3, 0.7),
                           env_amplitude=1.5)
    if tag == "model4b":
        return ModelParams(beta=1.0, n_max=40, energies=(0.0, 1.0), eta_branches=(0.3, 0.7),
                           env_amplitude=0.0)
    if tag == "model5":
        return ModelParams(e_s=(1.0,), spectral={"kind": "flat", "j0": 0.1})
    raise ConfigError(f"unknown model tag {tag!r}")


# ---------------------------------------------------------------- helpers

def _normalised(c) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    n = np.sqrt(np.vdot(c, c).real)
    if n == 0:
        raise ConfigError("system amplitudes must not all vanish")
    return c / n


def _system_state(params: ModelParams, default: np.ndarray, dim: int):
    c = default if params.system_amplitudes is None else np.asarray(params.system_amplitudes)
    if len(c) > dim:
        raise ConfigError(f"expected at most {dim} system amplitudes, got {len(c)}")
    # shorter lists are padded with zeros (Fock systems)
    c = np.concatenate([np.asarray(c, dtype=complex), np.zeros(dim - len(c), dtype=complex)])
    c = _normalised(c)
    if params.system_state == "incoherent":
        return np.diag(np.abs(c) ** 2).astype(complex), None
    return projector(c), c


def truncation_guard(n_max: int, occupation: int, j_max: float) -> None:
    need = occupation + 2 * int(round(2 * j_max)) + C.TRUNCATION_SAFETY
    if n_max < need:
        raise TruncationTooSmall(f"n_max={n_max} below required {need}")


def coherent_vector(z: complex, n_max: int) -> np.ndarray:
    """Truncated (and renormalised) coherent state |z>."""
    n = np.arange(n_max + 1)
    logmag = n * np.log(abs(z)) - 0.5 * gammaln(n + 1) if z != 0 else np.where(n == 0, 0.0, -np.inf)
    v = np.exp(logmag) * np.exp(1j * np.angle(z) * n)
    return v / np.linalg.norm(v)


def fock_vector(n: int, n_max: int) -> np.ndarray:
    v = np.zeros(n_max + 1, dtype=complex)
    v[n] = 1.0
    return v


def _check_hermitian(inst: ModelInstance) -> ModelInstance:
    if not is_hermitian(inst.h):
        raise ValueError("total Hamiltonian is not Hermitian")
    return inst


# ---------------------------------------------------------------- builders

def build_model1(params: ModelParams) -> ModelInstance:
    """Spin in a ladder coupling with one boson mode: ω_S Jz + β a†a + η(a†J₋ + aJ₊)."""
    if len(params.j_values) != 1:
        raise ConfigError("model1 takes exactly one j value")
    j = params.j_values[0]
    if params.alpha0 > params.n_max:
        raise ConfigError("alpha0 exceeds n_max")
    truncation_guard(params.n_max, params.alpha0, j)
    spin, fock = Factor.spin(j), Factor.fock(params.n_max)
    layout = SpaceLayout((spin, fock), (0,))
    a = ops.boson_annihilate(fock)
    h_s = embed(params.omega_s * ops.jz(spin), 0, layout)
    h_e = embed(params.beta * ops.number(fock), 1, layout)
    h_se = params.eta * (kron(ops.jminus(spin), a.conj().T) + kron(ops.jplus(spin), a))
    dim = spin.dim
    rho_s, c = _system_state(params, np.ones(dim), dim)
    env = fock_vector(params.alpha0, params.n_max)
    initial = InitialState(rho_s, projector(env), c, env)
    return _check_hermitian(ModelInstance("model1", params, layout, h_s, h_e, h_se, initial))


def excitation_number(inst: ModelInstance) -> np.ndarray:
    """a†a + Jz on the model-1 space."""
    spin, fock = inst.layout.factors
    return embed(ops.number(fock), 1, inst.layout) + embed(ops.jz(spin), 0, inst.layout)


def _env_spin_state(params: ModelParams, spin: Factor):
    d = spin.dim
    if params.env_weighting == "mixed":
        return np.eye(d, dtype=complex) / d, None
    v = np.ones(d, dtype=complex) / np.sqrt(d)
    return projector(v), v


def build_model2(params: ModelParams) -> ModelInstance:
    """Oscillator system, spin environment: ω_S a†a + ωJz + η(a†+a)Ĵ²."""
    fock, spin = Factor.fock(params.n_max), Factor.spin(*params.j_values)
    layout = SpaceLayout((fock, spin), (0,))
    default = np.zeros(fock.dim)
    default[:2] = 1.0
    rho_s, c = _system_state(params, default, fock.dim)
    occ = int(np.max(np.nonzero(np.abs(np.diag(rho_s)) > 0)[0]))
    truncation_guard(params.n_max, occ, max(params.j_values))
    a = ops.boson_annihilate(fock)
    h_s = embed(params.omega_s * ops.number(fock), 0, layout)
    h_e = embed(params.omega * ops.jz(spin), 1, layout)
    h_se = params.eta * kron(a + a.conj().T, ops.jsquared(spin))
    env_rho, env_vec = _env_spin_state(params, spin)
    initial = InitialState(rho_s, env_rho, c, env_vec)
    return _check_hermitian(ModelInstance("model2", params, layout, h_s, h_e, h_se, initial))


def model3_default_amplitudes(j_values: Sequence[float]) -> np.ndarray:
    """Uniform over m for one multiplet; the top-m state of each multiplet otherwise."""
    spin = Factor.spin(*j_values)
    if len(spin.param) == 1:
        return np.ones(spin.dim)
    out = np.zeros(spin.dim)
    k = 0
    for j in spin.param:
        out[k] = 1.0
        k += int(round(2 * j)) + 1
    return out


def build_model3(params: ModelParams) -> ModelInstance:
    """Spin system, boson environment in the vacuum: ωJz + βb†b + η(b†+b)Ĵ²."""
    spin, fock = Factor.spin(*params.j_values), Factor.fock(params.n_max)
    truncation_guard(params.n_max, 0, max(params.j_values))
    layout = SpaceLayout((spin, fock), (0,))
    b = ops.boson_annihilate(fock)
    h_s = embed(params.omega * ops.jz(spin), 0, layout)
    h_e = embed(params.beta * ops.number(fock), 1, layout)
    h_se = params.eta * kron(ops.jsquared(spin), b + b.conj().T)
    rho_s, c = _system_state(params, model3_default_amplitudes(params.j_values), spin.dim)
    env = fock_vector(0, params.n_max)
    initial = InitialState(rho_s, projector(env), c, env)
    return _check_hermitian(ModelInstance("model3", params, layout, h_s, h_e, h_se, initial))


def model4_default_operators(params: ModelParams, case: str):
    """Environment Hamiltonian and per-level coupling family of the default instantiation."""
    fock = Factor.fock(params.n_max)
    if case == "a":
        n = ops.number(fock)
        return params.beta * n, [eta * n for eta in params.eta_branches]
    if case == "b":
        x, p = ops.position(fock), ops.momentum(fock)
        return params.beta * p, [eta * x for eta in params.eta_branches]
    raise ConfigError("model4 case must be 'a' or 'b'")


def build_model4(params: ModelParams, case: str = "a", h_e=None, h_se_family=None) -> ModelInstance:
    """Measurement model: levels |i> with energies ε_i, environment evolving under H_E + H_SE^i."""
    if (h_e is None) != (h_se_family is None):
        raise ConfigError("pass both h_e and h_se_family or neither")
    if h_e is None:
        h_e, h_se_family = model4_default_operators(params, case)
    h_e = np.asarray(h_e, dtype=complex)
    family = [np.asarray(h, dtype=complex) for h in h_se_family]
    n_levels = len(params.energies)
    if len(family) != n_levels:
        raise ConfigError(f"{n_levels} levels but {len(family)} coupling operators")
    d_env = h_e.shape[0]
    if any(h.shape != h_e.shape for h in family):
        raise ConfigError("coupling operators must match the environment dimension")
    if case == "a":
        for i, h in enumerate(family):
            scale = opnorm(h_e) * opnorm(h)
            if opnorm(commutator(h_e, h)) > C.COMMUTATION_TOL * max(scale, 1e-300) and scale > 0:
                raise CommutationViolation(f"[H_E, H_SE^{i}] does not vanish")
    levels = Factor.level(n_levels)
    env_factor = Factor.fock(d_env - 1)
    layout = SpaceLayout((levels, env_factor), (0,))
    h_s = kron(np.diag(params.energies), np.eye(d_env))
    h_e_full = kron(np.eye(n_levels), h_e)
    h_se = sum(kron(projector(np.eye(n_levels)[i]), h) for i, h in enumerate(family))
    rho_s, c = _system_state(params, np.ones(n_levels), n_levels)
    env = coherent_vector(params.env_amplitude, d_env - 1)
    weight_top = float(np.sum(np.abs(env[int(np.ceil((1 - C.GUARD_TOP_FRACTION) * d_env)):]) ** 2))
    if weight_top > C.TOP_LEVEL_POPULATION_TOL:
        raise TruncationTooSmall("initial environment has weight on the top quarter of the Fock ladder")
    initial = InitialState(rho_s, projector(env), c, env)
    extras = {"case": case, "h_e_env": h_e, "h_se_family": family}
    tag = "model4a" if case == "a" else "model4b"
    return _check_hermitian(ModelInstance(tag, params, layout, h_s, h_e_full, h_se, initial, extras))


def build_model5(params: ModelParams, e_s=None, spectral=None) -> ModelInstance:
    """Green's-function level model: no finite tensor-space Hamiltonian."""
    from .greens import SpectralDensity

    e_s = np.asarray(params.e_s if e_s is None else e_s, dtype=float)
    if e_s.ndim != 1 or e_s.size < 1:
        raise ConfigError("e_s must be a non-empty vector")
    if spectral is None:
        spectral = SpectralDensity.from_dict(params.spectral, e_s.size)
    extras = {"e_s": e_s, "spectral": spectral}
    return ModelInstance("model5", params, None, None, None, None, None, extras)


def build(tag: str, params: Optional[ModelParams] = None) -> ModelInstance:
    """Build any model by tag with default instantiations where needed."""
    params = default_params(tag) if params is None else params
    if tag == "model1":
        return build_model1(params)
    if tag == "model2":
        return build_model2(params)
    if tag == "model3":
        return build_model3(params)
    if tag == "model4a":
        return build_model4(params, "a")
    if tag == "model4b":
        return build_model4(params, "b")
    if tag == "model5":
        return build_model5(params)
    raise ConfigError(f"unknown model tag {tag!r}")
