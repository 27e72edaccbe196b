"""Green's function with a memory kernel and the dissipation matrix c(t).

    dG/dt + i e_s G + ∫_0^t v(t - t') G(t') dt' = 0,   G(0) = I
    c(t) = -(1/2) (Ġ G⁻¹ + h.c.)

Kernel convention: v(s) = ∫ dω/π J(ω) e^{-iωs} for s ≥ 0.  The causal kernel
is doubled relative to a symmetric 1/2π transform so that a flat spectrum
J₀ gives a delta whose one-sided integral has full weight J₀, reproducing
G(t) = exp(-i(e_s - iJ₀)t).  A Lorentzian J(ω) = Γλ²/((ω-ω₀)² + λ²) then
gives v(s) = Γλ e^{-iω₀s - λs}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from . import constants as C
from .errors import ConfigError, SingularGreens, StepTooLarge, TailTooLarge
from .evolution import Trajectory
from .linalg import expm_unitary, opnorm

KINDS = ("flat", "lorentzian", "tabulated")


@dataclass(frozen=True)
class SpectralDensity:
    kind: str
    n: int = 1
    j0: float = 0.0
    center: float = 0.0
    width: float = 1.0
    strength: float = 0.0
    table: Optional[tuple] = None  # (omegas, J) with J of shape (len(omegas), n, n)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"spectral kind must be one of {KINDS}")
        if self.kind == "flat" and self.j0 < 0:
            raise ConfigError("flat level j0 must be >= 0")
        if self.kind == "lorentzian" and (self.width <= 0 or self.strength < 0):
            raise ConfigError("lorentzian needs width > 0 and strength >= 0")
        if self.kind == "tabulated":
            if self.table is None:
                raise ConfigError("tabulated spectrum needs a table")
            w, j = self.table
            j = np.asarray(j, dtype=complex)
            if j.shape != (len(w), self.n, self.n):
                raise ConfigError("table J must have shape (len(omegas), n, n)")
            for jw in j:
                if np.max(np.abs(jw - jw.conj().T)) > 1e-12 or np.linalg.eigvalsh(jw).min() < -1e-12:
                    raise ConfigError("tabulated J(ω) must be Hermitian positive semidefinite")

    def __call__(self, omega) -> np.ndarray:
        """J(ω) as an (len(ω), n, n) array."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        eye = np.eye(self.n)
        if self.kind == "flat":
            return np.full(omega.shape, self.j0)[:, None, None] * eye
        if self.kind == "lorentzian":
            lam = self.width
            prof = self.strength * lam ** 2 / ((omega - self.center) ** 2 + lam ** 2)
            return prof[:, None, None] * eye
        w, j = self.table
        j = np.asarray(j, dtype=complex)
        re = np.stack([np.interp(omega, w, j[:, a, b].real) for a in range(self.n) for b in range(self.n)], -1)
        im = np.stack([np.interp(omega, w, j[:, a, b].imag) for a in range(self.n) for b in range(self.n)], -1)
        return (re + 1j * im).reshape(omega.size, self.n, self.n)

    @classmethod
    def flat(cls, j0: float, n: int = 1) -> "SpectralDensity":
        return cls("flat", n, j0=j0)

    @classmethod
    def lorentzian(cls, strength: float, width: float, center: float = 0.0, n: int = 1) -> "SpectralDensity":
        return cls("lorentzian", n, center=center, width=width, strength=strength)

    @classmethod
    def from_dict(cls, d: dict, n: int = 1) -> "SpectralDensity":
        d = dict(d)
        kind = d.pop("kind", "flat")
        if kind == "tabulated":
            d["table"] = (np.asarray(d.pop("omegas"), float), np.asarray(d.pop("values"), complex))
        allowed = {"j0", "center", "width", "strength", "table"}
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"unknown spectral keys {sorted(extra)}")
        return cls(kind, n, **d)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "flat":
            out["j0"] = self.j0
        elif self.kind == "lorentzian":
            out.update(center=self.center, width=self.width, strength=self.strength)
        else:
            w, j = self.table
            out.update(omegas=np.asarray(w).tolist(), values=np.asarray(j).real.tolist())
        return out


@dataclass(frozen=True)
class DeltaKernel:
    """v(s) = J₀ δ(s), counted with full weight at the integration endpoint."""

    j0: np.ndarray


@dataclass(frozen=True)
class KernelTable:
    """v sampled at lags k h, k = 0..len-1, each an (n, n) matrix."""

    h: float
    values: np.ndarray
    integral_norm: float  # ∫_0^∞ ||v(s)|| ds
    decay_rate: float     # slowest exponential rate present (for resolution checks)


Spectra = Union[SpectralDensity, Sequence[SpectralDensity]]


def _as_list(spectral: Spectra) -> list:
    return [spectral] if isinstance(spectral, SpectralDensity) else list(spectral)


def kernel(spectral: Spectra, dt_grid) -> Union[DeltaKernel, KernelTable, tuple]:
    """Memory kernel for one spectrum or the sum over several baths.

    Returns a :class:`DeltaKernel`, a :class:`KernelTable`, or a
    ``(DeltaKernel, KernelTable)`` pair when flat and structured baths are mixed.
    ``dt_grid`` is the uniform time grid (or its lags).
    """
    specs = _as_list(spectral)
    n = specs[0].n
    grid = np.asarray(dt_grid, dtype=float)
    lags = grid - grid[0]
    delta = np.zeros((n, n))
    table = np.zeros((lags.size, n, n), dtype=complex)
    integral, rate, structured = 0.0, np.inf, False
    for s in specs:
        if s.n != n:
            raise ConfigError("all baths must have the same dimension")
        if s.kind == "flat":
            delta = delta + s.j0 * np.eye(n)
        elif s.kind == "lorentzian":
            structured = True
            prof = s.strength * s.width * np.exp(-1j * s.center * lags - s.width * lags)
            table += prof[:, None, None] * np.eye(n)
            integral += s.strength
            rate = min(rate, s.width)
        else:
            structured = True
            vals, integ = _tabulated_kernel(s, lags)
            table += vals
            integral += integ
            rate = min(rate, 1.0 / max(lags[-1], 1e-300))
    dk = DeltaKernel(delta)
    h = float(lags[1]) if lags.size > 1 else 0.0
    kt = KernelTable(h, table, integral, rate)
    if not structured:
        return dk
    if not delta.any():
        return kt
    return dk, kt


def _tabulated_kernel(s: SpectralDensity, lags: np.ndarray):
    w, j = s.table
    w = np.asarray(w, float)
    j = np.asarray(j, complex)
    peak = np.max(np.abs(j))
    edge = max(np.max(np.abs(j[0])), np.max(np.abs(j[-1])))
    if peak > 0 and edge > C.FOURIER_TAIL_TOL * peak:
        raise TailTooLarge(f"spectrum at grid edge is {edge / peak:.2e} of peak")
    phase = np.exp(-1j * np.outer(lags, w))
    vals = trapezoid(phase[:, :, None, None] * j[None], w, axis=1) / np.pi
    integ = float(trapezoid([opnorm(v) for v in vals], lags)) if lags.size > 1 else 0.0
    return vals, integ


@dataclass
class GreensSolution:
    times: np.ndarray
    g: np.ndarray
    gdot: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)

    @property
    def c(self) -> np.ndarray:
        if "_c" not in self.meta:
            self.meta["_c"] = dissipation_matrix(self)
        return self.meta["_c"]

    @property
    def max_norm(self) -> float:
        """max_t ||G(t)||; at most 1 + 1e-6 for positive semidefinite spectra."""
        return float(max(opnorm(gk) for gk in self.g))


def _uniform_step(times: np.ndarray) -> float:
    if times.size < 2:
        raise ValueError("need at least two time points")
    if abs(times[0]) > 0:
        raise ValueError("time grid must start at t0 = 0")
    h = times[1] - times[0]
    if np.max(np.abs(np.diff(times) - h)) > 1e-9 * max(h, 1.0):
        raise ValueError("time grid must be uniform")
    return float(h)


def solve_greens(e_s, spectral: Spectra, times) -> GreensSolution:
    """G(t) on a uniform grid starting at 0.

    A flat spectrum takes the analytic delta-kernel path; otherwise the
    integro-differential equation is integrated with the implicit trapezoidal
    rule and trapezoidal memory quadrature.
    """
    e = np.asarray(e_s, dtype=float)
    times = np.asarray(times, dtype=float)
    n = e.size
    k = kernel(spectral, times)
    if isinstance(k, DeltaKernel):
        return _solve_delta(e, k, times)
    h = _uniform_step(times)
    delta, table = (k if isinstance(k, tuple) else (DeltaKernel(np.zeros((n, n))), k))
    guard = h * (np.max(np.abs(e)) + opnorm(delta.j0) + table.integral_norm)
    if guard > C.GREENS_STEP_GUARD:
        raise StepTooLarge(f"h (||e_s|| + ∫||v||) = {guard:.3g} exceeds {C.GREENS_STEP_GUARD}")
    if np.isfinite(table.decay_rate) and h * table.decay_rate > 0.5:
        raise StepTooLarge(f"step {h:g} does not resolve kernel decay rate {table.decay_rate:g}")
    return _solve_volterra(e, delta.j0, table.values, h, times)


def _solve_delta(e: np.ndarray, dk: DeltaKernel, times: np.ndarray) -> GreensSolution:
    n = e.size
    j0 = dk.j0
    a = np.diag(e).astype(complex)
    if np.allclose(j0, j0[0, 0] * np.eye(n)):
        # J₀ ∝ I commutes with e_s: G = e^{-J₀t} e^{-i e_s t}
        g = np.array([np.exp(-j0[0, 0] * t) * expm_unitary(a, t) for t in times])
    else:
        from scipy.linalg import expm
        g = np.array([expm(-(1j * a + j0) * t) for t in times])
    gdot = np.einsum("ij,tjk->tik", -(1j * a + j0), g)
    return GreensSolution(times, g, gdot, "delta-kernel", {"j0": j0})


def _solve_volterra(e, delta, v, h, times) -> GreensSolution:
    n = e.size
    steps = times.size
    eye = np.eye(n, dtype=complex)
    ie = 1j * np.diag(e) + delta
    g = np.zeros((steps, n, n), dtype=complex)
    f = np.zeros_like(g)
    g[0] = eye
    f[0] = -ie @ g[0]
    lhs = eye + 0.5 * h * (ie + 0.5 * h * v[0])
    lhs_inv = np.linalg.inv(lhs)
    for m in range(steps - 1):
        # memory sum without the implicit k = m+1 endpoint
        r = 0.5 * v[m + 1] @ g[0]
        if m >= 1:
            r = r + np.einsum("kij,kjl->il", v[m:0:-1], g[1:m + 1])
        r = h * r
        g[m + 1] = lhs_inv @ (g[m] + 0.5 * h * f[m] - 0.5 * h * r)
        f[m + 1] = -ie @ g[m + 1] - r - 0.5 * h * v[0] @ g[m + 1]
    return GreensSolution(times, g, f, "implicit-trapezoid", {"h": h})


def dissipation_matrix(sol: GreensSolution) -> np.ndarray:
    """c(t) = -(1/2)(Ġ G⁻¹ + (Ġ G⁻¹)†) using the solver's own Ġ."""
    out = np.zeros_like(sol.g)
    for k, (gk, dk) in enumerate(zip(sol.g, sol.gdot)):
        cond = np.linalg.cond(gk)
        if not np.isfinite(cond) or cond > C.GREENS_COND_LIMIT:
            raise SingularGreens(f"G({sol.times[k]:g}) has condition number {cond:.3g}")
        m = np.linalg.solve(gk.T, dk.T).T  # Ġ G⁻¹
        out[k] = -0.5 * (m + m.conj().T)
    return out


def lorentzian_oracle(e: float, spectral: SpectralDensity, times) -> np.ndarray:
    """Scalar G(t) from the auxiliary-variable ODE of a Lorentzian kernel.

    With B(t) = ∫_0^t v(t - t') G(t') dt', B' = Γλ G - (λ + iω₀) B and
    G' = -ie G - B, a linear 2x2 system solved by matrix exponential.
    """
    from scipy.linalg import expm

    lam, w0, gam = spectral.width, spectral.center, spectral.strength
    a = np.array([[-1j * e, -1.0], [gam * lam, -(lam + 1j * w0)]], dtype=complex)
    return np.array([expm(a * t)[0, 0] for t in np.asarray(times, float)])


def single_excitation_trajectory(sol: GreensSolution, amplitudes) -> Trajectory:
    """Reduced density over {vacuum, 1..N} for an initial single-excitation superposition.

    amplitudes = (c_vac, c_1, ..., c_N); the excitation part evolves as G c and
    the lost weight returns to the vacuum.
    """
    a = np.asarray(amplitudes, dtype=complex)
    a = a / np.linalg.norm(a)
    c0, c = a[0], a[1:]
    n = c.size
    states = np.zeros((sol.times.size, n + 1, n + 1), dtype=complex)
    for k, gk in enumerate(sol.g):
        psi = gk @ c
        states[k, 1:, 1:] = np.outer(psi, psi.conj())
        states[k, 0, 1:] = c0 * psi.conj()
        states[k, 1:, 0] = np.conj(states[k, 0, 1:])
        states[k, 0, 0] = 1.0 - np.vdot(psi, psi).real
    return Trajectory(sol.times, states, "closedform", "model5", {"method": sol.method})


def green_solution_for(model, times) -> GreensSolution:
    return solve_greens(model.extras["e_s"], model.extras["spectral"], times)
