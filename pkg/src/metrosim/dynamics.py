"""Two-qubit dephasing dynamics and parametric sensitivity.

The master equation (hbar = 1, time in units of T~) is

    d rho / d tau = -i [H, rho] + (gamma / 2) sum_k (Z_k rho Z_k - rho)

with one local dephasing channel per qubit, Z_1 = sigma_z x I and
Z_2 = I x sigma_z, at the same rate. :func:`evolve` and
:func:`evolve_with_sensitivity` integrate it with fixed-step RK4;
:class:`Propagator` is the exact (matrix-exponential) route used in bulk by
the optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import IDENTITY_2, SIGMA_Z, dagger, hermitian_eig, kron
from .model import HamiltonianSpec, build_hamiltonian, hamiltonian_derivative

Z1 = kron(SIGMA_Z, IDENTITY_2)
Z2 = kron(IDENTITY_2, SIGMA_Z)

DEFAULT_DT = 1e-3
# RK4 step times the fastest Liouvillian rate; keeps the global error near 1e-10
MAX_PHASE_STEP = 4e-3
POSITIVITY_TOL = 1e-8
STATE_TOL = 1e-10
STEP_DOUBLING_TOL = 1e-8


class IntegrationError(RuntimeError):
    pass


class StateError(ValueError):
    pass


def _dephasing_ops(dim: int):
    return (SIGMA_Z,) if dim == 2 else (Z1, Z2)


def check_density_matrix(rho, tol: float = STATE_TOL, positivity_tol: float = POSITIVITY_TOL):
    """Raise :class:`StateError` unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape not in ((2, 2), (4, 4)):
        raise StateError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    herm = float(np.max(np.abs(rho - dagger(rho))))
    if herm > tol:
        raise StateError(f"density matrix not Hermitian (max asymmetry {herm:.2e})")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise StateError(f"density matrix trace {tr.real:.12g} != 1")
    lam = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    if lam[0] < -positivity_tol:
        raise StateError(f"density matrix has negative eigenvalue {lam[0]:.3e}")
    return rho


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


@dataclass
class EvolutionProblem:
    """One evolution of an initial state under ``hamiltonian`` for ``t_end``.

    ``generator`` is dH/d(epsilon), needed only for sensitivity runs. ``steps``
    defaults to at least 2000 over [0, 2], refined so that the step times the
    fastest rate of the generator stays below ``MAX_PHASE_STEP``.
    """

    hamiltonian: np.ndarray
    gamma: float
    initial: np.ndarray
    t_end: float
    steps: int | None = None
    generator: np.ndarray | None = None

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=complex)
        self.initial = np.asarray(self.initial, dtype=complex)
        if self.initial.ndim == 1:
            self.initial = pure_state(self.initial)
        check_density_matrix(self.initial)
        if self.hamiltonian.shape != self.initial.shape:
            raise ValueError("Hamiltonian and initial state dimensions differ")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.steps is None:
            self.steps = default_steps(self.hamiltonian, self.gamma, self.t_end)
        if self.steps < 1:
            raise ValueError("steps must be a positive integer")

    @classmethod
    def from_spec(cls, spec: HamiltonianSpec, gamma: float, initial, t_end: float,
                  steps: int | None = None) -> "EvolutionProblem":
        return cls(build_hamiltonian(spec), gamma, initial, t_end, steps,
                   generator=hamiltonian_derivative(spec))


def default_steps(h: np.ndarray, gamma: float, t_end: float) -> int:
    energies = np.linalg.eigvalsh(0.5 * (h + dagger(h)))
    rate = float(energies[-1] - energies[0]) + 2.0 * gamma
    dt = DEFAULT_DT if rate == 0 else min(DEFAULT_DT, MAX_PHASE_STEP / rate)
    return max(1, math.ceil(t_end / dt - 1e-9))


def lindblad_rhs(h: np.ndarray, gamma: float, rho: np.ndarray) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    if gamma:
        for z in _dephasing_ops(rho.shape[0]):
            out += 0.5 * gamma * (z @ rho @ z - rho)
    return out


def _sensitivity_rhs(h, dh, gamma, rho, drho):
    return lindblad_rhs(h, gamma, drho) - 1j * (dh @ rho - rho @ dh)


def _rk4(h, gamma, rho, t_end, steps, dh=None):
    dt = t_end / steps
    drho = np.zeros_like(rho) if dh is not None else None

    def f(r, d):
        k = lindblad_rhs(h, gamma, r)
        return k, (None if dh is None else _sensitivity_rhs(h, dh, gamma, r, d))

    for _ in range(steps):
        if dh is None:
            k1, _ = f(rho, None)
            k2, _ = f(rho + 0.5 * dt * k1, None)
            k3, _ = f(rho + 0.5 * dt * k2, None)
            k4, _ = f(rho + dt * k3, None)
        else:
            k1, l1 = f(rho, drho)
            k2, l2 = f(rho + 0.5 * dt * k1, drho + 0.5 * dt * l1)
            k3, l3 = f(rho + 0.5 * dt * k2, drho + 0.5 * dt * l2)
            k4, l4 = f(rho + dt * k3, drho + dt * l3)
            drho = drho + (dt / 6.0) * (l1 + 2 * l2 + 2 * l3 + l4)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho, drho


def clamp_state(rho: np.ndarray) -> np.ndarray:
    """Remove round-off negativity: eigenvalues in [-1e-8, 0) go to zero.

    Anything more negative is a genuine failure and raises.
    """
    rho = 0.5 * (rho + dagger(rho))
    w, v = hermitian_eig(rho)
    if w[-1] < -POSITIVITY_TOL:
        raise StateError(f"evolved state has eigenvalue {w[-1]:.3e}")
    if w[-1] >= 0:
        return rho / np.trace(rho).real
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    return (v * w) @ dagger(v)


def _integrate(problem: EvolutionProblem, dh, verify: bool):
    rho, drho = _rk4(problem.hamiltonian, problem.gamma, problem.initial,
                     problem.t_end, problem.steps, dh)
    if verify and problem.steps >= 2 and problem.t_end > 0:
        coarse, dcoarse = _rk4(problem.hamiltonian, problem.gamma, problem.initial,
                               problem.t_end, problem.steps // 2, dh)
        # RK4 error of the fine run is about 1/15 of the fine-coarse gap
        err = np.max(np.abs(rho - coarse)) / 15.0
        if dh is not None:
            err = max(err, np.max(np.abs(drho - dcoarse)) / 15.0)
        if err > STEP_DOUBLING_TOL:
            raise IntegrationError(
                f"step-doubling error estimate {err:.2e} exceeds {STEP_DOUBLING_TOL:.0e}; "
                f"increase steps (currently {problem.steps})")
    return rho, drho


def evolve(problem: EvolutionProblem, verify: bool = True) -> np.ndarray:
    """rho(t_end) by fixed-step RK4, clamped to a valid density matrix."""
    rho, _ = _integrate(problem, None, verify)
    return clamp_state(rho)


def evolve_with_sensitivity(problem: EvolutionProblem, generator=None, verify: bool = True):
    """Co-integrate rho and d rho / d epsilon, where dH/d epsilon = ``generator``.

    Returns ``(rho, drho)``; ``drho`` is Hermitian and traceless.
    """
    dh = problem.generator if generator is None else np.asarray(generator, dtype=complex)
    if dh is None:
        raise ValueError("sensitivity run needs dH/d(epsilon): pass generator or use from_spec")
    rho, drho = _integrate(problem, dh, verify)
    drho = 0.5 * (drho + dagger(drho))
    return clamp_state(rho), drho


def unitary_evolve(h: np.ndarray, rho0: np.ndarray, t: float) -> np.ndarray:
    """Noiseless reference: U rho U^dagger with U = exp(-i H t)."""
    w, v = hermitian_eig(h)
    u = (v * np.exp(-1j * w * t)) @ dagger(v)
    return u @ rho0 @ dagger(u)


# ------------------------------------------------------------- exact propagator

def liouvillian(h: np.ndarray, gamma: float) -> np.ndarray:
    """Superoperator acting on row-major vec(rho): vec(A rho B) = (A x B^T) vec(rho)."""
    dim = h.shape[0]
    eye = np.eye(dim)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    if gamma:
        for z in _dephasing_ops(dim):
            sup += 0.5 * gamma * (np.kron(z, z.T) - np.eye(dim * dim))
    return sup


def commutator_superop(dh: np.ndarray) -> np.ndarray:
    eye = np.eye(dh.shape[0])
    return -1j * (np.kron(dh, eye) - np.kron(eye, dh.T))


class Propagator:
    """Exact batched solution of the master equation and its sensitivity.

    The Liouvillian ``L`` is diagonalized once, ``L = V diag(d) V^-1``; then
    ``rho(t) = V e^{d t} V^-1 rho0`` and the parametric derivative follows from
    the divided-difference (Daleckii-Krein) form of the Frechet derivative of
    ``exp(L t)`` in the direction ``dL``. If ``V`` is badly conditioned the
    block-matrix exponential is used instead.
    """

    def __init__(self, h, gamma: float, dh=None, cond_limit: float = 1e8):
        self.h = np.asarray(h, dtype=complex)
        self.dim = self.h.shape[0]
        self.gamma = float(gamma)
        self.L = liouvillian(self.h, self.gamma)
        self.dL = None if dh is None else commutator_superop(np.asarray(dh, dtype=complex))
        d, v = np.linalg.eig(self.L)
        self.use_eig = np.linalg.cond(v) < cond_limit
        if self.use_eig:
            self.d = d
            self.v = v
            self.vinv = np.linalg.inv(v)
            if self.dL is not None:
                self.w = self.vinv @ self.dL @ self.v
                diff = d[:, None] - d[None, :]
                self._close = np.abs(diff) < 1e-8
                self._diff = np.where(self._close, 1.0, diff)

    @classmethod
    def from_spec(cls, spec: HamiltonianSpec, gamma: float) -> "Propagator":
        return cls(build_hamiltonian(spec), gamma, hamiltonian_derivative(spec))

    def evolve(self, rho0: np.ndarray, t, sensitivity: bool = True):
        """Propagate a batch of states.

        ``rho0`` has shape (..., dim, dim) and ``t`` broadcasts against its
        batch shape. Returns ``(rho, drho)`` (``drho`` is None when
        ``sensitivity`` is false).
        """
        rho0 = np.asarray(rho0, dtype=complex)
        dim = self.dim
        batch = rho0.shape[:-2]
        t = np.broadcast_to(np.asarray(t, dtype=float), batch)
        vec = rho0.reshape(batch + (dim * dim,))
        if not self.use_eig:
            return self._evolve_block(vec, t, sensitivity, batch)
        c = vec @ self.vinv.T
        e = np.exp(t[..., None] * self.d)
        rho = (e * c) @ self.v.T
        drho = None
        if sensitivity:
            if self.dL is None:
                raise ValueError("propagator built without dH")
            et = e[..., :, None]
            es = e[..., None, :]
            g = np.where(self._close, t[..., None, None] * 0.5 * (et + es),
                         (et - es) / self._diff)
            drho = np.einsum("...ij,...j->...i", g * self.w, c) @ self.v.T
            drho = drho.reshape(batch + (dim, dim))
            drho = 0.5 * (drho + dagger(drho))
        rho = rho.reshape(batch + (dim, dim))
        rho = 0.5 * (rho + dagger(rho))
        return rho, drho

    def _evolve_block(self, vec, t, sensitivity, batch):
        n = self.dim * self.dim
        dL = np.zeros_like(self.L) if self.dL is None else self.dL
        block = np.block([[self.L, np.zeros_like(self.L)], [dL, self.L]])
        flat_t = t.reshape(-1)
        flat_v = vec.reshape(-1, n)
        rho = np.empty_like(flat_v)
        drho = np.empty_like(flat_v)
        cache = {}
        for k, (tk, vk) in enumerate(zip(flat_t, flat_v)):
            if tk not in cache:
                cache[tk] = scipy.linalg.expm(block * tk)
            m = cache[tk]
            rho[k] = m[:n, :n] @ vk
            drho[k] = m[n:, :n] @ vk
        shape = batch + (self.dim, self.dim)
        rho = rho.reshape(shape)
        rho = 0.5 * (rho + dagger(rho))
        if not sensitivity:
            return rho, None
        drho = drho.reshape(shape)
        return rho, 0.5 * (drho + dagger(drho))
