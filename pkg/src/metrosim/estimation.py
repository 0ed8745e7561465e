"""Fisher information and the Fisher-information lower bound on uncertainty.

A run of total duration T splits into repetitions of length t; with n qubits
grouped in clusters of N, the experiment collects nu = (n/N)(T/t) independent
outcomes per cluster, and the bound on the standard deviation of the
estimated parameter epsilon is

    T~ Delta epsilon >= 1 / sqrt(nu * F)

where F is the Fisher information of a single cluster measurement. For
product probes the two qubits are measured separately after tracing out the
partner, and the two (independent) binary outcomes contribute additively to F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EvolutionProblem, Propagator, evolve_with_sensitivity, pure_state
from .linalg import hermitian_eig, partial_trace
from .model import (HamiltonianSpec, MeasurementFamily, MeasurementParams, ProbeFamily,
                    ProbeParams, build_measurement, build_probe)

P_FLOOR = 1e-12
SLD_THRESHOLD = 1e-10


@dataclass(frozen=True)
class ExperimentConfig:
    """Resource bookkeeping and noise level.

    ``n`` qubits in clusters of ``N`` over total time ``T_over_Ttilde``; the
    dephasing rate ``gamma`` is the dimensionless T~ gamma.
    """

    n: int = 2
    N: int = 2
    T_over_Ttilde: float = 2.0
    gamma: float = 0.0
    time_grid: tuple = ()

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ValueError("n and N must be positive integers")
        if self.n % self.N:
            raise ValueError(f"N={self.N} must divide n={self.n}")
        if not self.T_over_Ttilde > 0:
            raise ValueError("T/T~ must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        object.__setattr__(self, "time_grid", tuple(float(t) for t in self.time_grid))
        if any(not 0 < t <= 2.0 for t in self.time_grid):
            raise ValueError("time grid values must lie in (0, 2]")

    def nu(self, t) -> float:
        """Number of repetitions (n/N)(T/t); real-valued, not floored."""
        return (self.n / self.N) * (self.T_over_Ttilde / t)

    def with_gamma(self, gamma: float) -> "ExperimentConfig":
        return ExperimentConfig(self.n, self.N, self.T_over_Ttilde, gamma, self.time_grid)


@dataclass(frozen=True)
class FisherResult:
    fi_single: float
    nu: float
    bound: float
    p: float | tuple
    flagged: bool = False


def bernoulli_fi(p: float, dp: float) -> float:
    """Fisher information of a two-outcome distribution (p, 1-p).

    At p in {0, 1} with dp != 0 the denominator is floored at 1e-12; use
    :func:`bernoulli_fi_flagged` to learn whether that happened.
    """
    return bernoulli_fi_flagged(p, dp)[0]


def bernoulli_fi_flagged(p: float, dp: float):
    if not -1e-10 <= p <= 1 + 1e-10:
        raise ValueError(f"probability {p} outside [0, 1]")
    if not math.isfinite(dp):
        raise ValueError("dp must be finite")
    if dp == 0:
        return 0.0, False
    var = p * (1.0 - p)
    flagged = var < P_FLOOR
    return dp * dp / max(var, P_FLOOR), flagged


def bernoulli_fi_array(p: np.ndarray, dp: np.ndarray) -> np.ndarray:
    var = np.maximum(p * (1.0 - p), P_FLOOR)
    return dp * dp / var


def uncertainty_bound(fi_single: float, config: ExperimentConfig, t: float) -> float:
    """1 / sqrt(nu F). Returns ``inf`` when F == 0 (parameter not estimable)."""
    if fi_single < 0:
        raise ValueError("Fisher information must be non-negative")
    if t <= 0:
        raise ValueError("evolution time must be positive")
    if fi_single == 0:
        return math.inf
    return 1.0 / math.sqrt(config.nu(t) * fi_single)


def sld_qfi(rho: np.ndarray, drho: np.ndarray, threshold: float = SLD_THRESHOLD) -> float:
    """QFI from the eigenbasis of rho: sum 2|<e_i|d rho|e_j>|^2 / (l_i + l_j)."""
    lam, vec = hermitian_eig(0.5 * (rho + rho.conj().T))
    m = vec.conj().T @ drho @ vec
    s = lam[:, None] + lam[None, :]
    keep = s > threshold
    return float(np.sum(2.0 * np.abs(m[keep]) ** 2 / s[keep]))


def sld_operator(rho: np.ndarray, drho: np.ndarray, threshold: float = SLD_THRESHOLD):
    lam, vec = hermitian_eig(0.5 * (rho + rho.conj().T))
    m = vec.conj().T @ drho @ vec
    s = lam[:, None] + lam[None, :]
    coef = np.where(s > threshold, 2.0 * m / np.where(s > threshold, s, 1.0), 0.0)
    return vec @ coef @ vec.conj().T


def batch_qfi(rho: np.ndarray, drho: np.ndarray, threshold: float = SLD_THRESHOLD) -> np.ndarray:
    """Vectorized QFI over leading batch axes (LAPACK eigh)."""
    lam, vec = np.linalg.eigh(rho)
    m = np.conj(np.swapaxes(vec, -1, -2)) @ drho @ vec
    s = lam[..., :, None] + lam[..., None, :]
    keep = s > threshold
    terms = np.where(keep, 2.0 * np.abs(m) ** 2 / np.where(keep, s, 1.0), 0.0)
    return terms.sum(axis=(-1, -2))


def reduce_pair(op: np.ndarray):
    """Single-qubit marginals ``(first, second)`` of 4x4 operators, batched."""
    r = op.reshape(op.shape[:-2] + (2, 2, 2, 2))
    return np.einsum("...ikjk->...ij", r), np.einsum("...kikj->...ij", r)


def local_qfi(rho: np.ndarray, drho: np.ndarray, threshold: float = SLD_THRESHOLD) -> np.ndarray:
    """Sum of the two single-qubit QFIs, batched.

    This is the quantum limit of the per-qubit measurement scheme used for
    product probes, where each qubit is read out on its own and the two
    Fisher informations are added. On correlated states it can exceed the
    global QFI, so it is the right comparison for that scheme, not the
    global one.
    """
    (r1, r2), (d1, d2) = reduce_pair(rho), reduce_pair(drho)
    return batch_qfi(r1, d1, threshold) + batch_qfi(r2, d2, threshold)


def _evolve(spec, probe, config, t, method):
    psi = build_probe(probe)
    if method == "rk4":
        problem = EvolutionProblem.from_spec(spec, config.gamma, psi, t)
        return evolve_with_sensitivity(problem)
    if method == "exact":
        return Propagator.from_spec(spec, config.gamma).evolve(pure_state(psi), t)
    raise ValueError(f"unknown method {method!r}")


def _check_families(probe: ProbeParams, meas: MeasurementParams):
    product = probe.family is ProbeFamily.PRODUCT
    single = meas.family is MeasurementFamily.SINGLE_QUBIT
    if product != single:
        raise ValueError(f"{probe.family.value} probes need "
                         f"{'single' if product else 'two'}-qubit measurements")


def measurement_fi(rho, drho, meas: MeasurementParams):
    """Per-cluster Fisher information of the binary projective measurement(s).

    Returns ``(fi, p, flagged)``.
    """
    if meas.family is MeasurementFamily.SINGLE_QUBIT:
        fi, ps, flagged = 0.0, [], False
        for q, keep in enumerate(("first", "second")):
            phi = build_measurement(meas, qubit=q)
            red = partial_trace(rho, keep)
            dred = np.einsum("ikjk->ij", drho.reshape(2, 2, 2, 2)) if keep == "first" \
                else np.einsum("kikj->ij", drho.reshape(2, 2, 2, 2))
            p = float(np.real(phi.conj() @ red @ phi))
            dp = float(np.real(phi.conj() @ dred @ phi))
            f, flag = bernoulli_fi_flagged(min(max(p, 0.0), 1.0), dp)
            fi += f
            ps.append(p)
            flagged |= flag
        return fi, tuple(ps), flagged
    phi = build_measurement(meas)
    p = float(np.real(phi.conj() @ rho @ phi))
    dp = float(np.real(phi.conj() @ drho @ phi))
    f, flagged = bernoulli_fi_flagged(min(max(p, 0.0), 1.0), dp)
    return f, p, flagged


def measured_fi(spec: HamiltonianSpec, probe: ProbeParams, meas: MeasurementParams,
                config: ExperimentConfig, t: float, method: str = "rk4") -> FisherResult:
    """Fisher information and bound for a given probe, measurement and time."""
    _check_families(probe, meas)
    rho, drho = _evolve(spec, probe, config, t, method)
    fi, p, flagged = measurement_fi(rho, drho, meas)
    return FisherResult(fi, config.nu(t), uncertainty_bound(fi, config, t), p, flagged)


def qfi(spec: HamiltonianSpec, probe: ProbeParams, config: ExperimentConfig, t: float,
        method: str = "rk4", threshold: float = SLD_THRESHOLD) -> FisherResult:
    """Quantum Fisher information of the evolved probe and the resulting bound."""
    rho, drho = _evolve(spec, probe, config, t, method)
    f = sld_qfi(rho, drho, threshold)
    if f < 1e-14:
        f = 0.0
    return FisherResult(f, config.nu(t), uncertainty_bound(f, config, t), float("nan"))
