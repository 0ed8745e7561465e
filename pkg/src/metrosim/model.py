"""Hamiltonians, probe states and measurement vectors for two-qubit probes.

Units: hbar = 1 and time is measured in the reference time ``T~``, so every
energy is carried as its dimensionless product with ``T~`` (``T~ omega`` and
so on). Basis order is |00>, |01>, |10>, |11> with qubit 1 the left factor.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, kron

TWO_PI = 2.0 * math.pi

PROJ_ONE = np.array([[0, 0], [0, 1]], dtype=complex)
NUMBER_OP = kron(PROJ_ONE, IDENTITY_2) + kron(IDENTITY_2, PROJ_ONE)
ZZ = kron(SIGMA_Z, SIGMA_Z)
X_FIELD = kron(SIGMA_X, IDENTITY_2) + kron(IDENTITY_2, SIGMA_X)
XX = kron(SIGMA_X, SIGMA_X)
YY = kron(SIGMA_Y, SIGMA_Y)


class Kind(str, enum.Enum):
    """Hamiltonian family. ``IDEAL`` is the non-interacting two-qubit H_0 sum."""

    IDEAL = "ideal"
    H1 = "H1"
    H2 = "H2"
    H3 = "H3"
    H4 = "H4"


class Param(str, enum.Enum):
    OMEGA = "omega"
    FIELD_H = "h"
    COUPLING_J = "J"


# which parameters each Hamiltonian actually contains
KIND_PARAMS = {
    Kind.IDEAL: {Param.OMEGA},
    Kind.H1: {Param.OMEGA, Param.COUPLING_J},
    Kind.H2: {Param.OMEGA, Param.FIELD_H},
    Kind.H3: {Param.OMEGA, Param.COUPLING_J, Param.FIELD_H},
    Kind.H4: {Param.COUPLING_J},
}

_KIND_ALIASES = {"ideal": Kind.IDEAL, "h2ideal": Kind.IDEAL, "calh2": Kind.IDEAL,
                 "h1": Kind.H1, "h2": Kind.H2, "h3": Kind.H3, "h4": Kind.H4}
_PARAM_ALIASES = {"omega": Param.OMEGA, "w": Param.OMEGA, "h": Param.FIELD_H,
                  "field_h": Param.FIELD_H, "fieldh": Param.FIELD_H, "j": Param.COUPLING_J,
                  "coupling_j": Param.COUPLING_J, "couplingj": Param.COUPLING_J}


def parse_kind(value) -> Kind:
    if isinstance(value, Kind):
        return value
    try:
        return _KIND_ALIASES[str(value).strip().lower()]
    except KeyError:
        raise ValueError(f"unknown Hamiltonian kind {value!r}; expected one of "
                         f"{[k.value for k in Kind]}") from None


def parse_param(value) -> Param:
    if isinstance(value, Param):
        return value
    try:
        return _PARAM_ALIASES[str(value).strip().lower()]
    except KeyError:
        raise ValueError(f"unknown estimated parameter {value!r}; expected omega, h or J") from None


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class HamiltonianSpec:
    """A Hamiltonian from the family plus the parameter being estimated.

    Parameters not present in ``kind`` must be zero; use :meth:`for_kind`
    to build a spec from a full parameter set and have the others dropped.
    """

    kind: Kind
    estimated: Param
    omega: float = 0.0
    coupling_j: float = 0.0
    field_h: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", parse_kind(self.kind))
        object.__setattr__(self, "estimated", parse_param(self.estimated))
        present = KIND_PARAMS[self.kind]
        values = {Param.OMEGA: self.omega, Param.COUPLING_J: self.coupling_j,
                  Param.FIELD_H: self.field_h}
        for p, v in values.items():
            if not math.isfinite(v):
                raise SpecError(f"parameter {p.value} must be finite")
            if p not in present and v != 0.0:
                raise SpecError(f"{p.value} must be zero for {self.kind.value}, got {v}")
        if self.estimated not in present:
            raise SpecError(f"{self.estimated.value} is not a parameter of {self.kind.value}")

    @classmethod
    def for_kind(cls, kind, estimated, omega=0.0, coupling_j=0.0, field_h=0.0):
        kind = parse_kind(kind)
        present = KIND_PARAMS[kind]
        return cls(kind, estimated,
                   omega=omega if Param.OMEGA in present else 0.0,
                   coupling_j=coupling_j if Param.COUPLING_J in present else 0.0,
                   field_h=field_h if Param.FIELD_H in present else 0.0)

    def value(self, param: Param | None = None) -> float:
        param = self.estimated if param is None else param
        return {Param.OMEGA: self.omega, Param.COUPLING_J: self.coupling_j,
                Param.FIELD_H: self.field_h}[param]

    def shifted(self, delta: float) -> "HamiltonianSpec":
        """Same spec with the estimated parameter moved by ``delta``."""
        kw = {"omega": self.omega, "coupling_j": self.coupling_j, "field_h": self.field_h}
        key = {Param.OMEGA: "omega", Param.COUPLING_J: "coupling_j",
               Param.FIELD_H: "field_h"}[self.estimated]
        kw[key] += delta
        return HamiltonianSpec(self.kind, self.estimated, **kw)


def build_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    """4x4 Hamiltonian (hbar = 1, energies in units of 1/T~)."""
    h = np.zeros((4, 4), dtype=complex)
    if Param.OMEGA in KIND_PARAMS[spec.kind]:
        h -= spec.omega * NUMBER_OP
    if Param.COUPLING_J in KIND_PARAMS[spec.kind]:
        h += spec.coupling_j * ZZ
    if Param.FIELD_H in KIND_PARAMS[spec.kind]:
        h += spec.field_h * X_FIELD
    return h


def hamiltonian_derivative(spec: HamiltonianSpec) -> np.ndarray:
    """dH/d(epsilon) for the estimated parameter. H is linear in each parameter."""
    return {Param.OMEGA: -NUMBER_OP, Param.COUPLING_J: ZZ,
            Param.FIELD_H: X_FIELD}[spec.estimated].copy()


# ---------------------------------------------------------------- probe states

class ProbeFamily(str, enum.Enum):
    PRODUCT = "product"
    MAX_ENTANGLED = "entangled"
    PARTIAL = "partial"


PROBE_DIMS = {ProbeFamily.PRODUCT: 4, ProbeFamily.MAX_ENTANGLED: 6, ProbeFamily.PARTIAL: 6}


def _check_angles(angles, expected: int, what: str) -> tuple:
    angles = tuple(float(a) for a in angles)
    if len(angles) != expected:
        raise ValueError(f"{what} needs {expected} angles, got {len(angles)}")
    for a in angles:
        # the boxes overlap by symmetry; only the outer box is enforced
        if not (-1e-12 <= a <= TWO_PI + 1e-12):
            raise ValueError(f"{what} angle {a} outside [0, 2pi]")
    return angles


@dataclass(frozen=True)
class ProbeParams:
    """Initial-state parameters.

    Product: ``(theta1, delta1, theta2, delta2)`` for two single-qubit states.
    MaxEntangled / Partial: ``(alpha_A, beta_A, gamma_A, alpha_B, beta_B, gamma_B)``
    for the local unitaries applied to ``a|00> + sqrt(1-a^2)|11>``; ``alpha``
    is that amplitude ``a`` and is only used by the Partial family.
    """

    family: ProbeFamily
    angles: tuple
    alpha: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        object.__setattr__(self, "family", ProbeFamily(self.family))
        object.__setattr__(self, "angles",
                           _check_angles(self.angles, PROBE_DIMS[self.family], "probe"))
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.family is ProbeFamily.MAX_ENTANGLED:
            object.__setattr__(self, "alpha", 1.0 / math.sqrt(2.0))


def local_unitary(alpha, beta, gamma) -> np.ndarray:
    """General SU(2) element in the Euler-type parameterization used for U_A, U_B.

    Broadcasts over array arguments; the two trailing axes are the matrix.
    """
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(x, dtype=float)
                                               for x in (alpha, beta, gamma)))
    c = np.cos(gamma / 2)
    s = np.sin(gamma / 2)
    u = np.empty(alpha.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = np.exp(0.5j * (alpha + beta)) * c
    u[..., 0, 1] = np.exp(-0.5j * (alpha - beta)) * s
    u[..., 1, 0] = -np.exp(0.5j * (alpha - beta)) * s
    u[..., 1, 1] = np.exp(-0.5j * (alpha + beta)) * c
    return u


def qubit_state(theta, phase) -> np.ndarray:
    """cos(theta/2)|0> + e^{i phase} sin(theta/2)|1>, broadcasting."""
    theta, phase = np.broadcast_arrays(np.asarray(theta, dtype=float),
                                       np.asarray(phase, dtype=float))
    out = np.empty(theta.shape + (2,), dtype=complex)
    out[..., 0] = np.cos(theta / 2)
    out[..., 1] = np.exp(1j * phase) * np.sin(theta / 2)
    return out


def batch_kron_vec(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[..., :, None] * b[..., None, :]).reshape(a.shape[:-1] + (4,))


def batch_kron_mat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(a.shape[:-2] + (4, 4))


def probe_vectors(family: ProbeFamily, angles: np.ndarray, alpha: float | None = None) -> np.ndarray:
    """Batched probe construction; ``angles`` has shape (..., k)."""
    angles = np.asarray(angles, dtype=float)
    family = ProbeFamily(family)
    if family is ProbeFamily.PRODUCT:
        return batch_kron_vec(qubit_state(angles[..., 0], angles[..., 1]),
                              qubit_state(angles[..., 2], angles[..., 3]))
    if family is ProbeFamily.MAX_ENTANGLED or alpha is None:
        alpha = 1.0 / math.sqrt(2.0)
    base = np.array([alpha, 0, 0, math.sqrt(max(0.0, 1.0 - alpha * alpha))], dtype=complex)
    ua = local_unitary(angles[..., 0], angles[..., 1], angles[..., 2])
    ub = local_unitary(angles[..., 3], angles[..., 4], angles[..., 5])
    return batch_kron_mat(ua, ub) @ base


def build_probe(params: ProbeParams) -> np.ndarray:
    """Unit-norm two-qubit initial state vector."""
    return probe_vectors(params.family, np.array(params.angles), params.alpha)


def concurrence(psi) -> float:
    """Concurrence 2|ad - bc| of a pure two-qubit state (a, b, c, d)."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return float(min(1.0, 2.0 * abs(psi[0] * psi[3] - psi[1] * psi[2])))


def concurrence_of_probe(params: ProbeParams) -> float:
    return concurrence(build_probe(params))


# ---------------------------------------------------------------- measurements

class MeasurementFamily(str, enum.Enum):
    SINGLE_QUBIT = "single"
    TWO_QUBIT = "two"


# Bell basis diagonalizes the commuting generators XX, YY, ZZ of the nonlocal unitary
_BELL = np.array([[1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0]],
                 dtype=complex).T / math.sqrt(2.0)
_BELL_SIGNS = np.array([[1, -1, 1], [-1, 1, 1], [1, 1, -1], [-1, -1, -1]], dtype=float)


@dataclass(frozen=True)
class MeasurementParams:
    """Projector parameters.

    SingleQubit: ``(theta, phi)`` shared by both qubits, or
    ``(theta1, phi1, theta2, phi2)`` with one pair per qubit.
    TwoQubit: twelve local-unitary angles for U_a, U_b, U_a', U_b' followed by
    ``(alpha_x, alpha_y, alpha_z)`` of the nonlocal U_d.
    """

    family: MeasurementFamily
    angles: tuple

    def __post_init__(self):
        object.__setattr__(self, "family", MeasurementFamily(self.family))
        if self.family is MeasurementFamily.SINGLE_QUBIT:
            n = len(self.angles)
            if n not in (2, 4):
                raise ValueError(f"single-qubit measurement needs 2 or 4 angles, got {n}")
            object.__setattr__(self, "angles", _check_angles(self.angles, n, "measurement"))
        else:
            object.__setattr__(self, "angles", _check_angles(self.angles, 15, "measurement"))


def nonlocal_unitary(ax, ay, az) -> np.ndarray:
    """exp(-i (ax XX + ay YY + az ZZ)), broadcasting over the angles."""
    ax, ay, az = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (ax, ay, az)))
    coeffs = np.stack([ax, ay, az], axis=-1)
    phases = np.exp(-1j * coeffs @ _BELL_SIGNS.T)
    return (_BELL * phases[..., None, :]) @ _BELL.conj().T


def two_qubit_measurement_vectors(angles: np.ndarray) -> np.ndarray:
    """Batched (U_a x U_b) U_d (U_a' x U_b') |00>; ``angles`` shape (..., 15)."""
    angles = np.asarray(angles, dtype=float)
    u = [local_unitary(angles[..., 3 * k], angles[..., 3 * k + 1], angles[..., 3 * k + 2])
         for k in range(4)]
    inner = batch_kron_vec(u[2][..., :, 0], u[3][..., :, 0])
    ud = nonlocal_unitary(angles[..., 12], angles[..., 13], angles[..., 14])
    outer = batch_kron_mat(u[0], u[1])
    return np.einsum("...ij,...j->...i", outer @ ud, inner)


def build_measurement(params: MeasurementParams, qubit: int = 0) -> np.ndarray:
    """Measurement vector: a qubit state for SingleQubit (``qubit`` picks which
    pair of angles), a two-qubit state for TwoQubit."""
    a = params.angles
    if params.family is MeasurementFamily.SINGLE_QUBIT:
        if len(a) == 4 and qubit == 1:
            return qubit_state(a[2], a[3])
        return qubit_state(a[0], a[1])
    return two_qubit_measurement_vectors(np.array(a))
