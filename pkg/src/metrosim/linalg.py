"""Dense complex linear algebra for 2x2 and 4x4 operators.

Everything here works on plain ``numpy`` arrays. The eigensolver is a cyclic
Jacobi sweep, which is exact enough at these sizes and keeps the Hermitian
spectral routines free of LAPACK; batched hot paths elsewhere in the package
call ``numpy.linalg`` directly and are cross-checked against these.
"""

from __future__ import annotations

import math

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
IDENTITY_4 = np.eye(4, dtype=complex)

HERMITIAN_TOL = 1e-10
JACOBI_TOL = 1e-14


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


def _as_operator(m, dims=(2, 4)) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in dims:
        raise DimensionError(f"expected a square matrix of size {dims}, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def kron(a, b) -> np.ndarray:
    """Kronecker product of two 2x2 operators, ``out[2i+k, 2j+l] = a[i,j] b[k,l]``."""
    a = _as_operator(a, dims=(2,))
    b = _as_operator(b, dims=(2,))
    out = np.empty((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[2 * i:2 * i + 2, 2 * j:2 * j + 2] = a[i, j] * b
    return out


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m))))


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_error(np.asarray(m, dtype=complex)) <= tol


def hermitian_eig(m, tol: float = HERMITIAN_TOL, max_sweeps: int = 50):
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as orthonormal columns, so that
    ``m = V diag(w) V^dagger``.
    """
    m = _as_operator(m)
    asym = hermiticity_error(m)
    if asym > tol:
        raise NotHermitianError(f"matrix is not Hermitian: max |m - m^dagger| = {asym:.3e}")
    a = 0.5 * (m + dagger(m))
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1.0)

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                # phase rotation makes a[p, q] real, then a real Jacobi rotation zeroes it
                phase = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[p, q] = s
                g[q, p] = -s * np.conj(phase)
                g[q, q] = c * np.conj(phase)
                a = dagger(g) @ a @ g
                v = v @ g
    else:
        raise RuntimeError("Jacobi eigensolver did not converge")

    w = np.real(np.diag(a))
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _expm_taylor(m: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(m, 1)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    a = m / (2.0 ** squarings)
    out = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, 30):
        term = term @ a / k
        out = out + term
        if np.max(np.abs(term)) < 1e-18:
            break
    for _ in range(squarings):
        out = out @ out
    return out


def expm(m) -> np.ndarray:
    """Matrix exponential.

    Hermitian and anti-Hermitian generators (every propagator in this package)
    go through the spectral route; anything else falls back to scaled and
    squared Taylor series.
    """
    m = _as_operator(m)
    if is_hermitian(m, 1e-12):
        w, v = hermitian_eig(m, tol=1e-12)
        return (v * np.exp(w)) @ dagger(v)
    h = 1j * m
    if is_hermitian(h, 1e-12):
        w, v = hermitian_eig(h, tol=1e-12)
        return (v * np.exp(-1j * w)) @ dagger(v)
    return _expm_taylor(m)


def partial_trace(rho, keep: str = "first") -> np.ndarray:
    """Reduce a two-qubit operator to one qubit.

    ``keep="first"`` traces out the second (right) factor and vice versa.
    """
    rho = _as_operator(rho, dims=(4,))
    tr = np.trace(rho)
    if abs(tr - 1.0) > HERMITIAN_TOL:
        raise ValueError(f"partial_trace expects a unit-trace operator, trace = {tr:.12g}")
    r = rho.reshape(2, 2, 2, 2)
    if keep == "first":
        return np.einsum("ikjk->ij", r)
    if keep == "second":
        return np.einsum("kikj->ij", r)
    raise ValueError(f"keep must be 'first' or 'second', got {keep!r}")
