"""Dense complex-matrix primitives.

Vectorization convention (used everywhere in the package): column stacking,

    vec(X @ rho @ Y) == kron(Y.T, X) @ vec(rho)

so that ``left(X) = kron(I, X)`` and ``right(Y) = kron(Y.T, I)``.
"""

import numpy as np
import scipy.linalg

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-9


class ToleranceError(ValueError):
    """A numerical invariant was violated beyond its tolerance."""


def as_matrix(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dag(m):
    return np.conj(np.swapaxes(m, -1, -2))


def kron(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def is_hermitian(m, tol=TOL_HERM):
    return np.max(np.abs(m - dag(m)), initial=0.0) <= tol


def hermitize(m):
    return 0.5 * (m + dag(m))


def check_density(rho, tol_herm=TOL_HERM, tol_trace=TOL_TRACE, tol_psd=TOL_PSD):
    """Validate a density matrix and return a cleaned copy.

    The copy is exactly Hermitian; eigenvalues in (-tol_psd, 0) are clamped
    to zero. Anything worse raises :class:`ToleranceError`.
    """
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    herm_err = np.max(np.abs(rho - dag(rho)))
    if herm_err > tol_herm:
        raise ToleranceError(f"density matrix not Hermitian (max |rho - rho^+| = {herm_err:.3g})")
    rho = hermitize(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol_trace:
        raise ToleranceError(f"density matrix trace {tr!r} deviates from 1")
    w, v = np.linalg.eigh(rho)
    if w[0] < -tol_psd:
        raise ToleranceError(f"density matrix has eigenvalue {w[0]:.3g} < -{tol_psd}")
    if w[0] < 0.0:
        w = np.clip(w, 0.0, None)
        rho = hermitize((v * w) @ dag(v))
    return rho


def partial_trace(rho, keep="A", dA=2, dB=2):
    """Reduced matrix of subsystem ``keep`` ("A" or "B") of a dA*dB operator."""
    rho = as_matrix(rho)
    if rho.shape != (dA * dB, dA * dB):
        raise ValueError(f"operator of shape {rho.shape} does not match dA*dB = {dA * dB}")
    t = rho.reshape(dA, dB, dA, dB)
    if keep == "A":
        return np.einsum("ajbj->ab", t)
    if keep == "B":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def hermitian_eigensystem(h, tol=TOL_HERM):
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian matrix."""
    h = as_matrix(h)
    if h.shape[0] != h.shape[1] or not is_hermitian(h, tol):
        raise ValueError("hermitian_eigensystem requires a Hermitian matrix")
    w, v = np.linalg.eigh(hermitize(h))
    return w, v


def psd_sqrt(rho, tol_psd=TOL_PSD):
    w, v = hermitian_eigensystem(rho)
    if w[0] < -tol_psd:
        raise ToleranceError(f"matrix not positive semidefinite (eigenvalue {w[0]:.3g})")
    w = np.sqrt(np.clip(w, 0.0, None))
    return hermitize((v * w) @ dag(v))


def matrix_exp(m):
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("matrix_exp requires a square matrix")
    return scipy.linalg.expm(m)


def vectorize(m):
    return as_matrix(m).reshape(-1, order="F")


def unvectorize(v):
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d, order="F")


def left(x):
    """Superoperator of rho -> x @ rho."""
    x = as_matrix(x)
    return np.kron(np.eye(x.shape[0]), x)


def right(y):
    """Superoperator of rho -> rho @ y."""
    y = as_matrix(y)
    return np.kron(y.T, np.eye(y.shape[0]))


def commutator_super(h):
    return left(h) - right(h)


def dissipator_super(v):
    """Superoperator of rho -> v rho v^+ - {v^+ v, rho}/2."""
    v = as_matrix(v)
    vdv = dag(v) @ v
    return left(v) @ right(dag(v)) - 0.5 * (left(vdv) + right(vdv))


def apply_super(superop, rho):
    return unvectorize(superop @ vectorize(rho))
