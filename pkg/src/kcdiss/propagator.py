"""Time evolution and stationary states of a vectorized Liouvillian."""

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    ToleranceError,
    apply_super,
    check_density,
    dag,
    hermitize,
    matrix_exp,
    unvectorize,
    vectorize,
)

TOL_NULL = 1e-10


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, d, d)
    liouvillian: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.times)


@dataclass
class SteadyStateResult:
    null_dimension: int
    null_basis: list
    stationary_state: np.ndarray = None
    residual: float = float("nan")
    gap: float = float("inf")
    singular_values: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class AnalyticStationary:
    """Long-time state of the undriven constrained model: p on |++>, 1-p on |-->, coherence c."""

    p: float
    c: complex

    def matrix(self):
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = self.p
        m[3, 3] = 1.0 - self.p
        m[0, 3] = self.c
        m[3, 0] = np.conj(self.c)
        return m


def _rk4_states(liouvillian, rho0, times, step):
    def rhs(v):
        return liouvillian @ v

    v = vectorize(rho0)
    t = 0.0
    out = []
    for target in times:
        n = int(np.ceil((target - t) / step - 1e-9))
        h = (target - t) / n if n > 0 else 0.0
        for _ in range(n):
            k1 = rhs(v)
            k2 = rhs(v + 0.5 * h * k1)
            k3 = rhs(v + 0.5 * h * k2)
            k4 = rhs(v + h * k3)
            v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = target
        out.append(unvectorize(v))
    return out


def propagate(liouvillian, rho0, times, method="expm", rk4_step=1e-3):
    """States exp(L t_k)[rho0] on a strictly increasing, non-negative time grid.

    ``method="rk4"`` integrates with a fixed-step RK4 instead; it is kept as
    an independent cross-check of the exponential propagator.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size == 0:
        raise ValueError("empty time grid")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")
    rho0 = check_density(rho0)

    if method == "rk4":
        raw = _rk4_states(liouvillian, rho0, times, rk4_step)
    elif method == "expm":
        raw = []
        dts = np.diff(times)
        uniform = dts.size > 0 and np.allclose(dts, dts[0], rtol=1e-12, atol=0.0)
        v = matrix_exp(liouvillian * times[0]) @ vectorize(rho0)
        raw.append(unvectorize(v))
        step = matrix_exp(liouvillian * dts[0]) if uniform else None
        for k in range(1, times.size):
            if uniform:
                v = step @ v
            else:
                v = matrix_exp(liouvillian * times[k]) @ vectorize(rho0)
            raw.append(unvectorize(v))
    else:
        raise ValueError(f"unknown propagation method {method!r}")

    states = np.empty((times.size,) + rho0.shape, dtype=complex)
    for k, rho in enumerate(raw):
        try:
            states[k] = check_density(rho)
        except ToleranceError as exc:
            raise ToleranceError(f"state at t={times[k]:g}: {exc}") from None
    return Trajectory(times=times, states=states, liouvillian=liouvillian)


def _hermitian_kernel_basis(vectors):
    """Hermitian basis of the span of unvectorized kernel vectors (closed under +)."""
    mats = []
    for v in vectors:
        m = unvectorize(v)
        mats += [hermitize(m), hermitize(1j * m)]
    flat = np.array([vectorize(m) for m in mats])
    # orthonormalize over the reals
    real_flat = np.concatenate([flat.real, flat.imag], axis=1)
    u, s, vt = np.linalg.svd(real_flat, full_matrices=False)
    rank = int(np.sum(s > 1e-8 * s[0])) if s.size else 0
    half = flat.shape[1]
    basis = []
    for row in vt[:rank]:
        m = unvectorize(row[:half] + 1j * row[half:])
        basis.append(hermitize(m))
    return basis


def steady_states(liouvillian, tol_null=TOL_NULL):
    """Kernel of L from the eigendecomposition of L^+ L."""
    lhl = dag(liouvillian) @ liouvillian
    w, v = np.linalg.eigh(hermitize(lhl))
    w = np.clip(w, 0.0, None)
    scale = w[-1] if w[-1] > 0 else 1.0
    null = w < tol_null * scale
    dim = int(np.sum(null))
    sv = np.sqrt(w)
    if 0 < dim < w.size:
        gap = sv[dim] / sv[dim - 1] if sv[dim - 1] > 0 else float("inf")
    else:
        gap = float("inf")
    basis = _hermitian_kernel_basis(v[:, :dim].T) if dim else []
    result = SteadyStateResult(null_dimension=dim, null_basis=basis, gap=gap, singular_values=sv)
    if dim == 1:
        m = unvectorize(v[:, 0])
        m = hermitize(m / np.trace(m))
        result.stationary_state = check_density(m)
        result.residual = float(np.max(np.abs(apply_super(liouvillian, result.stationary_state))))
    return result


def stationary_from_initial(liouvillian, rho0, t0=1.0, tol=1e-10, max_doublings=60):
    """Long-time limit of exp(L t)[rho0] by repeated squaring of exp(L t0)."""
    rho0 = check_density(rho0)
    v0 = vectorize(rho0)
    prop = matrix_exp(liouvillian * t0)
    prev = prop @ v0
    for _ in range(max_doublings):
        prop = prop @ prop
        cur = prop @ v0
        if np.max(np.abs(cur - prev)) < tol:
            rho = check_density(unvectorize(cur))
            res = np.max(np.abs(apply_super(liouvillian, rho)))
            if res >= 1e-8:
                raise ToleranceError(f"long-time state has generator residual {res:.3g}")
            return rho
        prev = cur
    raise ToleranceError(f"no convergence after {max_doublings} time doublings")


def analytic_stationary(rho0):
    """Closed-form long-time state of the undriven minus-constrained model."""
    rho0 = check_density(rho0)
    return AnalyticStationary(p=float(rho0[0, 0].real), c=complex(rho0[0, 3]))


def perturbative_stationary(gamma, omega, delta_omega):
    """First-order (in delta_omega) stationary state for gamma_A = gamma_B = gamma.

    The first-order correction does not depend on ``omega``; it is accepted
    to keep the signature aligned with the exact solver.
    """
    if not gamma > 0 or not omega > 0:
        raise ValueError("gamma and omega must be positive")
    e = 1j * delta_omega / gamma
    return np.array([
        [0.5, -e, e, -0.5],
        [e, 0, 0, -e],
        [-e, 0, 0, e],
        [-0.5, e, -e, 0.5],
    ], dtype=complex)
