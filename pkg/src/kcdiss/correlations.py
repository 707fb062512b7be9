"""Two-qubit entanglement and correlation measures.

Entropies are in bits. Discord-type quantities use projective measurements
on subsystem B by default, parametrized by Bloch angles (theta, phi).
"""

from dataclasses import dataclass

import numpy as np

from .linalg import check_density, dag, partial_trace

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_SIGMA_YY = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex)
_PROB_FLOOR = 1e-14


@dataclass(frozen=True)
class MeasurementDirection:
    theta: float
    phi: float

    def projectors(self):
        return measurement_projectors(self.theta, self.phi)


@dataclass(frozen=True)
class CorrelationReport:
    concurrence: float
    concurrence_eigenvalues: tuple
    mutual_information: float
    classical: float
    discord: float
    entropy_A: float
    entropy_B: float
    entropy_AB: float
    argmax_direction: MeasurementDirection
    argmin_direction: MeasurementDirection

    def as_dict(self):
        return {
            "concurrence": self.concurrence,
            "concurrence_eigenvalues": list(self.concurrence_eigenvalues),
            "mutual_information": self.mutual_information,
            "classical": self.classical,
            "discord": self.discord,
            "entropy_A": self.entropy_A,
            "entropy_B": self.entropy_B,
            "entropy_AB": self.entropy_AB,
            "direction": {"theta": self.argmax_direction.theta, "phi": self.argmax_direction.phi},
        }


def spin_flip(rho):
    return _SIGMA_YY @ np.conj(rho) @ _SIGMA_YY


def _root(rho, floor=1e-14):
    """PSD square root with eigenvalue dust below ``floor`` set to zero."""
    w, v = np.linalg.eigh(rho)
    w = np.where(w > floor, w, 0.0)
    return (v * np.sqrt(w)[..., None, :]) @ dag(v)


def _flip_roots(rhos):
    """sqrt(lambda_i), decreasing, for each state of a (..., 4, 4) stack.

    The sqrt(lambda_i) are the eigenvalues of sqrt(sqrt(rho) rho~ sqrt(rho)),
    i.e. the singular values of sqrt(rho) sqrt(rho~), with
    sqrt(rho~) = YY conj(sqrt(rho)) YY. The SVD keeps them accurate near zero.
    """
    s = _root(rhos)
    return np.linalg.svd(s @ _SIGMA_YY @ np.conj(s) @ _SIGMA_YY, compute_uv=False)


def concurrence_eigenvalues(rho):
    """Eigenvalues of rho @ spin_flip(rho), decreasing."""
    rho = check_density(rho)
    return _flip_roots(rho) ** 2


def _concurrence_from_roots(r):
    return np.maximum(0.0, r[..., 0] - r[..., 1] - r[..., 2] - r[..., 3])


def concurrence(rho):
    rho = check_density(rho)
    return float(_concurrence_from_roots(_flip_roots(rho)))


def concurrence_batch(rhos):
    """Concurrence of a stack (..., 4, 4) of states, without validation."""
    return _concurrence_from_roots(_flip_roots(np.asarray(rhos, dtype=complex)))


def _shannon_bits(p):
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=-1)


def entropy(rho):
    """Von Neumann entropy in bits."""
    rho = check_density(rho)
    return float(_shannon_bits(np.linalg.eigvalsh(rho)))


def mutual_information(rho):
    rho = check_density(rho)
    return (entropy(partial_trace(rho, "A")) + entropy(partial_trace(rho, "B"))
            - entropy(rho))


def measurement_projectors(theta, phi):
    """(Pi_+, Pi_-) for the Bloch direction (theta, phi)."""
    c, s, e = np.cos(theta / 2), np.sin(theta / 2), np.exp(1j * phi)
    n_plus = np.array([c, e * s])
    n_minus = np.array([-s, e * c])
    return np.outer(n_plus, n_plus.conj()), np.outer(n_minus, n_minus.conj())


def _conditional_entropy_many(rho, thetas, phis, side="B"):
    """Vectorized S(rho | Pi_n) over arrays of angles (same shape)."""
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    # t[a, b, a', b'] with measured index moved to (b, b')
    t = rho.reshape(2, 2, 2, 2)
    if side == "A":
        t = t.transpose(1, 0, 3, 2)
    elif side != "B":
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    c, s, e = np.cos(thetas / 2), np.sin(thetas / 2), np.exp(1j * phis)
    total = np.zeros(thetas.shape)
    for vec in ((c, e * s), (-s, e * c)):
        v0, v1 = vec
        # unnormalized conditional state  <n| rho |n>_B, entries [a, a']
        v = np.stack([np.broadcast_to(v0, thetas.shape), v1], axis=-1)
        cond = np.einsum("...b,xbyc,...c->...xy", v.conj(), t, v)
        prob = np.real(cond[..., 0, 0] + cond[..., 1, 1])
        tr_half = 0.5 * prob
        det = np.real(cond[..., 0, 0] * cond[..., 1, 1]) - np.abs(cond[..., 0, 1]) ** 2
        disc = np.sqrt(np.clip(tr_half ** 2 - det, 0.0, None))
        ev = np.stack([tr_half + disc, tr_half - disc], axis=-1)
        safe = np.where(prob > _PROB_FLOOR, prob, 1.0)
        h = _shannon_bits(ev / safe[..., None])
        total += np.where(prob > _PROB_FLOOR, prob * h, 0.0)
    return total


def conditional_entropy(rho, direction, side="B"):
    rho = check_density(rho)
    if not isinstance(direction, MeasurementDirection):
        direction = MeasurementDirection(*direction)
    return float(_conditional_entropy_many(rho, direction.theta, direction.phi, side))


def golden_section_min(f, a, b, tol=1e-9):
    """Minimize a unimodal f on [a, b]; returns (x, f(x))."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _bloch_vector(theta, phi):
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def _bloch_angles(n):
    theta = np.arctan2(np.hypot(n[0], n[1]), n[2])
    return float(theta), float(np.arctan2(n[1], n[0]) % (2 * np.pi))


def _tangent(n, hint):
    """Unit vector orthogonal to n, as close as possible to ``hint``."""
    t = hint - np.dot(hint, n) * n
    if np.linalg.norm(t) < 1e-6:
        axis = np.eye(3)[int(np.argmin(np.abs(n)))]
        t = axis - np.dot(axis, n) * n
    return t / np.linalg.norm(t)


def minimize_conditional_entropy(rho, side="B", grid=64, step_tol=1e-7, max_passes=200):
    """Minimal S(rho|Pi_n): coarse angle grid, then coordinate golden-section passes.

    The refinement works in a tangent-plane chart centred on the current best
    Bloch direction, so it is not slowed down near the poles of the (theta, phi)
    chart. A step is only taken when it lowers the objective.
    Returns (min value, MeasurementDirection, coarse-grid value).
    """
    thetas = np.linspace(0.0, np.pi, grid)
    phis = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    vals = _conditional_entropy_many(rho, tt, pp, side)
    k = np.unravel_index(np.argmin(vals), vals.shape)
    n = _bloch_vector(thetas[k[0]], phis[k[1]])
    best = coarse = float(vals[k])
    h = thetas[1] - thetas[0]
    e1 = _tangent(n, np.array([0.0, 0.0, 1.0]))

    def f(vec):
        vec = vec / np.linalg.norm(vec)
        return float(_conditional_entropy_many(rho, *_bloch_angles(vec), side))

    for _ in range(max_passes):
        moved = 0.0
        for axis in (e1, np.cross(n, e1)):
            u, val = golden_section_min(lambda x: f(n + x * axis), -h, h, step_tol / 10)
            if val < best:
                n, best = (n + u * axis) / np.linalg.norm(n + u * axis), val
                moved = max(moved, abs(u))
            e1 = _tangent(n, e1)
        if moved < step_tol:
            break
        if moved < h / 2:
            h = max(h / 2, step_tol)
    theta, phi = _bloch_angles(n)
    return best, MeasurementDirection(theta, phi), coarse


def _measured_entropies(rho, side):
    kept = "A" if side == "B" else "B"
    return entropy(partial_trace(rho, kept)), entropy(partial_trace(rho, side))


def classical_correlation(rho, side="B"):
    """(sup_n [S(kept) - S(rho|Pi_n)], maximizing direction)."""
    rho = check_density(rho)
    s_kept, _ = _measured_entropies(rho, side)
    smin, direction, _ = minimize_conditional_entropy(rho, side)
    return s_kept - smin, direction


def discord(rho, side="B"):
    """(I - Q, minimizing direction); shares the optimum with :func:`classical_correlation`."""
    rho = check_density(rho)
    q, direction = classical_correlation(rho, side)
    return mutual_information(rho) - q, direction


def correlation_report(rho, side="B"):
    rho = check_density(rho)
    lams = concurrence_eigenvalues(rho)
    s_a = entropy(partial_trace(rho, "A"))
    s_b = entropy(partial_trace(rho, "B"))
    s_ab = entropy(rho)
    mi = s_a + s_b - s_ab
    smin, direction, _ = minimize_conditional_entropy(rho, side)
    q = (s_a if side == "B" else s_b) - smin
    return CorrelationReport(
        concurrence=float(_concurrence_from_roots(np.sqrt(lams))),
        concurrence_eigenvalues=tuple(float(x) for x in lams),
        mutual_information=mi,
        classical=q,
        discord=mi - q,
        entropy_A=s_a,
        entropy_B=s_b,
        entropy_AB=s_ab,
        argmax_direction=direction,
        argmin_direction=direction,
    )
