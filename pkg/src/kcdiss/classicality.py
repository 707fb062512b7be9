"""Closure test for projector constraints and the reduced rate dynamics it implies.

Channels are aligned with the partner projector set: the k-th slot of
subsystem A holds the channel constrained by the k-th projector of B (and
vice versa). A slot without a channel behaves as a zero-rate channel.

Index conventions (n = number of projectors, equal on both sides):

* ``alpha[i, k, j]``: coefficient of P_k in A_j^+ P_i A_j (transition k -> i
  of A driven by A's channel j, which is constrained by Q_j).
* ``beta[i, k, j]``: same for B, Q and B_j (constrained by P_j).
* ``states_A[i] = Tr_B[Q_i rho]``, ``states_B[i] = Tr_A[P_i rho]``.
* ``occupations[i, j] = Tr[states_A[i] P_j]`` (B in Q_i, A in P_j).
"""

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, dag, left, matrix_exp, partial_trace, right, unvectorize, vectorize

TOL_CLASSICAL = 1e-10


@dataclass(frozen=True)
class ClosureReport:
    classical: bool
    alpha: np.ndarray
    beta: np.ndarray
    residual: float
    degenerate: bool = False

    def as_dict(self):
        return {
            "classical": self.classical,
            "degenerate": self.degenerate,
            "residual": self.residual,
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
        }


@dataclass(frozen=True)
class RateMatrix:
    a: np.ndarray
    b: np.ndarray


@dataclass
class ConditionalStateSet:
    states_A: np.ndarray  # (n, dA, dA)
    states_B: np.ndarray  # (n, dB, dB)
    occupations_A: np.ndarray  # p[i, j] = Tr[states_A[i] P_j]
    occupations_B: np.ndarray  # q[i, j] = Tr[states_B[i] Q_j]


def check_projector_set(projectors, tol=1e-12):
    projectors = [as_matrix(p) for p in projectors]
    d = projectors[0].shape[0]
    for i, p in enumerate(projectors):
        for j, q in enumerate(projectors):
            target = p if i == j else np.zeros_like(p)
            if np.max(np.abs(p @ q - target)) > tol:
                raise ValueError(f"projectors {i} and {j} are not orthogonal projectors")
    if np.max(np.abs(sum(projectors) - np.eye(d))) > tol:
        raise ValueError("projector set is not complete (sum != identity)")
    return projectors


def _match_projector(constraint, projectors, tol=1e-12):
    for k, p in enumerate(projectors):
        if np.max(np.abs(constraint - p)) <= tol:
            return k
    raise ValueError("channel constraint is not a member of the partner projector set")


def align_channels(channels, partner_projectors):
    """(operators, rates) indexed by the partner projector that constrains each channel."""
    n = len(partner_projectors)
    d = channels[0].operator.shape[0] if channels else partner_projectors[0].shape[0]
    ops = [np.zeros((d, d), dtype=complex) for _ in range(n)]
    rates = np.zeros(n)
    taken = set()
    for ch in channels:
        k = _match_projector(ch.constraint, partner_projectors)
        if k in taken:
            raise ValueError(f"more than one channel is constrained by projector {k}")
        taken.add(k)
        ops[k] = ch.operator
        rates[k] = ch.rate
    return ops, rates


def _expand(operators, projectors):
    n = len(projectors)
    coef = np.zeros((n, n, len(operators)))
    residual = 0.0
    for j, op in enumerate(operators):
        for i, p in enumerate(projectors):
            m = dag(op) @ p @ op
            for k, pk in enumerate(projectors):
                coef[i, k, j] = (np.trace(pk @ m) / np.trace(pk)).real
            approx = sum(coef[i, k, j] * pk for k, pk in enumerate(projectors))
            residual = max(residual, float(np.max(np.abs(m - approx))))
    return coef, residual


def check_closure(channels_A, channels_B, proj_A, proj_B, tol=TOL_CLASSICAL):
    """Test whether each projector set is closed under the own channels' transitions.

    A single-projector set ({I}) is reported as ``degenerate`` and never as
    classical: its expansion cannot have a vanishing diagonal.
    """
    proj_A = check_projector_set(proj_A)
    proj_B = check_projector_set(proj_B)
    if len(proj_A) != len(proj_B):
        raise ValueError("projector sets of A and B must have the same size")
    for p in proj_A + proj_B:
        if abs(np.trace(p)) < 1e-12:
            raise ValueError("projector set contains a zero-trace projector")
    ops_A, _ = align_channels(channels_A, proj_B)
    ops_B, _ = align_channels(channels_B, proj_A)
    alpha, res_a = _expand(ops_A, proj_A)
    beta, res_b = _expand(ops_B, proj_B)
    residual = max(res_a, res_b)
    n = len(proj_A)
    diag = max(np.max(np.abs(alpha[np.arange(n), np.arange(n), :])),
               np.max(np.abs(beta[np.arange(n), np.arange(n), :])))
    degenerate = n == 1
    classical = (not degenerate and residual < tol and diag < tol
                 and alpha.min() > -tol and beta.min() > -tol)
    return ClosureReport(classical=bool(classical), alpha=alpha, beta=beta,
                         residual=residual, degenerate=degenerate)


def rate_coefficients(report, gammas_A, gammas_B, force=False):
    """a[i, k, j] = gamma_A^j alpha[i, k, j] and likewise for b.

    ``force=True`` builds rates from a non-classical report; the resulting
    reduced dynamics is then only an (uncontrolled) approximation.
    """
    if not report.classical and not force:
        raise ValueError("rate coefficients require a classical closure report")
    ga = np.asarray(gammas_A, dtype=float)
    gb = np.asarray(gammas_B, dtype=float)
    return RateMatrix(a=report.alpha * ga[None, None, :], b=report.beta * gb[None, None, :])


def conditional_states(rho, proj_A, proj_B):
    rho = as_matrix(rho)
    dA, dB = proj_A[0].shape[0], proj_B[0].shape[0]
    eye_A, eye_B = np.eye(dA), np.eye(dB)
    states_A = np.array([partial_trace(np.kron(eye_A, q) @ rho, "A", dA, dB) for q in proj_B])
    states_B = np.array([partial_trace(np.kron(p, eye_B) @ rho, "B", dA, dB) for p in proj_A])
    return ConditionalStateSet(
        states_A=states_A,
        states_B=states_B,
        occupations_A=_occupations(states_A, proj_A),
        occupations_B=_occupations(states_B, proj_B),
    )


def _occupations(states, projectors):
    occ = np.array([[np.trace(s @ p).real for p in projectors] for s in states])
    if occ.min() < -1e-12:
        raise ValueError(f"negative occupation {occ.min():.3g}")
    return np.clip(occ, 0.0, None)


def _anticomm(p):
    return left(p) + right(p)


def _sandwich(p):
    return left(p) @ right(p)


def rate_generator(own_ops, own_rates, partner_coef_rates, own_projectors):
    """Stacked generator for the conditional states of one subsystem.

    ``partner_coef_rates[i, k, j]`` is the partner's rate for its transition
    k -> i through its channel j, which is constrained by ``own_projectors[j]``.
    """
    n = len(own_projectors)
    d = own_projectors[0].shape[0]
    blk = d * d
    gen = np.zeros((n * blk, n * blk), dtype=complex)
    for i in range(n):
        sl_i = slice(i * blk, (i + 1) * blk)
        op = own_ops[i]
        opd = dag(op) @ op
        gen[sl_i, sl_i] += own_rates[i] * (left(op) @ right(dag(op)) - 0.5 * (left(opd) + right(opd)))
        for j in range(n):
            sl_j = slice(j * blk, (j + 1) * blk)
            for k in range(n):
                gen[sl_i, sl_j] += partner_coef_rates[i, j, k] * _sandwich(own_projectors[k])
        for k in range(n):
            out_rate = partner_coef_rates[:, i, k].sum()
            gen[sl_i, sl_i] -= 0.5 * out_rate * _anticomm(own_projectors[k])
    return gen


def integrate_rate_equations(initial, rates, channels_A, channels_B, proj_A, proj_B, times):
    """Evolve the conditional states with the closed rate equations.

    Returns one :class:`ConditionalStateSet` per time.
    """
    proj_A = check_projector_set(proj_A)
    proj_B = check_projector_set(proj_B)
    ops_A, gam_A = align_channels(channels_A, proj_B)
    ops_B, gam_B = align_channels(channels_B, proj_A)
    n = len(proj_A)
    if initial.states_A.shape[0] != n or initial.states_B.shape[0] != n:
        raise ValueError("initial conditional states do not match the projector sets")
    gen_A = rate_generator(ops_A, gam_A, rates.b, proj_A)
    gen_B = rate_generator(ops_B, gam_B, rates.a, proj_B)
    va = np.concatenate([vectorize(s) for s in initial.states_A])
    vb = np.concatenate([vectorize(s) for s in initial.states_B])
    dA, dB = proj_A[0].shape[0], proj_B[0].shape[0]
    out = []
    for t in np.asarray(times, dtype=float):
        xa = matrix_exp(gen_A * t) @ va
        xb = matrix_exp(gen_B * t) @ vb
        sa = np.array([unvectorize(x) for x in xa.reshape(n, dA * dA)])
        sb = np.array([unvectorize(x) for x in xb.reshape(n, dB * dB)])
        out.append(ConditionalStateSet(sa, sb, _occupations(sa, proj_A), _occupations(sb, proj_B)))
    return out


def classical_generator(rates):
    """Generator of the occupation chain on flattened p[i, j] (B label i, A label j)."""
    a, b = rates.a, rates.b
    n = a.shape[0]
    gen = np.zeros((n * n, n * n))

    def idx(i, j):
        return i * n + j

    for i in range(n):
        for j in range(n):
            for k in range(n):
                # A moves k -> j through its channel i
                gen[idx(i, j), idx(i, k)] += a[j, k, i]
                gen[idx(i, j), idx(i, j)] -= a[k, j, i]
                # B moves k -> i through its channel j
                gen[idx(i, j), idx(k, j)] += b[i, k, j]
                gen[idx(i, j), idx(i, j)] -= b[k, i, j]
    return gen


def classical_occupations(rates, p0, times):
    """Solve the classical master equation; returns array (n_times, n, n)."""
    p0 = np.asarray(p0, dtype=float)
    if p0.min() < 0:
        raise ValueError("occupations must be non-negative")
    if abs(p0.sum() - 1.0) > 1e-10:
        raise ValueError(f"occupations must sum to 1, got {p0.sum()!r}")
    n = p0.shape[0]
    gen = classical_generator(rates)
    out = []
    for t in np.asarray(times, dtype=float):
        p = (matrix_exp(gen * t).real @ p0.reshape(-1)).reshape(n, n)
        if p.min() < -1e-12:
            raise ValueError(f"negative occupation {p.min():.3g} at t={t}")
        out.append(np.clip(p, 0.0, None))
    return np.array(out)
