"""Operators, constrained channels and the two optical-qubit models.

Single-qubit basis ordering is (|+>, |->); the two-qubit product basis is
|1>=|++>, |2>=|+->, |3>=|-+>, |4>=|-->. Units: hbar = 1, rates and Rabi
frequencies in units of a reference decay rate.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, commutator_super, dag, dissipator_super, is_hermitian

SQRT1_2 = 1.0 / np.sqrt(2.0)

_X_PLUS = np.array([1.0, 1.0], dtype=complex) * SQRT1_2
_X_MINUS = np.array([1.0, -1.0], dtype=complex) * SQRT1_2

_QUBIT_OPERATORS = {
    "sigma_minus": np.array([[0, 0], [1, 0]], dtype=complex),
    "sigma_x": np.array([[0, 1], [1, 0]], dtype=complex),
    "sigma_y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "sigma_z": np.array([[1, 0], [0, -1]], dtype=complex),
    "identity": np.eye(2, dtype=complex),
    "proj_plus": np.array([[1, 0], [0, 0]], dtype=complex),
    "proj_minus": np.array([[0, 0], [0, 1]], dtype=complex),
    "proj_x_plus": np.outer(_X_PLUS, _X_PLUS.conj()),
    "proj_x_minus": np.outer(_X_MINUS, _X_MINUS.conj()),
}

CONSTRAINT_KINDS = ("none", "minus_minus", "plus_plus", "x_basis")

_CONSTRAINT_PROJECTOR = {
    "none": "identity",
    "minus_minus": "proj_minus",
    "plus_plus": "proj_plus",
    "x_basis": "proj_x_plus",
}


def qubit_operator(name):
    """2x2 operator by name.

    ``proj_x_pm`` returns the pair (|x+><x+|, |x-><x-|).
    """
    if name == "proj_x_pm":
        return qubit_operator("proj_x_plus"), qubit_operator("proj_x_minus")
    try:
        return _QUBIT_OPERATORS[name].copy()
    except KeyError:
        raise ValueError(f"unknown qubit operator {name!r}") from None


def _check_projector(p, tol=1e-12):
    return np.max(np.abs(p @ p - p)) <= tol and np.max(np.abs(p - dag(p))) <= tol


@dataclass(frozen=True)
class DissipativeChannel:
    """One constrained Lindblad channel of a subsystem.

    ``operator`` acts on the own subsystem, ``constraint`` is an orthogonal
    projector on the partner (identity for an unconstrained channel).
    """

    operator: np.ndarray
    rate: float
    constraint: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "operator", as_matrix(self.operator))
        object.__setattr__(self, "constraint", as_matrix(self.constraint))
        if not self.rate >= 0:
            raise ValueError(f"channel rate must be >= 0, got {self.rate}")
        if not _check_projector(self.constraint):
            raise ValueError("channel constraint is not an orthogonal projector")


@dataclass(frozen=True)
class BipartiteModel:
    dA: int
    dB: int
    hamiltonian: np.ndarray
    channels_A: tuple = field(default_factory=tuple)
    channels_B: tuple = field(default_factory=tuple)

    def __post_init__(self):
        h = as_matrix(self.hamiltonian)
        n = self.dA * self.dB
        if h.shape != (n, n):
            raise ValueError(f"hamiltonian shape {h.shape} does not match {n}x{n}")
        if not is_hermitian(h, 1e-12):
            raise ValueError("hamiltonian is not Hermitian")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "channels_A", tuple(self.channels_A))
        object.__setattr__(self, "channels_B", tuple(self.channels_B))
        for ch in self.channels_A:
            if ch.operator.shape != (self.dA, self.dA) or ch.constraint.shape != (self.dB, self.dB):
                raise ValueError("channel of A has wrong operator/constraint dimensions")
        for ch in self.channels_B:
            if ch.operator.shape != (self.dB, self.dB) or ch.constraint.shape != (self.dA, self.dA):
                raise ValueError("channel of B has wrong operator/constraint dimensions")

    def jump_operators(self):
        """(rate, joint operator) pairs: A_i x Q_i and P_i x B_i."""
        out = [(ch.rate, np.kron(ch.operator, ch.constraint)) for ch in self.channels_A]
        out += [(ch.rate, np.kron(ch.constraint, ch.operator)) for ch in self.channels_B]
        return out


def build_two_qubit_model(gamma_A=1.0, gamma_B=1.0, constraint="minus_minus", rabi=None,
                          detuning=0.0):
    """Two optical qubits with lowering-operator decay.

    Args:
        gamma_A, gamma_B: decay rates.
        constraint: one of ``CONSTRAINT_KINDS``. ``x_basis`` uses |x+><x+| on
            both sides and is not a classical constraint.
        rabi: ``None`` (no drive, interaction picture, H = 0) or a pair
            ``(omega_A, omega_B)`` of Rabi frequencies.
        detuning: omega_A - omega_B; adds (detuning/2)(sz x I - I x sz) with the
            laser at the mean transition frequency.
    """
    if gamma_A < 0 or gamma_B < 0:
        raise ValueError(f"rates must be non-negative, got gamma_A={gamma_A}, gamma_B={gamma_B}")
    if constraint not in CONSTRAINT_KINDS:
        raise ValueError(f"unknown constraint kind {constraint!r}")
    sm = qubit_operator("sigma_minus")
    proj = qubit_operator(_CONSTRAINT_PROJECTOR[constraint])
    eye = np.eye(2)
    h = np.zeros((4, 4), dtype=complex)
    if rabi is not None:
        omega_A, omega_B = rabi
        sx = qubit_operator("sigma_x")
        h += 0.5 * omega_A * np.kron(sx, eye) + 0.5 * omega_B * np.kron(eye, sx)
    if detuning:
        sz = qubit_operator("sigma_z")
        h += 0.5 * detuning * (np.kron(sz, eye) - np.kron(eye, sz))
    return BipartiteModel(
        dA=2, dB=2, hamiltonian=h,
        channels_A=(DissipativeChannel(sm, float(gamma_A), proj),),
        channels_B=(DissipativeChannel(sm, float(gamma_B), proj),),
    )


def build_liouvillian(model):
    """Vectorized generator -i[H, .] + sum_k rate_k D[V_k] (column stacking)."""
    gen = -1j * commutator_super(model.hamiltonian)
    for rate, v in model.jump_operators():
        if rate:
            gen = gen + rate * dissipator_super(v)
    return gen


def bloch_state(lam, theta, phi):
    """(I + lam * sigma_n)/2 for the direction with polar angles (theta, phi)."""
    if not -1.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [-1, 1], got {lam}")
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    if not 0.0 <= phi <= 2 * np.pi:
        raise ValueError(f"phi must lie in [0, 2pi], got {phi}")
    sn = np.array([[np.cos(theta), np.sin(theta) * np.exp(-1j * phi)],
                   [np.sin(theta) * np.exp(1j * phi), -np.cos(theta)]])
    return 0.5 * (np.eye(2) + lam * sn)


def product_state(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def ket(name):
    """Two-qubit pure state vector: pp, pm, mp, mm, phi_plus, phi_minus, psi_plus, psi_minus."""
    e = np.eye(4, dtype=complex)
    kets = {
        "pp": e[0], "pm": e[1], "mp": e[2], "mm": e[3],
        "phi_plus": (e[0] + e[3]) * SQRT1_2,
        "phi_minus": (-e[0] + e[3]) * SQRT1_2,
        "psi_plus": (e[1] + e[2]) * SQRT1_2,
        "psi_minus": (-e[1] + e[2]) * SQRT1_2,
    }
    try:
        return kets[name]
    except KeyError:
        raise ValueError(f"unknown two-qubit state {name!r}") from None


def named_state(name):
    """Density matrix of a named pure state, or ``mixed`` for I/4."""
    if name == "mixed":
        return np.eye(4, dtype=complex) / 4
    k = ket(name)
    return np.outer(k, k.conj())


def collective_unitary():
    """Columns |++>, |Psi+>, |Psi->, |--> in the product basis."""
    return np.column_stack([ket("pp"), ket("psi_plus"), ket("psi_minus"), ket("mm")])


def to_collective_basis(m):
    u = collective_unitary()
    return dag(u) @ as_matrix(m) @ u


def from_collective_basis(m):
    u = collective_unitary()
    return u @ as_matrix(m) @ dag(u)
