import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kcdiss.linalg import ToleranceError
from kcdiss.models import bloch_state, build_liouvillian, build_two_qubit_model, named_state, product_state
from kcdiss.propagator import (
    AnalyticStationary,
    analytic_stationary,
    perturbative_stationary,
    propagate,
    stationary_from_initial,
    steady_states,
)

from conftest import random_density

UNDRIVEN = build_liouvillian(build_two_qubit_model())
DRIVEN = build_liouvillian(build_two_qubit_model(rabi=(1.0, 1.0)))


def rho_y_pair(lam):
    y = bloch_state(lam, np.pi / 2, np.pi / 2)
    return product_state(y, y)


def test_single_time_returns_initial(rng):
    rho = random_density(rng)
    traj = propagate(UNDRIVEN, rho, [0.0])
    assert np.allclose(traj.states[0], rho, atol=1e-14)


def test_bad_time_grids():
    rho = named_state("mm")
    for times in ([1.0, 0.5], [0.0, 0.0], [-1.0, 1.0], []):
        with pytest.raises(ValueError):
            propagate(UNDRIVEN, rho, times)
    with pytest.raises(ValueError):
        propagate(UNDRIVEN, rho, [0.0, 1.0], method="euler")


def test_dark_state_is_frozen():
    traj = propagate(UNDRIVEN, named_state("pp"), np.linspace(0, 20, 50))
    assert np.max(np.abs(traj.states - named_state("pp"))) < 1e-12


def test_unconstrained_pair_decays_to_ground(rng):
    gen = build_liouvillian(build_two_qubit_model(constraint="none"))
    traj = propagate(gen, random_density(rng), [0.0, 80.0])
    assert np.max(np.abs(traj.states[-1] - named_state("mm"))) < 1e-12


def test_nonuniform_grid_matches_uniform(rng):
    rho = random_density(rng)
    a = propagate(DRIVEN, rho, [0.0, 0.3, 1.7, 4.0])
    b = propagate(DRIVEN, rho, np.linspace(0, 4.0, 41))
    for t, s in zip(a.times, a.states):
        k = int(round(t * 10))
        if abs(b.times[k] - t) < 1e-12:
            assert np.max(np.abs(s - b.states[k])) < 1e-11


@pytest.mark.parametrize("gen", [UNDRIVEN, DRIVEN], ids=["undriven", "driven"])
def test_trajectory_invariants(rng, gen):
    traj = propagate(gen, random_density(rng), np.linspace(0, 50, 501))
    tr = np.einsum("kii->k", traj.states)
    assert np.max(np.abs(tr - 1)) <= 1e-9
    assert np.max(np.abs(traj.states - traj.states.conj().transpose(0, 2, 1))) <= 1e-9
    assert min(np.linalg.eigvalsh(s).min() for s in traj.states) >= -1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.integers(0, 2 ** 32 - 1))
def test_semigroup(t1, dt, seed):
    rho = random_density(np.random.default_rng(seed))
    t2 = t1 + dt + 1e-3
    gen = build_liouvillian(build_two_qubit_model(0.7, 1.2, rabi=(0.9, 0.4), detuning=0.1))
    mid = propagate(gen, rho, [t1]).states[0]
    two_step = propagate(gen, mid, [t2 - t1]).states[0]
    direct = propagate(gen, rho, [t2]).states[0]
    assert np.max(np.abs(two_step - direct)) <= 1e-9


def test_rk4_cross_check(rng):
    rho = random_density(rng)
    times = [0.0, 5.0, 10.0]
    exact = propagate(DRIVEN, rho, times)
    rk4 = propagate(DRIVEN, rho, times, method="rk4", rk4_step=1e-3)
    assert np.max(np.abs(exact.states - rk4.states)) <= 1e-6


def test_undriven_null_space():
    res = steady_states(UNDRIVEN)
    assert res.null_dimension == 4
    assert res.stationary_state is None
    assert res.gap > 1e6
    span = np.array([b.reshape(-1) for b in res.null_basis])
    # the kernel lives on the |++>, |--> block
    mask = np.zeros((4, 4), dtype=bool)
    mask[np.ix_([0, 3], [0, 3])] = True
    assert np.max(np.abs(span[:, ~mask.reshape(-1)])) < 1e-10
    for b in res.null_basis:
        assert np.max(np.abs(b - b.conj().T)) < 1e-12
        assert np.max(np.abs((UNDRIVEN @ b.reshape(-1, order="F")))) < 1e-10


def test_undriven_null_space_brute_force_oracle():
    w = np.linalg.eigvals(UNDRIVEN)
    assert np.sum(np.abs(w) < 1e-10) == 4


def test_driven_unique_bell_state():
    res = steady_states(DRIVEN)
    assert res.null_dimension == 1
    assert res.gap > 1e6
    assert np.max(np.abs(res.stationary_state - named_state("phi_minus"))) < 1e-9
    assert res.residual < 1e-10


@pytest.mark.parametrize("name", ["mm", "pp", "mixed", "psi_plus"])
def test_driven_fidelity(name):
    rho = stationary_from_initial(DRIVEN, named_state(name))
    phi = named_state("phi_minus")
    assert np.trace(phi @ rho).real > 1 - 1e-8


def test_stationary_rho_y_half():
    rho = stationary_from_initial(UNDRIVEN, rho_y_pair(0.5))
    assert np.max(np.abs(rho - AnalyticStationary(0.25, -1 / 16).matrix())) < 1e-9


@pytest.mark.parametrize("name", ["phi_plus", "phi_minus"])
def test_bell_state_invariance(name):
    rho0 = named_state(name)
    traj = propagate(UNDRIVEN, rho0, np.linspace(0, 20, 201))
    assert np.max(np.abs(traj.states - rho0)) <= 1e-10
    assert np.max(np.abs(stationary_from_initial(UNDRIVEN, rho0) - rho0)) <= 1e-10


def test_stationary_from_initial_matches_analytic_oracle(rng):
    for _ in range(50):
        rho0 = random_density(rng, rank=int(rng.integers(1, 5)))
        got = stationary_from_initial(UNDRIVEN, rho0)
        assert np.max(np.abs(got - analytic_stationary(rho0).matrix())) <= 1e-7


def test_stationary_non_convergence_raises():
    # purely coherent drive never settles
    gen = build_liouvillian(build_two_qubit_model(0.0, 0.0, rabi=(1.0, 0.0)))
    with pytest.raises(ToleranceError):
        stationary_from_initial(gen, named_state("mm"), max_doublings=10)


def test_analytic_stationary_examples():
    st_mm = analytic_stationary(named_state("mm"))
    assert st_mm.p == 0 and st_mm.c == 0
    assert np.allclose(st_mm.matrix(), named_state("mm"))
    st_phi = analytic_stationary(named_state("phi_minus"))
    assert abs(st_phi.p - 0.5) < 1e-15 and abs(st_phi.c + 0.5) < 1e-15


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(0, np.pi), st.floats(0, 2 * np.pi),
       st.floats(-1, 1), st.floats(0, np.pi), st.floats(0, 2 * np.pi))
def test_analytic_parameters_of_product_states(la, ta, pa, lb, tb, pb):
    rho0 = product_state(bloch_state(la, ta, pa), bloch_state(lb, tb, pb))
    st_ = analytic_stationary(rho0)
    p = 0.25 * (1 + la * np.cos(ta)) * (1 + lb * np.cos(tb))
    c = 0.25 * la * lb * np.exp(-1j * (pa + pb)) * np.sin(ta) * np.sin(tb)
    assert abs(st_.p - p) <= 1e-12
    assert abs(st_.c - c) <= 1e-12


def test_perturbative_state():
    assert np.allclose(perturbative_stationary(1.0, 1.0, 0.0), named_state("phi_minus"))
    m = perturbative_stationary(2.0, 1.0, 0.1)
    assert abs(m[0, 1] - (-0.05j)) < 1e-15
    assert np.allclose(m, m.conj().T)
    with pytest.raises(ValueError):
        perturbative_stationary(0.0, 1.0, 0.1)


def test_perturbative_error_is_second_order():
    gamma, omega = 1.0, 1.0
    deltas = np.array([0.02, 0.01, 0.005, 0.0025])
    errs = []
    for d in deltas:
        exact = steady_states(build_liouvillian(
            build_two_qubit_model(gamma, gamma, rabi=(omega + d, omega - d)))).stationary_state
        errs.append(np.max(np.abs(perturbative_stationary(gamma, omega, d) - exact)))
    slope = np.polyfit(np.log(deltas), np.log(errs), 1)[0]
    assert abs(slope - 2) < 0.1
