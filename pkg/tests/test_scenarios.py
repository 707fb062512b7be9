import math

import numpy as np
import pytest

from kcdiss.correlations import concurrence
from kcdiss.models import bloch_state, build_liouvillian, build_two_qubit_model, product_state
from kcdiss.propagator import propagate
from kcdiss.scenarios import (
    ConfigError,
    CsvTable,
    asymmetry_law_fit,
    birth_time,
    config_from_dict,
    emit,
    format_csv,
    load_config,
    read_csv,
    run_scenario,
    separable_max_scan,
)

UNDRIVEN = build_liouvillian(build_two_qubit_model())


def rho_y_pair(lam):
    y = bloch_state(abs(lam), np.pi / 2, np.pi / 2 if lam >= 0 else 3 * np.pi / 2)
    return product_state(y, y)


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="gama_A"):
        config_from_dict({"gama_A": 1.0})


@pytest.mark.parametrize("bad,key", [
    ({"gamma_A": -1.0}, "gamma_A"),
    ({"n_points": 1}, "n_points"),
    ({"t_max": 0.0}, "t_max"),
    ({"constraint": "zz"}, "constraint"),
    ({"scenario": "fig9"}, "scenario"),
])
def test_invalid_values_named(bad, key):
    with pytest.raises(ConfigError, match=key):
        config_from_dict(bad)


def test_initial_state_specs():
    cfg = config_from_dict({"bloch_a": [0.5, 1.0, 0.2], "bloch_b": [1.0, 0.0, 0.0]})
    assert np.allclose(cfg.initial(), product_state(bloch_state(0.5, 1.0, 0.2), bloch_state(1, 0, 0)))
    cfg = config_from_dict({"initial_matrix": [[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]})
    assert cfg.initial()[0, 0] == 1
    with pytest.raises(ConfigError, match="initial_matrix"):
        config_from_dict({"initial_state": "pp", "initial_matrix": np.eye(4).tolist()}).initial()
    with pytest.raises(ConfigError, match="initial_state"):
        config_from_dict({"initial_state": "nope"}).initial()
    with pytest.raises(ConfigError, match="bloch"):
        config_from_dict({"bloch_a": [2.0, 0.0, 0.0], "bloch_b": [1.0, 0.0, 0.0]}).initial()


def test_load_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"gamma_A": 2.0, "t_max": 3}')
    cfg = load_config(str(path), "fig2")
    assert cfg.gamma_A == 2.0 and cfg.t_max == 3 and cfg.scenario == "fig2"


def test_csv_format_and_round_trip(tmp_path):
    table = CsvTable(("a", "b"), [(0.1, 1 / 3), (2.0, -1e-300)])
    text = format_csv(table)
    assert text == "a,b\n0.10000000000000001,0.33333333333333331\n2,-1e-300\n"
    path = tmp_path / "t.csv"
    emit(table, str(path))
    assert path.read_bytes() == text.encode("utf-8")
    back = read_csv(str(path))
    assert back.header == table.header and back.rows == table.rows
    with pytest.raises(FileExistsError):
        emit(table, str(path))
    emit(CsvTable(("a", "b"), []), str(path), force=True)
    assert path.read_text() == "a,b\n"
    with pytest.raises(ValueError):
        CsvTable(("a",), [(1.0, 2.0)])


def test_emit_io_error_has_path(tmp_path):
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        emit(CsvTable(("a",), []), str(bad))


def test_fig1():
    table, summary = run_scenario(config_from_dict({"n_points": 201}, "fig1"))
    assert ",".join(table.header) == "gamma_t,lambda,concurrence"
    for lam, c in summary["stationary_concurrence"].items():
        assert abs(c - float(lam) ** 2 / 2) < 1e-6


def test_fig2_invariants():
    values = {}
    for lam in (0.5, 0.9):
        table, _ = run_scenario(config_from_dict({"lam": lam, "correlations": False, "t_max": 10,
                                                  "n_points": 101}, "fig2"))
        assert table.header[:7] == ("gamma_t", "pop_pp", "pop_pm", "pop_mp", "pop_mm",
                                    "coh_pp_pm_re", "coh_pp_pm_im")
        for col in ("pop_pp", "coh_pp_mm_re", "coh_pp_mm_im"):
            x = table.column(col)
            assert np.max(np.abs(x - x[0])) <= 1e-9
        values[lam] = np.array([table.column(c) for c in ("pop_pp", "pop_pm", "pop_mp", "pop_mm")])
    # populations do not depend on lambda
    assert np.max(np.abs(values[0.5] - values[0.9])) < 1e-12


def test_fig2_classical_dominates_at_short_times():
    table, _ = run_scenario(config_from_dict({"t_max": 0.5, "n_points": 6}, "fig2"))
    q, d = table.column("classical"), table.column("discord")
    assert np.all(q[1:] > d[1:])


def test_fig4_collective_dynamics():
    table, _ = run_scenario(config_from_dict({"t_max": 60, "n_points": 121, "correlations": False},
                                             "fig4"))
    assert np.max(np.abs(table.column("cpop_psim"))) < 1e-12
    assert abs(table.column("ccoh_pp_mm_re")[-1] + 0.5) < 1e-6


def _row_at(table, t):
    k = int(np.argmin(np.abs(table.column("gamma_t") - t)))
    return {h: table.rows[k][i] for i, h in enumerate(table.header)}


def test_fig5_short_time_ordering():
    a, _ = run_scenario(config_from_dict({"t_max": 0.2, "n_points": 3}, "fig5a"))
    b, _ = run_scenario(config_from_dict({"t_max": 0.2, "n_points": 3}, "fig5b"))
    ra, rb = _row_at(a, 0.1), _row_at(b, 0.1)
    assert ra["concurrence"] > ra["classical"] and ra["concurrence"] > ra["discord"]
    assert rb["classical"] > rb["concurrence"] and rb["classical"] > rb["discord"]


def test_fig6_runs_and_converges():
    table, summary = run_scenario(config_from_dict({"t_max": 5, "n_points": 6, "correlations": False},
                                                   "fig6"))
    assert table.header[0] == "gamma_t" and len(table.rows) == 6
    assert 0 <= summary["final_state_concurrence"] < 1


def test_fig6d_peaks_at_equal_drive():
    table, _ = run_scenario(config_from_dict({}, "fig6d"))
    for g in (0.5, 1.0, 2.0):
        rows = [r for r in table.rows if r[1] == g]
        best = max(rows, key=lambda r: r[2])
        assert best[0] == 1.0 and abs(best[2] - 1) < 1e-8


def test_birth_time_examples():
    times = np.linspace(0, 10, 1001)
    res = birth_time(propagate(UNDRIVEN, rho_y_pair(0.5), times))
    assert res.detected and abs(res.tau0 - 2 * math.log(2)) < 1e-3
    res = birth_time(propagate(UNDRIVEN, rho_y_pair(1.0), times))
    assert res.detected and res.tau0 < 1e-3
    flat = product_state(bloch_state(0.5, 0.0, 0.0), bloch_state(0.5, 0.0, 0.0))
    assert not birth_time(propagate(UNDRIVEN, flat, times)).detected


def _coherence_criterion_time(lam):
    def excess(t):
        rho = propagate(UNDRIVEN, rho_y_pair(lam), [t]).states[0]
        others = max(abs(rho[i, j]) for i in range(4) for j in range(i + 1, 4) if (i, j) != (0, 3))
        return abs(rho[0, 3]) - others

    lo, hi = 0.0, 10.0
    while hi - lo > 1e-7:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if excess(mid) > 0 else (mid, hi)
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("lam", [0.75, 0.5, 0.25])
def test_birth_time_coherence_criterion(lam):
    res = birth_time(propagate(UNDRIVEN, rho_y_pair(lam), np.linspace(0, 10, 1001)))
    assert abs(res.tau0 - _coherence_criterion_time(lam)) <= 1e-3


def test_birth_time_scenario():
    table, _ = run_scenario(config_from_dict({}, "birth_time"))
    for lam, tau, detected, analytic in table.rows:
        assert detected == 1.0
        assert abs(tau - analytic) < 1e-3


def test_separable_scan_examples():
    best, winners = separable_max_scan()
    assert abs(best - 0.5) <= 1e-6
    assert all(abs(w[0]) == 1 and abs(w[1]) == 1 for w in winners)
    assert all(abs(w[2] - np.pi / 2) < 1e-12 and abs(w[3] - np.pi / 2) < 1e-12 for w in winners)
    best, _ = separable_max_scan(lambdas=np.linspace(-0.5, 0.5, 5))
    assert abs(best - 0.125) <= 1e-6


def test_separable_scan_independent_of_phi():
    best, winners = separable_max_scan(lambdas=[1.0], n_theta=3, n_phi=8)
    phis = {(round(w[4], 9), round(w[5], 9)) for w in winners}
    assert len(phis) == 64 and abs(best - 0.5) < 1e-9


@pytest.mark.parametrize("gamma,omega", [(1.0, 1.0), (1.0, 2.0)])
def test_asymmetry_law(gamma, omega):
    kappa = asymmetry_law_fit(gamma, omega)
    predicted = 16 / gamma ** 2 + 2 / omega ** 2
    assert abs(kappa - predicted) / predicted < 0.02


def test_asymmetry_edge_cases():
    from kcdiss.scenarios import _asymmetric_concurrence
    assert abs(_asymmetric_concurrence(1.0, 1.0, 0.0) - 1) < 1e-8
    with pytest.raises(ValueError):
        asymmetry_law_fit(1.0, 1.0, deltas=[0.1])


def test_determinism_and_thread_independence():
    cfg = {"t_max": 1.0, "n_points": 11}
    a, _ = run_scenario(config_from_dict(cfg, "fig2"), threads=1)
    b, _ = run_scenario(config_from_dict(cfg, "fig2"), threads=4)
    assert format_csv(a) == format_csv(b)
