"""Experiment configs, figure reproductions, scans and CSV emission."""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .classicality import check_closure
from .correlations import concurrence, concurrence_batch, correlation_report
from .linalg import ToleranceError, check_density, matrix_exp, unvectorize, vectorize
from .models import (
    CONSTRAINT_KINDS,
    bloch_state,
    build_liouvillian,
    build_two_qubit_model,
    named_state,
    product_state,
    qubit_operator,
    to_collective_basis,
)
from .propagator import propagate, stationary_from_initial, steady_states

SCENARIOS = ("fig1", "fig2", "fig4", "fig5a", "fig5b", "fig6", "fig6d", "separable_max",
             "birth_time", "asymmetry_scan", "custom")

PRODUCT_LABELS = ("pp", "pm", "mp", "mm")
COLLECTIVE_LABELS = ("pp", "psip", "psim", "mm")


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending key."""


@dataclass
class ScenarioConfig:
    scenario: str = "custom"
    gamma_A: float = 1.0
    gamma_B: float = 1.0
    omega_A: float = 0.0
    omega_B: float = 0.0
    constraint: str = "minus_minus"
    detuning: float = 0.0
    initial_state: str = None
    bloch_a: list = None
    bloch_b: list = None
    initial_matrix: list = None
    t_max: float = 10.0
    n_points: int = 1000
    lambdas: list = None
    lam: float = 0.5
    omega_ratios: list = None
    gamma_ratios: list = None
    gamma: float = 1.0
    omega: float = 1.0
    deltas: list = None
    scan_lambdas: list = None
    scan_thetas: int = 9
    scan_phis: int = 4
    correlations: bool = True
    output: str = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown scenario {self.scenario!r}")
        if self.constraint not in CONSTRAINT_KINDS:
            raise ConfigError(f"constraint: unknown constraint kind {self.constraint!r}")
        for key in ("gamma_A", "gamma_B", "gamma"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key}: rates must be non-negative")
        if not self.t_max > 0:
            raise ConfigError("t_max: time grid must be positive")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ConfigError("n_points: need an integer >= 2")
        self.n_points = int(self.n_points)

    def times(self):
        return np.linspace(0.0, self.t_max, self.n_points)

    def model(self, **overrides):
        params = dict(gamma_A=self.gamma_A, gamma_B=self.gamma_B, constraint=self.constraint,
                      rabi=None, detuning=self.detuning)
        if self.omega_A or self.omega_B:
            params["rabi"] = (self.omega_A, self.omega_B)
        params.update(overrides)
        return build_two_qubit_model(**params)

    def initial(self):
        given = [k for k in ("initial_state", "initial_matrix") if getattr(self, k) is not None]
        if self.bloch_a is not None or self.bloch_b is not None:
            given.append("bloch_a/bloch_b")
        if len(given) > 1:
            raise ConfigError(f"{given[1]}: only one initial-state specification is allowed")
        try:
            if self.initial_matrix is not None:
                rows = [[complex(*x) if isinstance(x, list) else complex(x) for x in row]
                        for row in self.initial_matrix]
                return check_density(np.array(rows))
            if self.bloch_a is not None or self.bloch_b is not None:
                if self.bloch_a is None or self.bloch_b is None:
                    raise ConfigError("bloch_b: both bloch_a and bloch_b are required")
                return product_state(bloch_state(*self.bloch_a), bloch_state(*self.bloch_b))
            return named_state(self.initial_state or "mm")
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            key = given[0] if given else "initial_state"
            raise ConfigError(f"{key}: {exc}") from None


_DEFAULTS = {
    "fig1": {"lambdas": [1.0, 0.75, 0.5, 0.25]},
    "fig2": {"lam": 0.5},
    "fig4": {"omega_A": 1.0, "omega_B": 1.0, "initial_state": "mm"},
    "fig5a": {"omega_A": 1.0, "omega_B": 1.0, "initial_state": "mm"},
    "fig5b": {"omega_A": 1.0, "omega_B": 1.0, "initial_state": "pp"},
    "fig6": {"omega_A": 1.0, "omega_B": 0.75, "initial_state": "mm"},
    "fig6d": {"omega_A": 1.0, "omega_ratios": [round(0.1 * k, 10) for k in range(1, 31)],
              "gamma_ratios": [0.5, 1.0, 2.0]},
    "birth_time": {"lambdas": [1.0, 0.75, 0.5, 0.25]},
    "asymmetry_scan": {"deltas": None},
    "separable_max": {"scan_lambdas": [-1.0, -0.5, 0.0, 0.5, 1.0]},
}


def config_from_dict(data, scenario=None):
    """Validated config from a flat mapping; unknown keys are errors."""
    data = dict(data)
    if scenario is not None:
        data["scenario"] = scenario
    known = {f.name for f in fields(ScenarioConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{key}: unknown config key")
    merged = dict(_DEFAULTS.get(data.get("scenario", "custom"), {}))
    merged.update(data)
    try:
        return ScenarioConfig(**merged)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from None


def load_config(path, scenario=None):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object of key/value pairs")
    return config_from_dict(data, scenario)


@dataclass
class CsvTable:
    header: tuple
    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.header = tuple(self.header)
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError(f"row of length {len(row)} does not match header {self.header}")

    def column(self, name):
        k = self.header.index(name)
        return np.array([row[k] for row in self.rows], dtype=float)


def format_csv(table):
    lines = [",".join(table.header)]
    for row in table.rows:
        lines.append(",".join(f"{float(x):.17g}" for x in row))
    return "\n".join(lines) + "\n"


def emit(table, path, force=False):
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path}: refusing to overwrite (use --force)")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_csv(table))
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = tuple(lines[0].split(","))
    rows = [tuple(float(x) for x in line.split(",")) for line in lines[1:] if line]
    return CsvTable(header, rows)


@dataclass
class BirthTimeResult:
    tau0: float
    detected: bool
    threshold: float


def birth_time(trajectory, threshold=1e-9, tol=1e-6):
    """First time the concurrence exceeds ``threshold``.

    The crossing is bracketed on the trajectory grid and refined by bisection
    when the trajectory carries its generator; otherwise it is interpolated.
    """
    conc = np.array([concurrence(s) for s in trajectory.states])
    above = np.nonzero(conc > threshold)[0]
    if above.size == 0:
        return BirthTimeResult(float("nan"), False, threshold)
    k = int(above[0])
    if k == 0:
        return BirthTimeResult(float(trajectory.times[0]), True, threshold)
    lo, hi = float(trajectory.times[k - 1]), float(trajectory.times[k])
    gen = trajectory.liouvillian
    if gen is None:
        c0, c1 = conc[k - 1], conc[k]
        return BirthTimeResult(lo + (hi - lo) * (threshold - c0) / (c1 - c0), True, threshold)
    v_lo = vectorize(trajectory.states[k - 1])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        rho = unvectorize(matrix_exp(gen * (mid - float(trajectory.times[k - 1]))) @ v_lo)
        if concurrence(check_density(rho)) > threshold:
            hi = mid
        else:
            lo = mid
    return BirthTimeResult(0.5 * (lo + hi), True, threshold)


def separable_max_scan(lambdas=(-1.0, -0.5, 0.0, 0.5, 1.0), n_theta=9, n_phi=4):
    """Maximal long-time concurrence of the undriven constrained model over product initial states.

    Each initial state is rho_a x rho_b with Bloch parameters on the grid; its
    long-time state is the closed-form one, read off as p = <++|rho0|++>,
    c = <++|rho0|-->. Returns (max, list of maximizing parameter tuples
    (lam_a, lam_b, theta_a, theta_b, phi_a, phi_b)).
    """
    thetas = np.linspace(0.0, np.pi, n_theta)
    phis = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    singles = [(lam, th, ph) for lam in lambdas for th in thetas for ph in phis]
    mats = np.array([bloch_state(*s) for s in singles])
    p = np.multiply.outer(mats[:, 0, 0].real, mats[:, 0, 0].real)
    c = np.multiply.outer(mats[:, 0, 1], mats[:, 0, 1])
    stat = np.zeros(p.shape + (4, 4), dtype=complex)
    stat[..., 0, 0] = p
    stat[..., 3, 3] = 1.0 - p
    stat[..., 0, 3] = c
    stat[..., 3, 0] = np.conj(c)
    conc = concurrence_batch(stat)
    best = float(conc.max())
    winners = []
    for i, j in zip(*np.nonzero(conc >= best - 1e-12)):
        a, b = singles[i], singles[j]
        winners.append((a[0], b[0], a[1], b[1], a[2], b[2]))
    return best, winners


def _asymmetric_concurrence(gamma, omega, delta, gamma_B=None):
    model = build_two_qubit_model(gamma, gamma if gamma_B is None else gamma_B,
                                  rabi=(omega + delta, omega - delta))
    res = steady_states(build_liouvillian(model))
    if res.null_dimension != 1:
        raise ToleranceError(f"stationary state not unique (kernel dimension {res.null_dimension})")
    return concurrence(res.stationary_state)


def default_deltas(omega):
    return [omega * 0.002 * k for k in range(1, 11)]


def asymmetry_law_fit(gamma, omega, deltas=None, with_table=False):
    """Coefficient kappa of 1 - C[rho_inf] = kappa * dOmega^2 for small Rabi asymmetry.

    C is even in dOmega, so the fit uses kappa * d^2 + mu * d^4 to absorb the
    next order.
    """
    deltas = default_deltas(omega) if deltas is None else list(deltas)
    if any(abs(d) > 0.05 * omega for d in deltas):
        raise ValueError("asymmetry fit needs |delta| <= 0.05 * omega")
    d = np.asarray(deltas, dtype=float)
    conc = np.array([_asymmetric_concurrence(gamma, omega, x) for x in d])
    design = np.column_stack([d ** 2, d ** 4])
    (kappa, _), *_ = np.linalg.lstsq(design, 1.0 - conc, rcond=None)
    if with_table:
        return float(kappa), CsvTable(("delta_omega", "concurrence", "one_minus_c"),
                                      [(x, y, 1.0 - y) for x, y in zip(d, conc)])
    return float(kappa)


def _map(func, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(x) for x in items]


def _matrix_columns(prefix, labels):
    cols = [f"{prefix}pop_{a}" for a in labels]
    for i in range(4):
        for j in range(i + 1, 4):
            cols += [f"{prefix}coh_{labels[i]}_{labels[j]}_re", f"{prefix}coh_{labels[i]}_{labels[j]}_im"]
    return cols


def _matrix_values(m):
    vals = [m[i, i].real for i in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            vals += [m[i, j].real, m[i, j].imag]
    return vals


def _trajectory_table(traj, columns, collective=False, correlations=True, threads=1,
                      mutual=False):
    header = ["gamma_t"]
    if columns:
        header += _matrix_columns("c" if collective else "", COLLECTIVE_LABELS if collective
                                  else PRODUCT_LABELS)
    if correlations:
        header += ["concurrence", "classical", "discord"]
        if mutual:
            header += ["mutual_information"]

    def row(k):
        rho = traj.states[k]
        vals = [traj.times[k]]
        if columns:
            vals += _matrix_values(to_collective_basis(rho) if collective else rho)
        if correlations:
            rep = correlation_report(rho)
            vals += [rep.concurrence, rep.classical, rep.discord]
            if mutual:
                vals += [rep.mutual_information]
        return tuple(float(v) for v in vals)

    return CsvTable(header, _map(row, range(len(traj)), threads))


def _rho_y_pair(lam):
    y = 0.5 * (np.eye(2) + lam * qubit_operator("sigma_y"))
    return product_state(y, y)


def _fig1(cfg, threads):
    gen = build_liouvillian(cfg.model(rabi=None))
    times = cfg.times()

    def one(lam):
        traj = propagate(gen, _rho_y_pair(lam), times)
        conc = [concurrence(s) for s in traj.states]
        stat = concurrence(stationary_from_initial(gen, _rho_y_pair(lam)))
        tau = birth_time(traj)
        return lam, traj.times, conc, stat, tau

    rows, summary = [], {"stationary_concurrence": {}, "birth_time": {}}
    for lam, ts, conc, stat, tau in _map(one, cfg.lambdas, threads):
        rows += [(t, lam, c) for t, c in zip(ts, conc)]
        summary["stationary_concurrence"][repr(lam)] = stat
        summary["birth_time"][repr(lam)] = tau.tau0 if tau.detected else None
    return CsvTable(("gamma_t", "lambda", "concurrence"), rows), summary


def _fig2(cfg, threads):
    gen = build_liouvillian(cfg.model(rabi=None))
    traj = propagate(gen, _rho_y_pair(cfg.lam), cfg.times())
    table = _trajectory_table(traj, True, correlations=cfg.correlations, threads=threads)
    return table, {"lambda": cfg.lam}


def _driven(cfg, threads, columns, collective):
    gen = build_liouvillian(cfg.model())
    traj = propagate(gen, cfg.initial(), cfg.times())
    table = _trajectory_table(traj, columns, collective=collective,
                              correlations=cfg.correlations or not columns, threads=threads)
    final = traj.states[-1]
    return table, {"final_state_concurrence": concurrence(final)}


def _fig6d(cfg, threads):
    points = [(g, r) for g in cfg.gamma_ratios for r in cfg.omega_ratios]

    def one(point):
        g, r = point
        model = cfg.model(gamma_B=cfg.gamma_A * g, rabi=(cfg.omega_A, cfg.omega_A * r))
        res = steady_states(build_liouvillian(model))
        if res.null_dimension == 1:
            rho = res.stationary_state
        else:
            rho = stationary_from_initial(build_liouvillian(model), named_state("mixed"))
        return (r, g, concurrence(rho))

    rows = _map(one, points, threads)
    return CsvTable(("omega_ratio", "gamma_ratio", "concurrence"), rows), {}


def _birth(cfg, threads):
    gen = build_liouvillian(cfg.model(rabi=None))

    def one(lam):
        res = birth_time(propagate(gen, _rho_y_pair(lam), cfg.times()))
        analytic = 2 * math.log(1 / abs(lam)) if lam else float("inf")
        return (lam, res.tau0, float(res.detected), analytic)

    rows = _map(one, cfg.lambdas, threads)
    return CsvTable(("lambda", "gamma_tau0", "detected", "analytic"), rows), {}


def _separable(cfg, threads):
    best, winners = separable_max_scan(cfg.scan_lambdas, cfg.scan_thetas, cfg.scan_phis)
    header = ("lambda_a", "lambda_b", "theta_a", "theta_b", "phi_a", "phi_b", "concurrence")
    return CsvTable(header, [w + (best,) for w in winners]), {"max_concurrence": best}


def _asymmetry(cfg, threads):
    kappa, table = asymmetry_law_fit(cfg.gamma, cfg.omega, cfg.deltas, with_table=True)
    return table, {"kappa": kappa, "predicted": 16 / cfg.gamma ** 2 + 2 / cfg.omega ** 2}


def _custom(cfg, threads):
    gen = build_liouvillian(cfg.model())
    traj = propagate(gen, cfg.initial(), cfg.times())
    table = _trajectory_table(traj, True, correlations=cfg.correlations, threads=threads,
                              mutual=True)
    return table, {}


def run_scenario(cfg, threads=1):
    """Run one scenario; returns (CsvTable, summary dict). Deterministic for a fixed config."""
    if isinstance(cfg, dict):
        cfg = config_from_dict(cfg)
    name = cfg.scenario
    if name == "fig1":
        return _fig1(cfg, threads)
    if name == "fig2":
        return _fig2(cfg, threads)
    if name == "fig4":
        return _driven(cfg, threads, columns=True, collective=True)
    if name in ("fig5a", "fig5b"):
        return _driven(cfg, threads, columns=False, collective=False)
    if name == "fig6":
        return _driven(cfg, threads, columns=True, collective=True)
    if name == "fig6d":
        return _fig6d(cfg, threads)
    if name == "birth_time":
        return _birth(cfg, threads)
    if name == "separable_max":
        return _separable(cfg, threads)
    if name == "asymmetry_scan":
        return _asymmetry(cfg, threads)
    return _custom(cfg, threads)


def classicality_report(cfg):
    """Closure report for the config's model against its natural projector sets."""
    model = cfg.model()
    if cfg.constraint == "x_basis":
        projs = list(qubit_operator("proj_x_pm"))
    elif cfg.constraint == "none":
        projs = [qubit_operator("identity")]
    else:
        projs = [qubit_operator("proj_minus"), qubit_operator("proj_plus")]
    report = check_closure(model.channels_A, model.channels_B, projs, projs)
    return report.as_dict()


def steady_report(cfg):
    res = steady_states(build_liouvillian(cfg.model()))
    out = {
        "null_dimension": res.null_dimension,
        "gap": res.gap if math.isfinite(res.gap) else None,
        "residual": res.residual if res.stationary_state is not None else None,
        "stationary_state": None,
    }
    if res.stationary_state is not None:
        out["stationary_state"] = [[[z.real, z.imag] for z in row] for row in res.stationary_state]
    return out
