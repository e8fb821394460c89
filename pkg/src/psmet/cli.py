"""Batch command-line front-end.

    psmet sweep|verify|simulate|closed-form --config PATH [--set k=v]... [--out PATH]

Configs are single JSON documents; ``--set`` applies dotted-path overrides
(values parsed as JSON, falling back to strings). Artifacts embed a
provenance header (tool version, config hash, seed) and are byte-stable for
a given config. PSMET_THREADS caps sweep parallelism.

Exit codes: 0 success, 2 config error, 3 verification failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import closed_form as cf
from .analysis import covariance_vs_bound, replicate, tradeoffs, verify_chain
from .fisher import (
    mode_commutator_traces,
    pcfim,
    pqfim,
    qfim,
    sensor_family,
    weight_fisher,
)
from .linalg import invert_sym_2x2
from .models import (
    MOMENTUM_POVM,
    PHI_NUMERIC_EPS,
    PostselectionSpec,
    QubitMA,
    SensorModel,
    build_ensemble,
    gaussian_ma,
    projective_povm,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_IO = 4

HALF_PI = math.pi / 2


class ConfigError(Exception):
    pass


class VerificationFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

MA_PARAMS = {
    "qubit": ("theta", "gamma_fluct", "phi", "gamma_ps", "theta_meas"),
    "gaussian": ("sigma", "gamma_fluct", "phi", "gamma_ps"),
}

MA_DEFAULTS = {
    "qubit": {
        "theta": HALF_PI,
        "gamma_fluct": 0.5,
        "phi": PHI_NUMERIC_EPS,
        "gamma_ps": HALF_PI,
        "theta_meas": HALF_PI,
    },
    "gaussian": {
        "sigma": 0.2,
        "gamma_fluct": 0.5,
        "phi": PHI_NUMERIC_EPS,
        "gamma_ps": HALF_PI,
    },
}

DEFAULT_TOLERANCES = {
    "sensor_qfim": 1e-8,
    "qubit_pqfim": 1e-8,
    "qubit_tradeoff": 1e-8,
    "gaussian_pqfim": 1e-6,
    "geometry_cross": 1e-5,
    "geometry_norms": 1e-6,
    "chain": 1e-9,
    "weight_info": 1e-10,
    "commutator_half_pi": 1e-8,
    "commutator_reading": 1e-8,
}


@dataclass
class RunConfig:
    command: str | None = None
    ma: dict = field(default_factory=lambda: {"kind": "qubit"})
    axes: list = field(default_factory=list)
    output: str | None = None
    figure: str | None = None
    seed: int = 42
    shots: int = 100_000
    replications: int = 200
    grid_n: int = 2048
    chain_draws: int = 100
    tolerances: dict = field(default_factory=dict)
    debug: dict = field(default_factory=dict)

    KNOWN = {
        "command", "ma", "axes", "output", "figure", "seed", "shots",
        "replications", "grid_n", "chain_draws", "tolerances", "debug",
    }

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        unknown = set(raw) - cls.KNOWN
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        kind = cfg.ma.get("kind")
        if kind not in MA_PARAMS:
            raise ConfigError(f"ma.kind must be one of {sorted(MA_PARAMS)}, got {kind!r}")
        bad = set(cfg.ma) - {"kind", *MA_PARAMS[kind]}
        if bad:
            raise ConfigError(f"parameters {sorted(bad)} do not exist for a {kind} apparatus")
        if len(cfg.axes) > 2:
            raise ConfigError("at most 2 sweep axes are supported")
        for ax in cfg.axes:
            missing = {"name", "min", "max", "steps"} - set(ax)
            if missing:
                raise ConfigError(f"sweep axis is missing fields {sorted(missing)}")
            if ax["name"] not in MA_PARAMS[kind]:
                raise ConfigError(
                    f"axis parameter {ax['name']!r} does not exist for a {kind} apparatus"
                )
            if int(ax["steps"]) < 2:
                raise ConfigError("sweep axes need at least 2 steps (omit the axis for a point run)")
        if cfg.shots < 1:
            raise ConfigError("shots must be a positive integer")
        if cfg.replications < 1:
            raise ConfigError("replications must be a positive integer")
        if cfg.grid_n < 2:
            raise ConfigError("grid_n must be at least 2")
        return cfg

    def params(self) -> dict:
        kind = self.ma["kind"]
        out = dict(MA_DEFAULTS[kind])
        out.update({k: float(v) for k, v in self.ma.items() if k != "kind"})
        return out

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def canonical(self) -> dict:
        # output destinations are excluded: the hash identifies the data,
        # not where it lands
        return {
            "command": self.command,
            "ma": self.ma,
            "axes": self.axes,
            "seed": self.seed,
            "shots": self.shots,
            "replications": self.replications,
            "grid_n": self.grid_n,
            "chain_draws": self.chain_draws,
            "tolerances": self.tolerances,
            "debug": self.debug,
        }

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _set_by_path(tree: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = tree
    for key in parts[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override through non-object key {key!r} in {dotted!r}")
    node[parts[-1]] = value


def load_config(path: str | None, overrides, command: str, out: str | None) -> RunConfig:
    raw: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, text = item.partition("=")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        _set_by_path(raw, key, value)
    cfg = RunConfig.from_dict(raw)
    cfg.command = command
    if out is not None:
        cfg.output = out
    return cfg


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def _thread_count() -> int:
    env = os.environ.get("PSMET_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"PSMET_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError("PSMET_THREADS must be at least 1")
        return n
    return min(os.cpu_count() or 1, 8)


def _parallel_map(fn, items):
    workers = _thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _provenance_lines(cfg: RunConfig) -> list[str]:
    return [
        f"# psmet {__version__}",
        f"# config_hash {cfg.hash()}",
        f"# seed {cfg.seed}",
    ]


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _write_csv(cfg: RunConfig, header, rows) -> None:
    lines = _provenance_lines(cfg)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(row[col]) for col in header))
    _write_text(cfg.output, "\n".join(lines) + "\n")


def _json_report(cfg: RunConfig, body: dict) -> dict:
    return {
        "tool_version": __version__,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        **body,
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _write_json(path: str | None, report: dict) -> None:
    _write_text(path, json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")


def _build(cfg: RunConfig, params: dict):
    """(sensor, ma, ps, povm) for one parameter point."""
    kind = cfg.ma["kind"]
    sensor = SensorModel(params["phi"], params["gamma_fluct"])
    ps = PostselectionSpec(params["gamma_ps"])
    if kind == "qubit":
        ma = QubitMA(theta=params["theta"])
        povm = projective_povm(params["theta_meas"])
    else:
        ma = gaussian_ma(params["sigma"], cfg.grid_n)
        povm = MOMENTUM_POVM
    return sensor, ma, ps, povm


SWEEP_VALUE_COLUMNS = [
    "w_success",
    "Q_pp",
    "Q_GG",
    "H_pp",
    "H_GG",
    "F_pp",
    "F_GG",
    "tradeoff_quantum",
    "tradeoff_classical",
    "commutator_trace_abs_success",
    "commutator_trace_abs_failure",
]


def _evaluate_point(cfg: RunConfig, params: dict) -> dict:
    sensor, ma, ps, povm = _build(cfg, params)
    ensemble = build_ensemble(sensor, ma, ps)
    f_mat, _ = pcfim(ensemble, povm)
    q_mat, _ = pqfim(ensemble)
    h_mat = qfim(sensor_family(), sensor.point)
    traces = mode_commutator_traces(ensemble)
    trade = tradeoffs(f_mat, q_mat, h_mat)
    return {
        "w_success": ensemble["success"].weight,
        "Q_pp": q_mat[0, 0],
        "Q_GG": q_mat[1, 1],
        "H_pp": h_mat[0, 0],
        "H_GG": h_mat[1, 1],
        "F_pp": f_mat[0, 0],
        "F_GG": f_mat[1, 1],
        "tradeoff_quantum": trade.quantum,
        "tradeoff_classical": trade.classical,
        "commutator_trace_abs_success": abs(traces["success"]),
        "commutator_trace_abs_failure": abs(traces["failure"]),
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def run_sweep(cfg: RunConfig) -> int:
    base = cfg.params()
    grids = [np.linspace(ax["min"], ax["max"], int(ax["steps"])) for ax in cfg.axes]
    points = [()] if not grids else None
    if points is None:
        if len(grids) == 1:
            points = [(v,) for v in grids[0]]
        else:
            points = [(u, v) for u in grids[0] for v in grids[1]]  # row-major

    def evaluate(values):
        params = dict(base)
        for ax, val in zip(cfg.axes, values):
            params[ax["name"]] = float(val)
        row = {ax["name"]: val for ax, val in zip(cfg.axes, values)}
        row.update(_evaluate_point(cfg, params))
        return row

    rows = _parallel_map(evaluate, points)
    header = [ax["name"] for ax in cfg.axes] + SWEEP_VALUE_COLUMNS
    _write_csv(cfg, header, rows)
    if cfg.figure:
        from .figures import render_sweep_figure

        render_sweep_figure(cfg.axes, rows, cfg.figure)
    return EXIT_OK


def _verify_checks(cfg: RunConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    checks: dict[str, dict] = {}

    # sensor information matrix vs its closed form on a grid
    dev = 0.0
    off = 0.0
    fam = sensor_family()
    for phi in np.linspace(-3.0, 3.0, 20):
        for gam in np.linspace(0.05, 1.2, 20):
            h = qfim(fam, [phi, gam])
            hc = cf.sensor_qfim(gam)
            dev = max(dev, float(np.abs(np.diag(h) - np.diag(hc)).max()))
            off = max(off, abs(h[0, 1]))
    checks["sensor_qfim"] = {
        "max_dev": dev,
        "max_offdiag": off,
        "tolerance": cfg.tolerance("sensor_qfim"),
        "pass": dev <= cfg.tolerance("sensor_qfim") and off <= 1e-9,
    }

    # qubit pQFIM and tradeoff vs closed forms at gamma_ps = pi/2
    dev_q, dev_t = 0.0, 0.0
    for _ in range(20):
        theta = rng.uniform(0.1, math.pi - 0.1)
        gam = rng.uniform(0.05, 1.2)
        ens = build_ensemble(
            SensorModel(PHI_NUMERIC_EPS, gam), QubitMA(theta=theta), PostselectionSpec(HALF_PI)
        )
        q, _ = pqfim(ens)
        dev_q = max(dev_q, float(np.abs(q - cf.qubit_pqfim(theta, gam)).max()))
        trade = tradeoffs(q, q, cf.sensor_qfim(gam)).quantum
        dev_t = max(dev_t, abs(trade - cf.qubit_tradeoffs(theta, gam)[0]))
    checks["qubit_pqfim"] = {
        "max_dev": dev_q,
        "tolerance": cfg.tolerance("qubit_pqfim"),
        "pass": dev_q <= cfg.tolerance("qubit_pqfim"),
    }
    checks["qubit_tradeoff"] = {
        "max_dev": dev_t,
        "tolerance": cfg.tolerance("qubit_tradeoff"),
        "pass": dev_t <= cfg.tolerance("qubit_tradeoff"),
    }

    # Gaussian pQFIM vs closed forms
    dev_g = 0.0
    for _ in range(6):
        gam = rng.uniform(0.1, 1.0)
        sigma = rng.uniform(0.1, 1.0)
        ens = build_ensemble(
            SensorModel(PHI_NUMERIC_EPS, gam), gaussian_ma(sigma, cfg.grid_n),
            PostselectionSpec(HALF_PI),
        )
        q, _ = pqfim(ens)
        dev_g = max(dev_g, float(np.abs(q - cf.gaussian_pqfim(gam, sigma)).max()))
    checks["gaussian_pqfim"] = {
        "max_dev": dev_g,
        "tolerance": cfg.tolerance("gaussian_pqfim"),
        "pass": dev_g <= cfg.tolerance("gaussian_pqfim"),
    }

    # mode-vector geometry on the default grid
    from .linalg import grid_inner

    gam, sigma = 0.5, 0.7
    ma = gaussian_ma(sigma, cfg.grid_n)
    ens = build_ensemble(SensorModel(PHI_NUMERIC_EPS, gam), ma, PostselectionSpec(HALF_PI))
    geo = cf.gaussian_mode_geometry(cf.GaussianParams(sigma=sigma, gamma_fluct=gam))
    cross_dev, norm_dev = 0.0, 0.0
    for label in ("success", "failure"):
        st = ens[label].state
        cross = grid_inner(st.grid, st.vectors[0], st.vectors[1])
        cross_dev = max(cross_dev, abs(cross))
        for k in range(2):
            nk = grid_inner(st.grid, st.vectors[k], st.vectors[k]).real
            norm_dev = max(norm_dev, abs(nk - geo.norms[label][k]))
    checks["mode_geometry"] = {
        "max_cross": cross_dev,
        "max_norm_dev": norm_dev,
        "tolerance_cross": cfg.tolerance("geometry_cross"),
        "tolerance_norms": cfg.tolerance("geometry_norms"),
        "pass": cross_dev <= cfg.tolerance("geometry_cross")
        and norm_dev <= cfg.tolerance("geometry_norms"),
    }

    # bound chain over random draws of both apparatuses
    min_qf, min_hq, min_wi = math.inf, math.inf, math.inf
    comm_half_pi = 0.0
    scale_q = float(cfg.debug.get("scale_q", 1.0))
    for i in range(cfg.chain_draws):
        gam = rng.uniform(0.05, 1.2)
        phi = rng.uniform(0.0, math.pi)
        gps = rng.uniform(0.3, math.pi - 0.3)
        if i % 2 == 0:
            ma = QubitMA(theta=rng.uniform(0.1, math.pi - 0.1))
            povm = projective_povm(rng.uniform(0.0, math.pi))
        else:
            ma = gaussian_ma(rng.uniform(0.15, 1.2), min(cfg.grid_n, 512))
            povm = MOMENTUM_POVM
        sensor = SensorModel(phi, gam)
        ens = build_ensemble(sensor, ma, ps=PostselectionSpec(gps))
        f_mat, _ = pcfim(ens, povm)
        q_mat, _ = pqfim(ens)
        q_mat = scale_q * q_mat
        h_mat = qfim(sensor_family(), sensor.point)
        verdict = verify_chain(f_mat, q_mat, h_mat, weight_info=weight_fisher(ens),
                               tol=cfg.tolerance("chain"))
        min_qf = min(min_qf, verdict.min_eig_q_minus_f)
        min_hq = min(min_hq, verdict.min_eig_h_minus_q)
        min_wi = min(min_wi, verdict.weight_info_min_eig)
        ens_half = build_ensemble(SensorModel(phi, gam), ma, PostselectionSpec(HALF_PI))
        for val in mode_commutator_traces(ens_half).values():
            comm_half_pi = max(comm_half_pi, abs(val))
    checks["chain"] = {
        "min_eig_q_minus_f": min_qf,
        "min_eig_h_minus_q": min_hq,
        "weight_info_min_eig": min_wi,
        "draws": cfg.chain_draws,
        "tolerance": cfg.tolerance("chain"),
        "pass": min_qf >= -cfg.tolerance("chain")
        and min_hq >= -cfg.tolerance("chain")
        and min_wi >= -cfg.tolerance("weight_info"),
    }
    checks["commutator_half_pi"] = {
        "max_abs": comm_half_pi,
        "tolerance": cfg.tolerance("commutator_half_pi"),
        "pass": comm_half_pi <= cfg.tolerance("commutator_half_pi"),
    }

    # ambiguous-print evidence: the commutator-trace denominator and the
    # fluctuation diagonal admit two readings; the engine arbitrates
    adopted_dev, alternate_dev = 0.0, 0.0
    for _ in range(10):
        params = cf.QubitParams(
            theta=rng.uniform(0.2, math.pi - 0.2),
            gamma_fluct=rng.uniform(0.05, 1.0),
            gamma_ps=rng.uniform(0.3, HALF_PI - 0.2),
            phi=rng.uniform(-1.0, 1.0),
        )
        ens = build_ensemble(
            SensorModel(params.phi, params.gamma_fluct),
            QubitMA(theta=params.theta),
            PostselectionSpec(params.gamma_ps),
        )
        numeric = mode_commutator_traces(ens)
        for reading, store in (("sin_ps", "adopted"), ("sin_theta", "alternate")):
            succ, fail = cf.qubit_commutator_traces(params, reading)
            dev = max(abs(numeric["success"] - succ), abs(numeric["failure"] - fail))
            if store == "adopted":
                adopted_dev = max(adopted_dev, dev)
            else:
                alternate_dev = max(alternate_dev, dev)
    checks["commutator_readings"] = {
        "adopted_max_dev": adopted_dev,
        "alternate_max_dev": alternate_dev,
        "tolerance": cfg.tolerance("commutator_reading"),
        "pass": adopted_dev <= cfg.tolerance("commutator_reading"),
    }

    coth_dev, cot_dev = 0.0, 0.0
    for _ in range(10):
        theta = rng.uniform(0.2, math.pi - 0.2)
        gam = rng.uniform(0.2, 1.2)
        ens = build_ensemble(
            SensorModel(PHI_NUMERIC_EPS, gam), QubitMA(theta=theta), PostselectionSpec(HALF_PI)
        )
        q, _ = pqfim(ens)
        coth_dev = max(coth_dev, abs(q[1, 1] - cf.qubit_pqfim(theta, gam)[1, 1]))
        alt = (
            2 * gam**2 * (1 + 1 / math.tan(gam**2)) * math.sin(theta) ** 2
            / (math.exp(2 * gam**2) - math.cos(theta) ** 2)
        )
        cot_dev = max(cot_dev, abs(q[1, 1] - alt))
    checks["fluctuation_diag_readings"] = {
        "coth_max_dev": coth_dev,
        "cot_max_dev": cot_dev,
        "tolerance": cfg.tolerance("qubit_pqfim"),
        "pass": coth_dev <= cfg.tolerance("qubit_pqfim"),
    }
    return checks


def run_verify(cfg: RunConfig) -> int:
    checks = _verify_checks(cfg)
    overall = all(c["pass"] for c in checks.values())
    report = _json_report(cfg, {"checks": checks, "pass": overall})
    _write_json(cfg.output, report)
    return EXIT_OK if overall else EXIT_VERIFY


def run_simulate(cfg: RunConfig) -> int:
    params = cfg.params()
    sensor, ma, ps, povm = _build(cfg, params)
    estimates = replicate(
        sensor, ma, ps, povm, shots=cfg.shots, replications=cfg.replications, seed=cfg.seed
    )
    rows = [
        {"replication": r, "phi_hat": estimates.estimates[r, 0],
         "gamma_hat": estimates.estimates[r, 1]}
        for r in range(cfg.replications)
    ]
    _write_csv(cfg, ["replication", "phi_hat", "gamma_hat"], rows)

    ensemble = build_ensemble(sensor, ma, ps)
    f_mat, _ = pcfim(ensemble, povm)
    total = f_mat + weight_fisher(ensemble)
    notes = []
    summary = {
        "shots": cfg.shots,
        "replications": cfg.replications,
        "truth": {"phi": sensor.phi, "gamma_fluct": sensor.gamma_fluct},
        "flags": sorted({fl for rep in estimates.flags for fl in rep}),
    }
    scaled = cfg.shots * estimates.covariance() if cfg.replications > 1 else None
    summary["scaled_cov"] = None if scaled is None else scaled.tolist()
    try:
        report = covariance_vs_bound(estimates, f_mat, cfg.shots)
        summary["f_inv"] = report.f_inv.tolist()
        summary["min_eig_gap"] = report.min_eig_gap
        summary["rel_diag_gaps"] = report.rel_diag_gaps.tolist()
    except ValueError as exc:
        summary["f_inv"] = None
        summary["min_eig_gap"] = None
        summary["rel_diag_gaps"] = None
        notes.append(f"classical bound unavailable: {exc}")
    try:
        report_total = covariance_vs_bound(estimates, total, cfg.shots)
        summary["total_info_inv"] = report_total.f_inv.tolist()
        summary["total_min_eig_gap"] = report_total.min_eig_gap
        summary["total_rel_diag_gaps"] = report_total.rel_diag_gaps.tolist()
    except ValueError as exc:
        summary["total_info_inv"] = None
        summary["total_min_eig_gap"] = None
        summary["total_rel_diag_gaps"] = None
        notes.append(f"total-information bound unavailable: {exc}")
    summary["notes"] = notes
    summary_path = None
    if cfg.output:
        stem, _, _ = cfg.output.rpartition(".")
        summary_path = (stem or cfg.output) + "_summary.json"
    _write_json(summary_path, _json_report(cfg, summary))
    if cfg.figure:
        from .figures import render_simulate_figure

        render_simulate_figure(estimates.estimates, sensor.point, cfg.figure)
    return EXIT_OK


def run_closed_form(cfg: RunConfig) -> int:
    params = cfg.params()
    kind = cfg.ma["kind"]
    gam = params["gamma_fluct"]
    body: dict = {
        "kind": kind,
        "params": params,
        "validity": dict(cf.VALIDITY),
        "sensor_qfim": np.diag(cf.sensor_qfim(gam)).tolist(),
    }
    out_of_domain = []
    if abs(params["gamma_ps"] - HALF_PI) > 1e-12:
        out_of_domain.append("gamma_ps != pi/2: pQFIM and tradeoff closed forms are approximate")
    if abs(params["phi"]) > 1e-3:
        out_of_domain.append("phi far from 0: pQFIM and tradeoff closed forms are approximate")
    if kind == "qubit":
        qp = cf.QubitParams(
            theta=params["theta"], gamma_fluct=gam,
            gamma_ps=params["gamma_ps"], phi=params["phi"],
            theta_meas=params["theta_meas"],
        )
        quantum, classical = cf.qubit_tradeoffs(params["theta"], gam)
        succ, fail = cf.qubit_commutator_traces(qp)
        body.update(
            {
                "w_success": cf.qubit_w_success(qp),
                "pqfim": np.diag(cf.qubit_pqfim(params["theta"], gam)).tolist(),
                "tradeoff_quantum": quantum,
                "tradeoff_classical": classical,
                "commutator_trace_success_imag": succ.imag,
                "commutator_trace_failure_imag": fail.imag,
            }
        )
    else:
        gp = cf.GaussianParams(
            sigma=params["sigma"], gamma_fluct=gam,
            gamma_ps=params["gamma_ps"], phi=params["phi"],
        )
        quantum = cf.gaussian_tradeoff_quantum(gam, params["sigma"])
        geo = cf.gaussian_mode_geometry(gp)
        body.update(
            {
                "w_success": cf.gaussian_w_success(gp),
                "pqfim": np.diag(cf.gaussian_pqfim(gam, params["sigma"])).tolist(),
                "tradeoff_quantum": quantum,
                "mode_norms_success": geo.norms["success"].tolist(),
                "mode_norms_failure": geo.norms["failure"].tolist(),
                "mode_cross_success": abs(geo.cross["success"]),
                "mode_cross_failure": abs(geo.cross["failure"]),
            }
        )
    body["out_of_domain"] = out_of_domain
    _write_json(cfg.output, _json_report(cfg, body))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psmet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sweep", "evaluate information matrices and tradeoffs over a parameter grid"),
        ("verify", "check closed forms, bound chain, and ambiguous-print evidence"),
        ("simulate", "Monte Carlo sampling, MLE fits, covariance vs bound"),
        ("closed-form", "evaluate the analytic formulas at one parameter point"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config document")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-path config override (JSON-parsed value)")
        p.add_argument("--out", help="output path (default: stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, getattr(args, "set", None), args.command, args.out)
    except ConfigError as exc:
        print(f"psmet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    runners = {
        "sweep": run_sweep,
        "verify": run_verify,
        "simulate": run_simulate,
        "closed-form": run_closed_form,
    }
    try:
        return runners[cfg.command](cfg)
    except ConfigError as exc:
        print(f"psmet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailure as exc:
        print(f"psmet: verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"psmet: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
