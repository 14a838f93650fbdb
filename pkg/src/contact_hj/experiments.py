"""End-to-end studies: discount sweeps, localization tables, measure scans.

Each driver consumes a validated ExperimentConfig, runs its sweep cells
through a bounded thread pool, and assembles a ConvergenceReport whose
verdicts cite the table rows they were computed from. Cell failures are
recorded in the tables and the sweep continues; only configuration errors
abort a run. All artifacts (CSV tables, gnuplot .dat files, report.json)
are written atomically under out/<experiment>/<timestamp>/.
"""

import datetime
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import Domain, DomainError, GridField, UniformGrid, atomic_write_text
from .hamiltonian import (HamiltonianModel, LagrangianEvaluator, ModelError,
                          check_assumptions)
from .measures import (closedness_defect, default_battery, discounted_measure,
                       mather_defect, selection_functional,
                       weak_limit_diagnostics, write_measure_csv)
from .solver import (CMismatchError, ControlSet, SolveParams, SolverError,
                     estimate_critical_value, mane_potential, solve_ergodic,
                     solve_state_constraint)
from .trajectory import backtrace, compute_indices, write_curve_csv

__all__ = ["ConfigError", "ExperimentConfig", "ConvergenceReport",
           "vanishing_discount_sweep", "localization_study", "measure_study",
           "builtin_models", "worker_count"]


class ConfigError(ValueError):
    """Raised for malformed configs before any compute starts."""


_GRID_KEYS = {"box", "shape", "kind", "radius"}
_SOLVER_KEYS = {"dt", "tol", "max_iters", "damping"}
_CONTROL_KEYS = {"max_speed", "da"}
_TOP_KEYS = {"name", "model", "c", "grid", "lambdas", "radii", "probes",
             "horizon", "window", "solver", "controls", "truncation_radius",
             "gap_tol", "stab_tol", "outdir", "expect_assumptions"}


def _reject_unknown(data: dict, allowed: set, where: str) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown config key {where}{key!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully determines a run; every driver takes one of these."""

    name: str
    model: dict                  # HamiltonianModel descriptor
    c: float
    grid: dict                   # box/shape/kind/radius
    lambdas: tuple               # strictly decreasing, > 0
    radii: tuple                 # strictly increasing
    probes: tuple                # trace start points
    horizon: float | None        # None -> tail rule max(40, ln10/(lam*kappa))
    window: tuple                # compact comparison window, per axis
    solver: dict
    controls: dict
    truncation_radius: float | None
    gap_tol: float
    stab_tol: float
    outdir: str
    expect_assumptions: dict = dc_field(default_factory=dict)

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        _reject_unknown(data, _TOP_KEYS, "")
        if "model" not in data:
            raise ConfigError("config needs a 'model' descriptor")
        try:
            model = HamiltonianModel.from_json(data["model"])
        except (ModelError, KeyError, ValueError) as exc:
            raise ConfigError(f"bad model descriptor: {exc}") from exc
        dim = model.dim

        grid = dict(data.get("grid", {}))
        _reject_unknown(grid, _GRID_KEYS, "grid.")
        if "box" not in grid:
            grid["box"] = [[-10.0, 10.0]] if dim == 1 else [[-6.0, 6.0]] * 2
        if "shape" not in grid:
            grid["shape"] = [401] if dim == 1 else [161, 161]
        if len(grid["box"]) != dim or len(grid["shape"]) != dim:
            raise ConfigError("grid box/shape rank does not match model dim")
        grid.setdefault("kind", "box")
        if grid["kind"] not in ("box", "ball"):
            raise ConfigError(f"grid.kind must be box or ball, got {grid['kind']!r}")

        solver = dict(data.get("solver", {}))
        _reject_unknown(solver, _SOLVER_KEYS, "solver.")
        solver.setdefault("tol", 1e-8)
        solver.setdefault("max_iters", 50000)
        solver.setdefault("damping", 1.0)
        solver.setdefault("dt", None)

        controls = dict(data.get("controls", {}))
        _reject_unknown(controls, _CONTROL_KEYS, "controls.")

        lams = tuple(float(l) for l in data.get("lambdas", (0.2, 0.1, 0.05, 0.025)))
        if any(l <= 0 for l in lams):
            raise ConfigError("lambdas must be positive")
        if any(b >= a for a, b in zip(lams, lams[1:])):
            raise ConfigError("lambdas must be strictly decreasing")
        radii = tuple(float(r) for r in data.get("radii", (2, 3, 4, 5, 6)))
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigError("radii must be strictly increasing")

        probes = data.get("probes", [0.0, 1.0] if dim == 1 else [[0.0, 0.0]])
        probes = tuple(tuple(p) if isinstance(p, (list, tuple)) else (float(p),)
                       for p in probes)
        for p in probes:
            if len(p) != dim:
                raise ConfigError(f"probe {p} does not match model dim")

        window = data.get("window", [-3.0, 3.0] if dim == 1 else [[-2, 2], [-2, 2]])
        if dim == 1 and not isinstance(window[0], (list, tuple)):
            window = [window]
        window = tuple(tuple(float(v) for v in w) for w in window)
        if len(window) != dim:
            raise ConfigError("window rank does not match model dim")

        horizon = data.get("horizon")
        return ExperimentConfig(
            name=str(data.get("name", "custom")),
            model=model.to_json(),
            c=float(data.get("c", 0.0)),
            grid=grid,
            lambdas=lams,
            radii=radii,
            probes=probes,
            horizon=None if horizon is None else float(horizon),
            window=window,
            solver=solver,
            controls=controls,
            truncation_radius=(None if data.get("truncation_radius") is None
                               else float(data["truncation_radius"])),
            gap_tol=float(data.get("gap_tol", 1e-3)),
            stab_tol=float(data.get("stab_tol", 1e-3)),
            outdir=str(data.get("outdir", "out")),
            expect_assumptions=dict(data.get("expect_assumptions", {})),
        )

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}")
        return ExperimentConfig.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "model": self.model, "c": self.c,
            "grid": self.grid, "lambdas": list(self.lambdas),
            "radii": list(self.radii), "probes": [list(p) for p in self.probes],
            "horizon": self.horizon, "window": [list(w) for w in self.window],
            "solver": self.solver, "controls": self.controls,
            "truncation_radius": self.truncation_radius,
            "gap_tol": self.gap_tol, "stab_tol": self.stab_tol,
            "outdir": self.outdir,
            "expect_assumptions": self.expect_assumptions,
        }

    # -- runtime objects ----------------------------------------------------

    def build_model(self) -> HamiltonianModel:
        return HamiltonianModel.from_json(self.model)

    def build_grid(self, kind=None, radius=None, box=None, shape=None) -> UniformGrid:
        box = tuple(tuple(b) for b in (box or self.grid["box"]))
        shape = tuple(int(s) for s in (shape or self.grid["shape"]))
        kind = kind or self.grid["kind"]
        if kind == "ball":
            radius = radius if radius is not None else self.grid.get("radius")
            if radius is None:
                raise ConfigError("ball grid needs a radius")
            return UniformGrid(Domain.ball(box, float(radius)), shape)
        return UniformGrid(Domain.full_box(box), shape)

    def build_params(self) -> SolveParams:
        s = self.solver
        return SolveParams(dt=s["dt"], tol=float(s["tol"]),
                           max_iters=int(s["max_iters"]),
                           damping=float(s["damping"]))

    def build_controls(self, dim: int) -> ControlSet:
        return ControlSet.build(dim, max_speed=self.controls.get("max_speed"),
                                da=self.controls.get("da"))

    def node_density(self) -> float:
        """Nodes per unit length along the first axis of the main grid."""
        lo, hi = self.grid["box"][0]
        return (int(self.grid["shape"][0]) - 1) / (hi - lo)

    def trace_horizon(self, lam: float, kappa_lo: float) -> float:
        """Horizon keeping the tail weight e^{lam*beta(-T)} at or below 0.1."""
        base = 40.0 if self.horizon is None else self.horizon
        if kappa_lo > 0:
            return max(base, math.log(10.0) / (lam * kappa_lo))
        return base


# ---------------------------------------------------------------------------
# reports


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


@dataclass
class ConvergenceReport:
    experiment: str
    config: dict
    tables: dict = dc_field(default_factory=dict)   # name -> {columns, rows}
    verdicts: list = dc_field(default_factory=list)
    runtime: dict = dc_field(default_factory=dict)
    notes: list = dc_field(default_factory=list)

    def add_table(self, name: str, columns, rows) -> None:
        self.tables[name] = {"columns": list(columns),
                             "rows": [list(r) for r in rows]}

    def add_verdict(self, name: str, passed, observed, threshold: str,
                    table: str, rows) -> None:
        self.verdicts.append({"name": name, "passed": bool(passed),
                              "observed": observed, "threshold": threshold,
                              "table": table, "rows": list(rows)})

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def verdict(self, name: str) -> dict:
        for v in self.verdicts:
            if v["name"] == name:
                return v
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"experiment": self.experiment, "config": self.config,
                "tables": self.tables, "verdicts": self.verdicts,
                "runtime": self.runtime, "notes": self.notes}

    def write(self, run_dir) -> None:
        os.makedirs(run_dir, exist_ok=True)
        for name, tab in self.tables.items():
            header = "# " + ",".join(tab["columns"])
            lines = [header] + [",".join(_fmt(v) for v in row)
                                for row in tab["rows"]]
            atomic_write_text(os.path.join(run_dir, f"{name}.csv"),
                              "\n".join(lines) + "\n")
            dat = ["# " + " ".join(tab["columns"])]
            dat += [" ".join(_fmt(v) for v in row) for row in tab["rows"]]
            atomic_write_text(os.path.join(run_dir, f"{name}.dat"),
                              "\n".join(dat) + "\n")
        atomic_write_text(os.path.join(run_dir, "report.json"),
                          json.dumps(self.to_json(), indent=2) + "\n")


def worker_count(workers=None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("CONTACT_HJ_WORKERS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"CONTACT_HJ_WORKERS={env!r} is not an integer")
    return 1


def _run_cells(fn, keys, workers: int) -> dict:
    """Evaluate fn over cell keys; returns key -> (status, payload).

    Results are keyed, so assembly order (and therefore every artifact) is
    independent of the pool size.
    """
    out = {}
    if workers <= 1:
        for key in keys:
            out[key] = _guard(fn, key)
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {key: pool.submit(_guard, fn, key) for key in keys}
        for key in keys:
            out[key] = futures[key].result()
    return out


def _guard(fn, key):
    try:
        return ("ok", fn(key))
    except (SolverError, DomainError, CMismatchError, ValueError) as exc:
        return ("error", f"{type(exc).__name__}: {exc}")


def make_run_dir(outdir, experiment: str, stamp: str = None) -> str:
    if stamp is None:
        stamp = datetime.datetime.now(datetime.timezone.utc).strftime(
            "%Y%m%d-%H%M%S")
        base = os.path.join(outdir, experiment, stamp)
        n = 0
        path = base
        while os.path.exists(path):
            n += 1
            path = f"{base}-{n}"
    else:
        path = os.path.join(outdir, experiment, stamp)
    os.makedirs(path, exist_ok=True)
    return path


def _window_points(window, density: float) -> np.ndarray:
    axes = [np.linspace(lo, hi, max(3, int(round((hi - lo) * density)) + 1))
            for lo, hi in window]
    if len(axes) == 1:
        return axes[0][:, None]
    gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _probe_label(p) -> str:
    return "_".join(f"{v:g}" for v in p)


# ---------------------------------------------------------------------------
# drivers


def vanishing_discount_sweep(config: ExperimentConfig, workers=None,
                             run_dir=None) -> ConvergenceReport:
    """Sweep the discount parameter and compare against the ergodic limit.

    Solves the truncated maximal field for each discount in the schedule
    (warm-started along the chain, so the lambda chain itself is sequential),
    then checks window Cauchy decrease, decay of lam*u, the ergodic polish of
    the smallest-lambda field against the pinned semi-distance, and the
    selection functional of that limit proxy against every traced measure.
    """
    t_start = time.monotonic()
    workers = worker_count(workers)
    model = config.build_model()
    evaluator = LagrangianEvaluator(model)
    controls = config.build_controls(model.dim)
    r_trunc = config.truncation_radius or max(config.radii) + 2.0
    grid = config.build_grid(kind="ball", radius=r_trunc)
    params = config.build_params().resolve(grid, controls)
    kappa_lo = max(model.kappa_bounds(evaluator.p_extent)[0], 0.0)

    report = ConvergenceReport("vanishing_discount", config.to_dict())
    fields = {}
    solve_rows = []
    warm = None
    for lam in config.lambdas:
        out = solve_state_constraint(model, grid, lam, config.c, params,
                                     controls=controls, evaluator=evaluator,
                                     v0=warm)
        fields[lam] = out.field
        warm = out.field.values
        solve_rows.append([lam, out.iterations, out.final_residual,
                           out.converged])
    report.add_table("solves", ["lambda", "iterations", "residual",
                                "converged"], solve_rows)

    pts = _window_points(config.window, config.node_density())
    vals = {lam: fields[lam].interpolate(pts if model.dim == 2 else pts[:, 0])
            for lam in config.lambdas}

    cauchy_rows = []
    for a, b in zip(config.lambdas, config.lambdas[1:]):
        cauchy_rows.append([a, b, float(np.max(np.abs(vals[a] - vals[b])))])
    report.add_table("cauchy", ["lambda_hi", "lambda_lo", "window_sup_diff"],
                     cauchy_rows)
    diffs = [r[2] for r in cauchy_rows]
    report.add_verdict("cauchy_monotone",
                       all(b <= a + 1e-12 for a, b in zip(diffs, diffs[1:])),
                       diffs, "nonincreasing", "cauchy",
                       range(len(cauchy_rows)))
    report.add_verdict("cauchy_final", diffs[-1] <= 2e-2, diffs[-1],
                       "<= 2e-2", "cauchy", [len(cauchy_rows) - 1])

    norm_rows = [[lam, float(np.max(np.abs(lam * vals[lam])))]
                 for lam in config.lambdas]
    report.add_table("lambda_norm", ["lambda", "window_max_lambda_u"],
                     norm_rows)
    norms = [r[1] for r in norm_rows]
    report.add_verdict("lambda_u_decreasing",
                       all(b <= a + 1e-12 for a, b in zip(norms, norms[1:])),
                       norms, "nonincreasing", "lambda_norm",
                       range(len(norm_rows)))
    report.add_verdict("lambda_u_final", norms[-1] <= 1e-2, norms[-1],
                       "<= 1e-2", "lambda_norm", [len(norm_rows) - 1])

    # limit proxy: ergodic polish warm-started from the smallest discount
    lam_min = config.lambdas[-1]
    origin = (0.0,) * model.dim
    proxy_out = solve_ergodic(model, grid, config.c, params, anchor=origin,
                              controls=controls, evaluator=evaluator,
                              v0=fields[lam_min].values)
    proxy = proxy_out.field
    report.add_verdict("proxy_ergodic_residual",
                       proxy_out.final_residual <= 5 * params.tol,
                       proxy_out.final_residual, "<= 5*tol", "solves", [])

    mane = mane_potential(model, grid, origin, config.c, params,
                          controls=controls, evaluator=evaluator)
    proxy_w = proxy.interpolate(pts if model.dim == 2 else pts[:, 0])
    mane_w = mane.interpolate(pts if model.dim == 2 else pts[:, 0])
    gap = float(np.max(np.abs(proxy_w - mane_w)))
    report.add_table("limit_proxy", ["quantity", "value"],
                     [["proxy_vs_mane_window_sup", gap],
                      ["proxy_at_origin", float(proxy.interpolate(
                          np.array([origin]) if model.dim == 2 else 0.0))],
                      ["ergodic_residual", proxy_out.final_residual]])
    report.add_verdict("proxy_matches_mane", gap <= 5e-2, gap, "<= 5e-2",
                       "limit_proxy", [0])
    p0 = report.tables["limit_proxy"]["rows"][1][1]
    report.add_verdict("proxy_origin", abs(p0) <= 2e-2, p0, "|.| <= 2e-2",
                       "limit_proxy", [1])

    # traced measures for every (lambda, probe) cell, selection vs the proxy
    def trace_cell(key):
        lam, probe = key
        horizon = config.trace_horizon(lam, kappa_lo)
        z = probe if model.dim == 2 else probe[0]
        curve = backtrace(fields[lam], model, evaluator, controls, lam,
                          config.c, z, horizon, params.dt)
        idx = compute_indices(curve, model, evaluator, fields[lam], lam,
                              "kappa")
        mu = discounted_measure(curve, idx, lam)
        return curve, idx, mu, horizon

    keys = [(lam, probe) for lam in config.lambdas for probe in config.probes]
    cells = _run_cells(trace_cell, keys, workers)
    sel_rows = []
    sel_values = []
    for lam, probe in keys:
        status, payload = cells[(lam, probe)]
        if status != "ok":
            sel_rows.append([lam, _probe_label(probe), "nan", 0.0, payload])
            continue
        curve, idx, mu, horizon = payload
        value = selection_functional(mu, proxy, model, evaluator)
        sel_values.append(value)
        sel_rows.append([lam, _probe_label(probe), value, horizon, "ok"])
    report.add_table("selection", ["lambda", "probe", "functional",
                                   "horizon", "status"], sel_rows)
    worst = min(sel_values) if sel_values else float("nan")
    report.add_verdict("selection_nonnegative",
                       bool(sel_values) and worst >= -1e-2, worst,
                       ">= -1e-2", "selection", range(len(sel_rows)))

    if run_dir is None:
        run_dir = make_run_dir(config.outdir, "vanishing_discount")
    for lam in config.lambdas:
        fields[lam].to_csv(os.path.join(run_dir, f"field_lam{lam:g}.csv"))
    proxy.to_csv(os.path.join(run_dir, "limit_proxy_field.csv"))
    mane.to_csv(os.path.join(run_dir, "mane_field.csv"))
    if model.dim == 1:
        cols = ["x"] + [f"u_{lam:g}" for lam in config.lambdas] \
            + ["proxy", "mane"]
        rows = np.column_stack([pts[:, 0]]
                               + [vals[lam] for lam in config.lambdas]
                               + [proxy_w, mane_w])
        report.add_table("profiles", cols, rows.tolist())
    report.runtime = {"seconds": time.monotonic() - t_start,
                      "workers": workers, "cells": len(keys)}
    report.write(run_dir)
    return report


def localization_study(config: ExperimentConfig, z=None, workers=None,
                       run_dir=None) -> ConvergenceReport:
    """Tabulate the truncated-maximal vs constrained-ball gap over (lam, R).

    Detects the empirical plateau radius per discount: the first radius where
    the probe gap stays within gap_tol on two consecutive radii.
    """
    t_start = time.monotonic()
    workers = worker_count(workers)
    model = config.build_model()
    evaluator = LagrangianEvaluator(model)
    controls = config.build_controls(model.dim)
    if z is None:
        z = config.probes[0]
    z = tuple(z) if isinstance(z, (list, tuple)) else (float(z),)
    z_arg = z if model.dim == 2 else z[0]

    r_trunc = config.truncation_radius or max(config.radii) + 2.0
    if r_trunc <= max(config.radii):
        raise ConfigError("truncation radius must exceed every scheduled R")
    density = config.node_density()

    def ball_grid(radius):
        box = tuple((-radius - 2.0, radius + 2.0) for _ in range(model.dim))
        n = int(round(2 * (radius + 2.0) * density)) + 1
        return UniformGrid(Domain.ball(box, radius), (n,) * model.dim)

    grid_tr = ball_grid(r_trunc)
    params = config.build_params().resolve(grid_tr, controls)

    report = ConvergenceReport("localization", config.to_dict())
    u_z = {}
    warm = None
    trunc_rows = []
    for lam in config.lambdas:
        out = solve_state_constraint(model, grid_tr, lam, config.c, params,
                                     controls=controls, evaluator=evaluator,
                                     v0=warm)
        warm = out.field.values
        u_z[lam] = float(out.field.interpolate(
            np.array([z]) if model.dim == 2 else z_arg))
        trunc_rows.append([lam, r_trunc, u_z[lam], out.iterations,
                           out.final_residual])
    report.add_table("truncated", ["lambda", "R_trunc", "u_at_z",
                                   "iterations", "residual"], trunc_rows)

    def cell(key):
        lam, radius = key
        grid_r = ball_grid(radius)
        out = solve_state_constraint(model, grid_r, lam, config.c,
                                     params, controls=controls,
                                     evaluator=evaluator)
        return float(out.field.interpolate(
            np.array([z]) if model.dim == 2 else z_arg))

    keys = [(lam, r) for lam in config.lambdas for r in config.radii]
    cells = _run_cells(cell, keys, workers)

    gap_rows = []
    sign_ok = True
    worst_sign = 0.0
    for lam, radius in keys:
        status, payload = cells[(lam, radius)]
        if status != "ok":
            gap_rows.append([lam, radius, "nan", u_z[lam], "nan", payload])
            continue
        gap = payload - u_z[lam]
        worst_sign = min(worst_sign, gap)
        if gap < -2 * params.tol:
            sign_ok = False
        gap_rows.append([lam, radius, payload, u_z[lam], gap, "ok"])
    report.add_table("gaps", ["lambda", "R", "theta_at_z", "u_at_z", "gap",
                              "status"], gap_rows)
    report.add_verdict("comparison_sign", sign_ok, worst_sign,
                       ">= -2*tol", "gaps", range(len(gap_rows)))

    plateau_rows = []
    for lam in config.lambdas:
        gaps = [(r, row[4]) for (l, r), row in zip(keys, gap_rows)
                if l == lam and row[5] == "ok"]
        r_z = None
        for (r1, g1), (r2, g2) in zip(gaps, gaps[1:]):
            if abs(g1) <= config.gap_tol and abs(g2) <= config.gap_tol:
                r_z = r1
                break
        plateau_rows.append([lam, "none" if r_z is None else r_z])
    report.add_table("plateau", ["lambda", "R_z"], plateau_rows)
    found = [row for row in plateau_rows if row[1] != "none"]
    report.add_verdict("plateau_detected", len(found) > 0,
                       len(found), ">= 1 discount with a plateau",
                       "plateau", range(len(plateau_rows)))
    lam_z = max((row[0] for row in found), default="none")
    report.notes.append(f"empirical lambda_z: {lam_z}")

    if run_dir is None:
        run_dir = make_run_dir(config.outdir, "localization")
    report.runtime = {"seconds": time.monotonic() - t_start,
                      "workers": workers, "cells": len(keys), "z": list(z)}
    report.write(run_dir)
    return report


def measure_study(config: ExperimentConfig, probes=None, workers=None,
                  run_dir=None) -> ConvergenceReport:
    """Trace measures per (lambda, probe); scan defects against the discount.

    Fits the closedness-defect decay exponent over the discount schedule and
    runs the weak-limit diagnostics per probe.
    """
    t_start = time.monotonic()
    workers = worker_count(workers)
    model = config.build_model()
    evaluator = LagrangianEvaluator(model)
    controls = config.build_controls(model.dim)
    grid = config.build_grid()
    params = config.build_params().resolve(grid, controls)
    kappa_lo = max(model.kappa_bounds(evaluator.p_extent)[0], 0.0)
    if probes is None:
        probes = config.probes
    probes = tuple(tuple(p) if isinstance(p, (list, tuple)) else (float(p),)
                   for p in probes)
    battery = default_battery(model.dim)

    report = ConvergenceReport("measures", config.to_dict())
    fields = {}
    warm = None
    for lam in config.lambdas:
        out = solve_state_constraint(model, grid, lam, config.c, params,
                                     controls=controls, evaluator=evaluator,
                                     v0=warm)
        fields[lam] = out.field
        warm = out.field.values

    def cell(key):
        lam, probe = key
        horizon = config.trace_horizon(lam, kappa_lo)
        zz = probe if model.dim == 2 else probe[0]
        curve = backtrace(fields[lam], model, evaluator, controls, lam,
                          config.c, zz, horizon, params.dt)
        idx = compute_indices(curve, model, evaluator, fields[lam], lam,
                              "kappa")
        mu = discounted_measure(curve, idx, lam)
        closed = closedness_defect(mu, battery)
        mather = mather_defect(mu, model, evaluator, config.c)
        dist = mu.points - np.asarray([0.0] * model.dim)
        support = float(np.sum(mu.weights * np.sqrt(np.sum(dist ** 2, axis=1))))
        return mu, curve, idx, closed, mather, support, horizon

    keys = [(lam, probe) for lam in config.lambdas for probe in probes]
    cells = _run_cells(cell, keys, workers)

    defect_rows = []
    measures_by_probe = {p: {} for p in probes}
    for lam, probe in keys:
        status, payload = cells[(lam, probe)]
        if status != "ok":
            defect_rows.append([lam, _probe_label(probe), "nan", "nan",
                                "nan", 0.0, payload])
            continue
        mu, curve, idx, closed, mather, support, horizon = payload
        measures_by_probe[probe][lam] = mu
        defect_rows.append([lam, _probe_label(probe), closed, mather,
                            support, horizon, "ok"])
    report.add_table("defects", ["lambda", "probe", "closedness", "mather",
                                 "support_mean_dist", "horizon", "status"],
                     defect_rows)

    slope_rows = []
    for probe in probes:
        series = [(row[0], row[2], row[3], row[4]) for (l, p), row
                  in zip(keys, defect_rows)
                  if p == probe and row[6] == "ok"]
        closed = np.array([s[1] for s in series], dtype=float)
        if len(series) < 2 or np.any(closed <= 0):
            slope_rows.append([_probe_label(probe), "nan", "degenerate"])
            continue
        lams = np.array([s[0] for s in series], dtype=float)
        slope = float(np.polyfit(np.log(lams), np.log(closed), 1)[0])
        slope_rows.append([_probe_label(probe), slope, "ok"])
    report.add_table("slopes", ["probe", "closedness_exponent", "status"],
                     slope_rows)
    fitted = [r[1] for r in slope_rows if r[2] == "ok"]
    report.add_verdict("closedness_exponent",
                       bool(fitted) and all(0.7 <= s <= 1.3 for s in fitted),
                       fitted, "in [0.7, 1.3]", "slopes",
                       range(len(slope_rows)))

    final = [row for (l, p), row in zip(keys, defect_rows)
             if l == config.lambdas[-1] and row[6] == "ok"]
    worst_mather = max((abs(row[3]) for row in final), default=float("nan"))
    report.add_verdict("mather_final", bool(final) and worst_mather <= 5e-2,
                       worst_mather, "<= 5e-2 at smallest lambda", "defects",
                       range(len(defect_rows)))

    conc_ok = True
    for probe in probes:
        sup = [row[4] for (l, p), row in zip(keys, defect_rows)
               if p == probe and row[6] == "ok"]
        if any(b > a + 1e-9 for a, b in zip(sup, sup[1:])):
            conc_ok = False
    report.add_verdict("support_concentrates", conc_ok, conc_ok,
                       "mean distance nonincreasing in lambda", "defects",
                       range(len(defect_rows)))

    weak_rows = []
    for probe in probes:
        fam = measures_by_probe[probe]
        if len(fam) < 2:
            continue
        rep = weak_limit_diagnostics(fam, battery, model, evaluator)
        for (a, b), d in zip(zip(rep.lambdas, rep.lambdas[1:]),
                             rep.discrepancies):
            weak_rows.append([_probe_label(probe), a, b, d])
    report.add_table("weak_limit", ["probe", "lambda_hi", "lambda_lo",
                                    "discrepancy"], weak_rows)
    finals = [row[3] for row in weak_rows
              if row[2] == config.lambdas[-1]]
    report.add_verdict("weak_limit_final",
                       bool(finals) and max(finals) <= 5e-2,
                       max(finals) if finals else "nan", "<= 5e-2",
                       "weak_limit", range(len(weak_rows)))

    if run_dir is None:
        run_dir = make_run_dir(config.outdir, "measures")
    for probe in probes:
        for lam, mu in measures_by_probe[probe].items():
            name = f"measure_lam{lam:g}_z{_probe_label(probe)}.csv"
            write_measure_csv(os.path.join(run_dir, name), mu)
    report.runtime = {"seconds": time.monotonic() - t_start,
                      "workers": workers, "cells": len(keys)}
    report.write(run_dir)
    return report


# ---------------------------------------------------------------------------
# presets


def builtin_models() -> dict:
    """Named desk-scale presets covering the structural variants."""
    verified = "verified-on-samples"
    base_expect = {"H1": verified, "H2": verified, "H3": verified,
                   "H4": verified, "P1": verified, "P2": verified,
                   "P3": verified}
    presets = {}

    def add(name, data):
        presets[name] = ExperimentConfig.from_dict({"name": name, **data})

    gauss = "1 - exp(-x^2)"
    add("quadratic-linear", {
        "model": {"dim": 1, "kinetic": {"type": "quadratic"},
                  "potential": gauss,
                  "coupling": {"type": "linear", "phi": "1",
                               "bounds": {"kappa_lo": 1.0, "kappa_hi": 1.0}}},
        "c": 0.0,
        "expect_assumptions": dict(base_expect),
    })
    add("quadratic-phi", {
        "model": {"dim": 1, "kinetic": {"type": "quadratic"},
                  "potential": gauss,
                  "coupling": {"type": "linear", "phi": "2 + sin(x)",
                               "bounds": {"kappa_lo": 1.0, "kappa_hi": 3.0}}},
        "c": 0.0,
        "expect_assumptions": dict(base_expect),
    })
    add("power-tau", {
        "model": {"dim": 1, "kinetic": {"type": "power", "tau": 3.0},
                  "potential": gauss,
                  "coupling": {"type": "linear", "phi": "1",
                               "bounds": {"kappa_lo": 1.0, "kappa_hi": 1.0}}},
        "c": 0.0,
        "expect_assumptions": dict(base_expect),
    })
    add("arctan", {
        "model": {"dim": 1, "kinetic": {"type": "quadratic"},
                  "potential": gauss,
                  "coupling": {"type": "arctan", "shift": math.pi}},
        # flat subsolutions give H(x,0,0) = pi - f <= pi with equality at the
        # potential minimum, so the critical constant is pi exactly
        "c": math.pi,
        "grid": {"box": [[-10.0, 10.0]], "shape": [201]},
        "expect_assumptions": {**base_expect, "H4": "violated",
                               "P2": "violated"},
    })
    add("quadratic-2d", {
        "model": {"dim": 2, "kinetic": {"type": "quadratic"},
                  "potential": "1 - exp(-(x^2 + y^2))",
                  "coupling": {"type": "linear", "phi": "1",
                               "bounds": {"kappa_lo": 1.0, "kappa_hi": 1.0}}},
        "c": 0.0,
        "expect_assumptions": dict(base_expect),
    })
    return presets


def run_assumption_check(config: ExperimentConfig) -> dict:
    """Assumption report for a config plus comparison with its expectations."""
    model = config.build_model()
    report = check_assumptions(model)
    expected = config.expect_assumptions
    mismatches = {}
    for name, want in expected.items():
        got = report.status(name)
        if got != want:
            mismatches[name] = {"expected": want, "got": got}
    return {"report": report.to_json(),
            "expected": expected,
            "mismatches": mismatches,
            "passed": not mismatches}
