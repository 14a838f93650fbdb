"""Semi-Lagrangian Lax-Oleinik fixed-point solvers.

One sweep applies v'(x) = min over admissible controls a of
Δt*(L(x, a, λ*v(x)) + c) + Interp[v](x - Δt*a), with the contact argument
frozen at the current iterate (explicit treatment). For λ > 0 and couplings
with du_H >= kappa_lo > 0 the sweep contracts with factor 1 - kappa_lo*λ*Δt,
so residuals eventually decay geometrically; the iteration exploits that by
extrapolating the geometric tail every few dozen sweeps, which cuts the sweep
count by orders of magnitude at small λ without touching the operator.

Because feet x - Δt*a shift every node by the same fraction of a cell, each
control's interpolation is two (1D) or four (2D) constant-weight gathers
through precomputed index tables; a sweep is a handful of vectorized passes.
"""

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Domain, GridField, UniformGrid
from .hamiltonian import HamiltonianModel, LagrangianEvaluator, lower_bound_m0

__all__ = [
    "ControlSet", "SolveParams", "SolveOutcome", "SweepKernel",
    "SolverError", "CMismatchError", "lax_oleinik_step",
    "solve_state_constraint", "estimate_critical_value", "solve_ergodic",
    "solve_maximal_global", "mane_potential", "aubry_indicator",
    "CriticalValueEstimate", "default_max_speed",
]

_ACCEL_PERIOD = 32
_ACCEL_TAIL = 8
_FLOAT_FLOOR = 1e-13


class SolverError(RuntimeError):
    """Solver configuration or convergence failure."""


class CMismatchError(SolverError):
    """Ergodic iteration drifts at a steady rate: the supplied c is off."""

    def __init__(self, rate: float, drift: float, iteration: int):
        super().__init__(
            f"anchor drifts at rate {rate:.6g} per unit time after burn-in "
            f"(sweep {iteration}); the supplied c appears wrong by about "
            f"{-rate:.6g}")
        self.rate = rate
        self.drift = drift
        self.iteration = iteration


def default_max_speed(dim: int) -> float:
    return 6.0 if dim == 1 else 4.0


@dataclass(frozen=True)
class ControlSet:
    """Velocity lattice: all vectors a with |a| <= max_speed, step da per axis.

    Lexicographic ordering fixes argmin tie-breaks; the zero control is always
    present and the lattice is symmetric under sign flips.
    """

    max_speed: float
    da: float
    controls: np.ndarray

    @staticmethod
    def build(dim: int, max_speed: float = None, da: float = None) -> "ControlSet":
        if max_speed is None:
            max_speed = default_max_speed(dim)
        max_speed = float(max_speed)
        if max_speed <= 0:
            raise SolverError("max_speed must be positive")
        if da is None:
            da = max_speed / (48.0 if dim == 1 else 16.0)
        da = float(da)
        if da <= 0 or da > max_speed:
            raise SolverError("control spacing must lie in (0, max_speed]")
        k = int(math.floor(max_speed / da + 1e-12))
        axis = da * np.arange(-k, k + 1)
        if dim == 1:
            controls = axis[:, None]
        else:
            ax, ay = np.meshgrid(axis, axis, indexing="ij")
            controls = np.column_stack([ax.ravel(), ay.ravel()])
            keep = np.sum(np.square(controls), axis=1) <= max_speed ** 2 + 1e-12
            controls = controls[keep]
        return ControlSet(max_speed=max_speed, da=da, controls=controls)

    @property
    def dim(self) -> int:
        return self.controls.shape[1]

    @property
    def speeds(self) -> np.ndarray:
        return np.sqrt(np.sum(np.square(self.controls), axis=1))


@dataclass(frozen=True)
class SolveParams:
    dt: float = None  # resolved from the grid/controls when omitted
    tol: float = 1e-8
    max_iters: int = 50000
    damping: float = 1.0

    def resolve(self, grid: UniformGrid, controls: ControlSet) -> "SolveParams":
        if self.damping <= 0 or self.damping > 1:
            raise SolverError("damping must lie in (0, 1]")
        dt = self.dt
        if dt is None:
            dt = 0.5 * min(grid.dx) / controls.max_speed
        span = max(hi - lo for lo, hi in grid.domain.box)
        if dt * controls.max_speed > span:
            raise SolverError("time step moves feet beyond the grid box")
        return replace(self, dt=float(dt))


@dataclass
class SolveOutcome:
    field: GridField
    iterations: int
    final_residual: float
    converged: bool
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"iterations": self.iterations,
                "residual": self.final_residual,
                "converged": self.converged}


class SweepKernel:
    """Precomputed gather tables and per-control data for one grid setup."""

    def __init__(self, grid: UniformGrid, evaluator: LagrangianEvaluator,
                 controls: ControlSet, dt: float, constrained: bool = True):
        model = evaluator.model
        if controls.dim != grid.dim or model.dim != grid.dim:
            raise SolverError("dimension mismatch between grid/model/controls")
        self.grid = grid
        self.evaluator = evaluator
        self.controls = controls
        self.dt = float(dt)
        self.constrained = constrained
        dim = grid.dim
        for k in range(dim):
            if self.dt * controls.max_speed > grid.dx[k] + 1e-12:
                raise SolverError(
                    "feet move more than one cell per step; shrink dt")
        pts = grid.points()
        mask_flat = grid.mask.ravel()
        self.mask_flat = mask_flat
        self.in_idx = np.where(mask_flat)[0]
        rmap = grid.replacement_map

        # gather tables per base-offset combo (offsets are in {-1, 0, 1})
        if dim == 1:
            n = grid.shape[0]
            i = np.arange(n)
            self._gather = {(b,): rmap[np.clip(i + b, 0, n - 1)]
                            for b in (-1, 0, 1)}
        else:
            nx, ny = grid.shape
            ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
            self._gather = {}
            for bx in (-1, 0, 1):
                for by in (-1, 0, 1):
                    flat = (np.clip(ii + bx, 0, nx - 1) * ny
                            + np.clip(jj + by, 0, ny - 1))
                    self._gather[(bx, by)] = rmap[flat.ravel()]

        ctrl = controls.controls
        m = len(ctrl)
        base = np.empty((m, dim), dtype=int)
        frac = np.empty((m, dim))
        for k in range(dim):
            delta = -self.dt * ctrl[:, k] / grid.dx[k]
            b = np.floor(delta).astype(int)
            t = delta - b
            snap_hi = t > 1.0 - 1e-12
            b[snap_hi] += 1
            t[snap_hi] = 0.0
            t[t < 1e-12] = 0.0
            base[:, k] = b
            frac[:, k] = t
        self.base = base
        self.frac = frac
        self.speeds = controls.speeds

        if constrained:
            adm = np.empty((m, grid.size), dtype=bool)
            for j in range(m):
                feet = pts - self.dt * ctrl[j]
                adm[j] = grid.domain.contains(feet, slack=1e-9)
            self.admissible = adm
            covered = np.any(adm[:, self.in_idx], axis=0)
            if not np.all(covered):
                bad = pts[self.in_idx[np.argmin(covered)]]
                raise SolverError(
                    f"no admissible control at node {bad.tolist()}; "
                    "mask too thin for this control set")
        else:
            self.admissible = None

        self.f_flat = model.f(pts)
        self.phi_flat = model.phi(pts) if model.coupling.kind == "linear" \
            else None
        self.separable = model.separable_coupling
        if self.separable:
            self.conj = np.asarray(evaluator.conjugate_speeds(self.speeds))
        else:
            # u-slot frozen at zero; used by λ=0 and explicit-discount paths
            self.conj0 = evaluator._radial_sup(self.speeds, 0.0)
        kappa = model.kappa_bounds(controls.max_speed)
        self.kappa_lo = max(kappa[0], 0.0)
        span = max(hi - lo for lo, hi in grid.domain.box)
        self.crossing_sweeps = int(math.ceil(
            span / max(self.dt * controls.max_speed, 1e-300)))

    # -- one sweep ---------------------------------------------------------

    def _interp(self, v: np.ndarray, j: int) -> np.ndarray:
        base = self.base[j]
        frac = self.frac[j]
        if self.grid.dim == 1:
            g0 = self._gather[(base[0],)]
            g1 = self._gather[(base[0] + 1,)]
            t = frac[0]
            if t == 0.0:
                return v[g0]
            return (1.0 - t) * v[g0] + t * v[g1]
        bx, by = base
        tx, ty = frac
        g00 = self._gather[(bx, by)]
        g01 = self._gather[(bx, by + 1)]
        g10 = self._gather[(bx + 1, by)]
        g11 = self._gather[(bx + 1, by + 1)]
        return ((1 - tx) * ((1 - ty) * v[g00] + ty * v[g01])
                + tx * ((1 - ty) * v[g10] + ty * v[g11]))

    def step(self, v: np.ndarray, lam: float, c: float, mode: str = "contact",
             table=None) -> np.ndarray:
        """One Lax-Oleinik sweep over the flat value buffer.

        mode "contact": v'(x) = min_a Δt*(L(x,a,λv(x)) + c) + I[v](x-Δt·a).
        mode "discount0": v'(x) = min_a Δt*L(x,a,0) + exp(-λΔt)*I[v](x-Δt·a),
        the classical discounted problem used for critical-value estimation.
        """
        dt = self.dt
        m = len(self.speeds)
        best = np.full(self.grid.size, np.inf)
        discount = math.exp(-lam * dt) if mode == "discount0" else 1.0
        contact_coupled = (mode == "contact" and not self.separable
                          and lam != 0.0)
        if contact_coupled:
            if table is None:
                raise SolverError("p-coupled contact sweep needs a sup-table")
            w_rows = table.values(lam * v)  # (m, N)
        for j in range(m):
            interp = self._interp(v, j)
            if mode == "discount0":
                cand = dt * (self.conj if self.separable else self.conj0)[j] \
                    + discount * interp
            elif contact_coupled:
                cand = dt * w_rows[j] + interp
            else:
                base_j = (self.conj if self.separable else self.conj0)[j]
                cand = dt * base_j + interp
            if self.admissible is not None:
                cand = np.where(self.admissible[j], cand, np.inf)
            np.minimum(best, cand, out=best)
        if mode == "discount0":
            out = best + dt * self.f_flat
        elif contact_coupled:
            out = best + dt * (self.f_flat - lam * v + c)
        else:
            out = best + dt * (self.f_flat + c)
            if self.phi_flat is not None and lam != 0.0:
                out -= dt * lam * self.phi_flat * v
        return np.where(self.mask_flat, out, v)


def _ensure_table(kernel: SweepKernel, table, lam: float, v: np.ndarray):
    """(Re)build the sup-term table when the iterate's u-range escapes it."""
    if kernel.separable or lam == 0.0:
        return None
    u = lam * v[kernel.in_idx]
    lo, hi = float(np.min(u)), float(np.max(u))
    pad = 0.25 * max(hi - lo, 1.0)
    if table is None or not table.covers(lo, hi):
        table = kernel.evaluator.coupling_table(
            kernel.speeds, lo - pad, hi + pad)
    return table


def _iterate(kernel: SweepKernel, v0: np.ndarray, lam: float, c: float,
             params: SolveParams, mode: str = "contact", pin_idx=None,
             anchor_idx=None, mismatch_guard: bool = False):
    """Fixed-point loop with geometric-tail extrapolation for λ > 0."""
    mask = kernel.mask_flat
    v = np.asarray(v0, dtype=float).ravel().copy()
    if pin_idx is not None:
        v[pin_idx] = 0.0
    if anchor_idx is not None:
        v[mask] -= v[anchor_idx]
    dt = kernel.dt
    if mode == "discount0":
        gain = -math.expm1(-lam * dt)
    elif lam > 0 and kernel.kappa_lo > 0:
        gain = lam * kernel.kappa_lo * dt
    else:
        gain = 1.0
    target = params.tol * min(1.0, gain)
    burn_in = 2 * kernel.crossing_sweeps + 200
    ratios = deque(maxlen=_ACCEL_TAIL)
    prev_res = None
    cooldown = 0
    table = None
    res = math.inf
    converged = False
    it = 0
    drift_rate = None
    accel_backup = None  # (iterate, residual) to restore if a jump misfires
    accel_period = _ACCEL_PERIOD
    for it in range(1, params.max_iters + 1):
        table = _ensure_table(kernel, table, lam, v)
        v_new = kernel.step(v, lam, c, mode=mode, table=table)
        if pin_idx is not None:
            v_new[pin_idx] = 0.0
        drift = None
        if anchor_idx is not None:
            drift = float(v_new[anchor_idx])
            v_new[mask] -= drift
            drift_rate = drift / dt
        if params.damping < 1.0:
            v_new = v + params.damping * (v_new - v)
            if pin_idx is not None:
                v_new[pin_idx] = 0.0
        diff = v_new - v
        res = float(np.max(np.abs(diff[mask])))
        if accel_backup is not None:
            # first sweep after an extrapolation: keep it only if it helped
            back_v, back_res = accel_backup
            accel_backup = None
            if not res < back_res:
                v = back_v
                res = back_res
                ratios.clear()
                prev_res = None
                cooldown = _ACCEL_TAIL
                accel_period = min(2 * accel_period, 4096)
                continue
        if mismatch_guard and drift is not None and it > burn_in \
                and abs(drift) > 10.0 * params.tol \
                and res < 2.0 * abs(drift) + 1e-15:
            raise CMismatchError(rate=drift / dt, drift=drift, iteration=it)
        scale = max(1.0, float(np.max(np.abs(v_new[mask]))))
        v, v_prev_diff = v_new, diff
        if res <= target or res <= _FLOAT_FLOOR * scale:
            converged = True
            break
        if cooldown > 0:
            cooldown -= 1
            prev_res = res
            continue
        if prev_res is not None and prev_res > 0:
            ratios.append(res / prev_res)
        prev_res = res
        if gain < 1.0 and it % accel_period == 0 \
                and len(ratios) == _ACCEL_TAIL:
            arr = np.asarray(ratios)
            rho = float(np.mean(arr))
            spread = float(np.max(arr) - np.min(arr))
            if 0.0 < rho < 1.0 - 1e-9 and spread <= 0.5 * (1.0 - rho):
                accel_backup = (v.copy(), res)
                v = v + v_prev_diff * (rho / (1.0 - rho))
                if pin_idx is not None:
                    v[pin_idx] = 0.0
                if anchor_idx is not None:
                    v[mask] -= v[anchor_idx]
                ratios.clear()
                prev_res = None
    extras = {
        "contraction_estimate": float(np.median(ratios)) if ratios else None,
        "error_bound": res / gain if gain > 0 else None,
        "drift_rate": drift_rate,
    }
    return v, it, res, converged, extras


# ---------------------------------------------------------------------------
# public operations


def _setup(model, grid, params, controls, evaluator):
    if controls is None:
        controls = ControlSet.build(grid.dim)
    if evaluator is None:
        evaluator = LagrangianEvaluator(model)
    params = (params or SolveParams()).resolve(grid, controls)
    return params, controls, evaluator


def lax_oleinik_step(v: GridField, model: HamiltonianModel,
                     evaluator: LagrangianEvaluator, controls: ControlSet,
                     lam: float, c: float, dt: float,
                     constrained: bool = True) -> GridField:
    """One sweep of the operator on a field; mainly a testing surface."""
    kernel = SweepKernel(v.grid, evaluator, controls, dt,
                         constrained=constrained)
    flat = v.values.ravel().copy()
    table = _ensure_table(kernel, None, lam, flat)
    out = kernel.step(flat, lam, c, mode="contact", table=table)
    return v.with_values(out.reshape(v.grid.shape))


def solve_state_constraint(model: HamiltonianModel, grid: UniformGrid,
                           lam: float, c: float, params: SolveParams = None,
                           controls: ControlSet = None,
                           evaluator: LagrangianEvaluator = None,
                           v0: np.ndarray = None) -> SolveOutcome:
    """State-constrained contact solve on the grid's domain; needs λ > 0."""
    if lam <= 0:
        raise SolverError("state-constraint solve needs lam > 0")
    if model.coupling.kind == "none":
        raise SolverError("state-constraint solve needs a u-coupling")
    params, controls, evaluator = _setup(model, grid, params, controls,
                                         evaluator)
    kernel = SweepKernel(grid, evaluator, controls, params.dt,
                         constrained=True)
    start = np.zeros(grid.size) if v0 is None else np.asarray(v0).ravel()
    v, iters, res, ok, extras = _iterate(kernel, start, lam, c, params)
    fld = GridField(grid, v.reshape(grid.shape),
                    meta={"kind": "state_constraint", "lambda": lam, "c": c})
    return SolveOutcome(fld, iters, res, ok, extras)


@dataclass
class CriticalValueEstimate:
    value: float
    table: list  # (lam, c_est) pairs
    richardson: float
    m0: float
    margin: float
    outcomes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"value": self.value,
                "table": [{"lambda": l, "c_est": e} for l, e in self.table],
                "richardson": self.richardson, "m0": self.m0,
                "margin": self.margin}


def estimate_critical_value(model: HamiltonianModel, grid: UniformGrid,
                            lam_sequence, params: SolveParams = None,
                            controls: ControlSet = None,
                            evaluator: LagrangianEvaluator = None,
                            x0=None, margin: float = 0.02) -> CriticalValueEstimate:
    """Estimate c(H) from classical discounted solves at vanishing λ.

    Solves λv + H(x, Dv, 0) = 0 for each λ (explicit discount factor on the
    foot term), reads off -λ*v_λ(x0), and Richardson-extrapolates the last
    two entries assuming a linear-in-λ error. The sampled lower bound m0 =
    max_x min_p H(x, p, 0) guards against gross failures: an estimate below
    m0 - margin raises.
    """
    lams = [float(l) for l in lam_sequence]
    if len(lams) < 2 or any(b >= a for a, b in zip(lams, lams[1:])):
        raise SolverError("lam_sequence must be strictly decreasing, >= 2 long")
    params, controls, evaluator = _setup(model, grid, params, controls,
                                         evaluator)
    kernel = SweepKernel(grid, evaluator, controls, params.dt,
                         constrained=True)
    if x0 is None:
        x0 = np.zeros(grid.dim)
    table = []
    outcomes = []
    start = np.zeros(grid.size)
    fld = None
    for lam in lams:
        v, iters, res, ok, extras = _iterate(kernel, start, lam, 0.0, params,
                                             mode="discount0")
        if not ok:
            raise SolverError(
                f"discounted solve at lam={lam:g} stalled at residual {res:g}")
        fld = GridField(grid, v.reshape(grid.shape),
                        meta={"kind": "discounted", "lambda": lam, "c": 0.0})
        c_est = -lam * np.asarray(fld.interpolate(np.atleast_1d(x0))).reshape(-1)[0]
        table.append((lam, float(c_est)))
        outcomes.append(SolveOutcome(fld, iters, res, ok, extras))
        start = v  # warm start the next, smaller λ
    (l1, e1), (l2, e2) = table[-2], table[-1]
    richardson = e2 + l2 * (e2 - e1) / (l1 - l2)
    m0 = lower_bound_m0(model, grid.points()[grid.mask.ravel()],
                        p_extent=evaluator.p_extent,
                        p_spacing=evaluator.p_spacing)
    if richardson < m0 - margin:
        raise SolverError(
            f"critical value estimate {richardson:.6g} sits below the lower "
            f"bound m0={m0:.6g} by more than {margin:g}")
    return CriticalValueEstimate(value=float(richardson), table=table,
                                 richardson=float(richardson), m0=float(m0),
                                 margin=margin, outcomes=outcomes)


def solve_ergodic(model: HamiltonianModel, grid: UniformGrid, c: float,
                  params: SolveParams = None, anchor=None,
                  controls: ControlSet = None,
                  evaluator: LagrangianEvaluator = None,
                  v0: np.ndarray = None) -> SolveOutcome:
    """Ergodic (λ=0) solve renormalized at an anchor point each sweep.

    Raises CMismatchError when, after the information has had time to cross
    the domain, the anchor keeps drifting at a steady rate: that rate is the
    gap between the supplied c and the grid's own critical value.
    """
    params, controls, evaluator = _setup(model, grid, params, controls,
                                         evaluator)
    kernel = SweepKernel(grid, evaluator, controls, params.dt,
                         constrained=True)
    if anchor is None:
        anchor = np.zeros(grid.dim)
    anchor_idx = np.ravel_multi_index(grid.nearest_node(anchor), grid.shape)
    if not kernel.mask_flat[anchor_idx]:
        raise SolverError("anchor lies outside the mask")
    start = np.zeros(grid.size) if v0 is None else np.asarray(v0).ravel()
    v, iters, res, ok, extras = _iterate(kernel, start, 0.0, c, params,
                                         anchor_idx=anchor_idx,
                                         mismatch_guard=True)
    fld = GridField(grid, v.reshape(grid.shape),
                    meta={"kind": "ergodic", "lambda": 0.0, "c": c})
    return SolveOutcome(fld, iters, res, ok, extras)


def solve_maximal_global(model: HamiltonianModel, lam: float, c: float,
                         r_schedule, probe, params: SolveParams = None,
                         box=None, shape=None, controls: ControlSet = None,
                         evaluator: LagrangianEvaluator = None,
                         stab_tol: float = 1e-3) -> SolveOutcome:
    """Maximal-solution proxy: state-constraint solves on growing balls.

    Solves on each radius of the schedule (warm-starting from the previous
    ball) until the probe value moves less than stab_tol between consecutive
    radii. No stabilization across the whole schedule is reported in the
    outcome, not raised.
    """
    radii = [float(r) for r in r_schedule]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise SolverError("r_schedule must be strictly increasing, >= 2 long")
    dim = model.dim
    if box is None:
        half = radii[-1] + 2.0
        box = ((-half, half),) * dim
    if shape is None:
        per_unit = 20 if dim == 1 else 13
        shape = tuple(int(round((hi - lo) * per_unit)) + 1 for lo, hi in box)
    probe = np.atleast_1d(np.asarray(probe, dtype=float))
    prev_vals = None
    prev_mask = None
    history = []
    outcome = None
    stabilized_at = None
    for r in radii:
        grid = UniformGrid(Domain.ball(box, r), shape)
        v0 = None
        if prev_vals is not None:
            v0 = np.where(prev_mask, prev_vals, 0.0)
        outcome = solve_state_constraint(model, grid, lam, c, params=params,
                                         controls=controls,
                                         evaluator=evaluator, v0=v0)
        prev_vals = outcome.field.values.ravel()
        prev_mask = grid.mask.ravel()
        val = float(np.asarray(outcome.field.interpolate(probe)).reshape(-1)[0])
        history.append((r, val))
        if len(history) >= 2 and stabilized_at is None:
            if abs(history[-1][1] - history[-2][1]) < stab_tol:
                stabilized_at = r
                break
    outcome.field.meta["kind"] = "maximal_truncated"
    outcome.field.meta["R"] = history[-1][0]
    outcome.extras["stabilization"] = history
    outcome.extras["stabilized"] = stabilized_at is not None
    outcome.extras["stabilized_at"] = stabilized_at
    return outcome


def mane_potential(model: HamiltonianModel, grid: UniformGrid, y, c: float,
                   params: SolveParams = None, controls: ControlSet = None,
                   evaluator: LagrangianEvaluator = None) -> GridField:
    """Intrinsic semi-distance S(., y): pinned λ=0 value iteration.

    Initialized at +1e6 off the pin so values relax downward onto the
    cheapest path costs from y at the critical level c.
    """
    params, controls, evaluator = _setup(model, grid, params, controls,
                                         evaluator)
    kernel = SweepKernel(grid, evaluator, controls, params.dt,
                         constrained=True)
    pin = np.ravel_multi_index(grid.nearest_node(y), grid.shape)
    if not kernel.mask_flat[pin]:
        raise SolverError("pin point lies outside the mask")
    start = np.full(grid.size, 1e6)
    start[pin] = 0.0
    v, iters, res, ok, extras = _iterate(kernel, start, 0.0, c, params,
                                         pin_idx=pin)
    if not ok:
        raise SolverError(
            f"pinned solve did not settle (residual {res:g} after {iters} "
            "sweeps)")
    return GridField(grid, v.reshape(grid.shape),
                     meta={"kind": "mane", "lambda": 0.0, "c": c})


def aubry_indicator(model: HamiltonianModel, grid: UniformGrid, c: float,
                    sample_points, params: SolveParams = None,
                    controls: ControlSet = None,
                    evaluator: LagrangianEvaluator = None) -> np.ndarray:
    """One-step improvement defect of S(., y) at its own pin, per sample.

    Vanishing defect (up to grid error) marks y as an Aubry-set candidate:
    no control improves on sitting at y when the running cost is L + c.
    """
    params, controls, evaluator = _setup(model, grid, params, controls,
                                         evaluator)
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if model.dim == 1 and pts.shape[0] == 1 and pts.shape[1] > 1:
        pts = pts.T
    out = np.empty(len(pts))
    dt = params.dt
    ctrl = controls.controls
    for i, y in enumerate(pts):
        s_field = mane_potential(model, grid, y, c, params=params,
                                 controls=controls, evaluator=evaluator)
        node = grid.node_point(grid.nearest_node(y))
        feet = node[None, :] - dt * ctrl
        ok = grid.domain.contains(feet, slack=1e-9)
        lvals = np.array([
            evaluator.legendre(node, a, 0.0) for a in ctrl])
        interp = np.full(len(ctrl), np.inf)
        interp[ok] = s_field.interpolate(feet[ok] if model.dim == 2
                                         else feet[ok, 0])
        cand = dt * (lvals + c) + interp
        out[i] = float(np.min(cand))  # S(y) = 0 at the pin by construction
    return out
