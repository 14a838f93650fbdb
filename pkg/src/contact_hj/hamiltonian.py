"""Hamiltonian models H(x, p, u) = kinetic(p) - f(x) + coupling(x, p, u).

The model family is deliberately small and fully serializable:

* kinetic: |p|^2/2, |p|^tau/tau, or a tabulated radial profile,
* potential f: a closed-form expression tree in x (and y),
* coupling in the u slot: none, linear phi(x)*u, or the arctan form
  (|p|^2 + 1)*(arctan(u) + shift) + u.

Every kinetic and coupling here is radial in p, so Legendre transforms reduce
to a one-dimensional maximization along the ray spanned by v. The grid-based
evaluator exploits that: it maximizes r*|v| - h(r, u) over a uniform r-lattice,
doubling the lattice extent whenever the maximizer lands on the boundary.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .expressions import Expr, parse

__all__ = [
    "QuadraticKinetic",
    "PowerKinetic",
    "TabulatedKinetic",
    "NoCoupling",
    "LinearCoupling",
    "ArctanCoupling",
    "HamiltonianModel",
    "LagrangianEvaluator",
    "AssumptionCheck",
    "AssumptionReport",
    "check_assumptions",
    "ModelError",
    "ExtentError",
]


class ModelError(ValueError):
    """Inconsistent model definition or evaluation request."""


class ExtentError(RuntimeError):
    """Legendre maximizer escaped the largest allowed momentum lattice."""


# ---------------------------------------------------------------------------
# kinetics


@dataclass(frozen=True)
class QuadraticKinetic:
    def radial(self, r):
        return 0.5 * np.square(r)

    def conjugate_speed(self, s):
        return 0.5 * np.square(s)

    @property
    def homogeneity(self):
        return 2.0

    def to_json(self):
        return {"type": "quadratic"}


@dataclass(frozen=True)
class PowerKinetic:
    tau: float

    def __post_init__(self):
        if self.tau <= 1.0:
            raise ModelError("power kinetic needs tau > 1")

    def radial(self, r):
        return np.power(np.abs(r), self.tau) / self.tau

    def conjugate_speed(self, s):
        tau_star = self.tau / (self.tau - 1.0)
        return np.power(np.abs(s), tau_star) / tau_star

    @property
    def homogeneity(self):
        return self.tau

    def to_json(self):
        return {"type": "power", "tau": self.tau}


@dataclass(frozen=True)
class TabulatedKinetic:
    """Radial kinetic h(|p|) given by values on the lattice {0, dp, 2dp, ...}."""

    dp: float
    values: tuple

    def __post_init__(self):
        if self.dp <= 0 or len(self.values) < 2:
            raise ModelError("tabulated kinetic needs dp > 0 and >= 2 values")

    @property
    def extent(self):
        return self.dp * (len(self.values) - 1)

    def radial(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if np.any(r > self.extent + 1e-12):
            raise ExtentError("momentum outside tabulated kinetic extent")
        vals = np.asarray(self.values, dtype=float)
        return np.interp(r, self.dp * np.arange(len(vals)), vals)

    def conjugate_speed(self, s):
        raise ModelError("tabulated kinetic has no closed-form conjugate")

    @property
    def homogeneity(self):
        return None

    def to_json(self):
        return {"type": "tabulated", "dp": self.dp, "values": list(self.values)}


# ---------------------------------------------------------------------------
# couplings


@dataclass(frozen=True)
class NoCoupling:
    kind = "none"

    def term(self, phi_x, p_norm2, u):
        return 0.0

    def du(self, phi_x, p_norm2, u):
        return np.zeros(np.broadcast(phi_x, p_norm2, u).shape)

    def to_json(self):
        return {"type": "none"}


@dataclass(frozen=True)
class LinearCoupling:
    """Coupling phi(x) * u with recorded bounds kappa_lo < phi <= kappa_hi."""

    phi: Expr
    kappa_lo: float = 0.0
    kappa_hi: float = 1.0
    kind = "linear"

    def term(self, phi_x, p_norm2, u):
        return phi_x * u

    def du(self, phi_x, p_norm2, u):
        return np.broadcast_to(np.asarray(phi_x, dtype=float),
                               np.broadcast(phi_x, p_norm2, u).shape)

    def to_json(self):
        return {"type": "linear", "phi": str(self.phi),
                "bounds": {"kappa_lo": self.kappa_lo, "kappa_hi": self.kappa_hi}}


@dataclass(frozen=True)
class ArctanCoupling:
    """Coupling (|p|^2 + 1) * (arctan(u) + shift) + u."""

    shift: float = math.pi
    kind = "arctan"

    def term(self, phi_x, p_norm2, u):
        return (p_norm2 + 1.0) * (np.arctan(u) + self.shift) + u

    def du(self, phi_x, p_norm2, u):
        return (p_norm2 + 1.0) / (1.0 + np.square(u)) + 1.0

    def to_json(self):
        return {"type": "arctan", "shift": self.shift}


# ---------------------------------------------------------------------------
# model


def _as_points(z, dim: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if dim == 1:
        if z.ndim == 0:
            z = z[None]
        if z.shape[-1] != 1:
            z = z[..., None]
    else:
        if z.ndim == 1:
            if z.shape[0] != dim:
                raise ModelError(f"expected point of dimension {dim}")
            z = z[None, :]
        if z.shape[-1] != dim:
            raise ModelError(f"expected points of dimension {dim}")
    return z


@dataclass(frozen=True)
class HamiltonianModel:
    dim: int
    kinetic: object
    potential: Expr
    coupling: object = field(default_factory=NoCoupling)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ModelError("dim must be 1 or 2")
        extra = self.potential.variables - ({"x"} if self.dim == 1 else {"x", "y"})
        if extra:
            raise ModelError(f"potential uses unknown variables {sorted(extra)}")

    # -- pieces ------------------------------------------------------------

    def _env(self, pts: np.ndarray) -> dict:
        env = {"x": pts[..., 0]}
        if self.dim == 2:
            env["y"] = pts[..., 1]
        return env

    def f(self, x):
        pts = _as_points(x, self.dim)
        out = self.potential(**self._env(pts))
        return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1]).copy()

    def phi(self, x):
        pts = _as_points(x, self.dim)
        if self.coupling.kind == "linear":
            out = self.coupling.phi(**self._env(pts))
            return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1]).copy()
        return np.zeros(pts.shape[:-1])

    # -- evaluation --------------------------------------------------------

    def eval_h(self, x, p, u):
        """H(x, p, u), broadcast over batched inputs."""
        pts = _as_points(x, self.dim)
        mom = _as_points(p, self.dim)
        u = np.asarray(u, dtype=float)
        p_norm2 = np.sum(np.square(mom), axis=-1)
        kin = self.kinetic.radial(np.sqrt(p_norm2))
        phi_x = self.phi(x) if self.coupling.kind == "linear" else 0.0
        val = kin - self.f(x) + self.coupling.term(phi_x, p_norm2, u)
        return val if np.ndim(val) else float(val)

    def du_h(self, x, p, u):
        """Partial derivative of H in the u slot."""
        mom = _as_points(p, self.dim)
        u = np.asarray(u, dtype=float)
        p_norm2 = np.sum(np.square(mom), axis=-1)
        phi_x = self.phi(x) if self.coupling.kind == "linear" else 0.0
        val = self.coupling.du(phi_x, p_norm2, u)
        return val if np.ndim(val) else float(val)

    def kappa_bounds(self, p_radius: float) -> tuple:
        """Bounds on du_H over momenta |p| <= p_radius (all x, u)."""
        if self.coupling.kind == "linear":
            return (self.coupling.kappa_lo, self.coupling.kappa_hi)
        if self.coupling.kind == "arctan":
            return (1.0, p_radius ** 2 + 2.0)
        return (0.0, 0.0)

    @property
    def has_closed_lagrangian(self) -> bool:
        separable = self.coupling.kind in ("none", "linear")
        closed_kin = isinstance(self.kinetic, (QuadraticKinetic, PowerKinetic))
        return separable and closed_kin

    @property
    def separable_coupling(self) -> bool:
        return self.coupling.kind in ("none", "linear")

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        data = {
            "dim": self.dim,
            "kinetic": self.kinetic.to_json(),
            "potential": str(self.potential),
            "coupling": self.coupling.to_json(),
        }
        if self.coupling.kind == "linear":
            data["bounds"] = {"kappa_lo": self.coupling.kappa_lo,
                              "kappa_hi": self.coupling.kappa_hi}
        return data

    @staticmethod
    def from_json(data) -> "HamiltonianModel":
        if isinstance(data, str):
            data = json.loads(data)
        kin_spec = data.get("kinetic", {"type": "quadratic"})
        kind = kin_spec.get("type", "quadratic")
        if kind == "quadratic":
            kinetic = QuadraticKinetic()
        elif kind == "power":
            kinetic = PowerKinetic(tau=float(kin_spec["tau"]))
        elif kind == "tabulated":
            kinetic = TabulatedKinetic(dp=float(kin_spec["dp"]),
                                       values=tuple(kin_spec["values"]))
        else:
            raise ModelError(f"unknown kinetic type {kind!r}")
        cpl_spec = data.get("coupling", {"type": "none"})
        ckind = cpl_spec.get("type", "none")
        if ckind == "none":
            coupling = NoCoupling()
        elif ckind == "linear":
            bounds = cpl_spec.get("bounds", data.get("bounds", {}))
            coupling = LinearCoupling(
                phi=parse(cpl_spec["phi"]),
                kappa_lo=float(bounds.get("kappa_lo", 0.0)),
                kappa_hi=float(bounds.get("kappa_hi", 1.0)),
            )
        elif ckind == "arctan":
            coupling = ArctanCoupling(shift=float(cpl_spec.get("shift", math.pi)))
        else:
            raise ModelError(f"unknown coupling type {ckind!r}")
        return HamiltonianModel(
            dim=int(data["dim"]),
            kinetic=kinetic,
            potential=parse(data["potential"]),
            coupling=coupling,
        )


# ---------------------------------------------------------------------------
# Lagrangian evaluation


_EXTENT_CAP = 160.0


class LagrangianEvaluator:
    """Legendre transform L(x, v, u) = sup_p [p.v - H(x, p, u)].

    Closed forms are used when the kinetic has an explicit conjugate and the
    coupling does not touch p. Otherwise the supremum is taken over a uniform
    radial momentum lattice of the given extent and spacing; if the maximizer
    sits on the lattice boundary the extent is doubled, up to a hard cap.
    """

    def __init__(self, model: HamiltonianModel, p_extent: float = 20.0,
                 p_spacing: float = 0.01, mode: str = "auto",
                 table_du: float = 5e-3):
        if mode not in ("auto", "closed", "gridsup"):
            raise ModelError(f"unknown evaluator mode {mode!r}")
        if mode == "closed" and not model.has_closed_lagrangian:
            raise ModelError("closed-form Lagrangian unavailable for this model")
        self.model = model
        self.p_extent = float(p_extent)
        self.p_spacing = float(p_spacing)
        self.table_du = float(table_du)
        self.mode = mode
        self.uses_closed_form = (
            model.has_closed_lagrangian if mode == "auto" else mode == "closed"
        )

    # -- radial grid supremum ----------------------------------------------

    def _reduced_h(self, r: np.ndarray, u: float) -> np.ndarray:
        """kinetic(r) plus the p-dependent part of the coupling at level u."""
        vals = self.model.kinetic.radial(r)
        if self.model.coupling.kind == "arctan":
            shift = self.model.coupling.shift
            vals = vals + (np.square(r) + 1.0) * (math.atan(u) + shift)
        return vals

    def _lattice(self, extent: float) -> np.ndarray:
        n = int(round(extent / self.p_spacing))
        return self.p_spacing * np.arange(n + 1)

    def _radial_sup(self, speeds: np.ndarray, u: float) -> np.ndarray:
        """max over the r-lattice of r*s - reduced_h(r, u), per speed s."""
        speeds = np.asarray(speeds, dtype=float)
        extent = self.p_extent
        if isinstance(self.model.kinetic, TabulatedKinetic):
            r = self._lattice(min(extent, self.model.kinetic.extent))
            payoff = np.outer(speeds, r) - self._reduced_h(r, u)[None, :]
            best = np.argmax(payoff, axis=1)
            if np.any(best == len(r) - 1):
                raise ExtentError("maximizer on the tabulated kinetic boundary")
            return payoff[np.arange(len(speeds)), best]
        while True:
            r = self._lattice(extent)
            payoff = np.outer(speeds, r) - self._reduced_h(r, u)[None, :]
            best = np.argmax(payoff, axis=1)
            if not np.any(best == len(r) - 1):
                return payoff[np.arange(len(speeds)), best]
            if extent >= _EXTENT_CAP:
                raise ExtentError(
                    f"Legendre maximizer escaped the momentum lattice at "
                    f"extent {extent:g} (cap {_EXTENT_CAP:g})")
            extent = min(2.0 * extent, _EXTENT_CAP)

    def _sup_term(self, speeds: np.ndarray, u) -> np.ndarray:
        """sup_p [p.v - kinetic - p-coupling] for |v| = speeds, level(s) u."""
        speeds = np.atleast_1d(np.asarray(speeds, dtype=float))
        u = np.asarray(u, dtype=float)
        if self.uses_closed_form:
            return self.model.kinetic.conjugate_speed(speeds) * np.ones(
                np.broadcast(speeds, u).shape)
        if u.ndim == 0:
            return self._radial_sup(speeds, float(u))
        speeds_b, u_b = np.broadcast_arrays(speeds, u)
        out = np.empty(speeds_b.shape)
        flat_s = speeds_b.reshape(-1)
        flat_u = u_b.reshape(-1)
        flat_o = out.reshape(-1)
        # group identical levels so each lattice sweep is vectorized
        order = np.argsort(flat_u, kind="stable")
        sorted_u = flat_u[order]
        start = 0
        while start < len(sorted_u):
            stop = start
            while stop < len(sorted_u) and sorted_u[stop] == sorted_u[start]:
                stop += 1
            idx = order[start:stop]
            flat_o[idx] = self._radial_sup(flat_s[idx], float(sorted_u[start]))
            start = stop
        return out

    # -- public operations ---------------------------------------------------

    def legendre(self, x, v, u):
        """L(x, v, u); inputs broadcast, scalar in gives scalar out."""
        model = self.model
        pts = _as_points(x, model.dim)
        vel = _as_points(v, model.dim)
        u_arr = np.asarray(u, dtype=float)
        speeds = np.sqrt(np.sum(np.square(vel), axis=-1))
        f_x = model.f(x)
        if model.coupling.kind == "linear":
            sup = self._sup_term(speeds, 0.0)
            val = sup + f_x - model.phi(x) * u_arr
        elif model.coupling.kind == "none":
            sup = self._sup_term(speeds, 0.0)
            val = sup + f_x
        else:  # arctan: the -u part is analytic, the sup is taken at level u
            sup = self._sup_term(speeds, u_arr)
            val = sup + f_x - u_arr
        val = np.asarray(val)
        scalar_in = (val.size == 1 and np.ndim(u) == 0
                     and np.asarray(x, dtype=float).ndim <= 1
                     and np.asarray(v, dtype=float).ndim <= 1)
        return float(val.reshape(-1)[0]) if scalar_in else val

    def conjugate_speeds(self, speeds: np.ndarray) -> np.ndarray:
        """Kinetic conjugate values for separable couplings."""
        if not self.model.separable_coupling:
            raise ModelError("conjugate_speeds applies to separable couplings only")
        return np.asarray(self._sup_term(np.asarray(speeds, dtype=float), 0.0))

    def coupling_table(self, speeds: np.ndarray, u_lo: float, u_hi: float):
        """Sup-term table over (control speeds) x (u lattice) for p-coupled models."""
        return _ConjugateTable(self, np.asarray(speeds, dtype=float), u_lo, u_hi)

    def partial_u_l(self, x, v, u, eps: float = 1e-6):
        """One-sided derivative of L in the u slot (forward difference)."""
        model = self.model
        if model.coupling.kind == "linear":
            out = -model.phi(x)
            return float(out) if np.size(out) == 1 and np.ndim(u) == 0 else out
        if model.coupling.kind == "none":
            out = np.zeros(np.broadcast(np.asarray(u, dtype=float),
                                        model.f(x)).shape)
            return 0.0 if out.size == 1 and np.ndim(u) == 0 else out
        u_arr = np.asarray(u, dtype=float)
        hi = self.legendre(x, v, u_arr + eps)
        lo = self.legendre(x, v, u_arr)
        return (np.asarray(hi) - np.asarray(lo)) / eps if np.ndim(hi) \
            else (hi - lo) / eps

    def discount_index(self, x, v, level_a, level_b):
        """Difference quotient of L in u between level_a and level_b.

        Degenerates to the one-sided derivative at level_b when the levels
        coincide. Symmetric in its levels and nonpositive whenever the model
        is monotone in u.
        """
        a = np.asarray(level_a, dtype=float)
        b = np.asarray(level_b, dtype=float)
        if a.ndim == 0 and b.ndim == 0:
            if float(a) == float(b):
                return self.partial_u_l(x, v, float(b))
            la = self.legendre(x, v, float(a))
            lb = self.legendre(x, v, float(b))
            return (np.asarray(la) - np.asarray(lb)) / (float(a) - float(b))
        a_b, b_b = np.broadcast_arrays(a, b)
        la = np.asarray(self.legendre(x, v, a_b))
        lb = np.asarray(self.legendre(x, v, b_b))
        out = np.empty(np.broadcast(a_b, b_b).shape)
        same = a_b == b_b
        diff = ~same
        with np.errstate(invalid="ignore", divide="ignore"):
            out[diff] = (la[diff] - lb[diff]) / (a_b[diff] - b_b[diff])
        if np.any(same):
            dplus = np.asarray(self.partial_u_l(x, v, b_b))
            dplus = np.broadcast_to(dplus, out.shape)
            out[same] = dplus[same]
        return out


class _ConjugateTable:
    """Linear-in-u interpolation of the Legendre sup term on a u lattice.

    Solver sweeps for p-coupled models read L(x, v, u) = W(|v|, u) - u + f(x)
    thousands of times per iteration; W is precomputed here on a lattice fine
    enough that the interpolation error sits far below solver tolerances.
    """

    def __init__(self, evaluator: LagrangianEvaluator, speeds: np.ndarray,
                 u_lo: float, u_hi: float):
        du = evaluator.table_du
        pad = 4.0 * du
        lo = u_lo - pad
        hi = max(u_hi + pad, lo + 2 * du)
        n = int(math.ceil((hi - lo) / du)) + 1
        self.u_grid = lo + du * np.arange(n)
        self.du = du
        self.speeds = speeds
        rows = [evaluator._radial_sup(speeds, float(u)) for u in self.u_grid]
        self.w = np.asarray(rows)  # shape (n_u, n_speeds)

    def covers(self, u_lo: float, u_hi: float) -> bool:
        return self.u_grid[0] <= u_lo and u_hi <= self.u_grid[-1]

    def values(self, u: np.ndarray) -> np.ndarray:
        """W(speed_j, u_i) as a (n_speeds, n_points) matrix."""
        u = np.asarray(u, dtype=float)
        pos = (u - self.u_grid[0]) / self.du
        idx = np.clip(np.floor(pos).astype(int), 0, len(self.u_grid) - 2)
        t = pos - idx
        return (self.w[idx, :] * (1.0 - t)[:, None]
                + self.w[idx + 1, :] * t[:, None]).T


# ---------------------------------------------------------------------------
# assumption checking


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    status: str  # verified-on-samples | violated | not-applicable
    margin: float | None = None
    witness: dict = field(default_factory=dict)
    note: str = ""

    def to_json(self):
        return {"name": self.name, "status": self.status, "margin": self.margin,
                "witness": self.witness, "note": self.note}


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple

    def status(self, name: str) -> str:
        for c in self.checks:
            if c.name == name:
                return c.status
        raise KeyError(name)

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return {"checks": [c.to_json() for c in self.checks]}


def _sample_axis(lo, hi, n):
    return np.linspace(lo, hi, n)


def _sample_points(box, n, dim):
    axes = [_sample_axis(lo, hi, n) for lo, hi in box]
    if dim == 1:
        return axes[0][:, None]
    gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _ball_samples(radius, n, dim):
    if dim == 1:
        return np.linspace(-radius, radius, n)[:, None]
    r = np.linspace(0.0, radius, max(2, n // 4))
    th = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    return np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])


def check_assumptions(model: HamiltonianModel, box=None, p_radius: float = 6.0,
                      u_span: float = 2.0, n_x: int = 13, n_p: int = 13,
                      theta: float = 0.5, eps_h2: float = 0.5) -> AssumptionReport:
    """Sampled verification of the structure assumptions on H.

    Each check samples a deterministic lattice and records its worst margin
    and witness. A passing status means verified on those samples, nothing
    stronger; violations come with the offending sample point.
    """
    if box is None:
        box = ((-6.0, 6.0),) * model.dim
    xs = _sample_points(box, n_x, model.dim)
    ps = _ball_samples(p_radius, n_p, model.dim)
    us = np.linspace(-u_span, u_span, 9)
    checks = []

    def h(x, p, u):
        return model.eval_h(x, p, u)

    # H1a: monotone (nondecreasing) in u
    worst = math.inf
    witness = {}
    for p in ps[:: max(1, len(ps) // 7)]:
        hvals = np.array([h(xs, np.tile(p, (len(xs), 1)), float(u)) for u in us])
        slopes = (hvals[1:] - hvals[:-1]) / (us[1:] - us[:-1])[:, None]
        k = np.unravel_index(np.argmin(slopes), slopes.shape)
        if slopes[k] < worst:
            worst = float(slopes[k])
            witness = {"x": xs[k[1]].tolist(), "p": p.tolist(),
                       "u": float(us[k[0]])}
    mono_ok = worst >= -1e-9
    # H1b: midpoint convexity in p
    conv_worst = -math.inf
    conv_witness = {}
    rng_pairs = [(ps[i], ps[(i * 5 + 3) % len(ps)]) for i in range(0, len(ps), 2)]
    x_sub = xs[:: max(1, len(xs) // 9)]
    for p1, p2 in rng_pairs:
        pm = 0.5 * (p1 + p2)
        for u in (0.0, 1.0):
            gap = h(x_sub, np.tile(pm, (len(x_sub), 1)), u) - 0.5 * (
                h(x_sub, np.tile(p1, (len(x_sub), 1)), u)
                + h(x_sub, np.tile(p2, (len(x_sub), 1)), u))
            j = int(np.argmax(gap))
            if gap[j] > conv_worst:
                conv_worst = float(gap[j])
                conv_witness = {"x": x_sub[j].tolist(), "p1": p1.tolist(),
                                "p2": p2.tolist(), "u": u}
    conv_ok = conv_worst <= 1e-9
    # H1c: coercivity on bounded x sets
    radii = [p_radius / 3.0, 2.0 * p_radius / 3.0, p_radius]
    ring_mins = []
    for r in radii:
        ring = _ball_samples(r, n_p, model.dim)
        norms = np.sqrt(np.sum(np.square(ring), axis=1))
        shell = ring[norms >= r - 1e-9] if model.dim == 2 else \
            np.array([[-r], [r]])
        vals = [float(np.min(h(xs, np.tile(q, (len(xs), 1)), 0.0)))
                for q in shell]
        ring_mins.append(min(vals))
    coercive_ok = ring_mins[-1] > ring_mins[0] and ring_mins[1] >= ring_mins[0]
    h1_ok = mono_ok and conv_ok and coercive_ok
    h1_margin = min(worst, -conv_worst, ring_mins[-1] - ring_mins[0])
    checks.append(AssumptionCheck(
        "H1", "verified-on-samples" if h1_ok else "violated",
        margin=h1_margin,
        witness=witness if not mono_ok else (conv_witness if not conv_ok else {}),
        note="monotone in u, midpoint-convex and coercive in p"))

    # H2: small-momentum values near the box boundary sit below m0
    m0 = -math.inf
    for x in xs:
        vals = h(np.tile(x, (len(ps), 1)), ps, 0.0)
        m0 = max(m0, float(np.min(vals)))
    small_p = _ball_samples(eps_h2, 7, model.dim)
    if model.dim == 1:
        boundary = np.array([[box[0][0]], [box[0][1]]])
    else:
        edge = np.abs(xs).max(axis=1)
        boundary = xs[edge >= 0.98 * max(abs(box[0][0]), abs(box[0][1]))]
    worst_h2 = -math.inf
    for x in boundary:
        vals = h(np.tile(x, (len(small_p), 1)), small_p, 0.0)
        worst_h2 = max(worst_h2, float(np.max(vals)))
    h2_margin = m0 - worst_h2
    checks.append(AssumptionCheck(
        "H2", "verified-on-samples" if h2_margin > 0 else "violated",
        margin=h2_margin,
        witness={"m0": m0, "boundary_max": worst_h2, "eps": eps_h2},
        note="boundary samples of H at small momenta stay below m0"))

    # H3: local bounds on du_H for |p| <= p_radius
    if model.coupling.kind == "none":
        checks.append(AssumptionCheck("H3", "not-applicable",
                                      note="no u dependence"))
    else:
        du_vals = []
        for u in us:
            du_vals.append(model.du_h(xs, np.tile(ps[0], (len(xs), 1)), float(u)))
        du_all = []
        for p in ps[:: max(1, len(ps) // 11)]:
            for u in (-u_span, 0.0, u_span):
                du_all.append(model.du_h(xs, np.tile(p, (len(xs), 1)), u))
        du_all = np.concatenate([np.atleast_1d(d) for d in du_all])
        kappa_lo, kappa_hi = float(np.min(du_all)), float(np.max(du_all))
        # empirical continuity modulus of du_H in u
        base = model.du_h(xs, np.tile(ps[-1], (len(xs), 1)), 0.0)
        pert = model.du_h(xs, np.tile(ps[-1], (len(xs), 1)), 0.25)
        omega = float(np.max(np.abs(np.atleast_1d(pert) - np.atleast_1d(base))))
        checks.append(AssumptionCheck(
            "H3", "verified-on-samples" if kappa_lo > 0 else "violated",
            margin=kappa_lo,
            witness={"kappa_lo": kappa_lo, "kappa_hi": kappa_hi,
                     "p_radius": p_radius, "omega_at_du_0.25": omega},
            note="du_H bounds on the sampled momentum ball; modulus is an "
                 "empirical estimate"))

    # H4: global upper bound on du_H, probed at growing momentum radii
    if model.coupling.kind == "none":
        checks.append(AssumptionCheck("H4", "not-applicable",
                                      note="no u dependence"))
    else:
        local_cap = None
        growth_witness = {}
        violated = False
        for mult in (1.0, 2.0, 4.0):
            ring = _ball_samples(mult * p_radius, n_p, model.dim)
            cap = -math.inf
            arg = None
            for u in (-1.0, 0.0, 1.0):
                vals = np.atleast_1d(model.du_h(
                    np.tile(xs[0], (len(ring), 1)), ring, u))
                j = int(np.argmax(vals))
                if vals[j] > cap:
                    cap = float(vals[j])
                    arg = {"p": ring[j].tolist(), "u": u}
            if local_cap is None:
                local_cap = cap
            elif cap > local_cap + 1e-6:
                violated = True
                growth_witness = {"du_h": cap, "local_cap": local_cap, **arg}
                break
        checks.append(AssumptionCheck(
            "H4", "violated" if violated else "verified-on-samples",
            margin=(local_cap - cap) if violated else 0.0,
            witness=growth_witness if violated else {"kappa_hi": local_cap},
            note="du_H compared across momentum radii x1, x2, x4"))

    # P1: contraction inequality H(x, theta*p, u) <= H(x, p, u) + C_theta
    tau = model.kinetic.homogeneity
    if tau is not None:
        h0 = 0.0  # min of |p|^tau / tau
        c_theta = (1.0 - theta ** tau) * h0
    else:
        c_theta = None
    worst_p1 = -math.inf
    wit_p1 = {}
    for p in ps[:: max(1, len(ps) // 11)]:
        for u in (0.0, 1.0):
            gap = h(x_sub, np.tile(theta * p, (len(x_sub), 1)), u) - \
                h(x_sub, np.tile(p, (len(x_sub), 1)), u)
            j = int(np.argmax(gap))
            if gap[j] > worst_p1:
                worst_p1 = float(gap[j])
                wit_p1 = {"x": x_sub[j].tolist(), "p": p.tolist(), "u": u}
    if c_theta is None:
        c_theta = max(0.0, worst_p1)
        p1_ok = True
        p1_note = f"empirical constant at theta={theta}"
    else:
        p1_ok = worst_p1 <= c_theta + 1e-9
        p1_note = f"C_theta=(1-theta^tau)*min_kinetic at theta={theta}"
    checks.append(AssumptionCheck(
        "P1", "verified-on-samples" if p1_ok else "violated",
        margin=c_theta - worst_p1, witness=wit_p1,
        note=p1_note))

    # P2: joint midpoint convexity in (p, u)
    worst_p2 = -math.inf
    wit_p2 = {}
    for i in range(0, len(ps) - 1, 3):
        p1, p2 = ps[i], ps[i + 1]
        for u1, u2 in ((-1.0, 1.5), (0.0, 2.0), (0.5, 1.5)):
            pm, um = 0.5 * (p1 + p2), 0.5 * (u1 + u2)
            gap = h(x_sub, np.tile(pm, (len(x_sub), 1)), um) - 0.5 * (
                h(x_sub, np.tile(p1, (len(x_sub), 1)), u1)
                + h(x_sub, np.tile(p2, (len(x_sub), 1)), u2))
            j = int(np.argmax(gap))
            if gap[j] > worst_p2:
                worst_p2 = float(gap[j])
                wit_p2 = {"x": x_sub[j].tolist(), "p1": p1.tolist(),
                          "p2": p2.tolist(), "u1": u1, "u2": u2}
    checks.append(AssumptionCheck(
        "P2", "verified-on-samples" if worst_p2 <= 1e-9 else "violated",
        margin=-worst_p2, witness=wit_p2 if worst_p2 > 1e-9 else {},
        note="joint midpoint convexity in (p, u)"))

    # P3: uniform bounds and coercivity across u
    vals_bounded = []
    coercive_gaps = []
    for u in (-u_span, 0.0, u_span):
        ring = _ball_samples(p_radius, n_p, model.dim)
        vals = np.concatenate([np.atleast_1d(h(xs, np.tile(q, (len(xs), 1)), u))
                               for q in ring[:: max(1, len(ring) // 9)]])
        vals_bounded.append(float(np.max(np.abs(vals))))
        lo_ring = _ball_samples(p_radius / 3.0, n_p, model.dim)
        hi_min = min(float(np.min(h(xs, np.tile(q, (len(xs), 1)), u)))
                     for q in ring[:: max(1, len(ring) // 9)]
                     if np.linalg.norm(q) >= p_radius - 1e-9)
        lo_min = min(float(np.min(h(xs, np.tile(q, (len(xs), 1)), u)))
                     for q in lo_ring[:: max(1, len(lo_ring) // 9)])
        coercive_gaps.append(hi_min - lo_min)
    p3_ok = all(np.isfinite(v) for v in vals_bounded) and min(coercive_gaps) > 0
    checks.append(AssumptionCheck(
        "P3", "verified-on-samples" if p3_ok else "violated",
        margin=min(coercive_gaps),
        witness={"sup_abs_h": max(vals_bounded)},
        note="bounded on samples, coercive uniformly across sampled u"))

    return AssumptionReport(checks=tuple(checks))


def lower_bound_m0(model: HamiltonianModel, x_points: np.ndarray,
                   p_extent: float = 20.0, p_spacing: float = 0.01) -> float:
    """max over x samples of min over the momentum lattice of H(x, p, 0)."""
    r = p_spacing * np.arange(int(round(p_extent / p_spacing)) + 1)
    kin = model.kinetic.radial(np.minimum(
        r, getattr(model.kinetic, "extent", math.inf)))
    if model.coupling.kind == "arctan":
        kin = kin + (np.square(r) + 1.0) * model.coupling.shift
    min_over_p = float(np.min(kin))
    f_vals = model.f(x_points)
    return float(np.max(-f_vals)) + min_over_p
