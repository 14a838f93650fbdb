"""Masked uniform grids, multilinear interpolation, discrete gradients.

Ball domains are realized as boolean masks over a Cartesian box grid; there
is no body-fitted meshing. Interpolation stencils that poke out of the mask
take the nearest in-mask value along a stencil axis, which keeps the scheme
monotone near curved boundaries. Fields persist to CSV with 17 significant
digits so a write/read cycle is bit-exact.
"""

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

__all__ = ["Domain", "UniformGrid", "GridField", "DomainError",
           "atomic_write_text"]


class DomainError(ValueError):
    """Domain geometry problem or query outside the mask."""


def atomic_write_text(path, text: str) -> None:
    """Write text to path via a temp file and rename, never a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class Domain:
    """A box with an optional ball mask carved out of it."""

    box: tuple  # ((lo, hi), ...) per axis
    kind: str = "box"  # box | ball
    center: tuple = ()
    radius: float = math.inf

    @staticmethod
    def full_box(box) -> "Domain":
        return Domain(box=tuple((float(lo), float(hi)) for lo, hi in box))

    @staticmethod
    def ball(box, radius: float, center=None) -> "Domain":
        box = tuple((float(lo), float(hi)) for lo, hi in box)
        if center is None:
            center = (0.0,) * len(box)
        return Domain(box=box, kind="ball", center=tuple(map(float, center)),
                      radius=float(radius))

    @property
    def dim(self) -> int:
        return len(self.box)

    def contains(self, points: np.ndarray, slack: float = 0.0) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if self.dim == 1 else pts[None, :]
        inside = np.ones(pts.shape[0], dtype=bool)
        for k, (lo, hi) in enumerate(self.box):
            inside &= (pts[:, k] >= lo - slack) & (pts[:, k] <= hi + slack)
        if self.kind == "ball":
            d2 = np.sum(np.square(pts - np.asarray(self.center)), axis=1)
            inside &= d2 <= (self.radius + slack) ** 2 + 1e-12
        return inside


def _axis_nearest_in_mask(mask_line: np.ndarray) -> np.ndarray:
    """Per position, index of the nearest True along a 1D line (-1 if none)."""
    n = len(mask_line)
    idx = np.arange(n)
    fwd = np.where(mask_line, idx, -1)
    np.maximum.accumulate(fwd, out=fwd)  # nearest True at or before i
    bwd = np.where(mask_line[::-1], idx[::-1], 2 * n)
    np.minimum.accumulate(bwd, out=bwd)
    bwd = bwd[::-1]  # nearest True at or after i
    dist_f = np.where(fwd >= 0, idx - fwd, n + 1)
    dist_b = np.where(bwd < 2 * n, bwd - idx, n + 1)
    out = np.where(dist_f <= dist_b, fwd, bwd)  # tie prefers the lower index
    out[(fwd < 0) & (bwd >= 2 * n)] = -1
    return out


class UniformGrid:
    """Uniform node lattice covering a domain's box, with a boolean mask."""

    def __init__(self, domain: Domain, shape):
        if isinstance(shape, int):
            shape = (shape,) * domain.dim
        shape = tuple(int(n) for n in shape)
        if len(shape) != domain.dim:
            raise DomainError("shape rank does not match domain dimension")
        if any(n < 3 for n in shape):
            raise DomainError("need at least 3 nodes per axis")
        self.domain = domain
        self.shape = shape
        self.axes = tuple(
            np.linspace(lo, hi, n) for (lo, hi), n in zip(domain.box, shape))
        self.dx = tuple(float(ax[1] - ax[0]) for ax in self.axes)
        if any(d <= 0 for d in self.dx):
            raise DomainError("degenerate axis")
        if domain.kind == "ball":
            for k, (lo, hi) in enumerate(domain.box):
                c = domain.center[k]
                if c - domain.radius < lo + self.dx[k] - 1e-12 or \
                        c + domain.radius > hi - self.dx[k] + 1e-12:
                    raise DomainError(
                        "ball must fit inside the box with one-cell margin")
        pts = self.points()
        self.mask = domain.contains(pts).reshape(shape)
        if not np.any(self.mask):
            raise DomainError("mask is empty")
        self._rmap = None

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def points(self) -> np.ndarray:
        """All node coordinates, row-major, shape (size, dim)."""
        if self.dim == 1:
            return self.axes[0][:, None]
        gx, gy = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    def nearest_node(self, point) -> tuple:
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        idx = []
        for k in range(self.dim):
            lo = self.axes[k][0]
            i = int(round((pt[k] - lo) / self.dx[k]))
            idx.append(min(max(i, 0), self.shape[k] - 1))
        return tuple(idx)

    def node_point(self, idx) -> np.ndarray:
        idx = (idx,) if isinstance(idx, (int, np.integer)) else tuple(idx)
        return np.array([self.axes[k][idx[k]] for k in range(self.dim)])

    @property
    def replacement_map(self) -> np.ndarray:
        """Flat index map: node -> nearest in-mask node along a grid axis.

        Out-of-mask nodes take the closer of the two axis-nearest in-mask
        nodes, preferring the first axis on ties. Nodes with no in-mask
        node on either axis line map to themselves; valid interpolation
        queries never touch those.
        """
        if self._rmap is not None:
            return self._rmap
        mask = self.mask
        flat = np.arange(self.size)
        if self.dim == 1:
            near = _axis_nearest_in_mask(mask)
            rmap = np.where(near >= 0, near, flat)
        else:
            nx, ny = self.shape
            near_x = np.empty(self.shape, dtype=int)
            for j in range(ny):
                near_x[:, j] = _axis_nearest_in_mask(mask[:, j])
            near_y = np.empty(self.shape, dtype=int)
            for i in range(nx):
                near_y[i, :] = _axis_nearest_in_mask(mask[i, :])
            ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
            dist_x = np.where(near_x >= 0, np.abs(near_x - ii), nx + ny)
            dist_y = np.where(near_y >= 0, np.abs(near_y - jj), nx + ny)
            use_x = dist_x <= dist_y
            rep = np.where(use_x, near_x * ny + jj, ii * ny + near_y)
            none = (near_x < 0) & (near_y < 0)
            rmap = np.where(none.ravel(), flat, rep.ravel())
        rmap = np.where(self.mask.ravel(), flat, rmap)
        self._rmap = rmap
        return rmap


class GridField:
    """Node values over a grid plus the solve metadata that produced them."""

    def __init__(self, grid: UniformGrid, values: np.ndarray, meta=None):
        values = np.asarray(values, dtype=float).reshape(grid.shape)
        if not np.all(np.isfinite(values[grid.mask])):
            raise ValueError("non-finite values on in-mask nodes")
        self.grid = grid
        self.values = values
        self.meta = dict(meta or {})

    def with_values(self, values, meta=None) -> "GridField":
        return GridField(self.grid, values, meta if meta is not None else self.meta)

    # -- interpolation -------------------------------------------------------

    def interpolate(self, points) -> np.ndarray:
        """Multilinear interpolation with mask replacement at stencil corners.

        Queries may sit up to half a cell outside the mask (backtraced feet
        graze boundaries by a ulp); anything farther raises DomainError.
        """
        grid = self.grid
        pts = np.asarray(points, dtype=float)
        squeeze = False
        if pts.ndim == 0 or (pts.ndim == 1 and grid.dim == 2):
            pts = pts.reshape(1, -1) if grid.dim == 2 else pts.reshape(1)
            squeeze = True
        if grid.dim == 1:
            pts = pts.reshape(-1, 1)
        slack = 0.5 * max(grid.dx)
        ok = grid.domain.contains(pts, slack=slack)
        if not np.all(ok):
            bad = pts[np.argmin(ok)]
            raise DomainError(f"query point {bad.tolist()} outside the domain")
        rmap = grid.replacement_map
        vals_flat = self.values.ravel()
        pos, base, t = [], [], []
        for k in range(grid.dim):
            p = (pts[:, k] - grid.axes[k][0]) / grid.dx[k]
            b = np.clip(np.floor(p).astype(int), 0, grid.shape[k] - 2)
            w = p - b
            # snap to exact node hits so node queries reproduce node values
            w[np.abs(w) < 1e-9] = 0.0
            w[np.abs(w - 1.0) < 1e-9] = 1.0
            w = np.clip(w, 0.0, 1.0)
            base.append(b)
            t.append(w)
        if grid.dim == 1:
            i0 = base[0]
            v0 = vals_flat[rmap[i0]]
            v1 = vals_flat[rmap[i0 + 1]]
            out = (1 - t[0]) * v0 + t[0] * v1
        else:
            ny = grid.shape[1]
            i0 = base[0] * ny + base[1]
            v00 = vals_flat[rmap[i0]]
            v01 = vals_flat[rmap[i0 + 1]]
            v10 = vals_flat[rmap[i0 + ny]]
            v11 = vals_flat[rmap[i0 + ny + 1]]
            tx, ty = t
            out = ((1 - tx) * ((1 - ty) * v00 + ty * v01)
                   + tx * ((1 - ty) * v10 + ty * v11))
        return float(out[0]) if squeeze else out

    # -- gradients -----------------------------------------------------------

    def gradient(self) -> np.ndarray:
        """Per-node gradient, shape grid.shape + (dim,).

        Central differences where both axis neighbors are in-mask, one-sided
        at mask boundaries, zero where no in-mask neighbor exists.
        """
        grid = self.grid
        v = self.values
        mask = grid.mask
        out = np.zeros(grid.shape + (grid.dim,))
        for k in range(grid.dim):
            d = grid.dx[k]
            vp = np.roll(v, -1, axis=k)
            vm = np.roll(v, 1, axis=k)
            mp = np.roll(mask, -1, axis=k)
            mm = np.roll(mask, 1, axis=k)
            # rolled-over edges are not neighbors
            edge_hi = [slice(None)] * grid.dim
            edge_hi[k] = slice(-1, None)
            edge_lo = [slice(None)] * grid.dim
            edge_lo[k] = slice(0, 1)
            mp = mp.copy()
            mp[tuple(edge_hi)] = False
            mm = mm.copy()
            mm[tuple(edge_lo)] = False
            central = mp & mm
            fwd = mp & ~mm
            bwd = mm & ~mp
            g = np.zeros(grid.shape)
            g[central] = (vp[central] - vm[central]) / (2 * d)
            g[fwd] = (vp[fwd] - v[fwd]) / d
            g[bwd] = (v[bwd] - vm[bwd]) / d
            g[~mask] = 0.0
            out[..., k] = g
        return out

    def gradient_at(self, node_idx) -> np.ndarray:
        if isinstance(node_idx, (int, np.integer)):
            node_idx = (int(node_idx),)
        return self.gradient()[tuple(node_idx)]

    # -- persistence -----------------------------------------------------------

    def to_csv(self, path) -> None:
        grid = self.grid
        meta = self.meta
        radius = grid.domain.radius
        r_text = "inf" if math.isinf(radius) else f"{radius:.17g}"
        lines = [
            "# kind,lambda,c,R,dx",
            "# {},{:.17g},{:.17g},{},{:.17g}".format(
                meta.get("kind", "field"), float(meta.get("lambda", 0.0)),
                float(meta.get("c", 0.0)), r_text, grid.dx[0]),
        ]
        pts = grid.points()
        vals = self.values.ravel()
        for i in range(grid.size):
            coord = ",".join(f"{c:.17g}" for c in pts[i])
            lines.append(f"{coord},{vals[i]:.17g}")
        atomic_write_text(path, "\n".join(lines) + "\n")

    @staticmethod
    def from_csv(path) -> "GridField":
        with open(path) as handle:
            lines = [ln.strip() for ln in handle if ln.strip()]
        if len(lines) < 3 or not lines[0].startswith("#"):
            raise ValueError(f"not a field CSV: {path}")
        meta_parts = lines[1].lstrip("# ").split(",")
        kind = meta_parts[0]
        lam = float(meta_parts[1])
        c = float(meta_parts[2])
        radius = math.inf if meta_parts[3] == "inf" else float(meta_parts[3])
        rows = np.array([[float(tok) for tok in ln.split(",")]
                         for ln in lines[2:]])
        dim = rows.shape[1] - 1
        axes = [np.unique(rows[:, k]) for k in range(dim)]
        box = tuple((float(ax[0]), float(ax[-1])) for ax in axes)
        if math.isinf(radius):
            domain = Domain.full_box(box)
        else:
            domain = Domain.ball(box, radius)
        grid = UniformGrid(domain, tuple(len(ax) for ax in axes))
        values = rows[:, dim].reshape(grid.shape)
        return GridField(grid, values,
                         meta={"kind": kind, "lambda": lam, "c": c})
