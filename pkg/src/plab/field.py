"""Uniform 2D grid fields, ball-restricted averages and oscillations.

A field is a scalar or 2-vector sample on a uniform rectangular grid. Balls
select the nodes strictly inside them (intersected with the grid rectangle);
all averages are plain node means, an O(h)-consistent quadrature that is
adequate because every downstream check is a ratio or trend statistic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage, optimize

from . import orlicz
from .errors import DegenerateZeroError, DomainError, ResolutionError

#: minimum node count for a ball average to be accepted
N_MIN = 16


@dataclass(frozen=True)
class Grid2D:
    """Uniform grid: node (ix, iy) sits at (x0 + ix*h, y0 + iy*h)."""

    x0: float
    y0: float
    h: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.h <= 0:
            raise DomainError(f"grid spacing must be positive, got {self.h}")
        if self.nx < 2 or self.ny < 2:
            raise DomainError(f"grid needs at least 2 nodes per axis, got {self.nx}x{self.ny}")

    @classmethod
    def unit_square(cls, n: int, x0: float = 0.0, y0: float = 0.0, length: float = 1.0):
        """n x n nodes covering [x0, x0+length]^2."""
        return cls(x0, y0, length / (n - 1), n, n)

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    def meshgrid(self):
        return np.meshgrid(self.xs, self.ys)  # X, Y of shape (ny, nx)

    @property
    def x1(self) -> float:
        return self.x0 + self.h * (self.nx - 1)

    @property
    def y1(self) -> float:
        return self.y0 + self.h * (self.ny - 1)

    def contains_ball(self, ball: "Ball") -> bool:
        cx, cy = ball.center
        r = ball.radius
        return (cx - r >= self.x0 and cx + r <= self.x1
                and cy - r >= self.y0 and cy + r <= self.y1)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")

    def scaled(self, lam: float) -> "Ball":
        """Same center, radius scaled by lam."""
        return Ball(self.center, lam * self.radius)


class ScalarField:
    """Scalar samples of shape (ny, nx)."""

    components = 1

    def __init__(self, grid: Grid2D, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.ny, grid.nx):
            raise DomainError(f"scalar field shape {values.shape} does not match grid "
                              f"({grid.ny}, {grid.nx})")
        if not np.all(np.isfinite(values)):
            raise DomainError("field values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid: Grid2D, fn):
        X, Y = grid.meshgrid()
        return cls(grid, np.asarray(fn(X, Y), dtype=float) + np.zeros_like(X))

    def __add__(self, c):
        return ScalarField(self.grid, self.values + c)

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__


class VectorField:
    """2-vector samples of shape (ny, nx, 2)."""

    components = 2

    def __init__(self, grid: Grid2D, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.ny, grid.nx, 2):
            raise DomainError(f"vector field shape {values.shape} does not match grid "
                              f"({grid.ny}, {grid.nx}, 2)")
        if not np.all(np.isfinite(values)):
            raise DomainError("field values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid: Grid2D, fn):
        X, Y = grid.meshgrid()
        vx, vy = fn(X, Y)
        vals = np.stack([vx + np.zeros_like(X), vy + np.zeros_like(X)], axis=-1)
        return cls(grid, vals)

    def __add__(self, c):
        return VectorField(self.grid, self.values + c)

    def __mul__(self, c):
        return VectorField(self.grid, self.values * c)

    __rmul__ = __mul__


def _component_view(f):
    """Return values reshaped to (ny, nx, c)."""
    if f.components == 1:
        return f.values[:, :, None]
    return f.values


def ball_mask(grid: Grid2D, ball: Ball) -> np.ndarray:
    """Boolean (ny, nx) mask of nodes strictly inside the ball."""
    X, Y = grid.meshgrid()
    cx, cy = ball.center
    return (X - cx) ** 2 + (Y - cy) ** 2 < ball.radius ** 2


def _ball_values(f, ball: Ball, n_min: int = N_MIN):
    mask = ball_mask(f.grid, ball)
    count = int(mask.sum())
    if count < n_min:
        raise ResolutionError(
            f"only {count} grid nodes inside ball r={ball.radius:g} at {ball.center}; "
            f"need at least {n_min}")
    return _component_view(f)[mask]


def ball_average(f, ball: Ball):
    """Node mean over the ball; scalar fields give a float, vector fields a 2-array."""
    vals = _ball_values(f, ball)
    mean = vals.mean(axis=0)
    return float(mean[0]) if f.components == 1 else mean


def oscillation(f, ball: Ball, w) -> float:
    """w-power mean deviation from the ball mean; w = inf gives the max deviation."""
    if not (w >= 1.0):
        raise DomainError(f"oscillation exponent must satisfy w >= 1, got {w}")
    vals = _ball_values(f, ball)
    dev = np.linalg.norm(vals - vals.mean(axis=0), axis=-1)
    if np.isinf(w):
        return float(dev.max())
    return float((dev ** w).mean() ** (1.0 / w))


def a_average(g: VectorField, ball: Ball, ctx: orlicz.ExponentCtx) -> np.ndarray:
    """The vector whose flux image equals the ball mean of the flux of g."""
    vals = _ball_values(g, ball)
    return orlicz.a_inv(ctx, orlicz.a_map(ctx, vals).mean(axis=0))

def v_average(g: VectorField, ball: Ball, ctx: orlicz.ExponentCtx) -> np.ndarray:
    vals = _ball_values(g, ball)
    return orlicz.v_inv(ctx, orlicz.v_map(ctx, vals).mean(axis=0))


def nondegeneracy_ratio(g: VectorField, ball: Ball, ctx: orlicz.ExponentCtx) -> float:
    """Mean-square oscillation of V(g) over its mean-square size on the ball.

    The caller compares the quotient against a configured threshold; a zero
    denominator (g vanishes on the whole ball) raises DegenerateZeroError.
    """
    vals = _ball_values(g, ball)
    v = orlicz.v_map(ctx, vals)
    denom = float((v * v).sum(axis=-1).mean())
    if denom == 0.0:
        raise DegenerateZeroError("field vanishes identically on the ball")
    dev = v - v.mean(axis=0)
    num = float((dev * dev).sum(axis=-1).mean())
    return num / denom


def _power_mean_about(vals, c, w):
    dev = np.linalg.norm(vals - c, axis=-1)
    return float((dev ** w).mean() ** (1.0 / w))


def mean_equivalence_check(f, ball: Ball, w) -> tuple:
    """(oscillation about the mean, infimum of the w-mean over constant recenterings).

    The infimum is located by bounded scalar search per component (coordinate
    sweeps for vector fields). The sandwich inf <= mean-version <= 2 inf is
    asserted before returning.
    """
    if np.isinf(w) or w < 1.0:
        raise DomainError("mean_equivalence_check needs 1 <= w < inf")
    vals = _ball_values(f, ball)
    mean = vals.mean(axis=0)
    mean_version = _power_mean_about(vals, mean, w)

    lo = vals.min(axis=0)
    hi = vals.max(axis=0)
    c = mean.copy()
    sweeps = 1 if f.components == 1 or w == 2.0 else 3
    for _ in range(sweeps):
        for k in range(vals.shape[1]):
            if lo[k] == hi[k]:
                c[k] = lo[k]
                continue
            res = optimize.minimize_scalar(
                lambda t: _power_mean_about(vals, _with_component(c, k, t), w),
                bounds=(lo[k], hi[k]), method="bounded",
                options={"xatol": 1e-12 * max(1.0, hi[k] - lo[k])})
            c[k] = res.x
    inf_version = min(_power_mean_about(vals, c, w), mean_version)

    slack = 1e-10 * max(1.0, mean_version)
    if not (inf_version <= mean_version + slack):
        raise AssertionError("infimum oscillation exceeded the mean version")
    if not (mean_version <= 2.0 * inf_version + slack):
        raise AssertionError("mean oscillation exceeded twice the infimum version")
    return mean_version, inf_version


def _with_component(c, k, t):
    out = c.copy()
    out[k] = t
    return out


def gradient(u: ScalarField) -> VectorField:
    """Nodal gradient: central differences inside, one-sided second order on edges.

    Exact for affine fields on any grid; central part exact on quadratics.
    """
    vals = u.values
    h = u.grid.h
    gx = np.empty_like(vals)
    gy = np.empty_like(vals)
    gx[:, 1:-1] = (vals[:, 2:] - vals[:, :-2]) / (2 * h)
    gx[:, 0] = (-3 * vals[:, 0] + 4 * vals[:, 1] - vals[:, 2]) / (2 * h)
    gx[:, -1] = (3 * vals[:, -1] - 4 * vals[:, -2] + vals[:, -3]) / (2 * h)
    gy[1:-1, :] = (vals[2:, :] - vals[:-2, :]) / (2 * h)
    gy[0, :] = (-3 * vals[0, :] + 4 * vals[1, :] - vals[2, :]) / (2 * h)
    gy[-1, :] = (3 * vals[-1, :] - 4 * vals[-2, :] + vals[-3, :]) / (2 * h)
    return VectorField(u.grid, np.stack([gx, gy], axis=-1))


def divergence(g: VectorField) -> ScalarField:
    """Nodal divergence with the same stencils as `gradient`."""
    gx = ScalarField(g.grid, g.values[:, :, 0])
    gy = ScalarField(g.grid, g.values[:, :, 1])
    dx = gradient(gx).values[:, :, 0]
    dy = gradient(gy).values[:, :, 1]
    return ScalarField(g.grid, dx + dy)


def rot90_field(g: VectorField) -> VectorField:
    """Pointwise rotation by +90 degrees: (vx, vy) -> (-vy, vx)."""
    vals = np.stack([-g.values[:, :, 1], g.values[:, :, 0]], axis=-1)
    return VectorField(g.grid, vals)


def connected(mask: np.ndarray) -> bool:
    _, n = ndimage.label(mask)
    return n <= 1


# -- dump format: JSON sidecar + CSV matrix, 17 significant digits -----------

def dump_field(f, basepath) -> None:
    """Write <base>.json metadata and <base>.csv values (row-major, per grid row)."""
    base = Path(basepath)
    g = f.grid
    meta = {"nx": g.nx, "ny": g.ny, "x0": g.x0, "y0": g.y0, "h": g.h,
            "components": f.components}
    base.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    rows = f.values.reshape(g.ny, g.nx * f.components)
    with open(base.with_suffix(".csv"), "w") as fh:
        for row in rows:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_field(basepath):
    base = Path(basepath)
    meta = json.loads(base.with_suffix(".json").read_text())
    grid = Grid2D(meta["x0"], meta["y0"], meta["h"], meta["nx"], meta["ny"])
    raw = np.loadtxt(base.with_suffix(".csv"), delimiter=",", ndmin=2)
    comps = meta["components"]
    if comps == 1:
        return ScalarField(grid, raw)
    return VectorField(grid, raw.reshape(grid.ny, grid.nx, 2))
