"""Discrete p-Poisson solves on uniform grids.

The unknown minimizes the cell-based energy

    E(u) = sum_cells h^2 [ phi(|grad u|) - F . grad u ]

over a mask of interior nodes, with all other nodes pinned to given values.
Cell gradients are evaluated at cell centers from the four corner nodes, which
keeps affine fields exact. Minimization is damped Newton with Armijo
backtracking on the energy; the Hessian uses the flux Jacobian with the
gradient magnitude floored at a small regularization (energy and residual stay
unregularized, so exact solutions remain fixed points).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import orlicz
from .errors import DomainError, NumericalBreakdown, SolverFailure, InconsistencyError
from .field import (Ball, Grid2D, ScalarField, VectorField, ball_mask, connected,
                    gradient, rot90_field)


@dataclass
class SolverOptions:
    tol: float = 1e-10             # on the per-node flux-balance defect (see _newton)
    max_iter: int = 200
    newton_damping: float = 0.5    # backtracking factor
    hessian_floor: float = 1e-12   # floor on |grad u| inside DA only
    continuation: bool = True      # warm-start through intermediate exponents
    armijo: float = 1e-4
    max_backtracks: int = 40

    def __post_init__(self):
        if self.tol <= 0:
            raise DomainError("tol must be positive")
        if not 0.0 < self.newton_damping < 1.0:
            raise DomainError("newton_damping must lie in (0, 1)")
        if self.hessian_floor < 0:
            raise DomainError("hessian_floor must be nonnegative")


@dataclass
class DirichletProblem:
    ctx: orlicz.ExponentCtx
    grid: Grid2D
    forcing: Optional[VectorField]          # F; None means 0
    boundary: np.ndarray                    # (ny, nx); read on pinned nodes
    mask: Optional[np.ndarray] = None       # unknown nodes; default: interior
    allow_edge_unknowns: bool = False       # least-squares potential recovery only

    def __post_init__(self):
        g = self.grid
        if self.mask is None:
            m = np.zeros((g.ny, g.nx), dtype=bool)
            m[1:-1, 1:-1] = True
            self.mask = m
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != (g.ny, g.nx):
            raise DomainError("mask shape does not match grid")
        if not self.mask.any():
            raise DomainError("mask selects no unknowns")
        if not self.allow_edge_unknowns and (
                self.mask[0, :].any() or self.mask[-1, :].any()
                or self.mask[:, 0].any() or self.mask[:, -1].any()):
            raise DomainError("mask must not touch the grid edge")
        if not connected(self.mask):
            raise DomainError("mask nodes must form a connected set")
        self.boundary = np.asarray(self.boundary, dtype=float)
        if self.boundary.shape != (g.ny, g.nx):
            raise DomainError("boundary array shape does not match grid")
        if not np.all(np.isfinite(self.boundary[~self.mask])):
            raise DomainError("boundary values must be finite")
        if self.forcing is not None and self.forcing.grid != g:
            raise DomainError("forcing grid does not match problem grid")


class ConvergenceRecord(NamedTuple):
    iterations: list        # dicts {iter, energy, residual, step}
    residual: float
    converged: bool
    stages: list            # (exponent, iterations) for continuation stages

    def to_json(self):
        return {"iterations": self.iterations, "residual": self.residual,
                "converged": self.converged,
                "stages": [{"p": p, "iterations": its} for p, its in self.stages]}


class _Discretization:
    """Cell-based energy, gradient and Hessian for one Dirichlet problem."""

    def __init__(self, prob: DirichletProblem):
        self.prob = prob
        g = prob.grid
        self.h = g.h
        self.mask = prob.mask
        # active cells touch at least one unknown corner
        m = self.mask
        self.active = m[:-1, :-1] | m[:-1, 1:] | m[1:, :-1] | m[1:, 1:]
        self.n_unknowns = int(m.sum())
        self.uid = -np.ones((g.ny, g.nx), dtype=np.int64)
        self.uid[m] = np.arange(self.n_unknowns)
        if prob.forcing is None:
            self.f_cells = None
        else:
            fv = prob.forcing.values
            self.f_cells = 0.25 * (fv[:-1, :-1] + fv[:-1, 1:] + fv[1:, :-1] + fv[1:, 1:])
        self._corner_ids = None

    def fill(self, interior: np.ndarray) -> np.ndarray:
        u = self.prob.boundary.copy()
        u[self.mask] = interior
        return u

    def cell_gradients(self, u: np.ndarray):
        h2 = 2.0 * self.h
        gx = (u[:-1, 1:] + u[1:, 1:] - u[:-1, :-1] - u[1:, :-1]) / h2
        gy = (u[1:, :-1] + u[1:, 1:] - u[:-1, :-1] - u[:-1, 1:]) / h2
        return gx, gy

    def energy(self, u: np.ndarray) -> float:
        gx, gy = self.cell_gradients(u)
        norm = np.hypot(gx, gy)
        e = norm[self.active] ** self.prob.ctx.p / self.prob.ctx.p
        if self.f_cells is not None:
            fc = self.f_cells
            e = e - (fc[:, :, 0][self.active] * gx[self.active]
                     + fc[:, :, 1][self.active] * gy[self.active])
        return float(e.sum()) * self.h ** 2

    def energy_gradient(self, u: np.ndarray) -> np.ndarray:
        """Gradient wrt the unknown nodes (flattened over mask)."""
        p = self.prob.ctx.p
        gx, gy = self.cell_gradients(u)
        norm = np.hypot(gx, gy)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(norm > 0.0, norm ** (p - 2.0), 0.0)
        ax = fac * gx
        ay = fac * gy
        if self.f_cells is not None:
            ax = ax - self.f_cells[:, :, 0]
            ay = ay - self.f_cells[:, :, 1]
        ax = np.where(self.active, ax, 0.0) * (0.5 * self.h)
        ay = np.where(self.active, ay, 0.0) * (0.5 * self.h)
        grad = np.zeros_like(u)
        grad[:-1, :-1] += -ax - ay
        grad[:-1, 1:] += ax - ay
        grad[1:, :-1] += -ax + ay
        grad[1:, 1:] += ax + ay
        return grad[self.mask]

    def _corners(self):
        if self._corner_ids is None:
            g = self.prob.grid
            idx = self.uid
            act = self.active
            self._corner_ids = (idx[:-1, :-1][act], idx[:-1, 1:][act],
                                idx[1:, :-1][act], idx[1:, 1:][act])
        return self._corner_ids

    def hessian(self, u: np.ndarray, floor: float) -> sp.csc_matrix:
        p = self.prob.ctx.p
        gx, gy = self.cell_gradients(u)
        act = self.active
        gxa = gx[act]
        gya = gy[act]
        norm = np.hypot(gxa, gya)
        safe = np.maximum(norm, floor) if floor > 0 else norm
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = safe ** (p - 2.0)
            ux = np.where(norm > 0, gxa / norm, 0.0)
            uy = np.where(norm > 0, gya / norm, 0.0)
        m00 = fac * (1.0 + (p - 2.0) * ux * ux)
        m01 = fac * (p - 2.0) * ux * uy
        m11 = fac * (1.0 + (p - 2.0) * uy * uy)
        ids = self._corners()
        signs = ((-1, -1), (1, -1), (-1, 1), (1, 1))  # (sx, sy) per corner a,b,c,d
        rows, cols, vals = [], [], []
        for c1 in range(4):
            i1 = ids[c1]
            if (i1 >= 0).sum() == 0:
                continue
            sx1, sy1 = signs[c1]
            for c2 in range(4):
                i2 = ids[c2]
                sx2, sy2 = signs[c2]
                val = 0.25 * (sx1 * sx2 * m00 + (sx1 * sy2 + sy1 * sx2) * m01
                              + sy1 * sy2 * m11)
                keep = (i1 >= 0) & (i2 >= 0)
                rows.append(i1[keep])
                cols.append(i2[keep])
                vals.append(val[keep])
        H = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_unknowns, self.n_unknowns))
        return H.tocsc()


def _linear_solve(H: sp.csc_matrix, b: np.ndarray) -> np.ndarray:
    lu = spla.splu(H, permc_spec="COLAMD")
    x = lu.solve(b)
    # one sweep of iterative refinement; cheap and keeps Newton contracting
    # when the Hessian is badly conditioned near degenerate cells
    x += lu.solve(b - H @ x)
    return x


def _newton(disc: _Discretization, u0: np.ndarray, opts: SolverOptions,
            p_override=None, tol=None):
    """Damped Newton on the energy. Returns (u, iterations list, residual, ok)."""
    prob = disc.prob
    if p_override is not None:
        # continuation stages run the same discretization at another exponent
        disc = _Discretization(DirichletProblem(
            orlicz.ExponentCtx(p_override), prob.grid, prob.forcing,
            prob.boundary, prob.mask, prob.allow_edge_unknowns))
    tol = opts.tol if tol is None else tol
    h2 = disc.h ** 2
    # the energy gradient at a node is (h/2) times a signed sum of cell fluxes,
    # so |grad|_inf / h is the dimensionless per-node flux-balance defect; it
    # is the convergence metric (float64 floor ~ eps |u| |DA| / h^2 in the
    # naive h^-2 scaling would be unreachable on fine grids)
    u = u0.copy()
    x = u[disc.mask]
    energy = disc.energy(u)
    history = []
    for it in range(opts.max_iter):
        grad = disc.energy_gradient(u)
        res = float(np.abs(grad).max()) / disc.h
        if not np.isfinite(res) or not np.isfinite(energy):
            raise NumericalBreakdown("non-finite residual or energy", residual=res,
                                     history=history)
        history.append({"iter": it, "energy": energy, "residual": res, "step": 0.0})
        if res <= tol:
            return u, history, res, True
        H = disc.hessian(u, opts.hessian_floor)
        try:
            delta = _linear_solve(H, -grad)
        except RuntimeError as exc:
            raise SolverFailure(f"linear solve failed: {exc}", residual=res,
                                history=history)
        slope = float(grad @ delta)
        # local phase: once the predicted decrease drops below the roundoff of
        # the energy sum and the step is tiny, backtracking can no longer
        # resolve progress; plain Newton steps finish the job
        e_noise = 1e-12 * max(1.0, abs(energy))
        x_scale = max(1.0, float(np.abs(x).max()) if x.size else 1.0)
        if abs(slope) < e_noise and float(np.abs(delta).max()) <= 1e-4 * x_scale:
            x = x + delta
            u = disc.fill(x)
            energy = disc.energy(u)
            history[-1]["step"] = 1.0
            continue
        step, new_x, new_energy = _line_search(disc, x, energy, grad, delta, opts)
        if step == 0.0:
            # Newton direction failed to decrease the energy: one gradient step
            gdir = -grad
            scale = 1.0 / max(1.0, float(np.abs(gdir).max()) / h2)
            step, new_x, new_energy = _line_search(disc, x, energy, grad,
                                                   scale * gdir, opts)
            if step == 0.0:
                return u, history, res, False
        x = new_x
        u = disc.fill(x)
        energy = new_energy
        history[-1]["step"] = step
    grad = disc.energy_gradient(u)
    res = float(np.abs(grad).max()) / disc.h
    history.append({"iter": opts.max_iter, "energy": energy, "residual": res,
                    "step": 0.0})
    return u, history, res, res <= tol


def _line_search(disc, x, energy, grad, delta, opts):
    slope = float(grad @ delta)
    if slope >= 0.0:
        return 0.0, x, energy
    # allowance for roundoff in the energy sum, so the local Newton phase can
    # accept full steps once decreases fall below float cancellation noise
    noise = 16.0 * np.finfo(float).eps * max(1.0, abs(energy))
    t = 1.0
    for _ in range(opts.max_backtracks):
        xt = x + t * delta
        et = disc.energy(disc.fill(xt))
        if np.isfinite(et) and et <= energy + opts.armijo * t * slope + noise:
            return t, xt, et
        t *= opts.newton_damping
    return 0.0, x, energy


def _p2_start(prob: DirichletProblem) -> np.ndarray:
    """Quadratic-energy solve with the same data, used as the warm start."""
    p2 = DirichletProblem(orlicz.ExponentCtx(2.0), prob.grid, prob.forcing,
                          prob.boundary, prob.mask)
    disc = _Discretization(p2)
    u = disc.fill(np.zeros(disc.n_unknowns))
    grad = disc.energy_gradient(u)
    H = disc.hessian(u, 0.0)
    delta = _linear_solve(H, -grad)
    return disc.fill(u[disc.mask] + delta)


def _continuation_exponents(p: float) -> list:
    """Intermediate exponents between 2 and p, at most one unit apart."""
    if abs(p - 2.0) <= 1.0:
        return []
    n = int(np.ceil(abs(p - 2.0)))
    return [2.0 + (p - 2.0) * k / n for k in range(1, n)]


def solve_p_poisson(prob: DirichletProblem, opts: SolverOptions = None,
                    initial: np.ndarray = None):
    """Minimize the discrete p-Poisson energy.

    Returns (ScalarField, ConvergenceRecord). Raises SolverFailure when the
    residual tolerance is not reached, NumericalBreakdown on NaN/Inf.
    """
    opts = opts or SolverOptions()
    if prob.ctx.p < 1.2:
        raise DomainError(f"solver validated for p >= 1.2, got {prob.ctx.p}")
    if prob.forcing is not None and not np.all(np.isfinite(prob.forcing.values)):
        raise DomainError("forcing must be finite")
    disc = _Discretization(prob)
    stages = []
    if initial is not None:
        u = np.asarray(initial, dtype=float).copy()
        u[~prob.mask] = prob.boundary[~prob.mask]
    else:
        u = _p2_start(prob)
        if opts.continuation:
            for pk in _continuation_exponents(prob.ctx.p):
                u, hist, _, _ = _newton(disc, u, opts, p_override=pk,
                                        tol=max(1e-6, opts.tol))
                stages.append((pk, hist))
    u, history, res, ok = _newton(disc, u, opts)
    record = ConvergenceRecord(history, res, ok, stages)
    if not ok:
        raise SolverFailure(f"no convergence after {opts.max_iter} iterations, "
                            f"residual {res:.3e}", residual=res, history=history)
    return ScalarField(prob.grid, u), record


def solve_p_harmonic(ctx: orlicz.ExponentCtx, grid: Grid2D, boundary: np.ndarray,
                     opts: SolverOptions = None, mask: np.ndarray = None):
    """p-Poisson solve with zero forcing."""
    prob = DirichletProblem(ctx, grid, None, boundary, mask)
    return solve_p_poisson(prob, opts)


def flux_balance_defect(ctx: orlicz.ExponentCtx, values: np.ndarray,
                        grid: Grid2D, forcing: Optional[VectorField] = None,
                        mask: np.ndarray = None) -> float:
    """Sup-node defect of the discrete flux balance at the given nodal values.

    This is the quantity solves drive below their tolerance; evaluating it at
    an exact solution measures pure discretization error.
    """
    values = np.asarray(values, dtype=float)
    prob = DirichletProblem(ctx, grid, forcing, values, mask)
    disc = _Discretization(prob)
    grad = disc.energy_gradient(values)
    return float(np.abs(grad).max()) / grid.h


def solve_linearized(ctx: orlicz.ExponentCtx, q_vec, rhs: Optional[VectorField],
                     grid: Grid2D, boundary: np.ndarray,
                     opts: SolverOptions = None, mask: np.ndarray = None) -> ScalarField:
    """Constant-coefficient solve -div(DA(Q) grad z) = -div rhs, z pinned off-mask.

    DA(Q) must be positive definite (Q != 0 when p != 2); the system is
    quadratic so one sparse solve is exact.
    """
    opts = opts or SolverOptions()
    M = orlicz.da_matrix(ctx, q_vec)
    lam_min = float(np.linalg.eigvalsh(M)[0])
    if lam_min <= 0.0:
        raise DomainError("DA(Q) is not positive definite")
    prob = DirichletProblem(ctx, grid, rhs, boundary, mask)
    disc = _Discretization(prob)

    act = disc.active
    n_act = int(act.sum())
    m00 = np.full(n_act, M[0, 0])
    m01 = np.full(n_act, M[0, 1])
    m11 = np.full(n_act, M[1, 1])
    u0 = disc.fill(np.zeros(disc.n_unknowns))
    gx, gy = disc.cell_gradients(u0)
    ax = M[0, 0] * gx[act] + M[0, 1] * gy[act]
    ay = M[0, 1] * gx[act] + M[1, 1] * gy[act]
    if disc.f_cells is not None:
        ax = ax - disc.f_cells[:, :, 0][act]
        ay = ay - disc.f_cells[:, :, 1][act]
    grad = _scatter_cells(disc, ax * 0.5 * disc.h, ay * 0.5 * disc.h)
    H = _constant_hessian(disc, m00, m01, m11)
    delta = _linear_solve(H, -grad)
    return ScalarField(grid, disc.fill(u0[disc.mask] + delta))


def _scatter_cells(disc, ax, ay):
    full_ax = np.zeros(disc.active.shape)
    full_ay = np.zeros(disc.active.shape)
    full_ax[disc.active] = ax
    full_ay[disc.active] = ay
    grad = np.zeros(disc.prob.boundary.shape)
    grad[:-1, :-1] += -full_ax - full_ay
    grad[:-1, 1:] += full_ax - full_ay
    grad[1:, :-1] += -full_ax + full_ay
    grad[1:, 1:] += full_ax + full_ay
    return grad[disc.mask]


def _constant_hessian(disc, m00, m01, m11) -> sp.csc_matrix:
    ids = disc._corners()
    signs = ((-1, -1), (1, -1), (-1, 1), (1, 1))
    rows, cols, vals = [], [], []
    for c1 in range(4):
        sx1, sy1 = signs[c1]
        for c2 in range(4):
            sx2, sy2 = signs[c2]
            val = 0.25 * (sx1 * sx2 * m00 + (sx1 * sy2 + sy1 * sx2) * m01
                          + sy1 * sy2 * m11)
            keep = (ids[c1] >= 0) & (ids[c2] >= 0)
            rows.append(ids[c1][keep])
            cols.append(ids[c2][keep])
            vals.append(val[keep])
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(disc.n_unknowns, disc.n_unknowns))
    return H.tocsc()


def comparison_solve(u: ScalarField, ball: Ball, ctx: orlicz.ExponentCtx,
                     opts: SolverOptions = None):
    """p-harmonic replacement of u inside the discrete ball mask.

    Nodes strictly inside the ball become unknowns; every other node is pinned
    to u. Returns the full-grid field (equal to u outside the ball).
    """
    opts = opts or SolverOptions()
    grid = u.grid
    if not grid.contains_ball(ball):
        raise DomainError("comparison ball must lie inside the grid rectangle")
    mask = ball_mask(grid, ball)
    mask[0, :] = mask[-1, :] = False
    mask[:, 0] = mask[:, -1] = False
    if mask.sum() < 100:
        raise DomainError(f"ball mask holds {int(mask.sum())} nodes; need >= 100")
    prob = DirichletProblem(ctx, grid, None, u.values, mask)
    local = SolverOptions(tol=opts.tol, max_iter=opts.max_iter,
                          newton_damping=opts.newton_damping,
                          hessian_floor=opts.hessian_floor, continuation=False,
                          armijo=opts.armijo, max_backtracks=opts.max_backtracks)
    sol, _ = solve_p_poisson(prob, local, initial=u.values)
    return sol


class ConjugateResult(NamedTuple):
    stream: ScalarField
    residual: float     # RMS of grad z - rotated flux over cells
    curl_rel: float     # relative curl defect of the rotated flux


def conjugate_solution(h: ScalarField, ctx: orlicz.ExponentCtx,
                       curl_tol: float = 0.2) -> ConjugateResult:
    """Stream function z with grad z ~ rot90(A(grad h)).

    Recovered by least squares: z minimizes the cell-based misfit of grad z
    against the rotated flux. z is p'-harmonic (up to discretization) when h
    is p-harmonic.
    """
    grid = h.grid
    g = gradient(h)
    flux = VectorField(grid, orlicz.a_map(ctx, g.values))
    w = rot90_field(flux)

    wx = ScalarField(grid, w.values[:, :, 0])
    wy = ScalarField(grid, w.values[:, :, 1])
    curl = gradient(wy).values[:, :, 0] - gradient(wx).values[:, :, 1]
    # judge consistency away from the pinned boundary band, where no flux
    # balance holds and the rotation picks up spurious curl
    trim = np.s_[2:-2, 2:-2]
    deriv_sq = gradient(wx).values ** 2 + gradient(wy).values ** 2
    deriv_scale = float(np.sqrt(np.mean(deriv_sq[trim])))
    curl_rel = 0.0 if deriv_scale == 0.0 else float(
        np.sqrt(np.mean(curl[trim] ** 2))) / deriv_scale
    if curl_rel > curl_tol:
        raise InconsistencyError(
            f"rotated flux is not curl-free: relative defect {curl_rel:.3e}")

    # full-grid least squares; pin two adjacent nodes to kill the two null
    # modes (additive constant + cell-invisible checkerboard), with the second
    # pin set consistently from the target field
    mask = np.ones((grid.ny, grid.nx), dtype=bool)
    mask[0, 0] = False
    mask[0, 1] = False
    boundary = np.zeros((grid.ny, grid.nx))
    boundary[0, 1] = 0.5 * grid.h * (w.values[0, 0, 0] + w.values[0, 1, 0])

    prob = DirichletProblem(ctx, grid, w, boundary, mask, allow_edge_unknowns=True)
    disc = _Discretization(prob)
    u0 = disc.fill(np.zeros(disc.n_unknowns))
    gx, gy = disc.cell_gradients(u0)
    act = disc.active
    ax = gx[act] - disc.f_cells[:, :, 0][act]
    ay = gy[act] - disc.f_cells[:, :, 1][act]
    grad = _scatter_cells(disc, ax * 0.5 * grid.h, ay * 0.5 * grid.h)
    ones = np.ones(int(act.sum()))
    H = _constant_hessian(disc, ones, 0.0 * ones, ones)
    delta = _linear_solve(H, -grad)
    z = disc.fill(u0[disc.mask] + delta)

    zf = ScalarField(grid, z)
    zgx, zgy = disc.cell_gradients(z)
    wc = disc.f_cells
    resid = float(np.sqrt(np.mean((zgx - wc[:, :, 0]) ** 2
                                  + (zgy - wc[:, :, 1]) ** 2)))
    return ConjugateResult(zf, resid, curl_rel)


class CatalogueEntry(NamedTuple):
    u: ScalarField
    grad: Optional[VectorField]


def catalogue(name: str, ctx: orlicz.ExponentCtx, grid: Grid2D,
              a=(3.0, -2.0), b: float = 1.0) -> CatalogueEntry:
    """Exact solutions sampled on the grid, with exact gradients.

    affine: a.x + b (p-harmonic for every p). radial: r^((p-2)/(p-1)), p != 2,
    valid away from the origin. harmonic_poly: x^2 - y^2 (p = 2).
    log_radial: log r (p = 2).
    """
    X, Y = grid.meshgrid()
    if name == "affine":
        u = a[0] * X + a[1] * Y + b
        g = np.stack([np.full_like(X, a[0]), np.full_like(X, a[1])], axis=-1)
        return CatalogueEntry(ScalarField(grid, u), VectorField(grid, g))
    if name in ("radial", "log_radial"):
        if grid.x0 <= 0.0 <= grid.x1 and grid.y0 <= 0.0 <= grid.y1:
            raise DomainError(f"{name} solution needs a grid avoiding the origin")
        R2 = X ** 2 + Y ** 2
        R = np.sqrt(R2)
        if name == "log_radial":
            if ctx.p != 2.0:
                raise DomainError("log_radial is the p = 2 fundamental solution")
            u = np.log(R)
            g = np.stack([X / R2, Y / R2], axis=-1)
        else:
            if ctx.p == 2.0:
                raise DomainError("radial power solution degenerates at p = 2; "
                                  "use log_radial")
            kappa = (ctx.p - 2.0) / (ctx.p - 1.0)
            u = R ** kappa
            fac = kappa * R ** (kappa - 2.0)
            g = np.stack([fac * X, fac * Y], axis=-1)
        return CatalogueEntry(ScalarField(grid, u), VectorField(grid, g))
    if name == "harmonic_poly":
        if ctx.p != 2.0:
            raise DomainError("harmonic_poly is only harmonic for p = 2")
        u = X ** 2 - Y ** 2
        g = np.stack([2 * X, -2 * Y], axis=-1)
        return CatalogueEntry(ScalarField(grid, u), VectorField(grid, g))
    raise DomainError(f"unknown catalogue entry {name!r}")


def manufactured_forcing(u_grad: VectorField, ctx: orlicz.ExponentCtx,
                         psi=None) -> VectorField:
    """Forcing F = A(grad u*) + rot90(grad psi) so u* solves the p-Poisson problem.

    psi, when given, must expose grad(X, Y) -> (dpsi/dx, dpsi/dy); its rotated
    gradient is divergence free, so it perturbs F without changing the solution.
    """
    grid = u_grad.grid
    F = orlicz.a_map(ctx, u_grad.values)
    if psi is not None:
        X, Y = grid.meshgrid()
        px, py = psi.grad(X, Y)
        F = F + np.stack([-np.asarray(py, dtype=float) + 0 * X,
                          np.asarray(px, dtype=float) + 0 * X], axis=-1)
    return VectorField(grid, F)
