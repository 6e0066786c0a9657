"""Measurement harness for oscillation-decay and comparison inequalities.

Every "up to a constant" statement is turned into a measurable quantity:
decay profiles with fitted log-log slopes, degeneracy classification against
a configured threshold, reverse-Hoelder and comparison-defect ratios whose
constants are calibrated on training suites, and the exact discrete check of
the algebraic iteration bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import NamedTuple, Optional

import mpmath
import numpy as np

from . import besov as besov_mod
from . import orlicz
from .errors import DegenerateZeroError, DomainError, ParameterError, SkippedBall
from .field import (Ball, ScalarField, VectorField, ball_average, ball_mask,
                    gradient, nondegeneracy_ratio, oscillation)
from .solver import SolverOptions, comparison_solve, solve_linearized

ZERO_OSC = 1e-12


@dataclass
class DecayProfile:
    """Oscillations of one quantity along a shrinking chain of balls."""

    center: tuple
    radii: np.ndarray            # strictly decreasing
    osc_values: np.ndarray
    w: float
    quantity: str = "A_grad"     # one of A_grad, grad, V_grad, F
    n_truncated: int = 0         # scales dropped by the resolution guard

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.osc_values = np.asarray(self.osc_values, dtype=float)
        if len(self.radii) != len(self.osc_values):
            raise DomainError("radii and oscillation values must align")
        if len(self.radii) >= 2 and not np.all(np.diff(self.radii) < 0):
            raise DomainError("radii must be strictly decreasing")
        if not np.all(np.isfinite(self.osc_values)):
            raise DomainError("oscillation values must be finite")

    @property
    def per_step_ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.osc_values[1:] / self.osc_values[:-1]


class FitResult(NamedTuple):
    beta: float
    r2: float
    max_dev: float      # max |log osc - fit| over used scales
    flag: str           # ok | saturated | exact_decay
    n_used: int


def decay_profile(g, x, t0: float, theta: float, K: int, w: float,
                  quantity: str = "A_grad") -> DecayProfile:
    """Oscillations of g on balls B(x, theta^k t0), k = 0..K-1.

    Scales finer than 4h are dropped and counted in n_truncated.
    """
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must be in (0,1), got {theta}")
    if K < 2:
        raise DomainError("need at least two scales")
    grid = g.grid
    if not grid.contains_ball(Ball(tuple(x), t0)):
        raise DomainError("outer ball of the decay chain must lie inside the grid")
    radii, values = [], []
    truncated = 0
    for k in range(K):
        t = t0 * theta ** k
        if t < 4.0 * grid.h:
            truncated += 1
            continue
        radii.append(t)
        values.append(oscillation(g, Ball(tuple(x), t), w))
    return DecayProfile(tuple(x), np.array(radii), np.array(values), w,
                        quantity, truncated)


def fit_beta(profile: DecayProfile, zero_tol: float = ZERO_OSC) -> FitResult:
    """Least-squares slope of log(osc) against log(t).

    Zero oscillations are dropped; an all-zero profile reports exact decay
    (beta = +inf sentinel), fewer than four usable scales report saturation.
    """
    keep = profile.osc_values > zero_tol
    if not keep.any():
        return FitResult(np.inf, 1.0, 0.0, "exact_decay", 0)
    if keep.sum() < 4:
        return FitResult(np.nan, 0.0, np.inf, "saturated", int(keep.sum()))
    lt = np.log(profile.radii[keep])
    lo = np.log(profile.osc_values[keep])
    slope, intercept = np.polyfit(lt, lo, 1)
    fitted = slope * lt + intercept
    ss_res = float(((lo - fitted) ** 2).sum())
    ss_tot = float(((lo - lo.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(float(slope), r2, float(np.abs(lo - fitted).max()), "ok",
                     int(keep.sum()))


NON_DEGENERATE = "non_degenerate"
DEGENERATE = "degenerate"
DEGENERATE_ZERO = "degenerate_zero"


def classify_ball(g_grad: VectorField, ball: Ball, ctx: orlicz.ExponentCtx,
                  epsilon_dg: float) -> str:
    """Non-degenerate iff the mean-square V-oscillation stays below epsilon_dg
    times the mean-square V-size."""
    try:
        ratio = nondegeneracy_ratio(g_grad, ball, ctx)
    except DegenerateZeroError:
        return DEGENERATE_ZERO
    return NON_DEGENERATE if ratio <= epsilon_dg else DEGENERATE


def reverse_holder_ratio(h_grad: VectorField, ball: Ball,
                         ctx: orlicz.ExponentCtx) -> float:
    """p'-power flux oscillation on B over plain flux oscillation on 2B.

    Both sides vanishing gives 0 by convention; a vanishing right-hand side
    with a non-vanishing left-hand side raises (flagged anomaly).
    """
    flux = VectorField(h_grad.grid, orlicz.a_map(ctx, h_grad.values))
    lhs = oscillation(flux, ball, ctx.p_conj)
    rhs = oscillation(flux, ball.scaled(2.0), 1.0)
    scale = float(np.linalg.norm(ball_average(flux, ball.scaled(2.0))))
    tiny = max(1e-14, 1e-13 * scale)  # float noise of node sums on O(scale) data
    if rhs < tiny:
        if lhs < tiny:
            return 0.0
        raise SkippedBall(
            f"reverse-Hoelder anomaly: RHS {rhs:.3e} vanishes but LHS {lhs:.3e} does not")
    return lhs / rhs


def nonlin_comparison_defect(u: ScalarField, F: Optional[VectorField], ball: Ball,
                             ctx: orlicz.ExponentCtx,
                             opts: SolverOptions = None) -> tuple:
    """(LHS, RHS) of the nonlinear comparison inequality on the ball.

    LHS is the mean-square V-distance between u and its p-harmonic replacement;
    RHS the shifted-conjugate mean of the recentered forcing.
    """
    h = comparison_solve(u, ball, ctx, opts)
    gu = gradient(u).values
    gh = gradient(h).values
    mask = ball_mask(u.grid, ball)
    vd = orlicz.v_map(ctx, gu[mask]) - orlicz.v_map(ctx, gh[mask])
    lhs = float((vd * vd).sum(axis=-1).mean())
    if F is None:
        rhs = 0.0
    else:
        fmean = ball_average(F, ball)
        fdev = np.linalg.norm(F.values[mask] - fmean, axis=-1)
        shift = np.linalg.norm(orlicz.a_map(ctx, gu[mask]), axis=-1)
        rhs = float(np.mean(orlicz.phi_conj_shifted(ctx, shift, fdev)))
    return lhs, rhs


def linear_comparison_defect(u: ScalarField, F: Optional[VectorField], ball: Ball,
                             ctx: orlicz.ExponentCtx,
                             opts: SolverOptions = None) -> tuple:
    """(LHS, H_term, F_term) of the constant-coefficient comparison estimate.

    LHS = |Q|^((p-2)p') mean |grad u - grad z|^p' with Q the flux average of
    grad u on the ball and z the linearized solve with boundary u.
    """
    grid = u.grid
    gu = gradient(u)
    flux_vals = orlicz.a_map(ctx, gu.values[ball_mask(grid, ball)])
    fmean = flux_vals.mean(axis=0)
    fsize = float(np.linalg.norm(flux_vals, axis=-1).mean())
    if np.linalg.norm(fmean) <= 1e-10 * max(fsize, 1e-30):
        raise SkippedBall("flux average vanishes; ball is degenerate")
    q_vec = orlicz.a_inv(ctx, fmean)
    qn = float(np.linalg.norm(q_vec))
    mask = ball_mask(grid, ball)
    inner = mask.copy()
    inner[0, :] = inner[-1, :] = False
    inner[:, 0] = inner[:, -1] = False
    if inner.sum() < 100:
        raise DomainError("ball mask too small for a linearized solve")
    z = solve_linearized(ctx, q_vec, None, grid, u.values, opts, mask=inner)
    gz = gradient(z).values
    pc = ctx.p_conj
    diff = np.linalg.norm(gu.values[mask] - gz[mask], axis=-1)
    lhs = qn ** ((ctx.p - 2.0) * pc) * float((diff ** pc).mean())
    hvals = orlicz.h_remainder(ctx, gu.values[mask], q_vec)
    h_term = float((np.linalg.norm(hvals, axis=-1) ** pc).mean())
    if F is None:
        f_term = 0.0
    else:
        fmean = ball_average(F, ball)
        f_term = float((np.linalg.norm(F.values[mask] - fmean, axis=-1) ** pc).mean())
    return lhs, h_term, f_term


def iterative_lemma_check(c0: float, beta: float, M: int) -> float:
    """Max over m of the extremal sequence against its closed-form bound.

    b_0 = 1, b_{m+1} = 2^-beta (1 + c0 2^-m beta) b_m majorizes every
    admissible sequence; the returned max of b_m / (2^-m beta exp(c0/(1-2^-beta)))
    must not exceed 1. Since b_m 2^{m beta} is the partial product of
    1 + c0 2^{-k beta}, the ratio is evaluated in that cancellation-free form,
    at 50 decimal digits: near-critical parameters leave margins far below
    float64 resolution.
    """
    if c0 <= 0 or beta <= 0:
        raise DomainError("c0 and beta must be positive")
    if M < 2:
        raise DomainError("need M >= 2")
    with mpmath.workdps(50):
        c0m = mpmath.mpf(c0)
        two_mb = mpmath.power(2.0, -mpmath.mpf(beta))
        bound = mpmath.exp(c0m / (1.0 - two_mb))
        prod = mpmath.mpf(1.0)
        worst = prod / bound
        for m in range(1, M + 1):
            prod *= 1.0 + c0m * two_mb ** (m - 1)
            worst = max(worst, prod / bound)
        return float(worst)


class Theorem31Parts(NamedTuple):
    lhs: float        # p'-oscillation of the flux on theta0 B
    osc_term: float   # p'-oscillation of the flux on B
    f_term: float     # p'-oscillation of the forcing on B


def theorem31_parts(u: ScalarField, F: Optional[VectorField], ball: Ball,
                    ctx: orlicz.ExponentCtx, theta0: float) -> Theorem31Parts:
    if not 0.0 < theta0 < 1.0:
        raise DomainError(f"theta0 must be in (0,1), got {theta0}")
    flux = VectorField(u.grid, orlicz.a_map(ctx, gradient(u).values))
    pc = ctx.p_conj
    lhs = oscillation(flux, ball.scaled(theta0), pc)
    osc_term = oscillation(flux, ball, pc)
    f_term = 0.0 if F is None else oscillation(F, ball, pc)
    return Theorem31Parts(lhs, osc_term, f_term)


def theorem31_residual(u: ScalarField, F: Optional[VectorField], ball: Ball,
                       ctx: orlicz.ExponentCtx, theta0: float, beta: float,
                       c: float) -> float:
    """RHS - LHS of the single-scale flux oscillation estimate; >= 0 when it holds."""
    parts = theorem31_parts(u, F, ball, ctx, theta0)
    return theta0 ** beta * parts.osc_term + c * parts.f_term - parts.lhs


def transfer_ratio(u: ScalarField, F: VectorField, ball: Ball,
                   params: besov_mod.SmoothnessParams, ladder: besov_mod.DyadicLadder,
                   ctx: orlicz.ExponentCtx, triebel: bool = False) -> tuple:
    """(LHS, RHS) of the regularity-transfer estimate.

    LHS: smoothness seminorm of the flux on B. RHS: the same seminorm of F on
    2B plus the p'-oscillation of the flux over 2B. Requires the compact
    embedding into L^p'.
    """
    if not besov_mod.embedding_check(params, ctx.p_conj, triebel=triebel):
        raise ParameterError(
            f"parameters s={params.s}, rho={params.rho}, q={params.q} fail the "
            f"embedding condition for p'={ctx.p_conj:g}")
    flux = VectorField(u.grid, orlicz.a_map(ctx, gradient(u).values))
    est = besov_mod.triebel_seminorm if triebel else besov_mod.besov_seminorm
    lhs = est(flux, ball, params, ladder)
    big = ball.scaled(2.0)
    rhs = est(F, big, params, ladder.scaled(2.0))
    rhs += oscillation(flux, big, ctx.p_conj)
    return lhs, rhs


@dataclass
class DecayReport:
    """Fitted exponent plus raw series and residuals for one measured quantity."""

    fitted_beta: float
    r2: list
    per_step_ratios: list
    inequality_residuals: list
    epsilon_dg_used: float
    classification: list        # per-ball degeneracy flags
    profiles: list = dc_field(default_factory=list)

    def to_json(self):
        return {
            "fitted_beta": self.fitted_beta,
            "r2": self.r2,
            "per_step_ratios": self.per_step_ratios,
            "inequality_residuals": self.inequality_residuals,
            "epsilon_dg_used": self.epsilon_dg_used,
            "classification": self.classification,
        }
