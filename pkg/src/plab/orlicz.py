"""Power-type N-function toolkit.

Everything here is a closed-form function of the growth exponent p > 1:
the N-function phi(t) = t^p / p, its shifted versions and conjugates, the
flux map A(Q) = |Q|^{p-2} Q, the natural distance map V(Q) = |Q|^{(p-2)/2} Q,
the general power transform T_alpha, the flux Jacobian DA(Q), and the Taylor
remainder H(P, Q) = A(P) - A(Q) - DA(Q)(P - Q).

All maps broadcast over numpy arrays whose last axis holds the two vector
components. Scalar helpers broadcast elementwise. Nothing is clamped: inputs
outside the domain raise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, SingularityError

# Fault-injection hook used by the selftest contract. Never set in production;
# "a_map_sign" flips the sign of a_map so the monotonicity invariant must trip.
_FAULT = os.environ.get("PLAB_FAULT", "")


def set_fault(name: str) -> None:
    global _FAULT
    _FAULT = name


@dataclass(frozen=True)
class ExponentCtx:
    """Growth exponent p with its conjugate p' = p/(p-1)."""

    p: float
    p_conj: float = field(init=False)

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p <= 1.0:
            raise DomainError(f"exponent p must satisfy p > 1, got {self.p}")
        object.__setattr__(self, "p_conj", self.p / (self.p - 1.0))

    def conjugate(self) -> "ExponentCtx":
        return ExponentCtx(self.p_conj)


def _check_nonneg(name, *values):
    for v in values:
        if np.any(np.asarray(v) < 0):
            raise DomainError(f"{name} requires nonnegative arguments")


def phi(ctx: ExponentCtx, t):
    """N-function t^p / p."""
    t = np.asarray(t, dtype=float)
    _check_nonneg("phi", t)
    return t ** ctx.p / ctx.p


def phi_prime(ctx: ExponentCtx, t):
    """Derivative t^(p-1)."""
    t = np.asarray(t, dtype=float)
    _check_nonneg("phi_prime", t)
    return t ** (ctx.p - 1.0)


def phi_conj(ctx: ExponentCtx, t):
    """Complementary N-function t^p' / p'."""
    return phi(ctx.conjugate(), t)


def phi_shifted(ctx: ExponentCtx, a, t):
    """Shifted N-function.

    Closed form of the integral of phi'(max(a, s))/max(a, s) * s:
    a^(p-2) t^2/2 below the shift, a^p/2 + (t^p - a^p)/p above it.
    The zero shift recovers phi itself.
    """
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_nonneg("phi_shifted", a, t)
    a, t = np.broadcast_arrays(a, t)
    p = ctx.p
    with np.errstate(divide="ignore", invalid="ignore"):
        below = a ** (p - 2.0) * 0.5 * t * t
    above = a ** p / 2.0 + (t ** p - a ** p) / p
    out = np.where(t <= a, below, above)
    # a = 0 with p < 2 makes the (discarded) "below" branch inf/nan at t > 0;
    # at t = 0 the value is 0 regardless of branch.
    out = np.where(t == 0.0, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def phi_shifted_prime(ctx: ExponentCtx, a, t):
    """Derivative of the shifted N-function: a^(p-2) t below the shift, t^(p-1) above."""
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_nonneg("phi_shifted_prime", a, t)
    a, t = np.broadcast_arrays(a, t)
    p = ctx.p
    with np.errstate(divide="ignore", invalid="ignore"):
        below = a ** (p - 2.0) * t
    above = t ** (p - 1.0)
    out = np.where(t <= a, below, above)
    out = np.where(t == 0.0, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def phi_conj_shifted(ctx: ExponentCtx, a, t):
    """Conjugate of the shifted N-function.

    Computed exactly as the p'-type shifted function at shift phi'(a) = a^(p-1).
    """
    a = np.asarray(a, dtype=float)
    _check_nonneg("phi_conj_shifted", a)
    return phi_shifted(ctx.conjugate(), a ** (ctx.p - 1.0), t)


def t_alpha(alpha: float, q):
    """Power transform |Q|^(alpha-1) Q, with T_alpha(0) = 0.

    Forms a group under composition: T_a T_b = T_ab, inverse T_{1/a}.
    """
    if not alpha > 0:
        raise DomainError(f"t_alpha requires alpha > 0, got {alpha}")
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(n > 0.0, n ** (alpha - 1.0), 0.0)
    return f * q


def a_map(ctx: ExponentCtx, q):
    """Flux map |Q|^(p-2) Q (continuously extended by 0 at Q = 0)."""
    out = t_alpha(ctx.p - 1.0, q)
    if _FAULT == "a_map_sign":
        out = -out
    return out


def a_inv(ctx: ExponentCtx, q):
    """Inverse flux map, the power transform with exponent 1/(p-1)."""
    return t_alpha(1.0 / (ctx.p - 1.0), q)


def v_map(ctx: ExponentCtx, q):
    """Natural-distance map |Q|^((p-2)/2) Q."""
    return t_alpha(ctx.p / 2.0, q)


def v_inv(ctx: ExponentCtx, q):
    return t_alpha(2.0 / ctx.p, q)


def da_matrix(ctx: ExponentCtx, q) -> np.ndarray:
    """Jacobian of the flux map at a single vector Q.

    |Q|^(p-2) (I + (p-2) Q (x) Q / |Q|^2); symmetric with eigenvalues
    |Q|^(p-2) (orthogonal to Q) and (p-1)|Q|^(p-2) (along Q).
    """
    q = np.asarray(q, dtype=float).reshape(2)
    p = ctx.p
    n = float(np.hypot(q[0], q[1]))
    if n == 0.0:
        if p < 2.0:
            raise SingularityError("DA is singular at Q = 0 for p < 2")
        if p == 2.0:
            return np.eye(2)
        return np.zeros((2, 2))
    outer = np.outer(q, q) / (n * n)
    return n ** (p - 2.0) * (np.eye(2) + (p - 2.0) * outer)


def h_remainder(ctx: ExponentCtx, p_vec, q_vec):
    """Taylor remainder A(P) - A(Q) - DA(Q)(P - Q) at base point Q.

    P may carry leading batch axes; Q is a single vector.
    """
    p_vec = np.asarray(p_vec, dtype=float)
    q_vec = np.asarray(q_vec, dtype=float).reshape(2)
    da = da_matrix(ctx, q_vec)
    diff = p_vec - q_vec
    lin = diff @ da.T
    return a_map(ctx, p_vec) - a_map(ctx, q_vec) - lin


class HammerPanel(NamedTuple):
    """The five mutually comparable quantities of the monotonicity lemma."""

    pairing: np.ndarray          # (A(P)-A(Q)) . (P-Q)
    v_dist_sq: np.ndarray        # |V(P)-V(Q)|^2
    weighted_dist_sq: np.ndarray  # (|P|+|Q|)^(p-2) |P-Q|^2
    shifted_phi: np.ndarray      # phi_{|Q|}(|P-Q|)
    shifted_conj: np.ndarray     # (phi_{|A(Q)|})^* (|A(P)-A(Q)|)


def hammer_panel(ctx: ExponentCtx, p_vec, q_vec) -> HammerPanel:
    """Evaluate all five quantities; each is nonnegative and they vanish together iff P = Q."""
    p_vec = np.asarray(p_vec, dtype=float)
    q_vec = np.asarray(q_vec, dtype=float)
    p_vec, q_vec = np.broadcast_arrays(p_vec, q_vec)
    ap = a_map(ctx, p_vec)
    aq = a_map(ctx, q_vec)
    diff = p_vec - q_vec
    dist = np.linalg.norm(diff, axis=-1)
    pairing = np.sum((ap - aq) * diff, axis=-1)
    vdiff = v_map(ctx, p_vec) - v_map(ctx, q_vec)
    v_dist_sq = np.sum(vdiff * vdiff, axis=-1)
    radius = np.linalg.norm(p_vec, axis=-1) + np.linalg.norm(q_vec, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        weighted = np.where(dist > 0.0, radius ** (ctx.p - 2.0) * dist * dist, 0.0)
    shifted = phi_shifted(ctx, np.linalg.norm(q_vec, axis=-1), dist)
    # (phi^*)_{|A(Q)|} is the p'-type shifted function at shift |A(Q)| directly
    shifted_conj = phi_shifted(
        ctx.conjugate(), np.linalg.norm(aq, axis=-1), np.linalg.norm(ap - aq, axis=-1)
    )
    return HammerPanel(pairing, v_dist_sq, weighted, np.asarray(shifted), np.asarray(shifted_conj))


def alpha_exponent(p: float) -> float:
    """Quantitative interior Hoelder exponent of gradients of plane p-harmonic functions."""
    if not p > 1.0:
        raise DomainError(f"alpha_exponent requires p > 1, got {p}")
    r = 1.0 / (p - 1.0)
    return (-3.0 - r + np.sqrt(33.0 + 30.0 * r + r * r)) / (2.0 * p)


def eta_exponent(p: float) -> float:
    """Optimal gradient regularity exponent k + alpha~; decreases to 1/3 as p grows."""
    if not p > 1.0:
        raise DomainError(f"eta_exponent requires p > 1, got {p}")
    r = 1.0 / (p - 1.0)
    return (1.0 + r + np.sqrt(1.0 + 14.0 * r + r * r)) / 6.0
