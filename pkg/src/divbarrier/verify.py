"""Candidate value function of a barrier pair and numerical optimality checks.

Given barriers (z1, z2), the candidate value is proportional to the scale
function below z2 and linear with slope 1 above.  Optimality of the induced
impulse strategy follows from three ingredients, each checked numerically on
grids here: the generator inequality (A - q)V <= 0 off the barriers, the
intervention inequality V(x) - V(y) >= x - y - beta, and one of three
sufficient conditions (z2 above the threshold; a drift-gap inequality when z2
is below it; or convexity of g just above the threshold).

The verifier reports; it does not raise.  Conditions the underlying theory
proves to be <= 0 are asserted against a small positive slack to absorb
floating-point noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .scale import ScaleContext, g, g_double_prime, g_prime, value_upper_bound
from .solver import BarrierPair

FOC_REL = 1e-8      # first-order condition residual treated as "pair is stationary"
SLACK = 1e-9        # absorbs float noise in inequalities proven <= 0
EDGE_GAP = 1e-7     # grids never sample closer than this to a kink


@dataclass(frozen=True)
class ValueFunction:
    """Candidate value of the (z1, z2) impulse strategy."""

    ctx: ScaleContext
    pair: BarrierPair
    slope_factor: float      # multiplies g below z2; 1/g'(z2) for stationary pairs
    is_stationary: bool      # first-order condition holds, value is C^1 at z2

    @property
    def z1(self) -> float:
        return self.pair.z1

    @property
    def z2(self) -> float:
        return self.pair.z2


def build_value_function(ctx: ScaleContext, pair: BarrierPair) -> ValueFunction:
    beta = ctx.params.beta
    if not pair.z1 + beta <= pair.z2:
        raise ValueError(f"pair must satisfy z1 + beta <= z2, got {pair}")
    gz2, gz1 = g(ctx, pair.z2), g(ctx, pair.z1)
    gpz2 = g_prime(ctx, pair.z2)
    foc = gz2 - gz1 - (pair.z2 - pair.z1 - beta) * gpz2
    stationary = abs(foc) <= FOC_REL * max(1.0, abs(gz2))
    if stationary:
        slope_factor = 1.0 / gpz2
    else:
        # general two-barrier value for a user-supplied (suboptimal) pair
        slope_factor = (pair.z2 - pair.z1 - beta) / (gz2 - gz1)
    return ValueFunction(ctx, pair, slope_factor, stationary)


def value(vf: ValueFunction, x) -> float | np.ndarray:
    """Candidate value at surplus x; 0 for x < 0 (ruin has already occurred)."""
    ctx, pair = vf.ctx, vf.pair
    xs = np.asarray(x, dtype=float)
    below = np.minimum(xs, pair.z2)
    out = g(ctx, np.maximum(below, 0.0)) * vf.slope_factor
    tail = xs > pair.z2
    if vf.is_stationary:
        top = g(ctx, pair.z2) * vf.slope_factor
        out = np.where(tail, top + (xs - pair.z2), out)
    else:
        top = g(ctx, pair.z1) * vf.slope_factor
        out = np.where(tail, top + (xs - pair.z1 - ctx.params.beta), out)
    out = np.where(xs < 0.0, 0.0, out)
    return float(out) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def value_prime(vf: ValueFunction, x: float) -> float:
    """dV/dx away from z2 (slope exactly 1 above z2)."""
    if x > vf.pair.z2:
        return 1.0
    return g_prime(vf.ctx, max(x, 0.0)) * vf.slope_factor


def _cluster_grid(points: list[float], lo: float, hi: float, n: int) -> np.ndarray:
    """Geometric clustering of n grid points near each anchor in [lo, hi]."""
    anchors = sorted(set([lo, hi] + [p for p in points if lo < p < hi]))
    segs = []
    per = max(n // max(len(anchors) - 1, 1), 8)
    for a, b in zip(anchors[:-1], anchors[1:]):
        t = np.linspace(0.0, 1.0, per)
        w = 0.5 * (1.0 - np.cos(np.pi * t))  # denser near both ends
        segs.append(a + (b - a) * w)
    grid = np.unique(np.concatenate(segs))
    return grid


def check_increment_inequality(vf: ValueFunction, grid_size: int = 400) -> float:
    """Min over ordered grid pairs of V(x) - V(y) - (x - y - beta) on [0, 2 z2]."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    ctx, z2 = vf.ctx, vf.pair.z2
    xs = _cluster_grid([vf.pair.z1, ctx.params.a, z2], 0.0, 2.0 * z2, grid_size)
    vals = value(vf, xs)
    beta = ctx.params.beta
    diff = vals[None, :] - vals[:, None]  # V(x) - V(y) with x = column
    gap = xs[None, :] - xs[:, None] - beta
    slack = diff - gap
    iy, ix = np.triu_indices(len(xs))  # ordered pairs y <= x
    return float(np.min(slack[iy, ix]))


def check_qvi(
    vf: ValueFunction, grid_size: int = 1000, tail_span: Optional[float] = None
) -> tuple[float, float]:
    """(worst interior |(A-q)V|, max of (A-q)V on the tail above z2).

    Interior grid covers (0, z2) excluding the threshold and z2 themselves;
    second derivatives are taken one-sided, so kinks are never sampled.
    """
    ctx = vf.ctx
    p = ctx.params
    z2 = vf.pair.z2
    xs = _cluster_grid([vf.pair.z1, p.a], 0.0, z2, grid_size)
    xs = xs[(xs > EDGE_GAP) & (xs < z2 - EDGE_GAP)]
    xs = xs[np.abs(xs - p.a) > EDGE_GAP]
    interior = 0.0
    for x in xs:
        below = x <= p.a
        sig = p.sigma_minus if below else p.sigma_plus
        mu = p.mu_minus if below else p.mu_plus
        side = "left" if below else "right"
        res = (
            0.5 * sig * sig * g_double_prime(ctx, float(x), side=side) * vf.slope_factor
            + mu * g_prime(ctx, float(x)) * vf.slope_factor
            - p.q * value(vf, float(x))
        )
        interior = max(interior, abs(res))

    # above z2 the value is linear: (A - q)V = mu(x) - q V(x), decreasing in x,
    # so the supremum sits just above z2 and just above the threshold
    if tail_span is None:
        tail_span = max(10.0 * z2, z2 + 10.0 * p.a, 50.0)
    hi = min(tail_span, ctx.x_max)
    ts = _cluster_grid([p.a], z2, hi, max(grid_size // 2, 64))
    ts = ts[(ts > z2 + EDGE_GAP) & (np.abs(ts - p.a) > EDGE_GAP)]
    mus = np.where(ts <= p.a, p.mu_minus, p.mu_plus)
    tail = float(np.max(mus - p.q * value(vf, ts)))
    return interior, tail


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the optimality checks for one barrier pair."""

    condition_a: bool
    condition_b: bool
    condition_b_residual: float
    condition_c: bool
    g2_at_threshold_right: float
    qvi_max_residual: float      # max of (A-q)V on the tail (z2, X)
    interior_residual: float     # worst |(A-q)V| on (0, z2) off the kinks
    increment_min_slack: float
    verdict: str                 # "optimal-proven" | "not-proven"

    def to_dict(self) -> dict:
        return {
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "condition_b_residual": self.condition_b_residual,
            "condition_c": self.condition_c,
            "g2_at_threshold_right": self.g2_at_threshold_right,
            "qvi_max_residual": self.qvi_max_residual,
            "interior_residual": self.interior_residual,
            "increment_min_slack": self.increment_min_slack,
            "verdict": self.verdict,
        }

    def to_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.to_dict().items())


def check_conditions(vf: ValueFunction, grid_size: int = 1000) -> VerificationReport:
    """Evaluate the three sufficient conditions and the QVI residuals."""
    ctx = vf.ctx
    p = ctx.params
    z2 = vf.pair.z2
    cond_a = z2 > p.a
    b_resid = p.mu_plus - p.q * (p.a - z2 + g(ctx, z2) / g_prime(ctx, z2))
    cond_b = (z2 <= p.a) and (b_resid <= 0.0)
    g2r = g_double_prime(ctx, p.a, side="right")
    cond_c = g2r >= 0.0
    interior, tail = check_qvi(vf, grid_size)
    inc = check_increment_inequality(vf, 400)
    resid_ok = (
        interior <= 1e-8 * p.q * value(vf, z2)
        and tail <= SLACK
        and inc >= -SLACK
    )
    verdict = "optimal-proven" if (cond_a or cond_b or cond_c) and resid_ok else "not-proven"
    return VerificationReport(
        condition_a=cond_a,
        condition_b=cond_b,
        condition_b_residual=b_resid,
        condition_c=cond_c,
        g2_at_threshold_right=g2r,
        qvi_max_residual=tail,
        interior_residual=interior,
        increment_min_slack=inc,
        verdict=verdict,
    )


def check_value_bound(vf: ValueFunction, n: int = 1000) -> float:
    """Max of V(x) - analytic upper bound over a grid (should be <= 0)."""
    z2 = vf.pair.z2
    xs = np.linspace(0.0, 2.0 * z2 + vf.ctx.params.a, n)
    return float(np.max(value(vf, xs) - value_upper_bound(vf.ctx.params, xs)))
