"""Scale functions of the threshold diffusion and the two-sided exit formulas.

g_minus / g_plus are the decaying and growing solutions of the generator ODE
0.5*sigma(x)^2 f'' + mu(x) f' = q f  (regime coefficients switch at the
threshold a), normalized to 1 at a and pasted C^1 there.  The combination
g = g_plus*g_minus(0) - g_minus*g_plus(0) vanishes at 0, is strictly
increasing, and expresses both the two-sided exit functionals and the value of
any two-barrier dividend strategy.

Numerically g is evaluated in a factored form with expm1 below the threshold,
so g(0) is exactly 0 and small-x values keep full relative precision; the
barrier root-finders bracket against that zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .model import DerivedConstants, ModelParams, derive_constants, scale_boundary_values

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ScaleContext:
    """Immutable bundle of parameters, constants and evaluation coefficients.

    For x <= a:  g(x) = k_minus * (exp(th2m*x) - exp(-th1m*x)); when th2m*a is
    too large for that factoring (k_minus would underflow while the growing
    exponential overflows), the terms are evaluated with combined exponents
    relative to the threshold instead (deep_well flag).
    For x >  a:  g(x) = p_plus*exp(th2p*(x-a)) - q_plus*exp(-th1p*(x-a))
    with k_minus, p_plus > 0 always and q_plus of either sign.  x_finite is
    the level beyond which the growing upper term saturates to inf.
    """

    params: ModelParams
    consts: DerivedConstants
    g_minus0: float
    g_plus0: float
    k_minus: float
    p_plus: float
    q_plus: float
    x_max: float
    x_finite: float
    deep_well: bool


def build_context(params: ModelParams, consts: Optional[DerivedConstants] = None) -> ScaleContext:
    if consts is None:
        consts = derive_constants(params)
    gm0, gp0 = scale_boundary_values(params, consts)
    t1m, t2m = consts.theta1_minus, consts.theta2_minus
    t1p, t2p = consts.theta1_plus, consts.theta2_plus
    deep_well = t2m * params.a > 600.0
    k_minus = 0.0 if deep_well else (1.0 - consts.c_minus) * math.exp((t1m - t2m) * params.a)
    p_plus = (1.0 - consts.c_plus) * gm0
    q_plus = gp0 - consts.c_plus * gm0
    if not all(math.isfinite(v) for v in (gm0, gp0, k_minus, p_plus, q_plus)):
        raise ValueError("scale coefficients overflow; parameters too extreme for float64")
    x_max = params.a + 700.0 / min(t1m, t2m, t1p, t2p)
    x_finite = params.a + (700.0 - math.log(max(p_plus, abs(q_plus), 1e-300))) / t2p
    x_finite = min(max(x_finite, params.a), x_max)
    return ScaleContext(
        params, consts, gm0, gp0, k_minus, p_plus, q_plus, x_max, x_finite, deep_well
    )


def _lower_terms(ctx: ScaleContext, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(growing, decaying) lower-branch terms of g, each times (1 - c_minus).

    The combined-exponent form keeps both factors representable for deep
    wells; at x = 0 the two exponent expressions are bitwise equal, so their
    difference (hence g(0)) is exactly zero.
    """
    c = ctx.consts
    a = ctx.params.a
    t1m, t2m = c.theta1_minus, c.theta2_minus
    scale = 1.0 - c.c_minus
    grow = scale * np.exp(t1m * a + t2m * (xs - a))
    decay = scale * np.exp(t1m * (a - xs) - t2m * a)
    return grow, decay


def _check_domain(ctx: ScaleContext, x) -> None:
    if np.any(np.asarray(x) > ctx.x_max):
        raise ValueError(f"evaluation beyond supported domain x_max={ctx.x_max:.6g}")


def _split(ctx: ScaleContext, x: ArrayLike):
    """Return (xs, below_mask, scalar_flag) with domain checked."""
    _check_domain(ctx, x)
    xs = np.asarray(x, dtype=float)
    return xs, xs <= ctx.params.a, np.isscalar(x) or xs.ndim == 0


def _ret(val: np.ndarray, scalar: bool):
    return float(val) if scalar else val


def g_minus(ctx: ScaleContext, x: ArrayLike) -> ArrayLike:
    """Decaying scale solution; equals 1 at the threshold."""
    xs, below, scalar = _split(ctx, x)
    c = ctx.consts
    u = xs - ctx.params.a
    with np.errstate(over="ignore"):
        lo = c.c_minus * np.exp(c.theta2_minus * u) + (1.0 - c.c_minus) * np.exp(-c.theta1_minus * u)
        hi = np.exp(-c.theta1_plus * u)
    return _ret(np.where(below, lo, hi), scalar)


def g_plus(ctx: ScaleContext, x: ArrayLike) -> ArrayLike:
    """Growing scale solution; equals 1 at the threshold."""
    xs, below, scalar = _split(ctx, x)
    c = ctx.consts
    u = xs - ctx.params.a
    with np.errstate(over="ignore"):
        lo = np.exp(c.theta2_minus * u)
        hi = (1.0 - c.c_plus) * np.exp(c.theta2_plus * u) + c.c_plus * np.exp(-c.theta1_plus * u)
    return _ret(np.where(below, lo, hi), scalar)


def g(ctx: ScaleContext, x: ArrayLike) -> ArrayLike:
    """Increasing scale combination with g(0) = 0 (exact)."""
    xs, below, scalar = _split(ctx, x)
    c = ctx.consts
    u = xs - ctx.params.a
    with np.errstate(over="ignore"):
        if ctx.deep_well:
            grow, decay = _lower_terms(ctx, xs)
            lo = grow - decay
        else:
            # expm1 keeps full precision near 0 and gives exactly 0 at x = 0
            lo = ctx.k_minus * (
                np.expm1(c.theta2_minus * xs) - np.expm1(-c.theta1_minus * xs)
            )
        hi = ctx.p_plus * np.exp(c.theta2_plus * u) - ctx.q_plus * np.exp(-c.theta1_plus * u)
    return _ret(np.where(below, lo, hi), scalar)


def g_prime(ctx: ScaleContext, x: ArrayLike) -> ArrayLike:
    """First derivative of g; strictly positive on all of R."""
    xs, below, scalar = _split(ctx, x)
    c = ctx.consts
    u = xs - ctx.params.a
    with np.errstate(over="ignore"):
        if ctx.deep_well:
            grow, decay = _lower_terms(ctx, xs)
            lo = c.theta2_minus * grow + c.theta1_minus * decay
        else:
            lo = ctx.k_minus * (
                c.theta2_minus * np.exp(c.theta2_minus * xs)
                + c.theta1_minus * np.exp(-c.theta1_minus * xs)
            )
        hi = ctx.p_plus * c.theta2_plus * np.exp(c.theta2_plus * u) + ctx.q_plus * c.theta1_plus * np.exp(
            -c.theta1_plus * u
        )
    return _ret(np.where(below, lo, hi), scalar)


def g_double_prime(ctx: ScaleContext, x: ArrayLike, side: Optional[str] = None) -> ArrayLike:
    """Second derivative of g; jumps at the threshold.

    At x == a a side flag ("left" or "right") is required, since g is only
    piecewise C^2 there.
    """
    if side not in (None, "left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    xs, below, scalar = _split(ctx, x)
    at_a = xs == ctx.params.a
    if np.any(at_a):
        if side is None:
            raise ValueError("g'' is discontinuous at the threshold; pass side='left' or 'right'")
        if side == "right":
            below = below & ~at_a
    c = ctx.consts
    u = xs - ctx.params.a
    with np.errstate(over="ignore"):
        if ctx.deep_well:
            grow, decay = _lower_terms(ctx, xs)
            lo = c.theta2_minus**2 * grow - c.theta1_minus**2 * decay
        else:
            lo = ctx.k_minus * (
                c.theta2_minus**2 * np.exp(c.theta2_minus * xs)
                - c.theta1_minus**2 * np.exp(-c.theta1_minus * xs)
            )
        hi = ctx.p_plus * c.theta2_plus**2 * np.exp(c.theta2_plus * u) - ctx.q_plus * c.theta1_plus**2 * np.exp(
            -c.theta1_plus * u
        )
    return _ret(np.where(below, lo, hi), scalar)


def exit_down(ctx: ScaleContext, x: ArrayLike, y: float, z: float) -> ArrayLike:
    """Expected discount e^{-q T_y} on the event the diffusion hits y before z.

    Requires y <= x <= z and y != z; the value lies in [0, 1].
    """
    _check_exit_args(x, y, z)
    gpz, gmz = g_plus(ctx, z), g_minus(ctx, z)
    gpy, gmy = g_plus(ctx, y), g_minus(ctx, y)
    denom = gmy * gpz - gmz * gpy
    return (gpz * g_minus(ctx, x) - gmz * g_plus(ctx, x)) / denom


def exit_up(ctx: ScaleContext, x: ArrayLike, y: float, z: float) -> ArrayLike:
    """Expected discount e^{-q T_z} on the event the diffusion hits z before y."""
    _check_exit_args(x, y, z)
    gpz, gmz = g_plus(ctx, z), g_minus(ctx, z)
    gpy, gmy = g_plus(ctx, y), g_minus(ctx, y)
    denom = gmz * gpy - gmy * gpz
    return (gpy * g_minus(ctx, x) - gmy * g_plus(ctx, x)) / denom


def _check_exit_args(x, y, z) -> None:
    if y == z:
        raise ValueError("exit corridor is empty: y == z")
    if np.any(np.asarray(x) < y) or np.any(np.asarray(x) > z) or y > z:
        raise ValueError(f"exit arguments must satisfy y <= x <= z, got y={y}, z={z}")


def value_upper_bound(params: ModelParams, x: ArrayLike) -> ArrayLike:
    """Analytic upper bound for the optimal value at surplus x >= 0.

    x plus the expected discounted running maxima of the two free regimes;
    equal to x + 1/theta2_plus + 1/theta2_minus.
    """
    if np.any(np.asarray(x) < 0):
        raise ValueError("value bound is for x >= 0")
    sp = math.sqrt(params.mu_plus**2 + 2.0 * params.q * params.sigma_plus**2)
    sm = math.sqrt(params.mu_minus**2 + 2.0 * params.q * params.sigma_minus**2)
    return x + (sp + params.mu_plus) / (2.0 * params.q) + (sm + params.mu_minus) / (2.0 * params.q)
