"""Barrier optimization: maximize zeta(z1, z2) = (z2 - z1 - beta)/(g(z2) - g(z1)).

The maximizer set is characterized case by case through the convexity profile
of g.  In every case the upper barrier z2 solves psi(z1, z2) = beta where
psi(x, y) is the integral of 1 - g'(s)/g'(y) over [x, y], and the lower
barrier is either 0 or the matching point on a decreasing branch of g' with
g'(z1) = g'(z2) (smooth pasting).  The shapes that occur:

  * convex g (g' increasing everywhere): z1 = 0, z2 inverts psi(0, .).
  * V-shaped g' (one trough m): z2 inverts the trough-anchored sweep function
    and z1 is the left preimage of g'(z2), clamped at 0.
  * W-shaped g' (troughs at a1 and x0, both-positive case iv) and M-shaped g'
    (mixed case with a hump between a and x0): two candidate stationary
    families compete; the one with the smaller g'(z2) wins, ties return both.

All inverse functions are computed numerically with guaranteed brackets taken
from the convexity profile; no closed-form inversion is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from scipy.integrate import quad
from scipy.optimize import brentq

from .model import (
    REGIME_BOTH_NONPOSITIVE,
    REGIME_BOTH_POSITIVE,
    REGIME_MINUS_POSITIVE,
    REGIME_PLUS_POSITIVE,
    CaseLabel,
    classify_case,
    convexity_profile,
)
from .scale import ScaleContext, g, g_prime

TOL_ARG = 1e-12          # argument tolerance for root finding
TOL_REL = 1e-8           # relative tolerance for smooth pasting / psi = beta
QUAD_EPSABS = 1e-12
QUAD_LIMIT = 2**15
TIE_REL = 1e-9           # relative zeta gap below which twin maximizers are both returned
DEGENERATE_REL = 1e-10   # detection width for the two-point preimage of omega1/omega3


class SolverError(RuntimeError):
    """Numerical failure inside the barrier solver; carries the branch trace."""

    def __init__(self, message: str, branch_trace: Optional[list[str]] = None):
        super().__init__(message)
        self.branch_trace = list(branch_trace or [])


class NoBracketError(SolverError):
    """A required root bracket shows no sign change (never extrapolated past)."""


class DomainError(ValueError):
    """Evaluation of a case-specific sweep function outside its printed domain."""


@dataclass(frozen=True)
class BarrierPair:
    """A candidate (z1, z2) barrier pair and its objective value."""

    z1: float
    z2: float
    zeta: float


@dataclass(frozen=True)
class BarrierSolutionSet:
    """Global maximizers of zeta, with the case and branch bookkeeping."""

    pairs: tuple[BarrierPair, ...]
    case: CaseLabel
    branch_trace: tuple[str, ...]
    degenerate_triple: bool = False
    levels: dict = field(default_factory=dict, compare=False)

    @property
    def best(self) -> BarrierPair:
        return self.pairs[0]


def psi(ctx: ScaleContext, x: float, y: float) -> float:
    """Integral of 1 - g'(s)/g'(y) over [x, y] by adaptive quadrature."""
    if x > y:
        raise ValueError(f"psi requires x <= y, got x={x}, y={y}")
    if x < 0.0:
        raise ValueError(f"psi requires x >= 0, got x={x}")
    if x == y:
        return 0.0
    gpy = g_prime(ctx, y)
    if not (gpy > 0.0 and math.isfinite(gpy)):
        raise SolverError(
            f"g'({y:.6g}) = {gpy:.3g} is outside float64 range; integrand not representable"
        )
    a = ctx.params.a

    def integrand(s: float) -> float:
        return 1.0 - g_prime(ctx, s) / gpy

    # g' has a derivative kink at the threshold; tell the quadrature about it
    pts = [a] if x < a < y else None
    val, _ = quad(integrand, x, y, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSABS, limit=QUAD_LIMIT, points=pts)
    return val


def invert_monotone(
    f: Callable[[float], float],
    target: float,
    bracket: tuple[float, float],
    direction: str = "increasing",
) -> float:
    """Solve f(x) = target for monotone f on a bracketing interval.

    Bisection-safeguarded (Brent) refinement to 1e-12 on the argument.  If the
    bracket does not straddle the target the failure is explicit; the bracket
    is never extrapolated.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo > hi:
        raise ValueError(f"bracket reversed: {bracket}")
    flo = f(lo) - target
    fhi = f(hi) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise NoBracketError(
            f"no sign change inverting {direction} function on [{lo:.6g}, {hi:.6g}]: "
            f"f-target at ends = ({flo:.3e}, {fhi:.3e})"
        )
    if lo == hi:
        return lo
    return brentq(lambda s: f(s) - target, lo, hi, xtol=TOL_ARG)


def _invert_gprime_branch(
    ctx: ScaleContext, v: float, lo: float, hi: float, increasing: bool
) -> float:
    """Preimage of g' = v on a branch where g' is strictly monotone."""
    vlo = g_prime(ctx, lo)
    vhi = g_prime(ctx, hi)
    vmin, vmax = (vlo, vhi) if increasing else (vhi, vlo)
    # clamp values a hair outside the branch range (root-finder noise)
    slack = TOL_REL * max(1.0, abs(v))
    if v < vmin - slack or v > vmax + slack:
        raise NoBracketError(
            f"g' = {v:.12g} unreachable on branch [{lo:.6g}, {hi:.6g}] "
            f"with range [{vmin:.12g}, {vmax:.12g}]"
        )
    v = min(max(v, vmin), vmax)
    dirn = "increasing" if increasing else "decreasing"
    return invert_monotone(lambda s: g_prime(ctx, s), v, (lo, hi), dirn)


def _invert_gprime_tail(ctx: ScaleContext, v: float, lo: float) -> float:
    """Preimage of g' = v on the final increasing branch [lo, inf)."""
    if v <= g_prime(ctx, lo):
        return lo
    cap = min(ctx.x_max, ctx.x_finite)
    hi = lo + max(1.0, ctx.params.beta)
    while hi < cap and g_prime(ctx, hi) < v:
        hi = lo + 2.0 * (hi - lo)
    hi = min(hi, cap)
    if g_prime(ctx, hi) < v:
        raise NoBracketError(f"g' never reaches {v:.6g} below {cap:.6g}")
    return _invert_gprime_branch(ctx, v, lo, hi, increasing=True)


def _expand_until(
    f: Callable[[float], float], lo: float, target: float, x_cap: float, step0: float
) -> float:
    """Smallest doubling point hi > lo with f(hi) >= target (f increasing)."""
    hi = min(lo + step0, x_cap)
    while f(hi) < target:
        if hi >= x_cap:
            raise NoBracketError(f"sweep function never reaches {target:.6g} below {x_cap:.6g}")
        hi = min(lo + 2.0 * (hi - lo), x_cap)
    return hi


def upper_search_bound(ctx: ScaleContext, label: Optional[CaseLabel] = None) -> float:
    """A finite level provably above every optimal z2, used to bound searches.

    Built from the final increasing branch of g': above the point where g'
    exceeds every decreasing-branch value (so no smooth-pasting partner
    exists) and above the point where the z1 = 0 stationarity sweep passes
    beta, then doubled.
    """
    if label is None:
        label = classify_case(ctx.params, ctx.consts)
    prof = convexity_profile(ctx.params, ctx.consts, label)
    b_last = prof.breakpoints[-1] if prof.breakpoints else 0.0
    v_cap = max(g_prime(ctx, 0.0), g_prime(ctx, ctx.params.a))
    u1 = _invert_gprime_tail(ctx, v_cap, b_last)
    beta = ctx.params.beta
    x_psi = _expand_until(
        lambda s: psi(ctx, 0.0, s) if s > b_last else -1.0,
        b_last,
        beta,
        min(ctx.x_max, ctx.x_finite),
        max(1.0, beta),
    )
    return 2.0 * max(u1, x_psi, ctx.params.a + beta)


def _left_preimage(ctx: ScaleContext, v: float, trough: float) -> float:
    """inf{z in [0, trough] : g'(z) <= v} for a decreasing branch ending at trough."""
    if v >= g_prime(ctx, 0.0):
        return 0.0
    return _invert_gprime_branch(ctx, v, 0.0, trough, increasing=False)


def _vshape_sweep(ctx: ScaleContext, trough: float) -> Callable[[float], float]:
    """phi-type sweep for a single-trough g': x -> psi(left preimage, x) on [m, inf)."""

    def sweep(x: float) -> float:
        if x < trough - 1e-12:
            raise DomainError(f"sweep defined on [{trough:.6g}, inf), got {x:.6g}")
        x = max(x, trough)
        return psi(ctx, _left_preimage(ctx, g_prime(ctx, x), trough), x)

    return sweep


def _barrier_zeta(ctx: ScaleContext, z2: float) -> float:
    v = g_prime(ctx, z2)
    if not (v > 0.0 and math.isfinite(v)):
        raise SolverError(
            f"g'({z2:.6g}) = {v:.3g} is outside float64 range; objective not representable"
        )
    return 1.0 / v


def _solve_convex(ctx: ScaleContext, label: CaseLabel) -> BarrierSolutionSet:
    beta = ctx.params.beta
    f = lambda s: psi(ctx, 0.0, s)
    hi = _expand_until(f, 0.0, beta, min(ctx.x_max, ctx.x_finite), max(1.0, beta))
    z2 = invert_monotone(f, beta, (0.0, hi))
    zeta = _barrier_zeta(ctx, z2)
    trace = (f"{label}: convex g, singleton (0, phi0^-1(beta))",)
    return BarrierSolutionSet((BarrierPair(0.0, z2, zeta),), label, trace)


_VSHAPE_SWEEP_NAME = {
    (REGIME_BOTH_POSITIVE, "i"): "phi",
    (REGIME_BOTH_POSITIVE, "ii"): "phi_bar",
    (REGIME_BOTH_POSITIVE, "iii"): "phi_tilde",
    (REGIME_MINUS_POSITIVE, "a<=a1"): "phi",
    (REGIME_MINUS_POSITIVE, "a>a1"): "phi_tilde",
}


def _solve_vshape(ctx: ScaleContext, label: CaseLabel, trough: float) -> BarrierSolutionSet:
    beta = ctx.params.beta
    f = _vshape_sweep(ctx, trough)
    hi = _expand_until(f, trough, beta, min(ctx.x_max, ctx.x_finite), max(1.0, beta))
    z2 = invert_monotone(f, beta, (trough, hi))
    z1 = _left_preimage(ctx, g_prime(ctx, z2), trough)
    zeta = _barrier_zeta(ctx, z2)
    name = _VSHAPE_SWEEP_NAME[(label.sign_regime, label.sub_case)]
    trace = (f"{label}: V-shaped g' with trough {trough:.6g}, singleton via {name}^-1",)
    a4 = _invert_gprime_tail(ctx, g_prime(ctx, 0.0), trough)
    return BarrierSolutionSet(
        (BarrierPair(z1, z2, zeta),), label, trace, levels={"a4": a4}
    )


def _infimum_crossing(f: Callable[[float], float], lo: float, hi: float) -> float:
    """inf{x in [lo, hi] : f(x) >= 0} for increasing f; endpoints when no crossing."""
    if f(lo) >= 0.0:
        return lo
    if f(hi) < 0.0:
        return hi
    return brentq(f, lo, hi, xtol=TOL_ARG)


class _TwinBranchProblem:
    """Shared machinery for the two cases whose g' has two increasing branches
    reachable at the same level: both-positive case (iv) (W-shaped g') and the
    mixed plus-positive case (ii) (M-shaped g').

    Branch A is the family whose z2 can sit on the middle branch or the final
    tail (omega1 / omega3); branch B is the family anchored past the hump
    (omega2 / omega4).  Selection picks the smaller g'(z2); ties return both.
    """

    def __init__(self, ctx: ScaleContext, label: CaseLabel):
        self.ctx = ctx
        self.label = label
        self.beta = ctx.params.beta
        p, c = ctx.params, ctx.consts
        if label.sign_regime == REGIME_BOTH_POSITIVE:
            # g' decreasing on (0,a1), increasing (a1,a), decreasing (a,x0), increasing (x0,inf)
            self.kind = "w"
            self.t_lo, self.peak, self.t_hi = c.a1, p.a, c.x0
            self.names = ("omega1", "omega2", "x1", "x2")
        else:
            # g' increasing on (0,a), decreasing (a,x0), increasing (x0,inf)
            self.kind = "m"
            self.t_lo, self.peak, self.t_hi = 0.0, p.a, c.x0
            self.names = ("omega3", "omega4", "x3", "x4")
        self.gp_peak = g_prime(ctx, self.peak)
        self.gp_t_hi = g_prime(ctx, self.t_hi)
        self.gp_t_lo = g_prime(ctx, self.t_lo)
        self.hump_end = self._inv4(self.gp_peak)  # a6 (w) or a7 (m)
        if self.kind == "w":
            # first tail point matching the lower trough level (a5)
            self.tail_start = self.t_hi if self.gp_t_hi >= self.gp_t_lo else self._inv4(self.gp_t_lo)
        else:
            self.tail_start = self.t_hi
        self.cross_lo = self.tail_start
        self.cross_hi = self.hump_end
        self.xA = _infimum_crossing(self._fA, self.cross_lo, self.cross_hi)
        self.xB = _infimum_crossing(self._fB, self.cross_lo, self.cross_hi)
        self.mid_end = self._inv_mid(g_prime(ctx, self.xB))

    # branch inverses ------------------------------------------------------
    def _invA_low(self, v: float) -> float:
        """Left preimage used for branch A's z1 (first decreasing branch / 0)."""
        if self.kind == "w":
            return _left_preimage(self.ctx, v, self.t_lo)
        return 0.0

    def _inv_mid(self, v: float) -> float:
        """Preimage on the rising branch before the peak ([a1,a] or [0,a])."""
        lo = self.t_lo if self.kind == "w" else 0.0
        if self.kind == "m" and v <= g_prime(self.ctx, 0.0):
            return 0.0
        return _invert_gprime_branch(self.ctx, v, lo, self.peak, increasing=True)

    def _inv3(self, v: float) -> float:
        """Preimage on the falling branch between peak and t_hi."""
        return _invert_gprime_branch(self.ctx, v, self.peak, self.t_hi, increasing=False)

    def _inv4(self, v: float) -> float:
        return _invert_gprime_tail(self.ctx, v, self.t_hi)

    # crossing integrals ----------------------------------------------------
    def _fA(self, x: float) -> float:
        """Integral deciding where branch A's z2 jumps to the tail (defines x1 / x3)."""
        v = g_prime(self.ctx, x)
        if self.kind == "w":
            return psi(self.ctx, self._invA_low(v), self._inv3(v))
        return psi(self.ctx, 0.0, self._inv3(v))

    def _fB(self, x: float) -> float:
        """Integral deciding where branch B's z2 jumps to the tail (defines x2 / x4)."""
        v = g_prime(self.ctx, x)
        return psi(self.ctx, self._inv_mid(v), x)

    # sweep functions --------------------------------------------------------
    def omega_A(self, x: float) -> float:
        """psi from the branch-A lower preimage to x; domain has a hole below the tail."""
        eps = 1e-12 * max(1.0, abs(x))
        if not (self.t_lo - eps <= x <= self.mid_end + eps or x >= self.xB - eps):
            raise DomainError(
                f"{self.names[0]} defined on [{self.t_lo:.6g}, {self.mid_end:.6g}] U "
                f"[{self.xB:.6g}, inf), got {x:.6g}"
            )
        return psi(self.ctx, self._invA_low(g_prime(self.ctx, x)), x)

    def omega_B(self, x: float) -> float:
        """Branch-B sweep: hump-anchored below xA, branch-A formula beyond."""
        eps = 1e-12 * max(1.0, abs(x))
        if x < self.t_hi - eps:
            raise DomainError(f"{self.names[1]} defined on [{self.t_hi:.6g}, inf), got {x:.6g}")
        if x < self.xA:
            return psi(self.ctx, self._inv3(g_prime(self.ctx, x)), x)
        return psi(self.ctx, self._invA_low(g_prime(self.ctx, x)), x)

    # inverse sweeps ---------------------------------------------------------
    def _invert_omega_A(self) -> tuple[float, bool]:
        """z2 with omega_A(z2) = beta; flags the two-point degenerate preimage."""
        beta = self.beta
        vA_mid = psi(self.ctx, self._invA_low(g_prime(self.ctx, self.xB)), self.mid_end)
        vA_tail = psi(self.ctx, self._invA_low(g_prime(self.ctx, self.xB)), self.xB)
        degenerate = abs(beta - vA_tail) <= DEGENERATE_REL * max(1.0, beta)
        f = lambda s: psi(self.ctx, self._invA_low(g_prime(self.ctx, s)), s)
        if beta <= vA_mid:
            return invert_monotone(f, beta, (self.t_lo, self.mid_end)), degenerate
        if beta >= vA_tail:
            hi = _expand_until(f, self.xB, beta, min(self.ctx.x_max, self.ctx.x_finite), max(1.0, beta))
            return invert_monotone(f, beta, (self.xB, hi)), degenerate
        if vA_tail - vA_mid <= 1e-9 * max(1.0, beta):
            return self.xB, degenerate  # junction, gap is quadrature noise
        raise NoBracketError(
            f"beta={beta:.6g} falls in the excluded domain gap of {self.names[0]}: "
            f"({vA_mid:.6g}, {vA_tail:.6g}); no stationary point on this branch"
        )

    def _invert_omega_B(self) -> float:
        beta = self.beta
        vB_left = psi(self.ctx, self._inv3(g_prime(self.ctx, self.xA)), self.xA)
        vB_right = self.omega_B(self.xA)
        f_left = lambda s: psi(self.ctx, self._inv3(g_prime(self.ctx, s)), s)
        if beta < vB_left:
            return invert_monotone(f_left, beta, (self.t_hi, self.xA))
        if beta >= vB_right:
            f = lambda s: psi(self.ctx, self._invA_low(g_prime(self.ctx, s)), s)
            hi = _expand_until(f, self.xA, beta, min(self.ctx.x_max, self.ctx.x_finite), max(1.0, beta))
            return invert_monotone(f, beta, (self.xA, hi))
        if vB_right - vB_left <= 1e-9 * max(1.0, beta):
            return self.xA
        raise NoBracketError(
            f"beta={beta:.6g} falls in the excluded domain gap of {self.names[1]}: "
            f"({vB_left:.6g}, {vB_right:.6g}); no stationary point on this branch"
        )

    def _pair_A(self, z2: float) -> BarrierPair:
        zeta = _barrier_zeta(self.ctx, z2)
        return BarrierPair(self._invA_low(g_prime(self.ctx, z2)), z2, zeta)

    def _pair_B(self, z2: float) -> BarrierPair:
        zeta = _barrier_zeta(self.ctx, z2)
        v = g_prime(self.ctx, z2)
        if z2 < self.xA:
            return BarrierPair(self._inv3(v), z2, zeta)
        return BarrierPair(self._invA_low(v), z2, zeta)

    def solve(self) -> BarrierSolutionSet:
        nameA, nameB = self.names[0], self.names[1]
        beta = self.beta
        trace: list[str] = []
        omegaB_at_xA = self.omega_B(self.xA)
        levels = self._levels()
        if beta > omegaB_at_xA:
            z2, degen = self._invert_omega_A()
            trace.append(
                f"{self.label}: beta > {nameB}({self.names[2]}) = {omegaB_at_xA:.6g}; "
                f"single pair via {nameA}^-1 (tail set)"
            )
            return self._assemble([self._pair_A(z2)], trace, degen, levels)

        # A branch family can be empty for this beta (its sweep skips a value
        # interval when the crossover sits at the left endpoint of the hump);
        # the maximizer then comes from the surviving family alone.
        errs = []
        zA = zB = None
        degen = False
        try:
            zA, degen = self._invert_omega_A()
        except NoBracketError as e:
            errs.append(f"{nameA}: {e}")
        try:
            zB = self._invert_omega_B()
        except NoBracketError as e:
            errs.append(f"{nameB}: {e}")
        if zA is None and zB is None:
            raise NoBracketError(
                "no stationary pair on either branch: " + "; ".join(errs), trace
            )
        if zB is None:
            trace.append(f"{self.label}: {nameB} family empty at beta ({errs[0]}); {nameA} pair")
            return self._assemble([self._pair_A(zA)], trace, degen, levels)
        if zA is None:
            trace.append(f"{self.label}: {nameA} family empty at beta ({errs[0]}); {nameB} pair")
            return self._assemble([self._pair_B(zB)], trace, False, levels)
        uA, uB = g_prime(self.ctx, zA), g_prime(self.ctx, zB)
        pA, pB = self._pair_A(zA), self._pair_B(zB)
        if abs(uA - uB) <= TIE_REL * max(uA, uB):
            trace.append(
                f"{self.label}: equal-zeta tie g'({nameA}^-1) = g'({nameB}^-1) = {uA:.9g}; both pairs"
            )
            return self._assemble([pA, pB], trace, degen, levels)
        if uA < uB:
            trace.append(
                f"{self.label}: g'({nameA}^-1(beta)) = {uA:.9g} < {uB:.9g} = g'({nameB}^-1(beta)); "
                f"{nameA} pair wins"
            )
            return self._assemble([pA], trace, degen, levels)
        trace.append(
            f"{self.label}: g'({nameB}^-1(beta)) = {uB:.9g} < {uA:.9g} = g'({nameA}^-1(beta)); "
            f"{nameB} pair wins"
        )
        return self._assemble([pB], trace, False, levels)

    def _assemble(
        self, pairs: list[BarrierPair], trace: list[str], degenerate: bool, levels: dict
    ) -> BarrierSolutionSet:
        if degenerate:
            # the branch-A preimage is two-valued: both z2 share the same z1 and zeta
            zA = pairs[0]
            z2_low = self.mid_end
            z2_high = self.xB
            repl = [
                BarrierPair(zA.z1, z2_low, _barrier_zeta(self.ctx, z2_low)),
                BarrierPair(zA.z1, z2_high, _barrier_zeta(self.ctx, z2_high)),
            ]
            pairs = repl + [p for p in pairs[1:]]
            trace.append(
                f"degenerate beta = {self.names[0]}({self.names[3]}): two-point preimage "
                f"z2 in {{{z2_low:.9g}, {z2_high:.9g}}}"
            )
        pairs = sorted(pairs, key=lambda p: p.z2)
        return BarrierSolutionSet(
            tuple(pairs), self.label, tuple(trace), degenerate_triple=degenerate, levels=levels
        )

    def _levels(self) -> dict:
        if self.kind == "w":
            return {
                "a5": self.tail_start,
                "a6": self.hump_end,
                "x1": self.xA,
                "x2": self.xB,
            }
        return {"a7": self.hump_end, "x3": self.xA, "x4": self.xB}


def phi_family(ctx: ScaleContext, label: CaseLabel) -> dict[str, Callable[[float], float]]:
    """The case's sweep functions by name (phi0 plus the case-specific ones).

    Each function raises DomainError outside its printed domain.
    """
    fam: dict[str, Callable[[float], float]] = {}

    def phi0(x: float) -> float:
        if x < 0.0:
            raise DomainError(f"phi0 defined on [0, inf), got {x:.6g}")
        return psi(ctx, 0.0, x)

    fam["phi0"] = phi0
    key = (label.sign_regime, label.sub_case)
    if key in _VSHAPE_SWEEP_NAME:
        trough = _vshape_trough(ctx, label)
        fam[_VSHAPE_SWEEP_NAME[key]] = _vshape_sweep(ctx, trough)
    elif key == (REGIME_BOTH_POSITIVE, "iv") or key == (REGIME_PLUS_POSITIVE, "ii"):
        prob = _TwinBranchProblem(ctx, label)
        fam[prob.names[0]] = prob.omega_A
        fam[prob.names[1]] = prob.omega_B
    return fam


def crossover_levels(ctx: ScaleContext, label: CaseLabel) -> dict[str, float]:
    """The branch-switch levels {x1, x2} (both-positive iv) or {x3, x4} (mixed ii)."""
    key = (label.sign_regime, label.sub_case)
    if key not in ((REGIME_BOTH_POSITIVE, "iv"), (REGIME_PLUS_POSITIVE, "ii")):
        raise ValueError(f"crossover levels are not defined under {label}")
    prob = _TwinBranchProblem(ctx, label)
    if prob.kind == "w":
        return {"x1": prob.xA, "x2": prob.xB, "a5": prob.tail_start, "a6": prob.hump_end}
    return {"x3": prob.xA, "x4": prob.xB, "a7": prob.hump_end}


def _vshape_trough(ctx: ScaleContext, label: CaseLabel) -> float:
    r, s = label.sign_regime, label.sub_case
    if r == REGIME_BOTH_POSITIVE:
        return {"i": ctx.params.a, "ii": ctx.consts.x0, "iii": ctx.consts.a1}[s]
    return ctx.params.a if s == "a<=a1" else ctx.consts.a1


def solve_barriers(ctx: ScaleContext, label: Optional[CaseLabel] = None) -> BarrierSolutionSet:
    """Compute the maximizer set of zeta for the active case."""
    if label is None:
        label = classify_case(ctx.params, ctx.consts)
    r, s = label.sign_regime, label.sub_case
    if r == REGIME_BOTH_NONPOSITIVE or (r == REGIME_PLUS_POSITIVE and s == "i"):
        sol = _solve_convex(ctx, label)
    elif (r, s) in _VSHAPE_SWEEP_NAME:
        sol = _solve_vshape(ctx, label, _vshape_trough(ctx, label))
    elif (r, s) in ((REGIME_BOTH_POSITIVE, "iv"), (REGIME_PLUS_POSITIVE, "ii")):
        sol = _TwinBranchProblem(ctx, label).solve()
    else:
        raise ValueError(f"unknown case label {label}")
    _validate(ctx, sol)
    return sol


def _validate(ctx: ScaleContext, sol: BarrierSolutionSet) -> None:
    """Sanity-check the stationarity identities on every returned pair."""
    beta = ctx.params.beta
    for p in sol.pairs:
        if not p.z1 + beta < p.z2:
            raise SolverError(
                f"returned pair violates z1 + beta < z2: {p}", list(sol.branch_trace)
            )
        foc = g(ctx, p.z2) - g(ctx, p.z1) - (p.z2 - p.z1 - beta) * g_prime(ctx, p.z2)
        if abs(foc) > 1e-6 * max(1.0, abs(g(ctx, p.z2))):
            raise SolverError(
                f"first-order condition residual {foc:.3e} too large for {p}",
                list(sol.branch_trace),
            )
        if p.z1 > 0.0:
            gap = abs(g_prime(ctx, p.z1) - g_prime(ctx, p.z2))
            if gap > 1e-6 * g_prime(ctx, p.z2):
                raise SolverError(
                    f"smooth pasting violated by {gap:.3e} for {p}", list(sol.branch_trace)
                )
    zs = [p.zeta for p in sol.pairs]
    if max(zs) - min(zs) > 1e-6 * max(zs):
        raise SolverError(f"returned pairs disagree in zeta: {zs}", list(sol.branch_trace))
