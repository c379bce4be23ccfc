"""Model parameters, derived constants and parameter-regime classification.

The surplus diffusion has drift/volatility (mu_minus, sigma_minus) at or below
the threshold ``a`` and (mu_plus, sigma_plus) above it.  Everything the barrier
solver needs about the curvature of the scale function g is encoded by a small
set of constants (characteristic exponents theta, mixing coefficients c, and a
handful of breakpoint levels), plus a discrete case label identifying which
concave/convex pattern g follows on (0, inf).

Breakpoint constants that are not defined for a given parameter set (their
defining logarithm has a nonpositive argument, or the curvature equation has
no root) are represented as ``None``, never as sentinel numbers.  Any case
condition comparing against an absent constant evaluates to False.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

REGIME_BOTH_POSITIVE = "both-positive"
REGIME_BOTH_NONPOSITIVE = "both-nonpositive"
REGIME_MINUS_POSITIVE = "plus-nonpositive-minus-positive"
REGIME_PLUS_POSITIVE = "plus-positive-minus-nonpositive"


@dataclass(frozen=True)
class ModelParams:
    """Inputs of the dividend problem.

    mu_plus / sigma_plus apply strictly above the threshold ``a``;
    mu_minus / sigma_minus at or below it.  ``q`` is the discount rate and
    ``beta`` the fixed transaction cost per dividend lump.
    """

    mu_plus: float
    mu_minus: float
    sigma_plus: float
    sigma_minus: float
    a: float
    q: float
    beta: float

    def __post_init__(self):
        if not (self.sigma_plus > 0.0):
            raise ValueError(f"sigma_plus must be > 0, got {self.sigma_plus}")
        if not (self.sigma_minus > 0.0):
            raise ValueError(f"sigma_minus must be > 0, got {self.sigma_minus}")
        if not (self.a > 0.0):
            raise ValueError(f"threshold a must be > 0, got {self.a}")
        if not (self.q > 0.0):
            raise ValueError(f"discount rate q must be > 0, got {self.q}")
        if not (self.beta > 0.0):
            raise ValueError(f"transaction cost beta must be > 0, got {self.beta}")
        for name in ("mu_plus", "mu_minus", "sigma_plus", "sigma_minus", "a", "q", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")

    def to_dict(self) -> dict:
        return {
            "mu_plus": self.mu_plus,
            "mu_minus": self.mu_minus,
            "sigma_plus": self.sigma_plus,
            "sigma_minus": self.sigma_minus,
            "a": self.a,
            "q": self.q,
            "beta": self.beta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        allowed = {"mu_plus", "mu_minus", "sigma_plus", "sigma_minus", "a", "q", "beta"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown model parameter keys: {sorted(unknown)}")
        missing = allowed - set(d)
        if missing:
            raise ValueError(f"missing model parameter keys: {sorted(missing)}")
        return cls(**{k: float(d[k]) for k in allowed})


def _theta_pair(mu: float, sigma: float, q: float) -> tuple[float, float]:
    """Positive roots theta1 (of 0.5 s^2 t^2 - mu t - q) and theta2 (+mu branch).

    Rationalized forms avoid cancellation when |mu| is large.
    """
    s2 = sigma * sigma
    if mu == 0.0:
        t = math.sqrt(2.0 * q) / sigma
        return t, t
    disc = math.sqrt(mu * mu + 2.0 * q * s2)
    if mu > 0.0:
        theta1 = (disc + mu) / s2
        theta2 = 2.0 * q / (disc + mu)
    else:
        theta1 = 2.0 * q / (disc - mu)
        theta2 = (disc - mu) / s2
    return theta1, theta2


@dataclass(frozen=True)
class DerivedConstants:
    """Characteristic exponents, mixing coefficients and breakpoint levels.

    Optional fields are None when the defining expression does not exist for
    the given parameters.  The auxiliary levels a4..a7 and the crossover levels
    x1..x4 require evaluating the scale-function derivative, so they are filled
    in lazily by the solver (see ``with_levels``) and only in the cases where
    they are defined.
    """

    theta1_plus: float
    theta2_plus: float
    theta1_minus: float
    theta2_minus: float
    c_minus: float
    c_plus: float
    Theta: float
    x0: Optional[float] = None
    a1: Optional[float] = None
    a2: Optional[float] = None
    a3: Optional[float] = None
    a4: Optional[float] = None
    a5: Optional[float] = None
    a6: Optional[float] = None
    a7: Optional[float] = None
    x1: Optional[float] = None
    x2: Optional[float] = None
    x3: Optional[float] = None
    x4: Optional[float] = None

    def with_levels(self, **levels: float) -> "DerivedConstants":
        """Return a copy with lazily computed levels (a4..a7, x1..x4) filled in."""
        allowed = {"a4", "a5", "a6", "a7", "x1", "x2", "x3", "x4"}
        unknown = set(levels) - allowed
        if unknown:
            raise ValueError(f"not lazily computed fields: {sorted(unknown)}")
        return dataclasses.replace(self, **levels)

    def to_dict(self) -> dict:
        return {
            "theta1_plus": self.theta1_plus,
            "theta2_plus": self.theta2_plus,
            "theta1_minus": self.theta1_minus,
            "theta2_minus": self.theta2_minus,
            "c_minus": self.c_minus,
            "c_plus": self.c_plus,
            "Theta": self.Theta,
            "x0": self.x0,
            "a1": self.a1,
            "a2": self.a2,
            "a3": self.a3,
            "a4": self.a4,
            "a5": self.a5,
            "a6": self.a6,
            "a7": self.a7,
            "x1": self.x1,
            "x2": self.x2,
            "x3": self.x3,
            "x4": self.x4,
        }


def scale_boundary_values(params: ModelParams, consts: DerivedConstants) -> tuple[float, float]:
    """(g_minus(0), g_plus(0)) in closed form; g_minus(0) > g_plus(0) > 0."""
    th1m, th2m = consts.theta1_minus, consts.theta2_minus
    cm = consts.c_minus
    a = params.a
    if th1m * a > 700.0:
        raise ValueError(
            "scale-function coefficients overflow for these parameters "
            f"(theta1_minus*a = {th1m * a:.3g}); model too extreme for float64"
        )
    gm0 = cm * math.exp(-th2m * a) + (1.0 - cm) * math.exp(th1m * a)
    gp0 = math.exp(-th2m * a)
    return gm0, gp0


def curvature_drop_at_threshold(params: ModelParams, consts: DerivedConstants) -> float:
    """Negated right-limit of g'' at the threshold, from exponents alone.

    Strictly decreasing in ``a`` whenever Theta > 0; its zero is the level a3.
    """
    t1p, t2p = consts.theta1_plus, consts.theta2_plus
    t1m, t2m = consts.theta1_minus, consts.theta2_minus
    cm, cp = consts.c_minus, consts.c_plus
    n = (1.0 - cm * cp) * t1p * t1p - (1.0 - cp) * cm * t2p * t2p
    return -(1.0 - cm) * consts.Theta * math.exp(t1m * params.a) + n * math.exp(-t2m * params.a)


def derive_constants(params: ModelParams) -> DerivedConstants:
    """Compute exponents, mixing coefficients, Theta, and breakpoints x0, a1..a3."""
    t1p, t2p = _theta_pair(params.mu_plus, params.sigma_plus, params.q)
    t1m, t2m = _theta_pair(params.mu_minus, params.sigma_minus, params.q)

    c_minus = (t1m - t1p) / (t2m + t1m)
    c_plus = (t2p - t2m) / (t2p + t1p)
    Theta = c_plus * t1p * t1p + (1.0 - c_plus) * t2p * t2p

    base = DerivedConstants(
        theta1_plus=t1p,
        theta2_plus=t2p,
        theta1_minus=t1m,
        theta2_minus=t2m,
        c_minus=c_minus,
        c_plus=c_plus,
        Theta=Theta,
    )

    gm0, gp0 = scale_boundary_values(params, base)
    if not (math.isfinite(gm0) and math.isfinite(gp0)):
        raise ValueError(
            "scale-function coefficients overflow for these parameters "
            f"(theta1_minus*a = {t1m * params.a:.3g}); model too extreme for float64"
        )

    # x0: root of the upper-branch curvature; exists iff gp0 - c_plus*gm0 > 0.
    x0 = None
    q_plus = gp0 - c_plus * gm0
    p_plus = (1.0 - c_plus) * gm0
    if q_plus > 0.0:
        x0 = params.a + math.log(q_plus * t1p * t1p / (p_plus * t2p * t2p)) / (t2p + t1p)

    # a1: root of the lower-branch curvature; in (0, inf) iff theta1_minus >
    # theta2_minus, i.e. iff mu_minus > 0 (sign test is exact where the theta
    # comparison is one ulp noisy at mu = 0)
    a1 = None
    if params.mu_minus > 0.0:
        a1 = 2.0 * math.log(t1m / t2m) / (t2m + t1m)

    # a2: root (in a) of gp0 - c_plus*gm0; exists iff theta2_plus > theta2_minus.
    a2 = None
    if t2p > t2m:
        a2 = math.log((t2p + t1m) / (t2p - t2m)) / (t1m + t2m)

    # a3: root (in a) of the curvature drop at the threshold; needs Theta > 0
    # and a positive numerator, otherwise the drop never changes sign.
    a3 = None
    n3 = (1.0 - c_minus * c_plus) * t1p * t1p - (1.0 - c_plus) * c_minus * t2p * t2p
    if Theta > 0.0 and n3 > 0.0:
        a3 = math.log(n3 / ((1.0 - c_minus) * Theta)) / (t1m + t2m)

    return DerivedConstants(
        theta1_plus=t1p,
        theta2_plus=t2p,
        theta1_minus=t1m,
        theta2_minus=t2m,
        c_minus=c_minus,
        c_plus=c_plus,
        Theta=Theta,
        x0=x0,
        a1=a1,
        a2=a2,
        a3=a3,
    )


@dataclass(frozen=True)
class CaseLabel:
    """Which concavity/convexity pattern of g applies.

    sign_regime is one of the four drift-sign regimes; sub_case identifies the
    case within the regime ("i".."iv", "a<=a1" / "a>a1", or "none").
    """

    sign_regime: str
    sub_case: str

    def __str__(self) -> str:
        return f"{self.sign_regime} / {self.sub_case}"


def _le(x: Optional[float], y: Optional[float]) -> bool:
    """x <= y, False when either side is absent."""
    return x is not None and y is not None and x <= y


def _lt(x: Optional[float], y: Optional[float]) -> bool:
    return x is not None and y is not None and x < y


def _min2(x: Optional[float], y: Optional[float]) -> Optional[float]:
    if x is None or y is None:
        return None
    return min(x, y)


def classify_case(params: ModelParams, consts: DerivedConstants) -> CaseLabel:
    """Assign the unique regime/sub-case label for the parameter set.

    Conditions referencing an absent breakpoint constant are unsatisfiable;
    within a regime the first matching case in listed order wins (the
    overlaps only occur at boundary ties where the profiles coincide).
    """
    mu_p, mu_m, a = params.mu_plus, params.mu_minus, params.a
    cp, Th = consts.c_plus, consts.Theta
    a1, a2, a3 = consts.a1, consts.a2, consts.a3
    c_pos = cp > 0.0

    if mu_p > 0.0 and mu_m > 0.0:
        case_i = (
            (c_pos and _le(a2, a) and _le(a, a1))
            or (c_pos and _le(a3, a) and _le(a, _min2(a1, a2)))
            or ((not c_pos) and Th > 0.0 and _le(a3, a) and _le(a, a1))
        )
        if case_i:
            return CaseLabel(REGIME_BOTH_POSITIVE, "i")
        case_ii = (
            (c_pos and _le(a, _min2(_min2(a1, a2), a3)))
            or ((not c_pos) and Th <= 0.0 and _le(a, a1))
            or ((not c_pos) and Th > 0.0 and _le(a, _min2(a1, a3)))
        )
        if case_ii:
            return CaseLabel(REGIME_BOTH_POSITIVE, "ii")
        case_iii = (
            (c_pos and _le(a1, a) and _le(a2, a))
            or (c_pos and _le(a1, a) and _le(a3, a) and _lt(a, a2))
            or ((not c_pos) and Th > 0.0 and _le(a1, a) and _le(a3, a))
        )
        if case_iii:
            return CaseLabel(REGIME_BOTH_POSITIVE, "iii")
        case_iv = (
            (c_pos and _lt(a1, a) and _lt(a, _min2(a2, a3)))
            or ((not c_pos) and Th <= 0.0 and _lt(a1, a))
            or ((not c_pos) and Th > 0.0 and _lt(a1, a) and _lt(a, a3))
        )
        if case_iv:
            return CaseLabel(REGIME_BOTH_POSITIVE, "iv")
        raise RuntimeError(f"classification gap for {params}")  # unreachable

    if mu_p <= 0.0 and mu_m <= 0.0:
        return CaseLabel(REGIME_BOTH_NONPOSITIVE, "none")

    if mu_p <= 0.0 and mu_m > 0.0:
        if _le(a, a1):
            return CaseLabel(REGIME_MINUS_POSITIVE, "a<=a1")
        return CaseLabel(REGIME_MINUS_POSITIVE, "a>a1")

    # mu_plus > 0, mu_minus <= 0
    case_i = (
        (c_pos and _le(a2, a))
        or (c_pos and _le(a3, a) and _le(a, a2))
        or ((not c_pos) and Th > 0.0 and _le(a3, a))
    )
    if case_i:
        return CaseLabel(REGIME_PLUS_POSITIVE, "i")
    case_ii = (
        (c_pos and _lt(a, _min2(a2, a3)))
        or ((not c_pos) and Th <= 0.0)
        or ((not c_pos) and Th > 0.0 and _lt(a, a3))
    )
    if case_ii:
        return CaseLabel(REGIME_PLUS_POSITIVE, "ii")
    raise RuntimeError(f"classification gap for {params}")  # unreachable


@dataclass(frozen=True)
class ConvexityProfile:
    """Ordered breakpoints of g'' sign on (0, inf), with the sign per piece.

    signs[i] is the sign (+1 convex, -1 concave) on the i-th interval of the
    partition induced by breakpoints; len(signs) == len(breakpoints) + 1.
    """

    breakpoints: tuple[float, ...]
    signs: tuple[int, ...]
    label: CaseLabel = field(compare=False)

    def sign_at(self, x: float) -> int:
        i = 0
        for b in self.breakpoints:
            if x > b:
                i += 1
        return self.signs[i]


def convexity_profile(
    params: ModelParams, consts: DerivedConstants, label: CaseLabel
) -> ConvexityProfile:
    """Breakpoints and g'' signs implied by the case label."""
    r, s = label.sign_regime, label.sub_case
    if r == REGIME_BOTH_POSITIVE:
        if s == "i":
            return ConvexityProfile((params.a,), (-1, 1), label)
        if s == "ii":
            return ConvexityProfile((consts.x0,), (-1, 1), label)
        if s == "iii":
            return ConvexityProfile((consts.a1,), (-1, 1), label)
        if s == "iv":
            return ConvexityProfile((consts.a1, params.a, consts.x0), (-1, 1, -1, 1), label)
    elif r == REGIME_BOTH_NONPOSITIVE:
        return ConvexityProfile((), (1,), label)
    elif r == REGIME_MINUS_POSITIVE:
        b = params.a if s == "a<=a1" else consts.a1
        return ConvexityProfile((b,), (-1, 1), label)
    elif r == REGIME_PLUS_POSITIVE:
        if s == "i":
            return ConvexityProfile((), (1,), label)
        if s == "ii":
            return ConvexityProfile((params.a, consts.x0), (1, -1, 1), label)
    raise ValueError(f"unknown case label {label}")
