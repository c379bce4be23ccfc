"""Derived constants and case classification."""

import math

import numpy as np
import pytest

from divbarrier import (
    ModelParams,
    classify_case,
    convexity_profile,
    derive_constants,
)
from divbarrier.scale import build_context, g_double_prime

from conftest import LABELS, sample_any, sample_params, stratified_sets


def test_zero_drift_toy():
    p = ModelParams(0.0, 0.0, 1.0, 1.0, a=1.0, q=0.5, beta=0.2)
    c = derive_constants(p)
    assert c.theta1_plus == c.theta2_plus == 1.0
    assert c.theta1_minus == c.theta2_minus == 1.0
    assert c.c_minus == 0.0 and c.c_plus == 0.0
    assert c.Theta == 1.0


def test_homogeneous_model():
    p = ModelParams(0.3, 0.3, 0.7, 0.7, a=1.2, q=0.4, beta=0.1)
    c = derive_constants(p)
    assert abs(c.c_minus) < 1e-15 and abs(c.c_plus) < 1e-15
    # theta1_minus > theta2_minus here, so the lower curvature root exists
    assert c.a1 is not None and c.a1 > 0.0
    p0 = ModelParams(0.0, 0.0, 0.7, 0.7, a=1.2, q=0.4, beta=0.1)
    c0 = derive_constants(p0)
    # zero drift makes theta1 == theta2: the root degenerates to 0, absent
    assert c0.a1 is None


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        ModelParams(0.1, 0.1, 0.0, 1.0, a=1.0, q=0.5, beta=0.2)
    with pytest.raises(ValueError):
        ModelParams(0.1, 0.1, 1.0, 1.0, a=-1.0, q=0.5, beta=0.2)
    with pytest.raises(ValueError):
        ModelParams(0.1, 0.1, 1.0, 1.0, a=1.0, q=0.0, beta=0.2)
    with pytest.raises(ValueError):
        ModelParams(0.1, 0.1, 1.0, 1.0, a=1.0, q=0.5, beta=0.0)
    with pytest.raises(ValueError):
        ModelParams(math.nan, 0.1, 1.0, 1.0, a=1.0, q=0.5, beta=0.2)


def test_theta_against_quadratic_roots():
    """Exponents must be the positive roots of the two characteristic polynomials."""
    rng = np.random.default_rng(101)
    for _ in range(200):
        mu = rng.uniform(-2.0, 2.0)
        sig = rng.uniform(0.05, 2.0)
        q = rng.uniform(0.01, 3.0)
        p = ModelParams(mu, 0.0, sig, 1.0, a=1.0, q=q, beta=0.1)
        c = derive_constants(p)
        r2 = np.roots([0.5 * sig**2, mu, -q])   # growing solution exponent
        r1 = np.roots([0.5 * sig**2, -mu, -q])  # decaying solution exponent
        theta2 = float(r2[r2 > 0][0])
        theta1 = float(r1[r1 > 0][0])
        assert c.theta2_plus == pytest.approx(theta2, rel=1e-12)
        assert c.theta1_plus == pytest.approx(theta1, rel=1e-12)


def test_theta_identities_random():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = sample_any(rng)
        c = derive_constants(p)
        for th1, th2, mu, sig in (
            (c.theta1_plus, c.theta2_plus, p.mu_plus, p.sigma_plus),
            (c.theta1_minus, c.theta2_minus, p.mu_minus, p.sigma_minus),
        ):
            assert th1 > 0 and th2 > 0
            assert th1 * th2 == pytest.approx(2.0 * p.q / sig**2, rel=1e-12)
            assert th1 - th2 == pytest.approx(2.0 * mu / sig**2, rel=1e-9, abs=1e-12)
        assert 1.0 - c.c_minus > 0.0
        assert 1.0 - c.c_plus > 0.0


def test_classify_reference_examples():
    # both drifts positive with a above both a1 and a2 and c_plus > 0: case (iii)
    found = False
    rng = np.random.default_rng(11)
    for _ in range(500):
        p = sample_params(rng, "both-positive")
        c = derive_constants(p)
        if c.c_plus > 0 and c.a1 is not None and c.a2 is not None and p.a >= max(c.a1, c.a2):
            assert classify_case(p, c).sub_case == "iii"
            found = True
    assert found
    # both drifts nonpositive: single conclusion
    p = ModelParams(-0.1, 0.0, 0.3, 0.4, a=1.0, q=0.2, beta=0.1)
    lab = classify_case(p, derive_constants(p))
    assert (lab.sign_regime, lab.sub_case) == ("both-nonpositive", "none")


def _independent_case_predicates(p, c):
    """Evaluate every printed sub-case condition, bypassing classify_case."""

    def le(x, y):
        return x is not None and y is not None and x <= y

    def lt(x, y):
        return x is not None and y is not None and x < y

    def mn(*vals):
        if any(v is None for v in vals):
            return None
        return min(vals)

    a, cp, th = p.a, c.c_plus, c.Theta
    a1, a2, a3 = c.a1, c.a2, c.a3
    pos = cp > 0
    if p.mu_plus > 0 and p.mu_minus > 0:
        return {
            "i": (pos and le(a2, a) and le(a, a1))
            or (pos and le(a3, a) and le(a, mn(a1, a2)))
            or ((not pos) and th > 0 and le(a3, a) and le(a, a1)),
            "ii": (pos and le(a, mn(a1, a2, a3)))
            or ((not pos) and th <= 0 and le(a, a1))
            or ((not pos) and th > 0 and le(a, mn(a1, a3))),
            "iii": (pos and le(a1, a) and le(a2, a))
            or (pos and le(a1, a) and le(a3, a) and lt(a, a2))
            or ((not pos) and th > 0 and le(a1, a) and le(a3, a)),
            "iv": (pos and lt(a1, a) and lt(a, mn(a2, a3)))
            or ((not pos) and th <= 0 and lt(a1, a))
            or ((not pos) and th > 0 and lt(a1, a) and lt(a, a3)),
        }
    if p.mu_plus <= 0 and p.mu_minus <= 0:
        return {"none": True}
    if p.mu_plus <= 0:
        return {"a<=a1": le(a, a1), "a>a1": not le(a, a1)}
    return {
        "i": (pos and le(a2, a))
        or (pos and le(a3, a) and le(a, a2))
        or ((not pos) and th > 0 and le(a3, a)),
        "ii": (pos and lt(a, mn(a2, a3)))
        or ((not pos) and th <= 0)
        or ((not pos) and th > 0 and lt(a, a3)),
    }


def test_classification_unique_and_total():
    """200 random draws: exactly one sub-case fires, matching classify_case."""
    rng = np.random.default_rng(42)
    for _ in range(200):
        p = sample_any(rng)
        c = derive_constants(p)
        lab = classify_case(p, c)
        assert classify_case(p, c) == lab  # deterministic
        preds = _independent_case_predicates(p, c)
        fired = [k for k, v in preds.items() if v]
        assert fired == [lab.sub_case], (p, fired, lab)


def test_all_labels_reachable():
    sets = stratified_sets(1234, {lab: 1 for lab in LABELS})
    assert {(l.sign_regime, l.sub_case) for _, l in sets} == set(LABELS)


def test_profile_shapes():
    # both-positive case (ii): single breakpoint at the upper curvature root
    rng = np.random.default_rng(5)
    seen = set()
    for _ in range(3000):
        p = sample_any(rng)
        c = derive_constants(p)
        lab = classify_case(p, c)
        key = (lab.sign_regime, lab.sub_case)
        if key in seen:
            continue
        seen.add(key)
        prof = convexity_profile(p, c, lab)
        assert len(prof.signs) == len(prof.breakpoints) + 1
        assert all(b2 > b1 for b1, b2 in zip(prof.breakpoints, prof.breakpoints[1:]))
        if key == ("both-positive", "ii"):
            assert prof.breakpoints == (c.x0,) and prof.signs == (-1, 1)
        if key == ("both-nonpositive", "none"):
            assert prof.breakpoints == () and prof.signs == (1,)
        if key == ("both-positive", "iv"):
            assert prof.breakpoints == (c.a1, p.a, c.x0) and prof.signs == (-1, 1, -1, 1)
    assert len(seen) >= 7


def test_profile_matches_pointwise_curvature():
    """Sampled second-derivative signs agree with the declared profile."""
    rng = np.random.default_rng(17)
    checked = 0
    for _ in range(40):
        p = sample_any(rng)
        c = derive_constants(p)
        lab = classify_case(p, c)
        prof = convexity_profile(p, c, lab)
        ctx = build_context(p, c)
        hi = max(list(prof.breakpoints) + [p.a]) * 2.0 + 1.0
        edges = [0.0] + list(prof.breakpoints) + [hi]
        for i, (lo, up) in enumerate(zip(edges[:-1], edges[1:])):
            xs = np.linspace(lo, up, 1000)[1:-1]
            xs = xs[np.abs(xs - p.a) > 1e-9]
            for b in prof.breakpoints:
                xs = xs[np.abs(xs - b) > 1e-9]
            if len(xs) == 0:
                continue
            g2 = g_double_prime(ctx, xs)
            sign = prof.signs[i]
            assert np.all(sign * g2 > -1e-12 * np.maximum(1.0, np.abs(g2))), (p, lab, i)
            checked += 1
    assert checked > 50
