"""Brute-force lattice maximization of zeta, independent of the case analysis.

Scans zeta(z1, z2) = (z2 - z1 - beta)/(g(z2) - g(z1)) on a rectangular
lattice over the feasible region z1 + beta <= z2, then zooms on the top cells
a few times.  Used to validate the closed-form solver without sharing any of
its branch logic; only the scale function itself is reused.

Resolution caveat: on extremely ill-conditioned landscapes (scale-function
dynamic range near the float64 limit), the objective can form a ridge
narrower than any coarse cell, which zooming cannot recover; the comparison
then reports an argmax mismatch even though the solver's value is higher.
Within the intended parameter envelope the default lattice is ample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import CaseLabel
from .scale import ScaleContext, g
from .solver import BarrierSolutionSet, upper_search_bound

NEAR_TIE_REL = 1e-6  # relative zeta gap treated as a tie between lattice cells


@dataclass(frozen=True)
class GridSpec:
    """Lattice layout for the brute-force search."""

    z1_range: tuple[float, float]
    z2_range: tuple[float, float]
    n1: int = 400
    n2: int = 400
    refine_rounds: int = 3

    def __post_init__(self):
        if self.z1_range[0] < 0 or self.z2_range[0] < 0:
            raise ValueError("grid ranges must lie in [0, inf)")
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be >= 0")


def default_grid(ctx: ScaleContext, label: Optional[CaseLabel] = None) -> GridSpec:
    z0 = upper_search_bound(ctx, label)
    return GridSpec(z1_range=(0.0, max(z0 - ctx.params.beta, 0.0)), z2_range=(0.0, z0))


@dataclass(frozen=True)
class OracleResult:
    """Best lattice pair(s) and the refinement bookkeeping."""

    pairs: tuple[tuple[float, float], ...]  # near-tie (z1, z2) cells, best first
    zeta: float
    spacing: tuple[float, float]  # final grid spacing (dz1, dz2)
    trace: tuple[str, ...]


def _zeta_matrix(ctx: ScaleContext, z1s: np.ndarray, z2s: np.ndarray) -> np.ndarray:
    beta = ctx.params.beta
    g1 = g(ctx, z1s)
    g2 = g(ctx, z2s)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        num = z2s[None, :] - z1s[:, None] - beta
        den = g2[None, :] - g1[:, None]
        zeta = num / den
    zeta[num < 0.0] = -np.inf  # infeasible: z2 < z1 + beta
    zeta[den <= 0.0] = -np.inf  # saturated/underflowed scale values
    zeta[~np.isfinite(zeta)] = -np.inf  # keep NaN cells out of the argsort top
    return zeta


def grid_maximize_zeta(ctx: ScaleContext, spec: GridSpec) -> OracleResult:
    """Coarse scan plus top-k zoom refinement of the zeta lattice."""
    beta = ctx.params.beta
    z1_lo, z1_hi = spec.z1_range
    z2_lo, z2_hi = spec.z2_range
    trace = []
    best_windows = [(z1_lo, z1_hi, z2_lo, z2_hi)]
    top_k = 5  # enough to keep twin maximizers alive through the zooms
    result_cells: list[tuple[float, float, float]] = []

    for rnd in range(spec.refine_rounds + 1):
        cells: list[tuple[float, float, float]] = []  # (zeta, z1, z2)
        for w1lo, w1hi, w2lo, w2hi in best_windows:
            z1s = np.linspace(w1lo, w1hi, spec.n1)
            z2s = np.linspace(w2lo, w2hi, spec.n2)
            zmat = _zeta_matrix(ctx, z1s, z2s)
            flat = zmat.ravel()
            if not np.isfinite(flat).any():
                continue
            order = np.argsort(flat)[::-1][: top_k * 4]  # finite cells only, NaN mapped to -inf
            for idx in order:
                i, j = np.unravel_index(idx, zmat.shape)
                if np.isfinite(zmat[i, j]):
                    cells.append((float(zmat[i, j]), float(z1s[i]), float(z2s[j])))
        if not cells:
            raise ValueError("empty feasible grid: no lattice point satisfies z1 + beta <= z2")
        cells.sort(key=lambda c: -c[0])
        # keep top-k distinct cells (distinct = separated by more than a cell)
        d1 = (z1_hi - z1_lo) / (spec.n1 - 1) / (10.0**rnd)
        d2 = (z2_hi - z2_lo) / (spec.n2 - 1) / (10.0**rnd)
        distinct: list[tuple[float, float, float]] = []
        for zeta, z1, z2 in cells:
            if all(abs(z1 - u1) > 2 * d1 or abs(z2 - u2) > 2 * d2 for _, u1, u2 in distinct):
                distinct.append((zeta, z1, z2))
            if len(distinct) >= top_k:
                break
        trace.append(
            f"round {rnd}: best zeta={distinct[0][0]:.12g} at "
            f"({distinct[0][1]:.9g}, {distinct[0][2]:.9g}), {len(distinct)} candidate cells"
        )
        result_cells = distinct
        if rnd == spec.refine_rounds:
            break
        best_windows = []
        for _, z1, z2 in distinct:
            best_windows.append(
                (
                    max(z1 - 2 * d1, 0.0),
                    z1 + 2 * d1,
                    max(z2 - 2 * d2, beta),
                    min(z2 + 2 * d2, z2_hi),
                )
            )

    zbest = result_cells[0][0]
    ties = [
        (z1, z2) for zeta, z1, z2 in result_cells if zeta >= zbest - NEAR_TIE_REL * abs(zbest)
    ]
    final_d1 = (z1_hi - z1_lo) / (spec.n1 - 1) / (10.0**spec.refine_rounds)
    final_d2 = (z2_hi - z2_lo) / (spec.n2 - 1) / (10.0**spec.refine_rounds)
    return OracleResult(tuple(ties), zbest, (final_d1, final_d2), tuple(trace))


@dataclass(frozen=True)
class ComparisonReport:
    """Solver-vs-oracle agreement record."""

    zeta_solver: float
    zeta_oracle: float
    argmax_dz1: float
    argmax_dz2: float
    spacing: tuple[float, float]
    agrees: bool
    detail: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "zeta_solver": self.zeta_solver,
            "zeta_oracle": self.zeta_oracle,
            "argmax_dz1": self.argmax_dz1,
            "argmax_dz2": self.argmax_dz2,
            "spacing_z1": self.spacing[0],
            "spacing_z2": self.spacing[1],
            "agrees": self.agrees,
            **self.detail,
        }


def compare_solver_oracle(
    ctx: ScaleContext, solution: BarrierSolutionSet, spec: Optional[GridSpec] = None
) -> ComparisonReport:
    """Check that the solver's zeta is globally maximal and its argmax matches.

    The solver must not be beaten by more than the tie slack, and some oracle
    cell must sit within a few final-grid spacings of a returned pair.
    """
    if spec is None:
        spec = default_grid(ctx, solution.case)
    res = grid_maximize_zeta(ctx, spec)
    zs = solution.best.zeta
    zo = res.zeta
    not_beaten = zs >= zo - NEAR_TIE_REL * abs(zs)
    d1, d2 = res.spacing
    dz1 = dz2 = float("inf")
    for oz1, oz2 in res.pairs:
        for p in solution.pairs:
            if abs(p.z1 - oz1) + abs(p.z2 - oz2) < dz1 + dz2:
                dz1, dz2 = abs(p.z1 - oz1), abs(p.z2 - oz2)
    argmax_ok = dz1 <= 3 * d1 + 1e-9 and dz2 <= 3 * d2 + 1e-9
    return ComparisonReport(
        zeta_solver=zs,
        zeta_oracle=zo,
        argmax_dz1=dz1,
        argmax_dz2=dz2,
        spacing=(d1, d2),
        agrees=bool(not_beaten and argmax_ok),
        detail={"oracle_pairs": res.pairs, "solver_pairs": [(p.z1, p.z2) for p in solution.pairs]},
    )
