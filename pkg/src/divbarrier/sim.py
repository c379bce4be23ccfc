"""Monte-Carlo engine for the controlled surplus process and exit problems.

Paths follow explicit Euler-Maruyama with the drift/volatility regime frozen
at each step's left endpoint (the "<= a" branch applies on ties).  Whenever a
post-diffusion state reaches the upper barrier z2, a dividend of state - z1 is
paid instantly and the path restarts at z1; the path ends at the first step
with negative state (ruin) or at the horizon.

Randomness is counter-based: stream i draws its normals from Philox keyed by
(seed, i), so path i is reproducible regardless of how many paths run or how
they are chunked.  With antithetic pairing, stream j drives paths 2j (+Z) and
2j+1 (-Z).  Both backends (numba kernels and the vectorized numpy fallback,
see _accel) consume the same pre-generated normals, so results agree exactly.

Time runs in blocks: finished paths stop drawing normals, which is where most
of the time goes on ruin- or exit-dominated workloads.

Sub-step barrier crossings are not corrected for (no Brownian bridge); the dt
sensitivity of every estimate is the caller's responsibility and the horizon
truncation bias bound is always reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from ._accel import NUMBA_ENABLED, njit, prange
from .model import ModelParams
from .scale import value_upper_bound
from .solver import BarrierPair

_STREAM_CHUNK = 1024   # streams simulated together
_BLOCK_STEPS = 2048    # time steps per normals block
_MAX_RECORD = 2**26    # cap on stored surplus samples in record mode


@dataclass(frozen=True)
class SimConfig:
    """Discretization, path count and reproducibility knobs."""

    dt: float
    horizon: float
    n_paths: int
    seed: int = 0
    antithetic: bool = False
    store_paths: bool = False

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.horizon >= self.dt:
            raise ValueError(f"horizon must be >= dt, got {self.horizon}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.antithetic and self.n_paths % 2 != 0:
            raise ValueError("antithetic pairing requires an even n_paths")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-12))

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "horizon": self.horizon,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "antithetic": self.antithetic,
            "store_paths": self.store_paths,
        }


@dataclass(frozen=True)
class PathRecord:
    """One simulated controlled path (post-impulse surplus at each grid time)."""

    times: np.ndarray
    surplus: np.ndarray
    dividends: tuple[tuple[float, float], ...]  # (time, amount)
    ruin_time: Optional[float]


@dataclass(frozen=True)
class MCEstimate:
    """Monte-Carlo mean with its error bars and accounting."""

    mean: float
    std_error: float
    ci95: tuple[float, float]
    n_paths: int
    n_steps: int
    truncation_bias_bound: float

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "ci95_lo": self.ci95[0],
            "ci95_hi": self.ci95[1],
            "n_paths": self.n_paths,
            "n_steps": self.n_steps,
            "truncation_bias_bound": self.truncation_bias_bound,
        }


def _make_generators(seed: int, streams: range) -> list[np.random.Generator]:
    key = seed & (2**64 - 1)
    return [np.random.Generator(np.random.Philox(key=[key, s])) for s in streams]


# ---------------------------------------------------------------------------
# resumable kernels: numba scalar loops and equivalent vectorized numpy ones.
# State arrays are aligned with the normals rows; step index k0+k addresses
# the absolute discount table.
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _value_block_numba(u, s, ruin, k0, z1, z2, cost, a, mu_m_dt, mu_p_dt, vol_m, vol_p,
                       normals, disc):
    n, m = normals.shape
    for i in prange(n):
        ui = u[i]
        si = s[i]
        r = -1
        for k in range(m):
            if ui <= a:
                ui = (ui + mu_m_dt) + vol_m * normals[i, k]
            else:
                ui = (ui + mu_p_dt) + vol_p * normals[i, k]
            if ui < 0.0:
                r = k0 + k
                break
            if ui >= z2:
                si += disc[k0 + k] * ((ui - z1) - cost)
                ui = z1
        u[i] = ui
        s[i] = si
        ruin[i] = r


def _value_block_numpy(u, s, ruin, k0, z1, z2, cost, a, mu_m_dt, mu_p_dt, vol_m, vol_p,
                       normals, disc):
    n, m = normals.shape
    alive = np.ones(n, dtype=bool)
    ruin[:] = -1
    for k in range(m):
        if not alive.any():
            break
        below = u <= a
        drift = np.where(below, mu_m_dt, mu_p_dt)
        vol = np.where(below, vol_m, vol_p)
        u[alive] = (u[alive] + drift[alive]) + vol[alive] * normals[alive, k]
        ruined = alive & (u < 0.0)
        ruin[ruined] = k0 + k
        alive &= ~ruined
        pay = alive & (u >= z2)
        if pay.any():
            s[pay] += disc[k0 + k] * ((u[pay] - z1) - cost)
            u[pay] = z1


@njit(cache=True, parallel=True)
def _exit_block_numba(u, status, out, k0, y, z, a, mu_m_dt, mu_p_dt, vol_m, vol_p,
                      normals, disc):
    # status: 0 active, 1 exited down, 2 exited up
    n, m = normals.shape
    for i in prange(n):
        ui = u[i]
        st = 0
        val = 0.0
        for k in range(m):
            if ui <= a:
                ui = (ui + mu_m_dt) + vol_m * normals[i, k]
            else:
                ui = (ui + mu_p_dt) + vol_p * normals[i, k]
            if ui <= y:
                st = 1
                val = disc[k0 + k]
                break
            if ui >= z:
                st = 2
                val = disc[k0 + k]
                break
        u[i] = ui
        status[i] = st
        out[i] = val


def _exit_block_numpy(u, status, out, k0, y, z, a, mu_m_dt, mu_p_dt, vol_m, vol_p,
                      normals, disc):
    n, m = normals.shape
    alive = np.ones(n, dtype=bool)
    status[:] = 0
    out[:] = 0.0
    for k in range(m):
        if not alive.any():
            break
        below = u <= a
        drift = np.where(below, mu_m_dt, mu_p_dt)
        vol = np.where(below, vol_m, vol_p)
        u[alive] = (u[alive] + drift[alive]) + vol[alive] * normals[alive, k]
        hit_down = alive & (u <= y)
        status[hit_down] = 1
        out[hit_down] = disc[k0 + k]
        hit_up = alive & ~hit_down & (u >= z)
        status[hit_up] = 2
        out[hit_up] = disc[k0 + k]
        alive &= ~(hit_down | hit_up)


@njit(cache=True)
def _record_kernel_numba(u0, z1, z2, a, mu_m_dt, mu_p_dt, vol_m, vol_p, normals, surplus,
                         divs, ruin_step):
    n, m = normals.shape
    for i in range(n):
        u = u0
        surplus[i, 0] = u
        ruin_step[i] = -1
        for k in range(m):
            if u <= a:
                u = (u + mu_m_dt) + vol_m * normals[i, k]
            else:
                u = (u + mu_p_dt) + vol_p * normals[i, k]
            if u < 0.0:
                surplus[i, k + 1] = u
                ruin_step[i] = k
                break
            if u >= z2:
                divs[i, k] = u - z1
                u = z1
            surplus[i, k + 1] = u


def _record_kernel_numpy(u0, z1, z2, a, mu_m_dt, mu_p_dt, vol_m, vol_p, normals, surplus,
                         divs, ruin_step):
    n, m = normals.shape
    u = np.full(n, u0)
    alive = np.ones(n, dtype=bool)
    surplus[:, 0] = u
    ruin_step[:] = -1
    for k in range(m):
        unew = u.copy()
        unew[alive] = (u[alive] + np.where(u[alive] <= a, mu_m_dt, mu_p_dt)) + np.where(
            u[alive] <= a, vol_m, vol_p
        ) * normals[alive, k]
        ruined = alive & (unew < 0.0)
        ruin_step[ruined] = k
        pay = alive & ~ruined & (unew >= z2)
        if pay.any():
            divs[pay, k] = unew[pay] - z1
            unew[pay] = z1
        surplus[:, k + 1] = np.where(alive, unew, surplus[:, k])
        u = unew
        alive &= ~ruined


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


def _coeffs(params: ModelParams, dt: float):
    sqdt = math.sqrt(dt)
    return (
        params.mu_minus * dt,
        params.mu_plus * dt,
        params.sigma_minus * sqdt,
        params.sigma_plus * sqdt,
    )


def _discounts(q: float, dt: float, n_steps: int) -> np.ndarray:
    return np.exp(-q * dt * (np.arange(n_steps, dtype=float) + 1.0))


def _fsum_mean_se(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _run_value_streams(params: ModelParams, pair: BarrierPair, cfg: SimConfig,
                       u0: float, n_streams: int, antithetic: bool) -> np.ndarray:
    """Per-stream discounted dividend sums; antithetic returns pair averages."""
    n_steps = cfg.n_steps
    mu_m_dt, mu_p_dt, vol_m, vol_p = _coeffs(params, cfg.dt)
    disc = _discounts(params.q, cfg.dt, n_steps)
    kernel = _value_block_numba if NUMBA_ENABLED else _value_block_numpy
    out = np.empty(n_streams)
    pos = 0
    while pos < n_streams:
        c = min(_STREAM_CHUNK, n_streams - pos)
        gens = _make_generators(cfg.seed, range(pos, pos + c))
        nsigns = 2 if antithetic else 1
        u = np.full((nsigns, c), u0)
        s = np.zeros((nsigns, c))
        done = np.zeros((nsigns, c), dtype=bool)
        k0 = 0
        while k0 < n_steps:
            m = min(_BLOCK_STEPS, n_steps - k0)
            stream_alive = ~done.all(axis=0)
            idx = np.nonzero(stream_alive)[0]
            if len(idx) == 0:
                break
            normals = np.empty((len(idx), m))
            for row, j in enumerate(idx):
                normals[row] = gens[j].standard_normal(m)
            for sign in range(nsigns):
                rows = np.nonzero(~done[sign, idx])[0]
                if len(rows) == 0:
                    continue
                sub = idx[rows]
                block = normals[rows] if sign == 0 else -normals[rows]
                ub = u[sign, sub].copy()
                sb = s[sign, sub].copy()
                rb = np.empty(len(sub), dtype=np.int64)
                kernel(ub, sb, rb, k0, pair.z1, pair.z2, params.beta, params.a,
                       mu_m_dt, mu_p_dt, vol_m, vol_p, block, disc)
                u[sign, sub] = ub
                s[sign, sub] = sb
                done[sign, sub] |= rb >= 0
            k0 += m
        out[pos:pos + c] = s.mean(axis=0)
        pos += c
    return out


def estimate_value_mc(
    params: ModelParams, pair: BarrierPair, cfg: SimConfig, x0: float
) -> MCEstimate:
    """Expected discounted net dividends until ruin, truncated at the horizon."""
    if x0 < 0.0:
        raise ValueError(f"initial surplus must be >= 0, got {x0}")
    if pair.z2 - pair.z1 <= params.beta:
        raise ValueError("strategy pays nonpositive net dividends (z2 - z1 <= beta)")
    init = 0.0
    u0 = x0
    if x0 >= pair.z2:
        init = x0 - pair.z1 - params.beta
        u0 = pair.z1
    if cfg.antithetic:
        vals = init + _run_value_streams(params, pair, cfg, u0, cfg.n_paths // 2, True)
    else:
        vals = init + _run_value_streams(params, pair, cfg, u0, cfg.n_paths, False)
    mean, se = _fsum_mean_se(vals)
    bias = math.exp(-params.q * cfg.horizon) * float(value_upper_bound(params, pair.z2))
    return MCEstimate(
        mean=mean,
        std_error=se,
        ci95=(mean - 1.96 * se, mean + 1.96 * se),
        n_paths=cfg.n_paths,
        n_steps=cfg.n_steps,
        truncation_bias_bound=bias,
    )


def estimate_exit_both(
    params: ModelParams, cfg: SimConfig, x: float, y: float, z: float
) -> tuple[MCEstimate, MCEstimate]:
    """(down, up) discounted exit estimates from one set of simulated paths."""
    if not (y <= x <= z) or y == z:
        raise ValueError(f"exit arguments must satisfy y <= x <= z, y != z; got {x}, {y}, {z}")
    bias = math.exp(-params.q * cfg.horizon)
    if x == y or x == z:
        vd, vu = (1.0, 0.0) if x == y else (0.0, 1.0)
        return (
            MCEstimate(vd, 0.0, (vd, vd), cfg.n_paths, 0, 0.0),
            MCEstimate(vu, 0.0, (vu, vu), cfg.n_paths, 0, 0.0),
        )
    n_steps = cfg.n_steps
    mu_m_dt, mu_p_dt, vol_m, vol_p = _coeffs(params, cfg.dt)
    disc = _discounts(params.q, cfg.dt, n_steps)
    kernel = _exit_block_numba if NUMBA_ENABLED else _exit_block_numpy
    antithetic = cfg.antithetic
    n_streams = cfg.n_paths // 2 if antithetic else cfg.n_paths
    vals_dn = np.empty(n_streams)
    vals_up = np.empty(n_streams)
    pos = 0
    while pos < n_streams:
        c = min(_STREAM_CHUNK, n_streams - pos)
        gens = _make_generators(cfg.seed, range(pos, pos + c))
        nsigns = 2 if antithetic else 1
        u = np.full((nsigns, c), float(x))
        res_dn = np.zeros((nsigns, c))
        res_up = np.zeros((nsigns, c))
        st = np.zeros((nsigns, c), dtype=np.int64)
        k0 = 0
        while k0 < n_steps:
            m = min(_BLOCK_STEPS, n_steps - k0)
            stream_alive = (st == 0).any(axis=0)
            idx = np.nonzero(stream_alive)[0]
            if len(idx) == 0:
                break
            normals = np.empty((len(idx), m))
            for row, j in enumerate(idx):
                normals[row] = gens[j].standard_normal(m)
            for sign in range(nsigns):
                rows = np.nonzero(st[sign, idx] == 0)[0]
                if len(rows) == 0:
                    continue
                sub = idx[rows]
                block = normals[rows] if sign == 0 else -normals[rows]
                ub = u[sign, sub].copy()
                stb = np.empty(len(sub), dtype=np.int64)
                ob = np.empty(len(sub))
                kernel(ub, stb, ob, k0, y, z, params.a, mu_m_dt, mu_p_dt, vol_m, vol_p,
                       block, disc)
                u[sign, sub] = ub
                st[sign, sub] = stb
                res_dn[sign, sub] = np.where(stb == 1, ob, res_dn[sign, sub])
                res_up[sign, sub] = np.where(stb == 2, ob, res_up[sign, sub])
            k0 += m
        vals_dn[pos:pos + c] = res_dn.mean(axis=0)
        vals_up[pos:pos + c] = res_up.mean(axis=0)
        pos += c

    def _wrap(vals: np.ndarray) -> MCEstimate:
        mean, se = _fsum_mean_se(vals)
        return MCEstimate(
            mean=mean,
            std_error=se,
            ci95=(mean - 1.96 * se, mean + 1.96 * se),
            n_paths=cfg.n_paths,
            n_steps=n_steps,
            truncation_bias_bound=bias,
        )

    return _wrap(vals_dn), _wrap(vals_up)


def estimate_exit_mc(
    params: ModelParams, cfg: SimConfig, x: float, y: float, z: float, side: str = "down"
) -> MCEstimate:
    """MC estimate of the discounted two-sided exit functional from the corridor [y, z].

    side="down" estimates E_x[e^{-q T_y}; T_y < T_z]; side="up" the mirrored one.
    """
    if side not in ("down", "up"):
        raise ValueError(f"side must be 'down' or 'up', got {side!r}")
    down, up = estimate_exit_both(params, cfg, x, y, z)
    return down if side == "down" else up


def simulate_controlled(
    params: ModelParams, pair: BarrierPair, cfg: SimConfig, x0: float
) -> Iterator[PathRecord]:
    """Simulate the controlled surplus under the (z1, z2) strategy, one record per path."""
    if x0 < 0.0:
        raise ValueError(f"initial surplus must be >= 0, got {x0}")
    n_steps = cfg.n_steps
    if cfg.n_paths * (n_steps + 1) > _MAX_RECORD:
        raise ValueError(
            f"path recording of {cfg.n_paths} x {n_steps + 1} samples exceeds the memory cap; "
            "reduce n_paths/horizon or use estimate_value_mc"
        )
    mu_m_dt, mu_p_dt, vol_m, vol_p = _coeffs(params, cfg.dt)
    init_div = None
    u0 = x0
    if x0 >= pair.z2:
        init_div = (0.0, x0 - pair.z1)
        u0 = pair.z1
    times = cfg.dt * np.arange(n_steps + 1)
    kernel = _record_kernel_numba if NUMBA_ENABLED else _record_kernel_numpy
    chunk = 256
    produced = 0
    stream = 0
    while produced < cfg.n_paths:
        n_here = min(chunk, cfg.n_paths - produced)
        if cfg.antithetic:
            n_here -= n_here % 2
            n_here = max(n_here, 2)
            n_streams = n_here // 2
            base = np.empty((n_streams, n_steps))
            for j, gen in enumerate(_make_generators(cfg.seed, range(stream, stream + n_streams))):
                base[j] = gen.standard_normal(n_steps)
            normals = np.empty((n_here, n_steps))
            normals[0::2] = base
            normals[1::2] = -base
            stream += n_streams
        else:
            normals = np.empty((n_here, n_steps))
            for j, gen in enumerate(_make_generators(cfg.seed, range(stream, stream + n_here))):
                normals[j] = gen.standard_normal(n_steps)
            stream += n_here
        surplus = np.empty((n_here, n_steps + 1))
        divs = np.zeros((n_here, n_steps))
        ruin_step = np.empty(n_here, dtype=np.int64)
        kernel(u0, pair.z1, pair.z2, params.a, mu_m_dt, mu_p_dt, vol_m, vol_p,
               normals, surplus, divs, ruin_step)
        for i in range(n_here):
            r = int(ruin_step[i])
            end = n_steps if r < 0 else r + 1
            evs = [] if init_div is None else [init_div]
            nz = np.nonzero(divs[i, :end])[0]
            evs.extend((float(times[k + 1]), float(divs[i, k])) for k in nz)
            yield PathRecord(
                times=times[: end + 1].copy(),
                surplus=surplus[i, : end + 1].copy(),
                dividends=tuple(evs),
                ruin_time=None if r < 0 else float(times[r + 1]),
            )
        produced += n_here
