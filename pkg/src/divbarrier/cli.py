"""Command-line front end: solve | classify | verify | simulate | sweep | oracle.

Runs are driven by a JSON config file with nested sections (params, sim, grid,
sweep); command-line flags override file values.  Unknown config keys are
rejected.  Every JSON output embeds the fully resolved configuration, so any
output file alone reproduces its run.  Output files are written atomically
(temp file + rename).

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 verification
not proven (solve --strict only).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from .model import ModelParams, classify_case, derive_constants
from .oracle import ComparisonReport, GridSpec, compare_solver_oracle, default_grid
from .scale import build_context
from .sim import SimConfig, estimate_value_mc, simulate_controlled
from .solver import BarrierPair, NoBracketError, SolverError, solve_barriers
from .verify import build_value_function, check_conditions

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NOT_PROVEN = 4

SWEEP_AXES = ("beta", "a", "mu_minus", "sigma_minus", "mu_plus", "sigma_plus", "q")

_ALLOWED_SECTIONS = {
    "params": {"mu_plus", "mu_minus", "sigma_plus", "sigma_minus", "a", "q", "beta"},
    "sim": {"dt", "horizon", "n_paths", "seed", "antithetic", "store_paths", "x0"},
    "grid": {"z1_range", "z2_range", "n1", "n2", "refine_rounds"},
    "sweep": {"axis", "start", "stop", "steps"},
    "pair": {"z1", "z2"},
}


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    allowed_top = set(_ALLOWED_SECTIONS) | {"seed"}
    unknown = set(cfg) - allowed_top
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for section, allowed in _ALLOWED_SECTIONS.items():
        if section in cfg:
            if not isinstance(cfg[section], dict):
                raise ConfigError(f"config section {section!r} must be an object")
            bad = set(cfg[section]) - allowed
            if bad:
                raise ConfigError(f"unknown keys in config section {section!r}: {sorted(bad)}")
    return cfg


def _params_from(cfg: dict, args) -> ModelParams:
    section = dict(cfg.get("params", {}))
    if getattr(args, "beta", None) is not None:
        section["beta"] = args.beta
    try:
        return ModelParams.from_dict(section)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid model parameters: {e}") from e


def _sim_from(cfg: dict, args, params: ModelParams) -> tuple[SimConfig, Optional[float]]:
    section = dict(cfg.get("sim", {}))
    for key, attr in (("dt", "dt"), ("horizon", "horizon"), ("n_paths", "n_paths")):
        v = getattr(args, attr, None)
        if v is not None:
            section[key] = v
    seed = section.pop("seed", cfg.get("seed", 0))
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    x0 = section.pop("x0", None)
    if "horizon" not in section:
        section["horizon"] = max(20.0 / params.q, 50.0)
    try:
        sim = SimConfig(
            dt=float(section.get("dt", 1e-3)),
            horizon=float(section["horizon"]),
            n_paths=int(section.get("n_paths", 10000)),
            seed=int(seed),
            antithetic=bool(section.get("antithetic", False)),
            store_paths=bool(section.get("store_paths", False)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid sim config: {e}") from e
    return sim, (float(x0) if x0 is not None else None)


def _write_atomic(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, payload: dict) -> None:
    _write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    _write_atomic(path, buf.getvalue())


def _resolved(params: ModelParams, command: str, extra: dict) -> dict:
    return {"command": command, "params": params.to_dict(), **extra}


def _solve_payload(params: ModelParams):
    consts = derive_constants(params)
    ctx = build_context(params, consts)
    label = classify_case(params, consts)
    sol = solve_barriers(ctx, label)
    reports = [check_conditions(build_value_function(ctx, p)) for p in sol.pairs]
    consts_full = consts.with_levels(**{k: v for k, v in sol.levels.items()})
    return ctx, label, sol, reports, consts_full


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    params = _params_from(cfg, args)
    ctx, label, sol, reports, consts = _solve_payload(params)
    payload = {
        "config": _resolved(params, "solve", {"seed": args.seed, "strict": args.strict}),
        "case": {"sign_regime": label.sign_regime, "sub_case": label.sub_case},
        "constants": consts.to_dict(),
        "pairs": [{"z1": p.z1, "z2": p.z2, "zeta": p.zeta} for p in sol.pairs],
        "degenerate_triple": sol.degenerate_triple,
        "branch_trace": list(sol.branch_trace),
        "verification": [r.to_dict() for r in reports],
    }
    out = Path(args.out) / "solve.json"
    _write_json(out, payload)
    print(f"case: {label}")
    for p, r in zip(sol.pairs, reports):
        print(f"  z1={p.z1:.6f}  z2={p.z2:.6f}  zeta={p.zeta:.9g}  verdict={r.verdict}")
    print(f"wrote {out}")
    if args.strict and any(r.verdict != "optimal-proven" for r in reports):
        print("verification not proven; failing due to --strict", file=sys.stderr)
        return EXIT_NOT_PROVEN
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    params = _params_from(cfg, args)
    consts = derive_constants(params)
    label = classify_case(params, consts)
    payload = {
        "config": _resolved(params, "classify", {}),
        "case": {"sign_regime": label.sign_regime, "sub_case": label.sub_case},
        "constants": consts.to_dict(),
    }
    _write_json(Path(args.out) / "classify.json", payload)
    print(str(label))
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    params = _params_from(cfg, args)
    ctx = build_context(params)
    if "pair" in cfg:
        z1, z2 = float(cfg["pair"]["z1"]), float(cfg["pair"]["z2"])
        from .scale import g

        pair = BarrierPair(z1, z2, (z2 - z1 - params.beta) / (g(ctx, z2) - g(ctx, z1)))
        pairs, label = [pair], classify_case(params, ctx.consts)
    else:
        _, label, sol, _, _ = _solve_payload(params)
        pairs = list(sol.pairs)
    reports = [check_conditions(build_value_function(ctx, p)) for p in pairs]
    payload = {
        "config": _resolved(params, "verify", {"pair": cfg.get("pair")}),
        "case": {"sign_regime": label.sign_regime, "sub_case": label.sub_case},
        "pairs": [{"z1": p.z1, "z2": p.z2} for p in pairs],
        "reports": [r.to_dict() for r in reports],
    }
    _write_json(Path(args.out) / "verify.json", payload)
    for p, r in zip(pairs, reports):
        conds = [c for c, ok in (("a", r.condition_a), ("b", r.condition_b), ("c", r.condition_c)) if ok]
        print(f"(z1={p.z1:.6f}, z2={p.z2:.6f}): {r.verdict}"
              + (f" via condition {','.join(conds)}" if conds else ""))
        print(r.to_text())
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    params = _params_from(cfg, args)
    sim, x0 = _sim_from(cfg, args, params)
    if x0 is None:
        x0 = params.a
    _, label, sol, _, _ = _solve_payload(params)
    pair = sol.best
    est = estimate_value_mc(params, pair, sim, x0)
    payload = {
        "config": _resolved(params, "simulate", {"sim": sim.to_dict(), "x0": x0}),
        "case": {"sign_regime": label.sign_regime, "sub_case": label.sub_case},
        "pair": {"z1": pair.z1, "z2": pair.z2, "zeta": pair.zeta},
        "estimate": est.to_dict(),
    }
    _write_json(Path(args.out) / "simulate_estimate.json", payload)
    print(f"value estimate at x0={x0}: {est.mean:.6f} +- {1.96 * est.std_error:.6f} "
          f"(truncation bias <= {est.truncation_bias_bound:.3g})")
    if sim.store_paths:
        rows = []
        for pid, rec in enumerate(simulate_controlled(params, pair, sim, x0)):
            div_at = dict()
            for t, amt in rec.dividends:
                div_at[round(t / sim.dt)] = amt
            for k, (t, u) in enumerate(zip(rec.times, rec.surplus)):
                rows.append([
                    pid,
                    float(t),
                    float(u),
                    float(div_at.get(k, 0.0)),
                    "minus" if u <= params.a else "plus",
                ])
        out_csv = Path(args.out) / "paths.csv"
        _write_csv(out_csv, ["path_id", "time", "surplus", "dividend_amount", "regime"], rows)
        print(f"wrote {out_csv}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    params = _params_from(cfg, args)
    section = dict(cfg.get("sweep", {}))
    axis = args.axis or section.get("axis")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    start = args.start if args.start is not None else section.get("start")
    stop = args.stop if args.stop is not None else section.get("stop")
    steps = args.steps if args.steps is not None else section.get("steps")
    if start is None or stop is None or steps is None:
        raise ConfigError("sweep requires start, stop and steps")
    steps = int(steps)
    if steps < 2 or not (np.isfinite(start) and np.isfinite(stop)):
        raise ConfigError("sweep range must be finite with steps >= 2")
    values = np.linspace(float(start), float(stop), steps)
    rows = []
    for v in values:
        base = params.to_dict()
        base[axis] = float(v)
        try:
            p = ModelParams.from_dict(base)
            ctx, label, sol, reports, _ = _solve_payload(p)
        except (ValueError, SolverError) as e:
            rows.append([float(v), "", "", "", "", "", "", "", "", f"{type(e).__name__}: {e}"])
            continue
        for branch, (pair, rep) in enumerate(zip(sol.pairs, reports)):
            rows.append([
                float(v),
                branch,
                float(pair.z1),
                float(pair.z2),
                str(label),
                int(rep.condition_a),
                int(rep.condition_b),
                int(rep.condition_c),
                float(pair.zeta),
                "",
            ])
    out_csv = Path(args.out) / "sweep.csv"
    header = [axis, "branch", "z1", "z2", "case", "cond_a", "cond_b", "cond_c", "zeta", "error"]
    _write_csv(out_csv, header, rows)
    meta = {
        "config": _resolved(params, "sweep", {"axis": axis, "start": float(start),
                                              "stop": float(stop), "steps": steps}),
        "rows": len(rows),
    }
    _write_json(Path(args.out) / "sweep.json", meta)
    n_err = sum(1 for r in rows if r[-1])
    print(f"wrote {out_csv} ({len(rows)} rows, {n_err} errors)")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    params = _params_from(cfg, args)
    ctx, label, sol, _, _ = _solve_payload(params)
    gsec = cfg.get("grid", {})
    if gsec:
        spec = GridSpec(
            z1_range=tuple(gsec.get("z1_range", (0.0, sol.best.z2 * 2))),
            z2_range=tuple(gsec.get("z2_range", (0.0, sol.best.z2 * 2))),
            n1=int(gsec.get("n1", 400)),
            n2=int(gsec.get("n2", 400)),
            refine_rounds=int(gsec.get("refine_rounds", 3)),
        )
    else:
        spec = default_grid(ctx, label)
    rep: ComparisonReport = compare_solver_oracle(ctx, sol, spec)
    payload = {
        "config": _resolved(params, "oracle", {"grid": {
            "z1_range": list(spec.z1_range), "z2_range": list(spec.z2_range),
            "n1": spec.n1, "n2": spec.n2, "refine_rounds": spec.refine_rounds}}),
        "report": rep.to_dict(),
    }
    out = Path(args.out) / "oracle.json"
    _write_json(out, payload)
    print(f"{'PASS' if rep.agrees else 'FAIL'}: solver zeta {rep.zeta_solver:.9g} vs "
          f"oracle {rep.zeta_oracle:.9g}; report at {out}")
    return EXIT_OK if rep.agrees else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="divbarrier",
        description="Two-barrier impulse dividend solver for a threshold regime-switching diffusion",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--beta", type=float, default=None, help="override transaction cost")

    p = sub.add_parser("solve", help="compute the optimal barrier pair(s)")
    common(p)
    p.add_argument("--strict", action="store_true",
                   help="exit 4 unless optimality is proven")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("classify", help="print the parameter-regime case label")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="verify optimality conditions for a pair")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte-Carlo paths and value estimate")
    common(p)
    p.add_argument("--n-paths", dest="n_paths", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="solve along a parameter axis, write CSV")
    common(p)
    p.add_argument("--axis", choices=SWEEP_AXES, default=None)
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--stop", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="brute-force cross-check of the solver")
    common(p)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoBracketError, SolverError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        if getattr(e, "branch_trace", None):
            for line in e.branch_trace:
                print(f"  trace: {line}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
