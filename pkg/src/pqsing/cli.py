"""Command line driver: JSON config in, certificates and CSV profiles out.

Exit codes carry the verdict so runs can be scripted:

    0   every certificate the command requested passed
    1   a certificate failed (including positivity loss and failed
        nonlinearity assumptions)
    2   the config did not validate (schema, types, parameter ranges)
    3   a solve or search did not converge within its budget

Outputs are deterministic byte-for-byte for a fixed config: JSON is written
sorted with two-space indent, CSV numbers with repr-faithful %.17g, rows in
a fixed order (sweeps ascend in lambda), and the only random element (the
third-solution probe) runs under the seed from the config.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import discrete_solver as ds
from .barrier import (
    certify_smallest_exponent,
    conservation_residual,
    minimal_M,
    certify_barrier_supersolution,
    solve_barrier,
)
from .errors import (
    BridgeNotMonotone,
    ConfigurationError,
    ConvergenceFailure,
    EmptyThetaRange,
    PositivityLoss,
    SearchExhausted,
)
from .grid import GridFunction
from .nonlinearity import NonlinearitySpec, build_h, validate
from .parameter_window import compute_window
from .pq_core import Params
from .radial_solver import certify_radial_claim, solve_radial

__all__ = ["main", "run"]

_SCHEMA = "v1"

_SECTIONS = {
    "schema": None,
    "params": {"p", "q", "gamma", "dim", "radius", "lambda"},
    "nonlinearity": {"kind", "theta1", "theta2", "khat", "k", "m",
                     "table_t", "table_f"},
    "grid": {"n"},
    "window": {"chi", "kappa", "theta"},
    "barrier": {"tau", "n", "p", "nu"},
    "tolerances": {"solver", "certify", "conv_factor", "budget"},
    "output": {"dir"},
    "sweep": {"count"},
    "seed": None,
}


def _fail(msg: str):
    raise ConfigurationError(msg)


def _number(cfg: dict, section: str, key: str, default=None, required=False,
            integer=False, allow_null=False):
    if key not in cfg:
        if required:
            _fail(f"{section}.{key} is required")
        return default
    v = cfg[key]
    if v is None:
        if allow_null:
            return None
        _fail(f"{section}.{key} must not be null")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(f"{section}.{key} must be a number, got {v!r}")
    if integer and int(v) != v:
        _fail(f"{section}.{key} must be an integer, got {v!r}")
    return int(v) if integer else float(v)


def _check_keys(section: str, obj, allowed):
    if not isinstance(obj, dict):
        _fail(f"section {section!r} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        _fail(f"unknown key(s) in {section}: {', '.join(sorted(unknown))}")


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        _fail(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(f"config {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        _fail("top-level config must be an object")
    unknown = set(cfg) - set(_SECTIONS)
    if unknown:
        _fail(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    if cfg.get("schema") != _SCHEMA:
        _fail(f"schema must be {_SCHEMA!r}, got {cfg.get('schema')!r}")
    for name, allowed in _SECTIONS.items():
        if allowed is not None and name in cfg:
            _check_keys(name, cfg[name], allowed)
    if "params" not in cfg or "nonlinearity" not in cfg:
        _fail("config needs 'params' and 'nonlinearity' sections")
    return cfg


def _build_spec(cfg: dict) -> NonlinearitySpec:
    nl = cfg["nonlinearity"]
    kind = nl.get("kind")
    if kind not in ("exp_saturating", "power", "table"):
        _fail(f"nonlinearity.kind must be one of exp_saturating/power/table, got {kind!r}")
    kw = dict(
        kind=kind,
        theta1=_number(nl, "nonlinearity", "theta1", required=True),
        theta2=_number(nl, "nonlinearity", "theta2", required=True),
        khat=_number(nl, "nonlinearity", "khat", default=0.0),
    )
    if kind == "exp_saturating":
        kw["k"] = _number(nl, "nonlinearity", "k", required=True)
    elif kind == "power":
        kw["m"] = _number(nl, "nonlinearity", "m", required=True)
    else:
        for key in ("table_t", "table_f"):
            col = nl.get(key)
            if not isinstance(col, list) or not col or any(
                    isinstance(x, bool) or not isinstance(x, (int, float)) for x in col):
                _fail(f"nonlinearity.{key} must be a non-empty list of numbers")
        kw["table_t"] = tuple(float(x) for x in nl["table_t"])
        kw["table_f"] = tuple(float(x) for x in nl["table_f"])
    try:
        return NonlinearitySpec(**kw)
    except ValueError as exc:
        _fail(str(exc))


@dataclasses.dataclass
class _Env:
    """Everything a command needs, resolved from one config."""

    cfg: dict
    spec: NonlinearitySpec
    params0: Params          # lam = 0, for the lambda-independent window
    window: object
    lam: float
    params: Params
    reactions: object
    n: int
    outdir: Path
    seed: int
    tol_solver: float
    tol_certify: float | None
    conv_factor: float
    budget: int


def _build_env(cfg: dict, out=None, nodes=None, lam_flag=None, seed=None) -> _Env:
    pc = cfg["params"]
    p = _number(pc, "params", "p", required=True)
    q = _number(pc, "params", "q", required=True)
    gamma = _number(pc, "params", "gamma", required=True)
    dim = _number(pc, "params", "dim", required=True, integer=True)
    radius = _number(pc, "params", "radius", required=True)
    lam_cfg = _number(pc, "params", "lambda", default=None, allow_null=True)

    spec = _build_spec(cfg)
    grid_cfg = cfg.get("grid", {})
    n = nodes if nodes is not None else _number(grid_cfg, "grid", "n",
                                                default=2048, integer=True)
    if n < 8:
        _fail(f"grid.n must be at least 8, got {n}")

    tol = cfg.get("tolerances", {})
    tol_solver = _number(tol, "tolerances", "solver", default=1e-12)
    tol_certify = _number(tol, "tolerances", "certify", default=None, allow_null=True)
    conv_factor = _number(tol, "tolerances", "conv_factor", default=1e-8)
    budget = _number(tol, "tolerances", "budget", default=200, integer=True)

    try:
        params0 = Params(p=p, q=q, gamma=gamma, dim=dim, radius=radius, lam=0.0)
    except ValueError as exc:
        _fail(str(exc))
    wc = cfg.get("window", {})
    chi = _number(wc, "window", "chi", default=1.01)
    kappa = _number(wc, "window", "kappa", default=1.01)
    theta = _number(wc, "window", "theta", default=None, allow_null=True)
    reactions0 = build_h(spec, params0)
    window = compute_window(params0, spec, reactions0, chi=chi, kappa=kappa, theta=theta)

    if lam_flag is not None:
        lam = float(lam_flag)
    elif lam_cfg is not None:
        lam = lam_cfg
    else:
        lam = window.midpoint
    if lam < 0.0:
        _fail(f"lambda must be nonnegative, got {lam}")
    params = dataclasses.replace(params0, lam=lam)
    reactions = build_h(spec, params)

    outdir = Path(out if out is not None else cfg.get("output", {}).get("dir", "."))
    if not isinstance(outdir, Path):
        outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    seed_val = seed if seed is not None else cfg.get("seed", 0)
    if isinstance(seed_val, bool) or not isinstance(seed_val, int):
        _fail(f"seed must be an integer, got {seed_val!r}")

    return _Env(cfg=cfg, spec=spec, params0=params0, window=window, lam=lam,
                params=params, reactions=reactions, n=int(n), outdir=outdir,
                seed=int(seed_val), tol_solver=tol_solver, tol_certify=tol_certify,
                conv_factor=conv_factor, budget=int(budget))


# ---------------------------------------------------------------------------
# deterministic writers / readers
# ---------------------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2))
        fh.write("\n")


def _write_csv(path: Path, names, columns) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*columns):
            fh.write(",".join("%.17g" % float(v) for v in row) + "\n")


def _read_grid_function(path: str) -> GridFunction:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline()
            if not header:
                _fail(f"{path} is empty")
            rows = [line.split(",") for line in fh if line.strip()]
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}")
    try:
        nodes = np.array([float(r[0]) for r in rows])
        values = np.array([float(r[1]) for r in rows])
    except (ValueError, IndexError):
        _fail(f"{path} must contain at least two numeric columns")
    if nodes.size < 4:
        _fail(f"{path} holds fewer than 4 rows")
    return GridFunction(nodes, values)


def _print(result: dict) -> None:
    sys.stdout.write(json.dumps(result, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_window(env: _Env) -> int:
    report = env.window.as_dict()
    _write_json(env.outdir / "window.json", report)
    _print(report)
    return 0 if env.window.nonempty else 1


def _radial(env: _Env):
    profile = solve_radial(env.params, env.reactions, env.window, n=env.n)
    cert = certify_radial_claim(profile, env.params, env.window)
    return profile, cert


def _cmd_radial(env: _Env) -> int:
    profile, cert = _radial(env)
    _write_csv(env.outdir / "radial.csv",
               ("r", "phi", "phi_prime", "v", "v_prime"),
               (profile.phi.nodes, profile.phi.values, profile.phi_prime.values,
                profile.v.values, profile.v_prime.values))
    report = {
        "lambda": env.lam,
        "n": env.n,
        "sup_phi": profile.phi.sup_norm(),
        "certificate": cert.summary(),
    }
    _write_json(env.outdir / "radial.json", report)
    _print(report)
    return 0 if cert.passed else 1


def _cmd_barrier(env: _Env) -> int:
    bc = env.cfg.get("barrier", {})
    tau = _number(bc, "barrier", "tau", default=1.0)
    nbar = _number(bc, "barrier", "n", default=10_000, integer=True)
    p_low = _number(bc, "barrier", "p", default=env.params.p)
    nu = _number(bc, "barrier", "nu", default=None, allow_null=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # blow-down truncation is expected
        profile = solve_barrier(tau, env.params.q, env.params.gamma,
                                r_max=env.params.radius, n=nbar)
    audit = conservation_residual(profile)
    exp_cert = certify_smallest_exponent(profile, p_low)
    M = minimal_M(env.lam, 1.0, env.params.q, env.params.gamma)
    sup_cert = certify_barrier_supersolution(profile, env.params, M, nu=nu)
    _write_csv(env.outdir / "barrier.csv", ("s", "xi", "xi_prime"),
               (profile.xi.nodes, profile.xi.values, profile.xi_prime.values))
    report = {
        "tau": tau,
        "R_tau": profile.R_tau,
        "conservation_residual": float(audit),
        "smallest_exponent": exp_cert.summary(),
        "supersolution": sup_cert.summary(),
        "M_lambda": float(M),
    }
    _write_json(env.outdir / "barrier.json", report)
    _print(report)
    return 0 if (exp_cert.passed and sup_cert.passed) else 1


def _pairs(env: _Env):
    if not validate(env.spec, env.params).ok:
        raise PositivityLoss("nonlinearity assumptions (f0)-(f4) failed validation")
    profile, rcert = _radial(env)
    pairs = ds.construct_pairs(env.params, env.spec, env.reactions, env.window,
                               profile, n=env.n)
    return profile, rcert, pairs


def _pairs_report(env: _Env, rcert, pairs) -> dict:
    return {
        "lambda": env.lam,
        "n": env.n,
        "radial_claim": rcert.summary(),
        "first_margins": {k: float(v) for k, v in pairs.first_margins.items()},
        "second_margins": {k: float(v) for k, v in pairs.second_margins.items()},
        "certificates": {k: c.summary() for k, c in pairs.certificates.items()},
        "all_passed": bool(pairs.all_passed and rcert.passed),
    }


def _cmd_pairs(env: _Env) -> int:
    profile, rcert, pairs = _pairs(env)
    _write_csv(env.outdir / "pairs.csv", ("r", "u0", "v0", "v_up", "u_up"),
               (pairs.u0.nodes, pairs.u0.values, pairs.v0.values,
                pairs.v_up.values, pairs.u_up.values))
    report = _pairs_report(env, rcert, pairs)
    _write_json(env.outdir / "pairs.json", report)
    _print(report)
    return 0 if report["all_passed"] else 1


def _cmd_solve(env: _Env) -> int:
    profile, rcert, pairs = _pairs(env)
    report = _pairs_report(env, rcert, pairs)
    if not report["all_passed"]:
        _write_json(env.outdir / "solve.json", report)
        _print(report)
        return 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        # the two theorem intervals: u1 is minimal in [u0, v_up], u2 maximal
        # in [v0, u_up]
        lo = ds.amann_iterate(env.params, env.reactions, pairs.u0, pairs.v_up,
                              "from_lower", budget=env.budget,
                              conv_factor=env.conv_factor)
        up = ds.amann_iterate(env.params, env.reactions, pairs.v0, pairs.u_up,
                              "from_upper", budget=env.budget,
                              conv_factor=env.conv_factor)
        third = ds.search_third_solution(env.params, env.reactions,
                                         lo.limit, up.limit, seed=env.seed)
    _write_csv(env.outdir / "solution_lower.csv", ("r", "u"),
               (lo.limit.nodes, lo.limit.values))
    _write_csv(env.outdir / "solution_upper.csv", ("r", "u"),
               (up.limit.nodes, up.limit.values))
    gap = float(np.max(np.abs(up.limit.values - lo.limit.values)))
    distinct = bool(gap >= 0.1 * env.spec.theta1)
    report.update({
        "from_lower": {"converged": lo.converged, "steps": lo.n_steps,
                       "residual": lo.residuals[-1], "sup": lo.limit.sup_norm(),
                       "monotone": bool(all(lo.monotone)), "khat": lo.khat},
        "from_upper": {"converged": up.converged, "steps": up.n_steps,
                       "residual": up.residuals[-1], "sup": up.limit.sup_norm(),
                       "monotone": bool(all(up.monotone)), "khat": up.khat},
        "gap": gap,
        "distinctness": distinct,
        "third_solution": third,
    })
    _write_json(env.outdir / "solve.json", report)
    _print(report)
    if not (lo.converged and up.converged):
        return 3
    return 0 if distinct else 1


def _cmd_certify(env: _Env, input_path, kind, other_path, tol) -> int:
    if input_path is None:
        _fail("certify needs --input")
    if kind is None:
        _fail("certify needs --kind")
    u = _read_grid_function(input_path)
    other = _read_grid_function(other_path) if other_path else None
    use_tol = tol if tol is not None else env.tol_certify
    try:
        cert = ds.certify(env.params, env.reactions, u, kind,
                          other=other, tol=use_tol)
        report = {"input": str(input_path), "lambda": env.lam,
                  "certificate": cert.summary()}
        code = 0 if cert.passed else 1
    except PositivityLoss as exc:
        report = {"input": str(input_path), "lambda": env.lam,
                  "certificate": {"kind": kind, "passed": False,
                                  "positivity_loss": str(exc)}}
        code = 1
    _write_json(env.outdir / "certify.json", report)
    _print(report)
    return code


def _cmd_sweep(env: _Env) -> int:
    count = _number(env.cfg.get("sweep", {}), "sweep", "count", default=9, integer=True)
    if count < 2:
        _fail(f"sweep.count must be at least 2, got {count}")
    lams = np.linspace(env.window.lambda_star, env.window.lambda_upper, count)
    names = ("lambda", "all_passed", "m_lambda", "alpha_star", "chi_low",
             "chi_high", "eps_low", "eps_high", "sup_u1_pair_gap")
    rows = []
    ok = True
    for lam in lams:  # ascending, sequential: row order is part of the contract
        sub = dataclasses.replace(env, lam=float(lam),
                                  params=dataclasses.replace(env.params, lam=float(lam)))
        sub.reactions = build_h(env.spec, sub.params)
        profile, rcert, pairs = _pairs(sub)
        passed = bool(pairs.all_passed and rcert.passed)
        ok = ok and passed
        rows.append((
            float(lam), float(passed),
            pairs.second_margins["m_lambda"], pairs.first_margins["alpha_star"],
            pairs.first_margins["chi_low"], pairs.first_margins["chi_high"],
            pairs.second_margins["eps_low"], pairs.second_margins["eps_high"],
            float(np.max(pairs.u_up.values - pairs.u0.values)),
        ))
    _write_csv(env.outdir / "sweep.csv", names, tuple(zip(*rows)))
    report = {"count": int(count), "lambda_star": env.window.lambda_star,
              "lambda_upper": env.window.lambda_upper, "all_passed": bool(ok)}
    _write_json(env.outdir / "sweep.json", report)
    _print(report)
    return 0 if ok else 1


_COMMANDS = ("window", "radial", "barrier", "pairs", "solve", "certify", "sweep")


def run(command: str, config_path: str, out=None, nodes=None, lam=None,
        seed=None, input_path=None, kind=None, other=None, tol=None) -> int:
    """Execute one command against a config; returns the process exit code."""
    try:
        if command not in _COMMANDS:
            _fail(f"unknown command {command!r}")
        cfg = _load_config(config_path)
        env = _build_env(cfg, out=out, nodes=nodes, lam_flag=lam, seed=seed)
        if command == "window":
            return _cmd_window(env)
        if command == "radial":
            return _cmd_radial(env)
        if command == "barrier":
            return _cmd_barrier(env)
        if command == "pairs":
            return _cmd_pairs(env)
        if command == "solve":
            return _cmd_solve(env)
        if command == "certify":
            return _cmd_certify(env, input_path, kind, other, tol)
        return _cmd_sweep(env)
    except EmptyThetaRange as exc:
        _print({"error": str(exc), "kind": "empty_window"})
        return 1
    except PositivityLoss as exc:
        _print({"error": str(exc), "kind": "positivity_loss"})
        return 1
    except (ConfigurationError, BridgeNotMonotone) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (ConvergenceFailure, SearchExhausted) as exc:
        sys.stderr.write(f"did not converge: {exc}\n")
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pqsing",
        description="Certificates and profiles for the singular (p,q) multiplicity setup.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cp = sub.add_parser(name)
        cp.add_argument("--config", required=True, help="path to a v1 JSON config")
        cp.add_argument("--out", default=None, help="output directory")
        cp.add_argument("--nodes", type=int, default=None, help="override grid.n")
        cp.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="override the load (default: config, else window midpoint)")
        cp.add_argument("--seed", type=int, default=None, help="override the probe seed")
        if name == "certify":
            cp.add_argument("--input", required=True, help="CSV with columns r,value")
            cp.add_argument("--kind", required=True,
                            choices=("subsolution", "supersolution",
                                     "ordering", "nonordering"))
            cp.add_argument("--other", default=None,
                            help="second CSV for ordering/nonordering")
            cp.add_argument("--tol", type=float, default=None)
    args = parser.parse_args(argv)
    return run(args.command, args.config, out=args.out, nodes=args.nodes,
               lam=args.lam, seed=args.seed,
               input_path=getattr(args, "input", None),
               kind=getattr(args, "kind", None),
               other=getattr(args, "other", None),
               tol=getattr(args, "tol", None))


if __name__ == "__main__":
    sys.exit(main())
