#!/usr/bin/env python3
"""End-to-end run on one config: window -> radial -> barrier -> pairs -> solve.

Prints a compact human-readable transcript of every stage; the CLI writes
the same artifacts to disk, this script is for looking at a run.

    python scripts/run_pipeline.py scripts/cfg_small.json
    python scripts/run_pipeline.py scripts/cfg_reference.json --nodes 512
"""

import argparse
import dataclasses
import json
import sys
import warnings

import numpy as np

from pqsing import (
    NonlinearitySpec,
    Params,
    amann_iterate,
    build_h,
    certify_radial_claim,
    compute_window,
    conservation_residual,
    construct_pairs,
    minimal_M,
    certify_barrier_supersolution,
    certify_smallest_exponent,
    search_third_solution,
    solve_barrier,
    solve_radial,
    validate,
)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("--nodes", type=int, default=None)
    ap.add_argument("--lambda", dest="lam", type=float, default=None)
    args = ap.parse_args()

    cfg = json.load(open(args.config))
    pc, nc = cfg["params"], cfg["nonlinearity"]
    spec = NonlinearitySpec(
        kind=nc["kind"], theta1=nc["theta1"], theta2=nc["theta2"],
        khat=nc.get("khat", 0.0),
        **({"k": nc["k"]} if "k" in nc else {}),
        **({"m": nc["m"]} if "m" in nc else {}),
    )
    n = args.nodes or cfg.get("grid", {}).get("n", 2048)
    params0 = Params(p=pc["p"], q=pc["q"], gamma=pc["gamma"], dim=pc["dim"],
                     radius=pc["radius"], lam=0.0)

    rep = validate(spec, params0)
    print("assumptions:", " ".join(f"{c.name}={'ok' if c.passed else 'FAIL'}"
                                   for c in rep.checks))
    if not rep.ok:
        return 1

    window = compute_window(params0, spec, build_h(spec, params0))
    print(f"window: lambda in [{window.lambda_star:.6g}, {window.lambda_upper:.6g}] "
          f"theta={window.theta:.6g} nonempty={window.nonempty}")

    lam = args.lam if args.lam is not None else (pc.get("lambda") or window.midpoint)
    params = dataclasses.replace(params0, lam=lam)
    reactions = build_h(spec, params)
    print(f"load: lambda={lam:.6g}")

    profile = solve_radial(params, reactions, window, n=n)
    rcert = certify_radial_claim(profile, params, window)
    print(f"radial: sup(phi)={profile.phi.sup_norm():.6g} "
          f"claim={'pass' if rcert.passed else 'FAIL'} "
          f"min_margin={rcert.min_margin:.3g}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bprof = solve_barrier(1.0, params.q, params.gamma, params.radius)
    audit = conservation_residual(bprof)
    ec = certify_smallest_exponent(bprof, params.p)
    sc = certify_barrier_supersolution(
        bprof, params, minimal_M(lam, 1.0, params.q, params.gamma))
    print(f"barrier: R_tau={bprof.R_tau} conservation={audit:.3g} "
          f"exponent={'pass' if ec.passed else 'FAIL'} "
          f"collar={'pass' if sc.passed else 'FAIL'}")

    pairs = construct_pairs(params, spec, reactions, window, profile, n=n)
    print(f"pairs: all_passed={pairs.all_passed} "
          f"alpha*={pairs.first_margins['alpha_star']:.4g} "
          f"m_lambda={pairs.second_margins['m_lambda']:.4g}")
    for name, cert in pairs.certificates.items():
        print(f"  {name:18s} {'pass' if cert.passed else 'FAIL':4s} "
              f"min={cert.min_margin:.4g}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        # u1 minimal in [u0, v_up], u2 maximal in [v0, u_up]
        lo = amann_iterate(params, reactions, pairs.u0, pairs.v_up, "from_lower")
        up = amann_iterate(params, reactions, pairs.v0, pairs.u_up, "from_upper")
    for tag, tr in (("from_lower", lo), ("from_upper", up)):
        print(f"{tag}: steps={tr.n_steps} converged={tr.converged} "
              f"residual={tr.residuals[-1]:.3g} sup={tr.limit.sup_norm():.6g} "
              f"monotone={all(tr.monotone)}")
    gap = float(np.max(np.abs(up.limit.values - lo.limit.values)))
    print(f"distinctness: gap={gap:.6g} (threshold {0.1 * spec.theta1:.3g})")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        third = search_third_solution(params, reactions, lo.limit, up.limit,
                                      seed=cfg.get("seed", 0))
    print(f"third solution probe: found_distinct={third['found_distinct']} "
          f"statuses={[a['status'] for a in third['attempts']]}")
    ok = (rcert.passed and ec.passed and sc.passed and pairs.all_passed
          and gap >= 0.1 * spec.theta1)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
