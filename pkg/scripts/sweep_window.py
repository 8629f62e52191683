#!/usr/bin/env python3
"""Margin profile across the admissible load window.

Walks lambda over [lambda_*, lambda^*], rebuilds the pair construction at
each load, and tabulates how the certificate margins move.  The small-m
growth margin tightens toward lambda^* and the eta margin toward lambda_*,
which is a useful sanity picture of why the window has the edges it has.

    python scripts/sweep_window.py scripts/cfg_small.json --count 13
    python scripts/sweep_window.py scripts/cfg_reference.json --count 5 --nodes 512
"""

import argparse
import dataclasses
import json
import sys

import numpy as np

from pqsing import (
    NonlinearitySpec,
    Params,
    build_h,
    certify_radial_claim,
    compute_window,
    construct_pairs,
    solve_radial,
)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("--count", type=int, default=9)
    ap.add_argument("--nodes", type=int, default=None)
    ap.add_argument("--csv", default=None, help="also write rows to this path")
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
    window = compute_window(params0, spec, build_h(spec, params0))
    print(f"# window [{window.lambda_star:.6g}, {window.lambda_upper:.6g}] "
          f"theta={window.theta:.6g}")

    cols = ("lambda", "ok", "eta", "alpha_star", "m_lambda",
            "chi_low", "eps_growth", "eps_cap", "radial_min")
    print(("%12s " * len(cols)) % cols)
    rows = []
    ok_all = True
    for lam in np.linspace(window.lambda_star, window.lambda_upper, args.count):
        params = dataclasses.replace(params0, lam=float(lam))
        reactions = build_h(spec, params)
        profile = solve_radial(params, reactions, window, n=n)
        rcert = certify_radial_claim(profile, params, window)
        pairs = construct_pairs(params, spec, reactions, window, profile, n=n)
        ok = pairs.all_passed and rcert.passed
        ok_all = ok_all and ok
        row = (lam, float(ok), pairs.first_margins["eta"],
               pairs.first_margins["alpha_star"],
               pairs.second_margins["m_lambda"],
               pairs.first_margins["chi_low"],
               pairs.second_margins["eps_growth"],
               pairs.second_margins["eps_cap"],
               rcert.min_margin)
        rows.append(row)
        print(("%12.5g " * len(row)) % row)

    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join("%.17g" % v for v in row) + "\n")
    return 0 if ok_all else 1


if __name__ == "__main__":
    sys.exit(main())
