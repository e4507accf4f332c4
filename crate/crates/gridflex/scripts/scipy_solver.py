#!/usr/bin/env python3
"""External LP/MILP backend over the gridflex JSON protocol.

Usage:
    scipy_solver.py <problem.json> <solution.json>
    scipy_solver.py --handshake

Problems are solved with scipy's HiGHS bindings (linprog / milp).
"""

import json
import sys

PROTOCOL_ID = "gridflex-solver-1"


def build_matrices(problem):
    import numpy as np
    from scipy.sparse import csr_matrix

    lp = problem["lp"] if "lp" in problem else problem
    n = lp["n_vars"]
    c = np.asarray(lp["objective"], dtype=float)

    def rows_to_csr(rows):
        data, ri, ci = [], [], []
        for i, row in enumerate(rows):
            for j, a in row["coeffs"]:
                ri.append(i)
                ci.append(j)
                data.append(a)
        return csr_matrix((data, (ri, ci)), shape=(len(rows), n))

    a_eq = rows_to_csr(lp["eq"])
    b_eq = np.asarray([r["rhs"] for r in lp["eq"]], dtype=float)
    a_ub = rows_to_csr(lp["ineq"])
    b_ub = np.asarray([r["rhs"] for r in lp["ineq"]], dtype=float)
    # infinite bounds arrive as JSON null
    lo = np.asarray([-np.inf if v is None else v for v in lp["lower"]], dtype=float)
    hi = np.asarray([np.inf if v is None else v for v in lp["upper"]], dtype=float)
    return c, a_eq, b_eq, a_ub, b_ub, lo, hi


STATUS_MAP = {0: "optimal", 1: "limit", 2: "infeasible", 3: "unbounded"}


def solve_lp(problem, opts):
    from scipy.optimize import linprog

    c, a_eq, b_eq, a_ub, b_ub, lo, hi = build_matrices(problem)
    options = {}
    if opts.get("time_limit"):
        options["time_limit"] = float(opts["time_limit"])
    res = linprog(
        c,
        A_ub=a_ub if a_ub.shape[0] else None,
        b_ub=b_ub if a_ub.shape[0] else None,
        A_eq=a_eq if a_eq.shape[0] else None,
        b_eq=b_eq if a_eq.shape[0] else None,
        bounds=list(zip(lo, hi)),
        method="highs",
        options=options,
    )
    out = {"status": STATUS_MAP.get(res.status, "limit")}
    if res.status == 0:
        duals = []
        if a_eq.shape[0]:
            duals.extend(res.eqlin.marginals.tolist())
        if a_ub.shape[0]:
            duals.extend(res.ineqlin.marginals.tolist())
        out.update(x=res.x.tolist(), objective=float(res.fun), duals=duals)
    return out


def solve_mip(problem, opts):
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp

    c, a_eq, b_eq, a_ub, b_ub, lo, hi = build_matrices(problem)
    n = len(c)
    integrality = np.zeros(n)
    for j in problem.get("binaries", []):
        integrality[j] = 1
    constraints = []
    if a_eq.shape[0]:
        constraints.append(LinearConstraint(a_eq, b_eq, b_eq))
    if a_ub.shape[0]:
        constraints.append(LinearConstraint(a_ub, -np.inf, b_ub))
    options = {"mip_rel_gap": float(opts.get("mip_gap", 1e-9))}
    if opts.get("time_limit"):
        options["time_limit"] = float(opts["time_limit"])
    res = milp(
        c,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lo, hi),
        options=options,
    )
    out = {"status": STATUS_MAP.get(res.status, "limit")}
    bound = getattr(res, "mip_dual_bound", None)
    if bound is not None and bound == bound:
        out["lower_bound"] = float(bound)
    if res.status == 0:
        out.update(x=res.x.tolist(), objective=float(res.fun), duals=[])
    elif res.x is not None:
        out.update(x=res.x.tolist(), objective=float(res.fun or float("nan")))
    return out


def main(argv):
    if len(argv) >= 2 and argv[1] == "--handshake":
        print(PROTOCOL_ID)
        return 0
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    with open(argv[1]) as fh:
        request = json.load(fh)
    problem = request["problem"]
    opts = request.get("opts", {})
    if request.get("kind") == "mip" and problem.get("binaries"):
        response = solve_mip(problem, opts)
    else:
        response = solve_lp(problem, opts)
    with open(argv[2], "w") as fh:
        json.dump(response, fh)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
