#!/usr/bin/env python3
"""Solve an LP-format MILP with HiGHS and write an h2grid solution file.

    highs_solve.py MODEL.lp SOLUTION.sol [--time-limit SECONDS] [--gap REL]
                   [--attempts N] [--nodes N]

Defaults for the limit and gap come from H2GRID_TIME_LIMIT and
H2GRID_MIP_GAP. Uses highspy when importable, otherwise scipy's milp
(which wraps HiGHS as well) on the LP subset written by h2grid.

HiGHS path:

1. Integer columns that carry an objective coefficient are fixed at their
   least profitable bound and the restricted model is solved; its point, if
   any, becomes the first incumbent.
2. Up to --attempts branch-and-bound runs with random seeds 0, 1, ..., each
   capped at --nodes nodes and started from the best incumbent so far. The
   first run that proves optimality ends the loop. Node caps rather than
   wall-clock limits keep the result independent of machine speed.
3. Only when no incumbent exists after that, one uncapped run uses the rest
   of the time limit.
4. The integer columns are fixed at their rounded values and the LP is
   solved again, so the reported point satisfies the rows at LP tolerances
   with exactly integral binaries.

The status is `optimal` when some run proved optimality within the gap,
`feasible` when only an incumbent is available.
"""

import argparse
import math
import os
import re
import sys


def write_solution(path, status, objective=None, names=None, values=None):
    with open(path, "w") as f:
        f.write(f"status {status}\n")
        if objective is not None:
            f.write(f"objective {objective!r}\n")
            for name, v in zip(names, values):
                f.write(f"{name} {float(v)!r}\n")


def solve_highspy(args):
    import time

    import highspy

    M = highspy.HighsModelStatus
    deadline = time.monotonic() + float(args.time_limit)

    def fresh(seed, nodes=None):
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", 1)
        h.setOptionValue("random_seed", seed)
        h.setOptionValue("mip_rel_gap", float(args.gap))
        h.setOptionValue("time_limit", max(deadline - time.monotonic(), 1.0))
        if nodes is not None:
            h.setOptionValue("mip_max_nodes", nodes)
        if h.readModel(args.lp) != highspy.HighsStatus.kOk:
            raise RuntimeError(f"HiGHS could not read {args.lp}")
        return h

    h = fresh(0)
    lp = h.getLp()
    names = list(lp.col_names_)
    ints = [j for j, t in enumerate(lp.integrality_) if t != highspy.HighsVarType.kContinuous]
    if not ints:
        h.run()
        ms = h.getModelStatus()
        if ms != M.kOptimal:
            return lp_failure(ms, M)
        return "optimal", h.getInfo().objective_function_value, names, list(h.getSolution().col_value)

    best, best_obj = trivial_incumbent(h, highspy), None
    status = None
    for seed in range(args.attempts):
        if time.monotonic() >= deadline:
            break
        h = fresh(seed, args.nodes)
        if best is not None:
            h.setSolution(best)
        h.run()
        ms = h.getModelStatus()
        if ms in (M.kInfeasible, M.kUnbounded, M.kUnboundedOrInfeasible):
            return lp_failure(ms, M)
        sol = h.getSolution()
        if sol.value_valid:
            obj = h.getInfo().objective_function_value
            if best_obj is None or obj > best_obj:
                best, best_obj = sol, obj
        if ms == M.kOptimal:
            status = "optimal"
            break
    if status is None and best_obj is None and time.monotonic() < deadline:
        h = fresh(0)
        if best is not None:
            h.setSolution(best)
        h.run()
        ms = h.getModelStatus()
        if ms in (M.kInfeasible, M.kUnbounded, M.kUnboundedOrInfeasible):
            return lp_failure(ms, M)
        sol = h.getSolution()
        if sol.value_valid:
            best, best_obj = sol, h.getInfo().objective_function_value
            status = "optimal" if ms == M.kOptimal else None
    if best_obj is None:
        return "error", None, None, None

    # polish: integers fixed, LP re-solved
    values, objective = list(best.col_value), best_obj
    p = fresh(0)
    for j in ints:
        r = float(round(values[j]))
        p.changeColBounds(j, r, r)
        p.changeColIntegrality(j, highspy.HighsVarType.kContinuous)
    p.run()
    if p.getModelStatus() == M.kOptimal:
        values = list(p.getSolution().col_value)
        objective = p.getInfo().objective_function_value
    return status or "feasible", objective, names, values


def lp_failure(ms, M):
    if ms == M.kInfeasible:
        return "infeasible", None, None, None
    if ms in (M.kUnbounded, M.kUnboundedOrInfeasible):
        return "unbounded", None, None, None
    return "error", None, None, None


def trivial_incumbent(h, highspy):
    """Solve with every profit-carrying integer column at its least
    profitable bound; the point is feasible for the full model."""
    lp = h.getLp()
    maximize = lp.sense_ == highspy.ObjSense.kMaximize
    lower, upper = list(lp.col_lower_), list(lp.col_upper_)
    fixed = False
    for j, c in enumerate(lp.col_cost_):
        if c == 0 or lp.integrality_[j] == highspy.HighsVarType.kContinuous:
            continue
        v = lower[j] if (c > 0) == maximize else upper[j]
        if math.isfinite(v):
            h.changeColBounds(j, v, v)
            fixed = True
    if not fixed:
        return None
    h.run()
    if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
        return None
    return h.getSolution()


_NUM = r"[-+]?(?:\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|inf(?:inity)?)"


def parse_lp(path):
    """Parse the LP subset written by h2grid."""
    section = None
    obj, rows, bounds, binary = {}, [], {}, set()
    pending = ""
    names = {}

    def var(name):
        if name not in names:
            names[name] = len(names)
        return names[name]

    def terms(text):
        out = {}
        for sign, coef, name in re.findall(r"([-+])\s*(" + _NUM + r")\s+(v\d+)", text):
            c = float(coef) * (-1 if sign == "-" else 1)
            j = var(name)
            out[j] = out.get(j, 0.0) + c
        return out

    def flush(text):
        if not text:
            return
        if section == "obj":
            obj.update(terms(text.split(":", 1)[1]))
        elif section == "st":
            body = text.split(":", 1)[1]
            m = re.match(r"(.*?)(<=|>=|=)\s*(" + _NUM + r")\s*$", body)
            rows.append((terms(m.group(1)), m.group(2), float(m.group(3))))

    with open(path) as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("\\"):
                continue
            key = line.lower()
            if key in ("maximize", "subject to", "bounds", "binary", "end"):
                flush(pending)
                pending = ""
                section = {"maximize": "obj", "subject to": "st"}.get(key, key)
                continue
            if section in ("obj", "st"):
                if ":" in line and pending:
                    flush(pending)
                    pending = ""
                pending += " " + line
            elif section == "bounds":
                tok = line.split()
                if tok[-1] == "free":
                    bounds[var(tok[0])] = (-math.inf, math.inf)
                elif len(tok) == 3 and tok[1] == "=":
                    v = float(tok[2])
                    bounds[var(tok[0])] = (v, v)
                elif len(tok) == 3 and tok[1] == ">=":
                    bounds[var(tok[0])] = (float(tok[2]), math.inf)
                else:
                    bounds[var(tok[2])] = (float(tok[0]), float(tok[4]))
            elif section == "binary":
                binary.update(var(t) for t in line.split())
    return names, obj, rows, bounds, binary


def solve_scipy(args):
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import lil_matrix

    names, obj, rows, bounds, binary = parse_lp(args.lp)
    n = len(names)
    c = np.zeros(n)
    for j, v in obj.items():
        c[j] = -v
    lb = np.array([bounds.get(j, (0.0, math.inf))[0] for j in range(n)])
    ub = np.array([bounds.get(j, (0.0, math.inf))[1] for j in range(n)])
    integrality = np.array([1 if j in binary else 0 for j in range(n)])
    constraints = []
    if rows:
        A = lil_matrix((len(rows), n))
        lo = np.full(len(rows), -math.inf)
        hi = np.full(len(rows), math.inf)
        for i, (t, sense, rhs) in enumerate(rows):
            for j, a in t.items():
                A[i, j] = a
            if sense in ("<=", "="):
                hi[i] = rhs
            if sense in (">=", "="):
                lo[i] = rhs
        constraints.append(LinearConstraint(A.tocsr(), lo, hi))
    opts = {"time_limit": float(args.time_limit), "mip_rel_gap": float(args.gap)}
    res = milp(c, integrality=integrality, bounds=Bounds(lb, ub), constraints=constraints, options=opts)
    if res.status == 2:
        return "infeasible", None, None, None
    if res.status == 3:
        return "unbounded", None, None, None
    if res.x is None:
        return "error", None, None, None
    order = sorted(names, key=names.get)
    return ("optimal" if res.status == 0 else "feasible"), -res.fun, order, list(res.x)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("lp")
    p.add_argument("sol")
    p.add_argument("--time-limit", default=os.environ.get("H2GRID_TIME_LIMIT", "600"))
    p.add_argument("--gap", default=os.environ.get("H2GRID_MIP_GAP", "1e-6"))
    p.add_argument("--attempts", type=int, default=6, help="seeded restarts (HiGHS path)")
    p.add_argument("--nodes", type=int, default=30, help="node cap per restart (HiGHS path)")
    args = p.parse_args()
    try:
        import highspy  # noqa: F401

        solve = solve_highspy
    except ImportError:
        solve = solve_scipy
    status, objective, names, values = solve(args)
    write_solution(args.sol, status, objective, names, values)
    return 0 if status != "error" else 1


if __name__ == "__main__":
    sys.exit(main())
