#!/usr/bin/env python3
"""Solve an LP file written by imdp-synth with scipy's HiGHS MILP solver.

Usage: scipy_milp.py LP_FILE SOL_FILE [TIME_LIMIT_SECONDS]

Writes `<name> <value>` lines, or a single `# status: infeasible` /
`# status: unbounded` comment. Only the one-constraint-per-line subset of
the LP format produced by the exporter is understood.
"""

import math
import re
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

TERM = re.compile(r"([+-])?\s*([0-9.eE+-]+)\s+([A-Za-z_][A-Za-z0-9_]*)")


def number(tok):
    t = tok.lower()
    if t in ("+inf", "inf", "+infinity", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    return float(tok)


def parse(text):
    names, index = [], {}

    def var(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    def terms(expr):
        out = []
        for sign, coef, name in TERM.findall(expr):
            c = float(coef)
            out.append((-c if sign == "-" else c, var(name)))
        return out

    objective, rows, bounds, binaries = [], [], {}, set()
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("maximize", "maximise", "max"):
            section = "obj"
            continue
        if low in ("subject to", "st", "s.t."):
            section = "cons"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary"):
            section = "bin"
            continue
        if low == "end":
            break
        if section == "obj":
            objective += terms(line.split(":", 1)[1])
        elif section == "cons":
            body = line.split(":", 1)[1]
            m = re.match(r"(.*?)(<=|>=|=)\s*(\S+)$", body)
            rows.append((terms(m.group(1)), m.group(2), float(m.group(3))))
        elif section == "bounds":
            parts = line.split()
            if len(parts) == 5:
                bounds[var(parts[2])] = (number(parts[0]), number(parts[4]))
            elif len(parts) == 3 and parts[1] == "=":
                v = number(parts[2])
                bounds[var(parts[0])] = (v, v)
            elif len(parts) == 2 and parts[1] == "free":
                bounds[var(parts[0])] = (-math.inf, math.inf)
            else:
                raise ValueError(f"unsupported bound line: {line}")
        elif section == "bin":
            for name in line.split():
                binaries.add(var(name))
    return names, objective, rows, bounds, binaries


def main():
    lp_file, sol_file = sys.argv[1], sys.argv[2]
    limit = float(sys.argv[3]) if len(sys.argv) > 3 else None
    with open(lp_file) as f:
        names, objective, rows, bounds, binaries = parse(f.read())
    n = len(names)
    c = np.zeros(n)
    for coef, j in objective:
        c[j] -= coef  # milp minimizes
    lo, hi = np.zeros(n), np.full(n, np.inf)
    integrality = np.zeros(n)
    for j in binaries:
        hi[j] = 1.0
        integrality[j] = 1
    for j, (l, u) in bounds.items():
        lo[j], hi[j] = l, u
    r, cidx, vals, rl, ru = [], [], [], [], []
    for i, (ts, sense, rhs) in enumerate(rows):
        for coef, j in ts:
            r.append(i)
            cidx.append(j)
            vals.append(coef)
        rl.append(-np.inf if sense == "<=" else rhs)
        ru.append(np.inf if sense == ">=" else rhs)
    constraints = []
    if rows:
        a = coo_matrix((vals, (r, cidx)), shape=(len(rows), n)).tocsr()
        constraints.append(LinearConstraint(a, rl, ru))
    options = {"mip_rel_gap": 0.0}
    if limit:
        options["time_limit"] = limit
    res = milp(c, constraints=constraints, integrality=integrality, bounds=Bounds(lo, hi), options=options)
    with open(sol_file, "w") as out:
        if res.status == 2:
            out.write("# status: infeasible\n")
        elif res.status == 3:
            out.write("# status: unbounded\n")
        elif res.x is None or res.status != 0:
            sys.stderr.write(f"scipy milp: {res.message}\n")
            sys.exit(1)
        else:
            for name, v in zip(names, res.x):
                out.write(f"{name} {float(v)!r}\n")


if __name__ == "__main__":
    main()
