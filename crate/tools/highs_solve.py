#!/usr/bin/env python3
"""Solve an LP or MPS model with HiGHS and write the solution file.

Usage: highs_solve.py MODEL SOLUTION [--time-limit S] [--gap G] [--threads N]
                      [--start FILE] [--format highs|generic]

The solution is written in HiGHS's native text format (default) or as
`name value` lines with `# status`, `# objective`, `# bound` and `# gap`
headers. The best bound and final gap are also printed to standard output
as `# bound X` and `# gap Y`.

HiGHS's LP reader does not accept square brackets in names, so LP input is
rewritten with parentheses and names are mapped back on output.

Exit status: 0 when a solution file was written, 2 on solver failure,
64 on usage errors.
"""

import argparse
import math
import os
import sys
import tempfile

try:
    import highspy
except ImportError:
    print("highspy is not installed", file=sys.stderr)
    sys.exit(2)


def to_parens(text):
    return text.replace("[", "(").replace("]", ")")


def to_brackets(text):
    return text.replace("(", "[").replace(")", "]")


STATUS = {
    "kOptimal": "optimal",
    "kInfeasible": "infeasible",
    "kUnboundedOrInfeasible": "infeasible",
    "kTimeLimit": "timeout",
}


def main():
    parser = argparse.ArgumentParser(add_help=True)
    parser.add_argument("model")
    parser.add_argument("solution")
    parser.add_argument("--time-limit", type=float, default=math.inf)
    parser.add_argument("--gap", type=float, default=0.0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--start")
    parser.add_argument("--format", choices=["highs", "generic"], default="highs")
    try:
        args = parser.parse_args()
    except SystemExit as exc:
        sys.exit(0 if exc.code == 0 else 64)

    lp_input = args.model.endswith(".lp")
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", args.gap)
    h.setOptionValue("threads", args.threads)
    h.setOptionValue("random_seed", 0)
    if math.isfinite(args.time_limit):
        h.setOptionValue("time_limit", args.time_limit)

    with tempfile.TemporaryDirectory() as tmp:
        path = args.model
        if lp_input:
            path = os.path.join(tmp, "model.lp")
            with open(args.model) as src, open(path, "w") as dst:
                dst.write(to_parens(src.read()))
        if h.readModel(path) != highspy.HighsStatus.kOk:
            print(f"cannot read model {args.model}", file=sys.stderr)
            sys.exit(2)

        if args.start:
            lp = h.getLp()
            index = {to_brackets(n): k for k, n in enumerate(lp.col_names_)}
            values = list(lp.col_lower_)
            with open(args.start) as f:
                for line in f:
                    parts = line.split()
                    if len(parts) == 2 and parts[0] in index:
                        values[index[parts[0]]] = float(parts[1])
            sol = highspy.HighsSolution()
            sol.col_value = values
            h.setSolution(sol)

        if h.run() != highspy.HighsStatus.kOk:
            status = h.getModelStatus()
            if status not in (highspy.HighsModelStatus.kTimeLimit, highspy.HighsModelStatus.kInfeasible):
                print(f"solver failed with model status {status}", file=sys.stderr)
                sys.exit(2)

        info = h.getInfo()
        status = h.getModelStatus()
        bound = info.mip_dual_bound
        gap = info.mip_gap
        print(f"# bound {bound!r}")
        print(f"# gap {gap!r}")

        if args.format == "highs":
            raw = os.path.join(tmp, "solution.sol")
            h.writeSolution(raw, 0)
            with open(raw) as f:
                text = f.read()
            with open(args.solution, "w") as f:
                f.write(to_brackets(text) if lp_input else text)
        else:
            name = str(status).split(".")[-1]
            with open(args.solution, "w") as f:
                f.write(f"# status {STATUS.get(name, 'error')}\n")
                if info.primal_solution_status == 2:
                    f.write(f"# objective {info.objective_function_value!r}\n")
                f.write(f"# bound {bound!r}\n# gap {gap!r}\n")
                if info.primal_solution_status == 2:
                    lp = h.getLp()
                    for n, v in zip(lp.col_names_, h.getSolution().col_value):
                        f.write(f"{to_brackets(n) if lp_input else n} {v!r}\n")


if __name__ == "__main__":
    main()
