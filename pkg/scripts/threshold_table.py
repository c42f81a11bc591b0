"""Bound constants and epsilon thresholds for the shipped graph families.

    python3 scripts/threshold_table.py --n 3 4 5 6 --rho linear 5/3
"""
import argparse
from fractions import Fraction

from netsync import graph as gr
from netsync.pseudometric import RhoSequence
from netsync.stability import epsilon_certified, epsilon_star


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[3, 4, 5, 6, 7])
    ap.add_argument("--rho", nargs="+", default=["linear", "5/3"],
                    help="'linear' or an exponent such as 5/3")
    ap.add_argument("--exhaustive", action="store_true", help="also report the exhaustive-best path bound")
    args = ap.parse_args()
    cols = ["family", "n", "rho", "diameter", "generic", "connection"]
    if args.exhaustive:
        cols.append("exhaustive")
    cols += ["eps_star", "eps_certified"]
    print(",".join(cols))
    for name in args.rho:
        rho = RhoSequence.linear() if name == "linear" else RhoSequence.power(float(Fraction(name)))
        for family in ("star", "path", "cycle", "complete"):
            for n in args.n:
                if family == "cycle" and n < 3:
                    continue
                g = gr.build_graph(family, n)
                gen = gr.generic_bound(g, rho).c_value
                con = gr.connection_graph_bound(g, rho).c_value
                best = con
                row = [family, n, rho.describe(), gr.diameter(g), f"{gen:.6g}", f"{con:.6g}"]
                if args.exhaustive:
                    if n <= gr.EXHAUSTIVE_CAP:
                        best = gr.connection_graph_bound(g, rho, gr.choose_paths(g, "exhaustive-best", rho=rho)).c_value
                        row.append(f"{best:.6g}")
                    else:
                        row.append("")
                c = min(gen, best)
                row += [f"{epsilon_star(c, n):.6g}", f"{epsilon_certified(c, n):.6g}"]
                print(",".join(map(str, row)))


if __name__ == "__main__":
    main()
