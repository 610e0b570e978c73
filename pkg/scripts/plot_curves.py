"""Plot curves written by egfr_experiment.py (needs matplotlib).

    python3 scripts/plot_curves.py results/ire_by_parameter.csv k1 k5 k8 --out ire.png

Any CSV with columns parameter,t,value[,std_error] works; bands are +-2 SE.
"""
import argparse
import csv
from collections import defaultdict

import numpy as np


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("csv")
    ap.add_argument("parameters", nargs="*", help="default: all")
    ap.add_argument("--out", default="curves.png")
    ap.add_argument("--log", action="store_true")
    args = ap.parse_args()
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = defaultdict(list)
    with open(args.csv) as fh:
        for row in csv.DictReader(fh):
            if row["value"]:
                data[row["parameter"]].append((float(row["t"]), float(row["value"]), float(row.get("std_error") or 0)))
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in args.parameters or sorted(data):
        t, v, s = np.array(data[name]).T
        ax.plot(t, v, label=name)
        ax.fill_between(t, v - 2 * s, v + 2 * s, alpha=0.2)
    if args.log:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(args.out)


if __name__ == "__main__":
    main()
