"""Scatter plot of a Poincare section table.

    python scripts/plot_section.py toda-out/poincare_chaotic.dat [-o section.png]
"""
import argparse

import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("table")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()

    labels = {}
    xs, ys, orbit = [], [], []
    with open(args.table) as f:
        for line in f:
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep:
                    labels[key.strip()] = value.strip()
                continue
            if line.strip():
                k, _, x, y = line.split()
                orbit.append(int(k))
                xs.append(float(x))
                ys.append(float(y))

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(xs, ys, s=0.3, c=orbit, cmap="tab20")
    ax.set_xlabel(labels.get("x", "x"))
    ax.set_ylabel(labels.get("y", "y"))
    ax.set_title(f"m2 = {labels.get('m2', '?')}, E = {labels.get('energy', '?')}")
    fig.tight_layout()
    if args.output:
        fig.savefig(args.output, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
