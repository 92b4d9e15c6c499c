"""Plot entropy curves from an artifact directory.

    python scripts/plot_curves.py toda-out [--preset chaotic] [-o curves.png]

Classical curves are drawn per delta (particle 1 solid, particle 2 dotted),
quantum curves per hbar (dashed). Needs matplotlib.
"""
import argparse
import glob
import os

import matplotlib.pyplot as plt


def read_table(path):
    header, rows = {}, []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep:
                    header[key.strip()] = value.strip()
                continue
            rows.append([float(x) for x in line.split()])
    return header, list(zip(*rows))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("directory")
    ap.add_argument("--preset", default="regular")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in sorted(glob.glob(os.path.join(args.directory, f"classical_{args.preset}_delta*.dat"))):
        header, cols = read_table(path)
        (line,) = ax.plot(cols[0], cols[1], lw=1, label=f"classical delta={header['delta']}")
        ax.plot(cols[0], cols[2], lw=0.8, ls=":", color=line.get_color())
    for path in sorted(glob.glob(os.path.join(args.directory, f"quantum_{args.preset}_hbar*.dat"))):
        header, cols = read_table(path)
        ax.plot(cols[0], cols[1], lw=1.2, ls="--", label=f"quantum hbar={header['hbar']}")
    ax.set_xlabel("t")
    ax.set_ylabel("S(t) [nats]")
    ax.set_title(args.preset)
    ax.legend(fontsize=7)
    fig.tight_layout()
    if args.output:
        fig.savefig(args.output, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
