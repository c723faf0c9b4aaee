"""Plot one or more spectrum CSV files written by `mfsub spectrum`.

Usage: python scripts/plot_spectrum.py spectrum.csv [more.csv ...] [-o out.png]
"""
import argparse
import csv
import math

import matplotlib.pyplot as plt


def read(path):
    label, xs, ds = path, [], []
    with open(path) as fh:
        first = fh.readline()
        if first.startswith("# provenance="):
            label = f"{path} ({first.split('=', 1)[1].strip()})"
        else:
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            d = float(row[1])
            if math.isfinite(d):
                xs.append(float(row[0]))
                ds.append(d)
    return label, header[0], xs, ds


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("files", nargs="+")
    ap.add_argument("-o", "--out")
    args = ap.parse_args()
    for path in args.files:
        label, var, xs, ds = read(path)
        plt.plot(xs, ds, marker=".", label=label)
    plt.xlabel(var)
    plt.ylabel("d")
    plt.legend()
    if args.out:
        plt.savefig(args.out, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
