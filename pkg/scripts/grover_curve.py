"""Attack curve over k with a fitted log-log slope.

    python3 scripts/grover_curve.py --k 4,8,16,32 --csv curve.csv
"""
import argparse
import math

from qswi.grover import CURVE_COLUMNS, loglog_slope, soundness_break_curve
from qswi.report import csv_text, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", default="4,8,16,32")
    ap.add_argument("--csv")
    args = ap.parse_args()
    rows = soundness_break_curve([int(v) for v in args.k.split(",")])
    print(csv_text(rows, CURVE_COLUMNS), end="")
    if args.csv:
        write_csv(rows, CURVE_COLUMNS, args.csv)
    if len(rows) > 1:
        print(f"slope of catch_b0_attack vs k: {loglog_slope(rows):.4f}")
    for r in rows:
        drop = r["find_j_honest"] - r["find_j_attack"]
        print(f"k={r['k']:3d}  b=1 drop {drop:.4f}  drop*sqrt(k) {drop * math.sqrt(r['k']):.4f}")


if __name__ == "__main__":
    main()
