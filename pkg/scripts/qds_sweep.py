"""Sweep delta and gap over seeded random channels and report max delta * sqrt(t / t').

    python3 scripts/qds_sweep.py --t 6,8,10 --tprime 1 --channels 102
"""
import argparse
import math

from qswi.qds import analyse, random_pure


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", default="6,8,10")
    ap.add_argument("--tprime", type=int, default=1)
    ap.add_argument("--channels", type=int, default=102)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ts = [int(v) for v in args.t.split(",")]
    worst, worst_margin = 0.0, math.inf
    print("seed,t,delta,gap,chain_margin")
    for i in range(args.channels):
        t = ts[i % len(ts)]
        rep = analyse(random_pure(t, args.tprime, args.seed + i))
        worst = max(worst, rep.delta * math.sqrt(t / args.tprime))
        worst_margin = min(worst_margin, rep.chain_margin)
        print(f"{args.seed + i},{t},{rep.delta!r},{rep.gap!r},{rep.chain_margin!r}")
    print(f"max delta*sqrt(t/t') = {worst:.6f}; min chain margin = {worst_margin:.3e}")


if __name__ == "__main__":
    main()
