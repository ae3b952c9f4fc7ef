"""Build and solve the WI game of a batch fixture, then sample sparse advice.

    python3 scripts/batch_game.py --rho 0.25 --t 4 --epsilon 0.5
"""
import argparse

import numpy as np

from qswi.batch import advice_row_values, compile_batch, game, solve_game, sparse_support
from qswi.fixtures import sketch_batch
from qswi.qip import wi_error_all


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho", type=float, default=0.25)
    ap.add_argument("--t", type=int, default=4)
    ap.add_argument("--epsilon", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--method", default="auto", choices=["auto", "lp", "mwu"])
    args = ap.parse_args()
    bp = sketch_batch(args.rho, args.t)
    g = game(bp)
    sol = solve_game(g, args.method)
    print(f"game {g.payoff.shape[0]}x{g.payoff.shape[1]}  value {sol.value:.6f}  "
          f"gap {sol.duality_gap:.2e}  method {sol.method}")
    print("row strategy", np.round(sol.row_strategy, 4).tolist())
    adv = sparse_support(g, args.epsilon, args.seed, sol)
    print(f"advice size {adv.size} after {adv.attempts} attempt(s); "
          f"max row value {adv.max_row_value:.4f}")
    cp = compile_batch(bp, adv)
    print(f"compiled WI error {wi_error_all(cp):.6f}  "
          f"bound {max(advice_row_values(bp, adv.entries)):.6f}")


if __name__ == "__main__":
    main()
