"""How often AIC picks the true number of mixture components, as a function of sample size."""

import argparse

import numpy as np

from rcsid import gmm


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--sizes", default="90,250")
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--paper-aic", action="store_true", help="penalise K parameters instead of 3K-1")
    args = p.parse_args()

    for n in (int(v) for v in args.sizes.split(",")):
        picks = []
        for s in range(args.trials):
            r = np.random.default_rng(s)
            d = np.concatenate([r.normal(-10, 3, n), r.normal(5, 3, n)])
            picks.append(gmm.select_k(d, args.k_max, seed=s, paper_penalty=args.paper_aic).best_k)
        counts = np.bincount(picks, minlength=args.k_max + 1)[1:]
        print(f"n={n:5d} per component: K=2 in {counts[1]}/{args.trials}; histogram K=1..{args.k_max}: {counts.tolist()}")


if __name__ == "__main__":
    main()
