"""Bayesian optimisation of one ML family on the reference fleet; writes trace and surrogate CSVs."""

import argparse
import json
from pathlib import Path

from rcsid import evaluation as ev
from rcsid import hyperopt


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--family", default="knn", choices=sorted(hyperopt.DEFAULT_SPACES))
    p.add_argument("--budget", type=int, default=30)
    p.add_argument("--copies", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/hyperopt")
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    X, y = ev.ml_training_set(ev.reference_fleet(), ev.DEFAULT_SNR_GRID, args.copies, args.seed)
    objective = hyperopt.holdout_objective(X, y, args.family, 0.2, args.seed)
    res = hyperopt.optimize(objective, hyperopt.DEFAULT_SPACES[args.family], args.budget, args.seed,
                            snapshot_every=args.budget)
    res.write_trace_csv(out / "optimization_trace.csv")
    res.write_surrogate_csv(out / "surrogate.csv")
    (out / "best_point.json").write_text(json.dumps({"point": res.best_point, "loss": res.best_objective}, indent=1))
    for i, (point, loss) in enumerate(res.trace, 1):
        print(f"{i:3d} {point} loss={loss:.4f}")
    print(f"best {res.best_point} holdout loss {res.best_objective:.4f}")


if __name__ == "__main__":
    main()
