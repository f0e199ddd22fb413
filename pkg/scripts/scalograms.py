"""Write CWT scalogram images of every reference-fleet target at both network input sizes."""

import argparse
from pathlib import Path

from rcsid import cwt, evaluation as ev


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results/scalograms")
    p.add_argument("--scales", type=int, default=64)
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for sig in ev.reference_fleet().signatures:
        s = cwt.cwt_transform(sig.rcs_dbsm, args.scales)
        for size in cwt.IMAGE_SIZES:
            path = out / f"{sig.target_id}_{size}.png"
            cwt.save_png(cwt.process_scalogram(s, size), path)
            print(path)


if __name__ == "__main__":
    main()
