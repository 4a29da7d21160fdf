"""Write plot-ready data for the three figure scans into one directory."""
import argparse
import math
from pathlib import Path

from channel_exchange.scan import FIG5_THETA_E, Figure, ScanSpec, run_scan, write_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--energy", type=float, default=1.0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.outdir)

    runs = {
        "fig3.csv": [ScanSpec(Figure.FIG3, E_e=args.energy, theta_e=math.pi / 2)],
        "fig4.csv": [ScanSpec(Figure.FIG4, E_e=args.energy)],
        "fig5.csv": [ScanSpec(Figure.FIG5, E_e=args.energy, theta_e=t) for t in FIG5_THETA_E],
    }
    for name, specs in runs.items():
        results = [run_scan(s, threads=args.threads) for s in specs]
        paths = write_scan(results, out / name)
        holes = sum(r.n_holes for r in results)
        jumps = sum(len(r.jumps) for r in results)
        print(f"{name}: {holes} holes, {jumps} jump points -> {paths[0]}")


if __name__ == "__main__":
    main()
