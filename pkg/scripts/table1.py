"""Print the seven Table-1 style rows next to the laboratory values.

    python3 scripts/table1.py --mode exact
    python3 scripts/table1.py --mode tomography --n-records 50000
"""

import argparse

from catforge.pipeline import ExperimentConfig
from catforge.reproduce import run_table1


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mode", choices=["exact", "tomography"], default="exact")
    ap.add_argument("--n-records", type=int, default=50000)
    ap.add_argument("--dim", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rows = run_table1(ExperimentConfig(dim=args.dim), mode=args.mode, n_records=args.n_records, seed=args.seed)
    head = f"{'state':6} {'pump':>5} {'r2':>5} | {'F':>6} {'alpha':>6} {'r':>5} {'W00':>7} | paper F/alpha/r/W00"
    print(head)
    print("-" * len(head))
    for row in rows:
        pump = "-" if row["pump_mw"] is None else f"{row['pump_mw']:.0f}"
        pr = "-" if row["paper_r"] is None else f"{row['paper_r']:.2f}"
        print(
            f"{row['state']:6} {pump:>5} {row['r2']:5.2f} | {row['F']:6.3f} {row['alpha']:6.2f} {row['r']:5.2f} "
            f"{row['W00']:7.3f} | {row['paper_F']:.2f}/{row['paper_alpha']:.2f}/{pr}/{row['paper_W00']:.2f}"
        )


if __name__ == "__main__":
    main()
