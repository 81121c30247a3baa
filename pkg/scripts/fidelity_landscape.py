"""Show how flat the (alpha, r) fidelity surface is for a lossy p-SC state.

For each alpha on the grid, print the best r and fidelity.  A near-constant
fidelity column along a curved (alpha, r) path is the ridge that lets fits
slide away from the nominal amplitude.
"""

import argparse
import math

import numpy as np

from catforge.pipeline import ExperimentConfig, run_pipeline
from catforge.tomo import fit_sc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r2", type=float, default=0.30)
    ap.add_argument("--theta2", choices=["0", "pi"], default="0")
    ap.add_argument("--ideal", action="store_true", help="lossless pipeline with ideal subtraction")
    args = ap.parse_args()

    theta = 0.0 if args.theta2 == "0" else math.pi
    cfg = ExperimentConfig(r2=args.r2, theta2=theta)
    if args.ideal:
        cfg = cfg.replace(eta_opa2=1.0, eta_det=1.0, herald_model="ideal_subtraction")
    fit = fit_sc(run_pipeline(cfg).pre_detection, theta)
    surf = fit.surface  # rows r, columns alpha
    print(f"best: alpha={fit.alpha_hat:.2f} r={fit.r_hat:.2f} F={fit.fidelity:.4f}")
    print(f"{'alpha':>6} {'best r':>7} {'F':>7}")
    for i in range(0, len(fit.alpha_grid), 10):
        j = int(np.argmax(surf[:, i]))
        print(f"{fit.alpha_grid[i]:6.2f} {fit.r_grid[j]:7.2f} {surf[j, i]:7.4f}")


if __name__ == "__main__":
    main()
