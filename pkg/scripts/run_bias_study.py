"""Bias of FID_n and IS_n against 1/n on the analytic oracles, IID vs scrambled Sobol.

    python3 scripts/run_bias_study.py --replicates 50 --out results/bias.json
"""

import argparse
import json
from pathlib import Path

import numpy as np

from qmc_metrics.oracles import TwoClassPosteriorOracle, bias_study, make_generator, true_fid, true_is

FID_GRID = (500, 1000, 2000, 3000, 5000, 7500, 10000, 15000, 20000)
IS_GRID = (50, 100, 200, 500)


def table(rep, truth):
    base = rep.baseline
    print(f"{'n':>7} " + " ".join(f"{s + ' mean':>16} {s + ' std':>14}" for s in rep.samplers) + f" {'F':>8}")
    other = [s for s in rep.samplers if s != base]
    f = rep.f_values(other[0]) if other else None
    for i, n in enumerate(rep.n_grid):
        cells = " ".join(f"{rep.mean(s)[i]:16.6f} {rep.std(s)[i]:14.6f}" for s in rep.samplers)
        print(f"{n:7d} {cells} {f[i] if f is not None else float('nan'):8.2f}")
    for s in rep.samplers:
        fit = rep.fits[s]
        print(f"  {s}: intercept {fit.intercept:.5f} (truth {truth:.5f}) slope {fit.slope:.4f} "
              f"+/- {fit.slope_se:.4f} R2 {fit.r_squared:.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicates", type=int, default=50)
    ap.add_argument("--is-replicates", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scales", type=float, nargs="+", default=[1.0, 3.0])
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    results = {}
    for scale in args.scales:
        gen = make_generator(16, 16, scale)
        truth = true_fid(gen, np.zeros(16), np.eye(16))
        print(f"\nFID, A = {scale} Q (d=16), true FID {truth:.4f}")
        rep = bias_study(gen, ("normal", "sobol_inv"), FID_GRID, args.replicates, args.seed)
        table(rep, truth)
        results[f"fid_scale_{scale}"] = rep.to_dict()

    oracle = TwoClassPosteriorOracle(2.0, 5.0)
    truth = true_is(oracle).value
    print(f"\nIS, Beta(2, 5) posteriors, true IS {truth:.6f}")
    rep = bias_study(oracle, ("normal", "sobol_inv"), IS_GRID, args.is_replicates, args.seed, nested=True)
    table(rep, truth)
    results["is"] = rep.to_dict()

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(results, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
