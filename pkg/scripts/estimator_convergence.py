"""Estimator error decay on a ring of N robots with one anchor.

For each gamma2 (and gamma1), prints the slowest error-system eigenvalue and
the error ratio max|w_hat - w*|(T) / max|w_hat - w*|(0) from the exact
linear solution, for a spread initial estimate and zero rate estimate.
"""
import argparse

import numpy as np

from dgvf.estimator import estimator_response, gain_threshold, min_eigenvalue, ring, slowest_mode


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--time", type=float, default=5.0)
    ap.add_argument("--gamma1", type=float, nargs="+", default=[20.0, 200.0])
    ap.add_argument("--gamma2", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9])
    args = ap.parse_args()
    topo = ring(args.count, (0,))
    lam = min_eigenvalue(topo)
    w0 = np.linspace(-1.0, 1.0, args.count)
    s0 = np.zeros(args.count)
    print(f"lambda_min(L+B) = {lam:.4g}")
    print(f"{'gamma1':>7} {'gamma2':>7} {'threshold':>10} {'slowest':>9} {'ratio(T)':>10}")
    for g1 in args.gamma1:
        for g2 in args.gamma2:
            err = np.abs(estimator_response(topo, g1, g2, w0, s0, 0.0, -1.0, [0.0, args.time])).max(axis=1)
            print(f"{g1:7.3g} {g2:7.3g} {gain_threshold(g2, lam):10.4g} {slowest_mode(topo, g1, g2):9.4f} {err[1] / err[0]:10.3g}")


if __name__ == "__main__":
    main()
