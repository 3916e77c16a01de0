"""Sweep the constant disturbance level (no observer) on lissajous3d-10.

Prints the steady path error, rate spread and gap range per level, plus
the steady normal offset predicted by |d|/k for comparison.
"""
import argparse
import dataclasses
import math

import numpy as np

from dgvf.analysis import verify_platoon
from dgvf.config import DisturbanceSpec
from dgvf.presets import get_preset
from dgvf.sim import run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=float, nargs="+", default=[0.0, 0.01, 0.05, 0.1, 0.3, 1.0, 2.0, 3.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    base = get_preset("lissajous3d-10")
    k = base.gains.k[0]
    print(f"{'d':>6} {'max|phi|':>10} {'|d|/k':>8} {'spread':>9} {'gap min':>8} {'gap max':>8}  claims")
    for d in args.levels:
        dist = DisturbanceSpec(kind="constant", value=(d,) * 3) if d else DisturbanceSpec()
        cfg = base.replace(disturbance=dist, integration=dataclasses.replace(base.integration, seed=args.seed))
        rep = verify_platoon(run(cfg))
        phi = max(rep.claim1_max_phi.values())
        claims = "".join("1234"[i - 1] if ok else "-" for i, ok in rep.claims().items())
        print(f"{d:6.3g} {phi:10.4g} {math.sqrt(3) * d / k:8.3g} {rep.claim2_spread:9.3g} "
              f"{rep.claim3_min_gap:8.4f} {rep.claim3_max_gap:8.4f}  {claims}")


if __name__ == "__main__":
    main()
