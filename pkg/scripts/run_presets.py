"""Run every preset (or the named ones) and print a one-line verdict per run.

    python scripts/run_presets.py [NAME ...] [--out DIR] [--seeds N]
"""
import argparse
import dataclasses
import time
from pathlib import Path

from dgvf.analysis import Tolerances, verify_platoon
from dgvf.logio import write_log, write_report
from dgvf.presets import PRESETS, get_preset
from dgvf.sim import run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*")
    ap.add_argument("--out", type=Path)
    ap.add_argument("--seeds", type=int, default=1)
    args = ap.parse_args()
    for name in args.names or list(PRESETS):
        for seed in range(args.seeds):
            cfg = get_preset(name)
            cfg = cfg.replace(integration=dataclasses.replace(cfg.integration, seed=seed))
            start = time.perf_counter()
            log = run(cfg)
            rep = verify_platoon(log, Tolerances(**vars(cfg.analysis)))
            claims = " ".join(f"{k}:{'ok' if v else 'X'}" for k, v in rep.claims().items())
            phi = max(rep.claim1_max_phi.values())
            print(f"{name:<28} seed={seed:<3} {claims}  max|phi|={phi:.3g}  t*={rep.convergence_time}  "
                  f"order={rep.ordering}  {time.perf_counter() - start:.1f}s")
            if args.out:
                d = args.out / f"{name}-seed{seed}"
                write_log(log, d, config=cfg.to_dict())
                write_report(rep, d)


if __name__ == "__main__":
    main()
