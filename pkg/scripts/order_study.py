#!/usr/bin/env python3
"""Mesh-refinement study for the manufactured solution.

    python scripts/order_study.py --meshes 4 6 8 --k 5e-4 --T 0.1 --eps 1e-6 --out out/order
"""
import argparse
import sys
from pathlib import Path

from iterproj.cli import _print_table, study_order
from iterproj.config import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--meshes", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--k", type=float, default=5e-4)
    ap.add_argument("--T", type=float, default=0.1)
    ap.add_argument("--eps", type=float, default=1e-6)
    ap.add_argument("--nu", type=float, default=1.0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("out/order"))
    a = ap.parse_args()
    cfg = RunConfig(problem="problem1", meshes=a.meshes, k=a.k, T_final=a.T, eps=a.eps, nu=a.nu,
                    iter_max=3000, accelerate=True, out=str(a.out))
    header, rows = study_order(cfg, a.out, serial=a.jobs <= 1, workers=a.jobs)
    _print_table(header, rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
