#!/usr/bin/env python3
"""Normal-mode contraction constants C(alpha, rho) over z = k nu |xi|^2.

    python scripts/modes_table.py --out out/modes.csv
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from iterproj import io as outio
from iterproj.modes import mode_table, uzawa_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.0, 1.0, 1.5, 2.0, 2.5, 3.0])
    ap.add_argument("--rho-over-nus", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0, 2.5])
    ap.add_argument("--zs", type=float, nargs="+", default=list(10.0 ** np.arange(-3, 4)))
    ap.add_argument("--out", type=Path, default=Path("out/modes.csv"))
    a = ap.parse_args()
    rep = mode_table(a.alphas, a.rho_over_nus, a.zs)
    rows = [[al, r, z, c, uzawa_constant(z, r), ok] for al, r, z, c, _, ok in rep.rows()]
    outio.write_csv(a.out, ["alpha", "rho_over_nu", "z", "C", "C_uzawa", "contracting"], rows, kind="modes")
    print("alpha  rho/nu  max|C| over z")
    for i, al in enumerate(rep.alphas):
        for j, r in enumerate(rep.rho_over_nus):
            flag = "" if rep.converges[i, j] else "  (not contracting)"
            print(f"{al:5.2f}  {r:6.2f}  {np.abs(rep.C[i, j]).max():.4f}{flag}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
