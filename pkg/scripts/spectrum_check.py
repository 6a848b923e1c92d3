#!/usr/bin/env python3
"""Dense spectrum of the iteration matrix on a small mesh, against the
measured contraction of the convection-free iteration.

    python scripts/spectrum_check.py --N 2 3 --nu 1 1e-3
"""
import argparse
import sys
import warnings

from iterproj.discretization import Discretization
from iterproj.modes import build_iteration_matrix, measured_stokes_rate, schur_complement, spectrum
from iterproj.problems import problem1_spec
from iterproj.projector import ParameterWarning

PAIRS = [(1.5, 1.0), (1.5, 0.0), (0.0, 1.0), (2.5, 2.0), (3.0, 2.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, nargs="+", default=[2])
    ap.add_argument("--nu", type=float, nargs="+", default=[1.0, 1e-3])
    ap.add_argument("--k", type=float, default=1e-3)
    a = ap.parse_args()
    warnings.simplefilter("ignore", ParameterWarning)
    print(f"{'N':>2} {'nu':>6} {'alpha':>5} {'rho/nu':>6} {'lam_min':>9} {'lam_max':>8} {'bound':>6} "
          f"{'rho(I-K)':>9} {'measured':>9}")
    for N in a.N:
        for nu in a.nu:
            prob = problem1_spec(nu)
            disc = Discretization.for_problem(prob, N)
            D = schur_complement(disc, a.k, nu)
            for alpha, r in PAIRS:
                rep = spectrum(build_iteration_matrix(disc, alpha, r * nu, a.k, nu, D=D))
                meas = measured_stokes_rate(prob, disc, alpha, r * nu, a.k) if rep.spectral_radius < 1 else float("nan")
                print(f"{N:2d} {nu:6.0e} {alpha:5.2f} {r:6.2f} {rep.lam_min:9.4f} {rep.lam_max:8.4f} "
                      f"{rep.bound:6.2f} {rep.spectral_radius:9.4f} {meas:9.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
