"""Command-line front end: ``iterproj {run,study,modes,spectrum}``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as outio
from .config import ConfigError, RunConfig, dump_text, load_config
from .discretization import Discretization
from .march import EnergyViolation, run_simulation
from .projector import InnerSolverError, ParameterWarning, convergence_bound
from .sparse import SolverError

log = logging.getLogger("iterproj")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ASSERT = 0, 1, 2, 3


class AssertionFailure(RuntimeError):
    pass


# run ------------------------------------------------------------------------

def execute_run(cfg: RunConfig, out: Path | None = None, write_vtk: bool = True) -> dict:
    """Run one configuration; write artifacts into ``out`` when given."""
    problem = cfg.problem_spec()
    params = cfg.solver_params()
    disc = Discretization.for_problem(problem, cfg.N)
    t0 = time.perf_counter()
    res = run_simulation(problem, disc, params, cfg.T_final, assert_energy=cfg.assert_energy)
    elapsed = time.perf_counter() - t0
    last = res.diagnostics[-1]
    speed = float(np.linalg.norm(res.state.u.reshape(-1, 3), axis=1).max())
    summary = dict(problem=cfg.problem, N=cfg.N, k=cfg.k, T_final=float(res.state.t),
                   nu=cfg.viscosity, alpha=cfg.alpha, rho=cfg.rho_value, h=disc.mesh.h,
                   steps=len(res.diagnostics), avg_iterations=res.average_iterations,
                   unconverged_steps=sum(not r.converged for r in res.reports),
                   max_speed=speed, weak_div=last.weak_div, strong_div=last.strong_div,
                   energy_checked=res.energy_checked, energy_violations=len(res.energy_violations),
                   global_bound_ok=res.global_bound_ok, elapsed_s=elapsed)
    if problem.has_exact:
        summary.update(err_u_L2=last.err_u_L2, err_u_H1=last.err_u_H1,
                       err_u_H1semi=last.err_u_H1semi, err_p_L2=last.err_p_L2)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        outio.write_diagnostics(out / "diagnostics.csv", res.diagnostics, problem.has_exact)
        outio.write_iterations(out / "iterations.csv", res.reports)
        cols = [c for c in summary if c != "elapsed_s"]
        outio.write_csv(out / "summary.csv", cols, [[summary[c] for c in cols]], kind="summary")
        with outio.atomic_open(out / "config.toml") as fh:
            fh.write(dump_text(cfg))
        if write_vtk:
            outio.write_vtk(out / "final.vtk", disc.mesh, res.state.u, res.state.p,
                            title=f"{cfg.problem} N={cfg.N} t={res.state.t:.6g}")
        outio.save_checkpoint(out / "final.ckpt", res.state, cfg.N, cfg.k,
                              json.loads(json.dumps(cfg.__dict__, default=str)))
    return summary


def cmd_run(cfg: RunConfig, out: Path, args) -> int:
    summary = execute_run(cfg, out)
    for key, val in summary.items():
        print(f"{key:>18s} = {val}")
    if cfg.assert_energy == "abort" and summary["global_bound_ok"] is False:
        raise AssertionFailure("global energy bound violated")
    return EXIT_OK


# study ------------------------------------------------------------------------

def _study_job(item):
    cfg, out = item
    return execute_run(cfg, out, write_vtk=False)


def observed_rates(hs, errs):
    """rate_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i); first entry is nan."""
    rates = [math.nan]
    for i in range(1, len(hs)):
        rates.append(math.log(errs[i - 1] / errs[i]) / math.log(hs[i - 1] / hs[i]))
    return rates


def _map(jobs, serial: bool, workers: int):
    if serial or workers <= 1 or len(jobs) == 1:
        return [_study_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_study_job, jobs))


def study_order(cfg: RunConfig, out: Path, serial: bool = True, workers: int = 1):
    meshes = sorted(set(cfg.meshes))
    if len(meshes) < 2:
        raise ConfigError("order study needs at least two meshes")
    jobs = [(cfg.replace(N=N), out / f"N{N}") for N in meshes]
    results = _map(jobs, serial, workers)
    if "err_u_H1" not in results[0]:
        raise ConfigError(f"order study needs an exact solution; {cfg.problem} has none")
    hs = [r["h"] for r in results]
    cols = ["N", "h", "err_u_L2", "err_u_H1", "err_u_H1semi", "err_p_L2"]
    rate_cols = {c: observed_rates(hs, [r[c] for r in results]) for c in cols[2:]}
    header = cols + [f"rate_{c[4:]}" for c in cols[2:]] + ["avg_iterations"]
    rows = [[r[c] for c in cols] + [rate_cols[c][i] for c in cols[2:]] + [r["avg_iterations"]]
            for i, r in enumerate(results)]
    outio.write_csv(out / "order.csv", header, rows, kind="order")
    return header, rows


def study_sweep(cfg: RunConfig, out: Path, serial: bool = True, workers: int = 1):
    jobs = []
    for a in cfg.alphas:
        for r in cfg.rho_over_nus:
            sub = cfg.replace(alpha=a, rho=None, rho_over_nu=r)
            jobs.append((sub, out / f"a{a:g}_r{r:g}"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParameterWarning)
        results = _map(jobs, serial, workers)
    header = ["alpha", "rho_over_nu", "bound", "avg_iterations", "unconverged_steps"]
    rows = [[j.alpha, j.rho_over_nu, convergence_bound(j.alpha, j.rho_value, j.viscosity),
             r["avg_iterations"], r["unconverged_steps"]] for (j, _), r in zip(jobs, results)]
    outio.write_csv(out / "sweep.csv", header, rows, kind="sweep")
    return header, rows


def cmd_study(cfg: RunConfig, out: Path, args) -> int:
    if args.mode == "order":
        header, rows = study_order(cfg, out, args.serial, args.jobs)
    else:
        header, rows = study_sweep(cfg, out, args.serial, args.jobs)
    _print_table(header, rows)
    if args.mode == "order" and args.min_rate is not None:
        last = dict(zip(header, rows[-1]))
        bad = [c for c in ("rate_u_H1", "rate_p_L2") if not last[c] >= args.min_rate]
        if bad:
            raise AssertionFailure(f"observed rates below {args.min_rate}: {bad}")
    return EXIT_OK


# modes / spectrum ---------------------------------------------------------------

def cmd_modes(cfg: RunConfig, out: Path, args) -> int:
    from .modes import mode_table
    zs = np.logspace(args.zmin, args.zmax, args.zcount)
    rep = mode_table(cfg.alphas if args.alphas is None else args.alphas,
                     cfg.rho_over_nus if args.rho_over_nus is None else args.rho_over_nus, zs)
    knu = cfg.k * cfg.viscosity
    header = ["alpha", "rho_over_nu", "z", "xi_sq", "C", "C_uzawa", "contracting", "row_converges"]
    rows = []
    for i, a in enumerate(rep.alphas):
        for j, r in enumerate(rep.rho_over_nus):
            for l, z in enumerate(rep.zs):
                c = rep.C[i, j, l]
                rows.append([a, r, z, z / knu, c, float(1.5 + z * (1 - r)) / (1.5 + z),
                             bool(abs(c) < 1), bool(rep.converges[i, j])])
    outio.write_csv(out / "modes.csv", header, rows, kind="modes")
    flagged = sorted({(a, r) for a, r, *_, ok in rows if not ok})
    print(f"{len(rows)} rows written to {out / 'modes.csv'}")
    for a, r in flagged:
        print(f"  non-convergent: alpha={a:g} rho/nu={r:g}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, out: Path, args) -> int:
    from .modes import build_iteration_matrix, measured_stokes_rate, spectrum
    problem = cfg.problem_spec()
    disc = Discretization.for_problem(problem, cfg.N)
    nu, rho = cfg.viscosity, cfg.rho_value
    rep = spectrum(build_iteration_matrix(disc, cfg.alpha, rho, cfg.k, nu))
    measured = math.nan
    if rep.spectral_radius < 1 and not args.no_measure:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ParameterWarning)
            measured = measured_stokes_rate(problem, disc, cfg.alpha, rho, cfg.k)
    status = "guaranteed" if rep.convergence_guaranteed else "not guaranteed"
    outio.write_csv(out / "eigenvalues.csv", ["index", "lambda"], enumerate(rep.eigenvalues),
                    kind="eigenvalues")
    header = ["N", "alpha", "rho", "nu", "k", "lam_min", "lam_max", "bound", "spectral_radius",
              "measured_rate", "rate_ratio", "all_positive", "convergence"]
    row = [cfg.N, cfg.alpha, rho, nu, cfg.k, rep.lam_min, rep.lam_max, rep.bound,
           rep.spectral_radius, measured, measured / rep.spectral_radius, rep.all_positive, status]
    outio.write_csv(out / "spectrum.csv", header, [row], kind="spectrum")
    _print_table(header, [row])
    return EXIT_OK


# plumbing ------------------------------------------------------------------------

def _print_table(header, rows):
    def f(v):
        return f"{v:.4g}" if isinstance(v, float) else str(v)
    cells = [[f(v) for v in r] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(header)]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    for c in cells:
        print("  ".join(v.rjust(w) for v, w in zip(c, widths)))


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--out", type=Path, help="output directory (overrides config)")
    common.add_argument("--serial", action="store_true",
                        help="single process, deterministic reduction order")
    common.add_argument("--assert-energy", choices=("warn", "abort", "off"))
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="iterproj", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="march one configuration")
    st = sub.add_parser("study", parents=[common], help="mesh-order study or (alpha, rho) sweep")
    st.add_argument("--mode", choices=("order", "sweep"), default="order")
    st.add_argument("--jobs", type=int, default=1, help="parallel runs unless --serial")
    st.add_argument("--min-rate", type=float, help="fail (exit 3) if final rates fall below")
    md = sub.add_parser("modes", parents=[common], help="normal-mode constant table")
    md.add_argument("--alphas", type=_floats)
    md.add_argument("--rho-over-nus", type=_floats)
    md.add_argument("--zmin", type=float, default=-3.0, help="log10 of smallest k nu |xi|^2")
    md.add_argument("--zmax", type=float, default=3.0)
    md.add_argument("--zcount", type=int, default=7)
    sp = sub.add_parser("spectrum", parents=[common], help="dense iteration-matrix spectrum")
    sp.add_argument("--no-measure", action="store_true", help="skip the measured-rate run")
    return p


def _overrides(pairs):
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


COMMANDS = {"run": cmd_run, "study": cmd_study, "modes": cmd_modes, "spectrum": cmd_spectrum}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        over = _overrides(args.set)
        if args.assert_energy:
            over["assert_energy"] = args.assert_energy
        if args.out:
            over["out"] = str(args.out)
        cfg = load_config(args.config, **over)
        return COMMANDS[args.command](cfg, Path(cfg.out), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AssertionFailure, EnergyViolation) as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (InnerSolverError, SolverError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        # remaining input problems surfaced by the numerical layer (e.g. dense limits)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
