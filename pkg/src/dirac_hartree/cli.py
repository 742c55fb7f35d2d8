"""Command-line interface: ``dirac-hartree {spectrum,solve,ladder,verify,export}``.

Exit codes: 0 success, 1 verification failure, 2 configuration or usage
error, 3 problem or branch precondition error, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .basis import BasisConfigError, BasisSet
from .config import Config, ConfigError, load_config, make_config
from .operators import ProblemError, ProblemParams, SpinorState, density, riesz_grid
from .serialize import atomic_write, complex_pairs, csv_text, dumps, from_pairs, header
from .solver import (
    BranchUnavailableError,
    ConvergenceError,
    SingularSystemError,
    Solution,
    SolverError,
    ladder,
    solve_branch,
)
from .specialfun import BesselDomainError, RootBracketError
from .verify import FAULTS, check_gap, run_all

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_CONVERGENCE = 4

log = logging.getLogger("dirac_hartree")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI configuration file")
    common.add_argument("--omega", type=float, help="frequency omega (inside the gap)")
    common.add_argument("--kappa", type=float, help="coupling constant kappa")
    common.add_argument("--m-max", type=_nonneg_int, dest="m_max", help="angular channel cutoff M")
    common.add_argument("--n-max", type=_positive_int, dest="n_max", help="radial modes per channel N")
    common.add_argument("--seed", type=_nonneg_int, help="random seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = argparse.ArgumentParser(prog="dirac-hartree",
                                description="Stationary states of a Dirac-Hartree model on a disk.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("spectrum", parents=[common], help="truncated Dirac spectrum and gap report")

    s = sub.add_parser("solve", parents=[common], help="solve one branch")
    s.add_argument("--branch", type=_positive_int, help="branch index k (1-based)")
    s.add_argument("--flow", action="store_true", default=None, help="run the saddle flow before Newton")

    s = sub.add_parser("ladder", parents=[common], help="solve the first COUNT branches")
    s.add_argument("--count", type=_positive_int, help="number of branches")
    s.add_argument("--flow", action="store_true", default=None, help="run the saddle flow before Newton")

    s = sub.add_parser("verify", parents=[common], help="run the verification suite")
    s.add_argument("--inject-fault", action="append", default=[], choices=FAULTS, metavar="CHECK",
                   help=f"corrupt one check on purpose (one of: {', '.join(FAULTS)})")

    s = sub.add_parser("export", parents=[common], help="sample a saved solution on the grid as CSV")
    s.add_argument("solution", help="solution JSON written by solve or ladder")
    s.add_argument("--what", nargs="+", choices=("density", "potential", "spinor"),
                   default=["density"], help="fields to export")
    return p


def config_from_args(args) -> Config:
    overrides: dict = {}
    for attr, key in (("omega", "omega"), ("kappa", "kappa"), ("m_max", "M"), ("n_max", "N"),
                      ("seed", "seed"), ("out", "out"), ("branch", "branch"), ("count", "count")):
        v = getattr(args, attr, None)
        if v is not None:
            overrides[key] = v
    if getattr(args, "flow", None):
        overrides["solver"] = {"flow": True}
    return load_config(args.config, overrides)


# payload builders

def spectrum_payload(cfg: Config) -> dict:
    spec = cfg.spectrum()
    gap = check_gap(spec)
    modes = [{"index": i, "m": md.m, "n": md.n, "sign": md.sign, "k": md.k,
              "eigenvalue": md.eigenvalue} for i, md in enumerate(spec.dirac_modes)]
    return {"radius": cfg.radius, "lambda": [cfg.lam.real, cfg.lam.imag],
            "gap": {"min_abs_eigenvalue": gap.details["min_abs_eigenvalue"],
                    "min_eigenvalue_squared": gap.measured, "bound": gap.bound, "pass": gap.passed},
            "modes": modes}


def solution_payload(cfg: Config, sol: Solution) -> dict:
    basis = sol.state.basis
    return {
        "config": cfg.canonical(),
        "omega": sol.params.omega, "kappa": sol.params.kappa,
        "branch": sol.branch, "mode": list(sol.mode),
        "eigenvalue": float(basis.eigenvalues[basis.index_of(*sol.mode)]) if sol.branch else None,
        "action": sol.action, "level": sol.level, "q": sol.q,
        "residual": sol.residual, "converged": sol.converged, "iterations": sol.iterations,
        "x_norm": sol.x_norm, "x_norm_plus": sol.x_norm_plus, "x_norm_minus": sol.x_norm_minus,
        "mode_order": [[md.m, md.n, md.sign] for md in basis.dirac_modes],
        "coefficients": complex_pairs(sol.state.coeffs),
    }


def _doc(cfg: Config, kind: str, payload: dict, **extra) -> str:
    doc = {"header": header(cfg.hash(), cfg.seed, kind), "payload": payload}
    doc.update(extra)
    return dumps(doc)


def _write(cfg: Config, name: str, text: str) -> str:
    path = os.path.join(cfg.out, name)
    atomic_write(path, text)
    log.info("wrote %s", path)
    return path


# commands

def cmd_spectrum(cfg: Config) -> int:
    payload = spectrum_payload(cfg)
    _write(cfg, "spectrum.json", _doc(cfg, "spectrum", payload))
    bound = payload["gap"]["bound"]
    print(f"{'idx':>4} {'m':>4} {'n':>3} {'s':>2} {'eigenvalue':>22} {'lambda^2':>14} {'gap_bound':>10}")
    for md in payload["modes"]:
        print(f"{md['index']:>4} {md['m']:>4} {md['n']:>3} {md['sign']:>+2d} "
              f"{md['eigenvalue']:>22.15f} {md['eigenvalue'] ** 2:>14.6f} {bound:>10.6f}")
    g = payload["gap"]
    print(f"gap: min|lambda| = {g['min_abs_eigenvalue']:.15f}, min lambda^2 = "
          f"{g['min_eigenvalue_squared']:.12f} >= 2 pi/area = {bound:.12f}: "
          f"{'PASS' if g['pass'] else 'FAIL'}")
    return EXIT_OK


def _prepare(cfg: Config) -> tuple[BasisSet, ProblemParams]:
    basis = cfg.build_basis()
    params = cfg.problem().check(basis)
    return basis, params


def cmd_solve(cfg: Config) -> int:
    basis, params = _prepare(cfg)
    sol = solve_branch(basis, params, cfg.branch, cfg.options())
    _write(cfg, f"solution_k{cfg.branch}.json", _doc(cfg, "solution", solution_payload(cfg, sol)))
    print(f"branch {sol.branch} mode {sol.mode}: I = {sol.action:.15g}, residual = "
          f"{sol.residual:.3e}, iterations = {sol.iterations}")
    return EXIT_OK


def cmd_ladder(cfg: Config) -> int:
    basis, params = _prepare(cfg)
    sols = ladder(basis, params, cfg.count, cfg.options())
    rows = []
    for s in sols:
        payload = solution_payload(cfg, s)
        if s.converged:
            _write(cfg, f"solution_k{s.branch}.json", _doc(cfg, "solution", payload))
        rows.append({"branch": s.branch, "mode": list(s.mode), "eigenvalue": payload["eigenvalue"],
                     "action": s.action, "level": s.level, "residual": s.residual,
                     "converged": s.converged, "iterations": s.iterations,
                     "error": s.diagnostics.get("error")})
    summary = {"omega": params.omega, "kappa": params.kappa, "count": cfg.count, "branches": rows,
               "note": "branch k <-> min-max level c_k correspondence is heuristic"}
    _write(cfg, "ladder.json", _doc(cfg, "ladder", summary))
    print(f"{'k':>3} {'lambda_k':>20} {'I':>22} {'residual':>10}  status")
    for r in rows:
        print(f"{r['branch']:>3} {r['eigenvalue']:>20.15f} {r['action']:>22.15g} "
              f"{r['residual']:>10.2e}  {'converged' if r['converged'] else 'FAILED'}")
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_CONVERGENCE


def cmd_verify(cfg: Config, faults=()) -> int:
    report = run_all(cfg, faults=faults, log=log.info)
    _write(cfg, "verify.json", _doc(cfg, "verify", report.payload(), timing=report.timing()))
    print(report.table())
    return EXIT_OK if report.passed else EXIT_VERIFY


def load_solution(path: str) -> tuple[Config, SpinorState, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        payload = doc["payload"]
        stored = dict(payload["config"])
        stored["lam"] = complex(*stored["lam"])
        cfg = make_config(stored)
        coeffs = from_pairs(payload["coefficients"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot load solution {path}: {exc}") from exc
    basis = cfg.build_basis()
    if coeffs.size != basis.n_dirac:
        raise ConfigError(f"{path}: {coeffs.size} coefficients, basis has {basis.n_dirac}")
    return cfg, SpinorState(basis, coeffs), doc["header"]


def export_fields(state: SpinorState, what) -> tuple[list[str], np.ndarray]:
    """Columns r, theta and the requested fields, row-major over (radial, angular) nodes."""
    basis = state.basis
    g = basis.grid
    rr, tt = np.meshgrid(g.r, g.theta, indexing="ij")
    cols = ["r", "theta"]
    data = [rr.ravel(), tt.ravel()]
    rho = density(basis, state.coeffs)
    for w in what:
        if w == "density":
            cols.append("density")
            data.append(rho.ravel())
        elif w == "potential":
            cols.append("potential")
            data.append(riesz_grid(basis, rho).ravel())
        elif w == "spinor":
            psi = state.values()
            cols += ["psi1_re", "psi1_im", "psi2_re", "psi2_im"]
            data += [psi[0].real.ravel(), psi[0].imag.ravel(), psi[1].real.ravel(), psi[1].imag.ravel()]
    return cols, np.column_stack(data)


def cmd_export(cfg: Config, solution: str, what) -> int:
    stored, state, head = load_solution(solution)
    cols, table = export_fields(state, what)
    meta = header(stored.hash(), stored.seed, "fields")
    meta["source"] = os.path.basename(solution)
    stem = os.path.splitext(os.path.basename(solution))[0]
    path = _write(cfg, f"{stem}_{'_'.join(what)}.csv", csv_text(meta, cols, table))
    print(f"wrote {table.shape[0]} rows x {len(cols)} columns to {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "ladder":
            return cmd_ladder(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, tuple(args.inject_fault))
        return cmd_export(cfg, args.solution, args.what)
    except (ConfigError, BasisConfigError, BesselDomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProblemError, BranchUnavailableError) as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ConvergenceError, SingularSystemError, SolverError, RootBracketError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
