"""Verification suite: each analytic property of the model as a pass/fail check.

Every check returns a ``CheckRecord`` holding the measured quantity, the
bound it is compared with and the statement being tested.  Random states are
drawn from per-check generators derived from one seed, so reports are
reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, DiracSpectrum, analyze_scalar, boundary_projection_defect
from .operators import (
    ProblemParams,
    SpinorState,
    _action_coeffs,
    _residual_coeffs,
    action_gradient,
    density,
    hartree_potential,
    jacobian_apply,
    riesz_grid,
    to_complex,
    to_real,
)
from .solver import SolverError, SolverOptions, ladder, residual_norm

GAP_TOL = 1e-12
SYMMETRY_TOL = 1e-10
U_MAP_TOL = 1e-9
EIGENMODE_TOL = 1e-4
BOUNDARY_TOL = 1e-10
HARTREE_TOL = 1e-12
POSITIVITY_TOL = 1e-6
GRADIENT_TOL = 1e-6
JACOBIAN_TOL = 1e-5
NEHARI_TOL = 1e-8
DISTINCT_TOL = 1e-6
GAUGE_TOL = 1e-12

FAULTS = ("gap", "spectrum", "eigenmodes", "hartree", "positivity", "gradient", "jacobian",
          "solutions")

# stable stream ids for per-check random generators
_STREAMS = {"positivity": 1, "gradient": 2, "jacobian": 3, "hartree": 4}


def rng_for(seed: int, check: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_STREAMS[check],)))


def random_state(basis: BasisSet, rng: np.random.Generator, norm: float = 1.0) -> SpinorState:
    c = rng.normal(size=basis.n_dirac) + 1j * rng.normal(size=basis.n_dirac)
    return SpinorState(basis, norm * c / np.linalg.norm(c))


@dataclass
class CheckRecord:
    name: str
    anchor: str  # the property under test
    measured: float
    bound: float
    passed: bool
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def payload(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "measured": float(self.measured),
                "bound": float(self.bound), "pass": bool(self.passed), "details": self.details}


@dataclass
class VerifyReport:
    records: list[CheckRecord]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def payload(self) -> dict:
        """Deterministic content; runtimes are kept out of it."""
        return {"pass": self.passed, "checks": [r.payload() for r in self.records]}

    def timing(self) -> dict:
        return {r.name: r.runtime for r in self.records}

    def table(self) -> str:
        rows = [("check", "measured", "bound", "result", "time[s]")]
        for r in self.records:
            rows.append((r.name, f"{r.measured:.3e}", f"{r.bound:.1e}",
                         "PASS" if r.passed else "FAIL", f"{r.runtime:.2f}"))
        widths = [max(len(row[i]) for row in rows) for i in range(5)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        rec = fn(*args, **kwargs)
        rec.runtime = time.perf_counter() - t0
        return rec
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def check_gap(spectrum: BasisSet | DiracSpectrum, fault: bool = False) -> CheckRecord:
    """min lambda_k^2 >= 2 pi / |Omega| (|Omega| the area of the disk)."""
    ev = np.asarray(spectrum.eigenvalues, dtype=float)
    if fault:
        ev = 0.9 * ev
    bound = 2 * math.pi / spectrum.domain.area
    measured = float(np.min(ev ** 2))
    return CheckRecord(
        "gap", "spectral gap: lambda^2 >= 2 pi / area for every eigenvalue",
        measured, bound, measured >= bound - GAP_TOL,
        details={"min_abs_eigenvalue": math.sqrt(measured), "modes": int(ev.size)})


def _u_image(values: np.ndarray) -> np.ndarray:
    """U psi = sigma_1 conj(psi)."""
    return np.conj(values[::-1])


@_timed
def check_spectrum_symmetry(basis: BasisSet, fault: bool = False, n_points: int = 48) -> CheckRecord:
    """Eigenvalue multiset equals its negation; U maps each mode onto its partner."""
    ev = np.array(basis.eigenvalues, dtype=float)
    if fault:
        ev[0] += 1e-3
    scale = float(np.max(np.abs(ev)))
    sym = float(np.max(np.abs(np.sort(ev) + np.sort(ev)[::-1]))) / scale
    # pointwise check on a fixed polar point set strictly inside the disk
    rr = basis.domain.R * (np.arange(n_points) + 0.5) / n_points
    tt = 2 * math.pi * ((np.arange(n_points) * 0.618033988749895) % 1.0)
    worst = 0.0
    for i in range(basis.n_dirac):
        j = basis.partner_index(i)
        u = _u_image(basis.dirac_mode_values(i, rr, tt))
        p = basis.dirac_mode_values(j, rr, tt)
        c = np.vdot(p, u) / np.vdot(p, p)
        err = np.max(np.abs(u - c * p)) / np.max(np.abs(p))
        ev_err = abs(ev[j] + ev[i]) / scale
        worst = max(worst, float(err), abs(abs(c) - 1.0), ev_err)
    return CheckRecord(
        "spectrum_symmetry", "spectrum symmetric under lambda -> -lambda via U = sigma_1 C",
        sym, SYMMETRY_TOL, sym <= SYMMETRY_TOL and worst <= U_MAP_TOL,
        details={"u_map_error": worst, "u_map_bound": U_MAP_TOL})


_FD6 = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])


def eigenmode_residuals(basis: BasisSet, n_points: int = 300, collar: float = 0.05,
                        n_theta: int | None = None) -> np.ndarray:
    """Relative max-norm error of -i sigma~.grad psi_k - lambda_k psi_k per mode.

    Derivatives are taken numerically on a uniform polar grid covering
    [collar R, (1 - collar) R]: sixth-order differences in r, FFT in theta.
    """
    R = basis.domain.R
    if n_theta is None:
        n_theta = max(32, 4 * basis.M + 8)
    a, b = collar * R, (1 - collar) * R
    h = (b - a) / (n_points - 1)
    r = a + h * np.arange(-3, n_points + 3)
    theta = 2 * math.pi * np.arange(n_theta) / n_theta
    freq = np.fft.fftfreq(n_theta, 1.0 / n_theta)
    s1, s2 = basis.lattice.sigma_tilde()
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    rin = r[3:-3, None]
    out = np.empty(basis.n_dirac)
    for i, mode in enumerate(basis.dirac_modes):
        prof = basis.dirac_mode_values(i, r, np.zeros_like(r))  # (2, n_r) at theta = 0
        harm = np.array([mode.m, mode.m + 1])
        vals = prof[:, :, None] * np.exp(1j * harm[:, None, None] * theta[None, None, :])
        dr = sum(w * vals[:, k:k + n_points] for k, w in enumerate(_FD6) if w) / h
        core = vals[:, 3:-3]
        dth = np.fft.ifft(1j * freq * np.fft.fft(core, axis=-1), axis=-1)
        dx = cos_t * dr - sin_t * dth / rin
        dy = sin_t * dr + cos_t * dth / rin
        t_psi = -1j * (np.einsum("ab,b...->a...", s1, dx) + np.einsum("ab,b...->a...", s2, dy))
        target = mode.eigenvalue * core
        out[i] = np.max(np.abs(t_psi - target)) / np.max(np.abs(target))
    return out


@_timed
def check_eigenmodes(basis: BasisSet, n_points: int = 300, fault: bool = False) -> CheckRecord:
    """Grid-differentiated Dirac operator reproduces lambda_k psi_k; boundary condition holds."""
    res = eigenmode_residuals(basis, n_points=n_points)
    if fault:
        res = res + 1e-3
    bdef = max(boundary_projection_defect(basis, i) for i in range(basis.n_dirac))
    worst = float(res.max())
    return CheckRecord(
        "eigenmodes", "each basis spinor is an eigenfunction of -i sigma~.grad with the "
        "infinite-mass boundary condition",
        worst, EIGENMODE_TOL, worst <= EIGENMODE_TOL and bdef <= BOUNDARY_TOL,
        details={"worst_mode": basis.dirac_modes[int(res.argmax())].label,
                 "boundary_defect": bdef, "boundary_bound": BOUNDARY_TOL})


@_timed
def check_hartree_identity(basis: BasisSet, seed: int = 0, n_states: int = 20,
                           fault: bool = False) -> CheckRecord:
    """<V(psi), e_n> = mu_n^{-1/2} <|psi|^2, e_n> on every retained Dirichlet mode."""
    rng = rng_for(seed, "hartree")
    worst = 0.0
    for _ in range(n_states):
        st = random_state(basis, rng)
        V = hartree_potential(st)
        values = V.values + (1e-9 if fault else 0.0)
        lhs = analyze_scalar(basis, values)
        rhs = analyze_scalar(basis, density(basis, st.coeffs)) / np.sqrt(basis.mu)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))))
    return CheckRecord(
        "hartree_identity", "V(psi) projects onto each Dirichlet mode e_n as "
        "mu_n^{-1/2} <|psi|^2, e_n>",
        worst, HARTREE_TOL, worst <= HARTREE_TOL,
        details={"states": n_states, "retained_modes": basis.n_dirichlet,
                 "angular_orders": basis.L + 1, "radial_per_order": basis.N_d,
                 "untested": "Dirichlet modes beyond the retained set"})


@_timed
def check_positivity(basis: BasisSet, samples: int = 100, seed: int = 0,
                     fault: bool = False) -> CheckRecord:
    """min V >= -tol * max V for random states (the Riesz operator preserves positivity)."""
    rng = rng_for(seed, "positivity")
    worst = math.inf
    for _ in range(samples):
        st = random_state(basis, rng)
        V = riesz_grid(basis, density(basis, st.coeffs))
        if fault:
            V = V - 1e-3 * V.max()
        worst = min(worst, float(V.min() / V.max()))
    return CheckRecord(
        "positivity", "(-Delta)^{-1/2} maps nonnegative densities to nonnegative potentials",
        worst, -POSITIVITY_TOL, worst >= -POSITIVITY_TOL, details={"samples": samples})


def gradient_errors(basis: BasisSet, params: ProblemParams, rng: np.random.Generator,
                    n_states: int = 10, n_dirs: int = 3, step: float = 1e-4,
                    norm: float = 2.0) -> list[float]:
    """Central-difference directional derivatives against action_gradient.

    Directions are the normalised gradient and ``n_dirs`` random unit vectors;
    errors are relative to the gradient norm.
    """
    errs = []
    for _ in range(n_states):
        st = random_state(basis, rng, norm)
        x = to_real(st.coeffs)
        g = action_gradient(st, params)
        gn = float(np.linalg.norm(g))
        dirs = [g / gn] + [d / np.linalg.norm(d) for d in rng.normal(size=(n_dirs, x.size))]
        for d in dirs:
            fp = _action_coeffs(basis, to_complex(x + step * d), params)
            fm = _action_coeffs(basis, to_complex(x - step * d), params)
            errs.append(abs((fp - fm) / (2 * step) - g @ d) / gn)
    return errs


@_timed
def check_gradient(basis: BasisSet, params: ProblemParams, seed: int = 0, n_states: int = 10,
                   fault: bool = False) -> CheckRecord:
    errs = gradient_errors(basis, params, rng_for(seed, "gradient"), n_states)
    worst = max(errs) + (1e-3 if fault else 0.0)
    return CheckRecord("gradient", "action_gradient is the derivative of the action",
                       worst, GRADIENT_TOL, worst <= GRADIENT_TOL, details={"states": n_states})


def jacobian_errors(basis: BasisSet, params: ProblemParams, rng: np.random.Generator,
                    n_states: int = 10, step: float = 1e-5, norm: float = 2.0) -> list[float]:
    """||(F(psi + eps h) - F(psi - eps h)) / 2 eps - J h|| / ||J h|| for unit h."""
    errs = []
    for _ in range(n_states):
        st = random_state(basis, rng, norm)
        h = random_state(basis, rng, 1.0)
        jh = jacobian_apply(st, h, params).coeffs
        fp = _residual_coeffs(basis, st.coeffs + step * h.coeffs, params)
        fm = _residual_coeffs(basis, st.coeffs - step * h.coeffs, params)
        errs.append(float(np.linalg.norm((fp - fm) / (2 * step) - jh) / np.linalg.norm(jh)))
    return errs


@_timed
def check_jacobian(basis: BasisSet, params: ProblemParams, seed: int = 0, n_states: int = 10,
                   fault: bool = False) -> CheckRecord:
    errs = jacobian_errors(basis, params, rng_for(seed, "jacobian"), n_states)
    worst = max(errs) + (1e-3 if fault else 0.0)
    return CheckRecord("jacobian", "jacobian_apply is the derivative of the residual map",
                       worst, JACOBIAN_TOL, worst <= JACOBIAN_TOL, details={"states": n_states})


def solution_rows(sols, tol: float) -> tuple[list[dict], float, bool]:
    """Per-solution diagnostics; returns (rows, worst normalised residual, all ok)."""
    rows = []
    worst = 0.0
    ok = True
    for s in sols:
        row = {"branch": s.branch, "mode": list(s.mode), "converged": s.converged,
               "action": s.action, "level": s.level, "residual": s.residual,
               "norm": s.norm, "iterations": s.iterations}
        if not s.converged:
            row["error"] = s.diagnostics.get("error", "")
            ok = False
            rows.append(row)
            continue
        scale = tol * max(1.0, s.norm)
        res_neg = residual_norm(-s.state, s.params)
        res_rot = residual_norm(np.exp(1j * 1.0) * s.state, s.params)
        gauge = abs(s.diagnostics.get("gauge", 0.0)) / max(1.0, s.norm)
        dmin = s.diagnostics.get("min_distance", math.inf)
        row.update(nehari=s.nehari_error, residual_neg=res_neg, residual_rot=res_rot,
                   gauge=gauge, min_distance=dmin if math.isfinite(dmin) else None)
        worst = max(worst, s.residual / scale, res_neg / scale, res_rot / scale)
        ok &= (s.residual <= scale and res_neg <= scale and res_rot <= scale
               and s.level > 0 and s.nehari_error <= NEHARI_TOL and gauge <= GAUGE_TOL
               and dmin > DISTINCT_TOL)
        rows.append(row)
    # raw (unaligned) distinctness as well
    conv = [s for s in sols if s.converged]
    for i in range(len(conv)):
        for j in range(i + 1, len(conv)):
            if np.linalg.norm(conv[i].state.coeffs - conv[j].state.coeffs) <= DISTINCT_TOL:
                ok = False
    return rows, worst, ok


@_timed
def check_solutions(basis: BasisSet, params: ProblemParams, count: int = 5,
                    options: SolverOptions = SolverOptions(), fault: bool = False,
                    name: str = "solutions") -> CheckRecord:
    """Ladder of stationary solutions: converged, distinct, positive level, Nehari identity.

    For kappa > 0 the level is -I, which carries the same sign conventions.
    """
    anchor = "infinitely many stationary solutions; each one a critical point with I = Q/4"
    try:
        sols = ladder(basis, params, count, options)
    except SolverError as exc:
        return CheckRecord(name, anchor, math.inf, 1.0, False, details={"error": str(exc)})
    rows, worst, ok = solution_rows(sols, options.tol)
    if fault:
        worst, ok = worst + 1.0, False
    levels = [r["level"] for r in rows]
    return CheckRecord(name, anchor, worst, 1.0, ok and worst <= 1.0,
                       details={"omega": params.omega, "kappa": params.kappa,
                                "count": count, "levels": levels, "solutions": rows,
                                "note": "branch k <-> min-max level c_k correspondence is heuristic"})


def run_all(config, faults=(), log=None) -> VerifyReport:
    """Run every check for a Config; ``faults`` names checks to corrupt deliberately."""
    unknown = set(faults) - set(FAULTS)
    if unknown:
        raise ValueError(f"unknown fault(s): {sorted(unknown)}; choose from {FAULTS}")
    vs = config.verify
    seed = config.seed
    params = config.problem()
    options = config.options()
    records = [check_gap(config.spectrum(), fault="gap" in faults)]
    basis = config.build_basis()
    params.check(basis)
    records.append(check_spectrum_symmetry(basis, fault="spectrum" in faults))
    records.append(check_eigenmodes(basis, n_points=vs.eigen_points, fault="eigenmodes" in faults))
    records.append(check_hartree_identity(basis, seed, vs.hartree_states, fault="hartree" in faults))
    records.append(check_positivity(basis, vs.samples, seed, fault="positivity" in faults))
    records.append(check_gradient(basis, params, seed, vs.gradient_states, fault="gradient" in faults))
    records.append(check_jacobian(basis, params, seed, vs.gradient_states, fault="jacobian" in faults))
    records.append(check_solutions(basis, params, vs.count, options, fault="solutions" in faults))
    if vs.kappa_plus:
        plus = ProblemParams(omega=params.omega, kappa=abs(params.kappa) or 1.0)
        records.append(check_solutions(basis, plus, 1, options, name="solutions_kappa_plus"))
    if log is not None:
        for r in records:
            log(f"{r.name}: {'PASS' if r.passed else 'FAIL'} ({r.measured:.3e} vs {r.bound:.1e})")
    return VerifyReport(records)
