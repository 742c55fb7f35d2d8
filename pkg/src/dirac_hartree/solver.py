"""Stationary solutions: branch starts, gauge-fixed Newton, saddle flow, ladder.

Each branch is started from a scaled eigenspinor t * psi_k, with t chosen so
that the quadratic and quartic parts of the action balance along psi_k.  The
branch index k is the 1-based position of psi_k in the basis ordering; the
correspondence with min-max levels of the action is heuristic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .basis import BasisSet
from .operators import (
    ProblemParams,
    SpinorState,
    _action_coeffs,
    _q_coeffs,
    _residual_coeffs,
    jacobian_matrix,
    to_complex,
    to_real,
    x_norm,
)

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class BranchUnavailableError(SolverError):
    """No real balance amplitude exists for the requested branch."""


class ConvergenceError(SolverError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularSystemError(SolverError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 50
    tol: float = 1e-10
    backtrack: float = 0.5
    min_step: float = 2.0 ** -20
    flow: bool = False
    flow_step: float = 0.05
    flow_max_steps: int = 2000
    deflation_shift: float | None = None
    deflation_power: float = 2.0
    pivot_ratio: float = 1e-12
    max_retries: int = 3
    perturb: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not (self.tol > 0 and self.flow_step > 0 and self.min_step > 0):
            raise ValueError("tolerances and step sizes must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.max_iter < 1 or self.flow_max_steps < 0:
            raise ValueError("iteration limits must be positive")


@dataclass(frozen=True, eq=False)
class Solution:
    state: SpinorState
    params: ProblemParams
    branch: int
    mode: tuple[int, int, int]  # (m, n, sign) of the starting eigenmode
    action: float
    q: float
    residual: float
    x_norm: float
    x_norm_plus: float
    x_norm_minus: float
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def norm(self) -> float:
        return self.state.norm()

    @property
    def level(self) -> float:
        """Critical value of -sign(kappa) I, i.e. I for kappa < 0 and -I for kappa > 0."""
        return -math.copysign(1.0, self.params.kappa) * self.action

    @property
    def nehari_error(self) -> float:
        """|level - |kappa| Q / 4| / |level|; zero at an exact critical point."""
        target = abs(self.params.kappa) * self.q / 4
        return abs(self.level - target) / max(abs(self.level), 1e-300)


def residual_norm(state: SpinorState, params: ProblemParams) -> float:
    return float(np.linalg.norm(_residual_coeffs(state.basis, state.coeffs, params)))


def branch_available(basis: BasisSet, params: ProblemParams, k: int) -> bool:
    """Whether mode k (1-based, basis order) admits a real balance amplitude.

    The balance t^2 = (lambda_k - omega) / (-kappa Q(psi_k)) needs
    (lambda_k - omega) / (-kappa) > 0: lambda_k > omega for kappa < 0 and
    lambda_k < omega for kappa > 0.
    """
    if not 1 <= k <= basis.n_dirac or params.kappa == 0:
        return False
    return (basis.eigenvalues[k - 1] - params.omega) / (-params.kappa) > 0


def available_branches(basis: BasisSet, params: ProblemParams) -> list[int]:
    return [k for k in range(1, basis.n_dirac + 1) if branch_available(basis, params, k)]


def branch_init(basis: BasisSet, params: ProblemParams, k: int) -> SpinorState:
    """t * psi_k with t^2 = (lambda_k - omega) / (-kappa Q(psi_k)).

    ``k`` is the 1-based position of the eigenmode in the basis ordering.
    """
    if not 1 <= k <= basis.n_dirac:
        raise BranchUnavailableError(f"branch {k} outside the basis (1..{basis.n_dirac})")
    lam = basis.eigenvalues[k - 1]
    if not branch_available(basis, params, k):
        side = "<=" if params.kappa < 0 else ">="
        raise BranchUnavailableError(
            f"branch {k} unavailable: lambda_{k} = {lam:.6g} {side} omega = {params.omega:.6g}, "
            f"no real balance amplitude for kappa = {params.kappa:g}")
    unit = np.zeros(basis.n_dirac, dtype=complex)
    unit[k - 1] = 1.0
    q = _q_coeffs(basis, unit)
    if not q > 0:
        raise SolverError(f"Q(psi_{k}) = {q} is not positive")
    t2 = (lam - params.omega) / (-params.kappa * q)
    return SpinorState(basis, math.sqrt(t2) * unit)


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over theta of ||a - e^{i theta} b||."""
    d2 = np.vdot(a, a).real + np.vdot(b, b).real - 2 * abs(np.vdot(b, a))
    return math.sqrt(max(d2, 0.0))


def _deflation(x: np.ndarray, known: list[np.ndarray], shift: float, power: float):
    """Deflation factor eta(x) = prod_i (d_i^-p + shift) and grad log eta."""
    c = to_complex(x)
    eta = 1.0
    grad = np.zeros_like(x)
    for ck in known:
        z = np.vdot(ck, c)
        phase = z / abs(z) if abs(z) > 0 else 1.0
        aligned = to_real(phase * ck)
        d = max(phase_distance(c, ck), 1e-300)
        grad_d = (x - aligned) / d
        term = d ** -power + shift
        eta *= term
        grad += (-power * d ** (-power - 1)) * grad_d / term
    return eta, grad


def newton_solve(init: SpinorState, params: ProblemParams, options: SolverOptions = SolverOptions(),
                 *, branch: int = 0, mode: tuple[int, int, int] = (0, 0, 0),
                 known: list[np.ndarray] | None = None) -> Solution:
    """Damped Newton with the phase fixed by Im<psi_init, psi> = 0.

    The constraint enters through a bordered system: the Jacobian augmented by
    the gauge direction i*psi_init as an extra row and column.  Near-singular
    systems trigger a restart from a perturbed start (seeded).
    """
    params.check(init.basis)
    if init.norm() == 0:
        raise SolverError("Newton needs a nonzero initial state")
    rng = np.random.default_rng(options.seed)
    start = init
    retries = 0
    while True:
        try:
            sol = _newton(start, params, options, branch, mode, known or [])
        except SingularSystemError as exc:
            if retries >= options.max_retries:
                raise SingularSystemError(
                    f"{exc}; retried {retries} times - try the flow mode or another branch") from exc
            retries += 1
            c = init.coeffs
            noise = rng.normal(size=c.shape) + 1j * rng.normal(size=c.shape)
            noise *= options.perturb * np.linalg.norm(c) / np.linalg.norm(noise)
            start = init.with_coeffs(c + noise)
            log.info("near-singular Newton system, restart %d from perturbed start", retries)
            continue
        sol.diagnostics["retries"] = retries
        return sol


def _newton(init: SpinorState, params: ProblemParams, options: SolverOptions,
            branch: int, mode: tuple[int, int, int], known: list[np.ndarray]) -> Solution:
    basis = init.basis
    x = to_real(init.coeffs)
    g = to_real(1j * init.coeffs)
    g /= np.linalg.norm(g)
    deflate = options.deflation_shift is not None and len(known) > 0
    history = []

    def merit(xv):
        r = float(np.linalg.norm(_residual_coeffs(basis, to_complex(xv), params)))
        if deflate:
            r *= _deflation(xv, known, options.deflation_shift, options.deflation_power)[0]
        return r

    for it in range(options.max_iter + 1):
        c = to_complex(x)
        F = _residual_coeffs(basis, c, params)
        rnorm = float(np.linalg.norm(F))
        history.append(rnorm)
        if rnorm <= options.tol * max(1.0, float(np.linalg.norm(c))):
            state = SpinorState(basis, c)
            return _make_solution(state, params, branch, mode, rnorm, it, True,
                                  {"history": history, "gauge": float(g @ x)})
        if it == options.max_iter:
            break
        J = jacobian_matrix(SpinorState(basis, c), params)
        n2 = J.shape[0]
        A = np.zeros((n2 + 1, n2 + 1))
        A[:n2, :n2] = J
        A[:n2, n2] = g
        A[n2, :n2] = g
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
        diag = np.abs(np.diag(lu))
        ratio = diag.min() / diag.max()
        if not ratio >= options.pivot_ratio:
            raise SingularSystemError(f"bordered Newton system near-singular (pivot ratio {ratio:.2e})")
        rhs = np.concatenate([-to_real(F), [-(g @ x)]])
        step = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)[:n2]
        if deflate:
            eta, glog = _deflation(x, known, options.deflation_shift, options.deflation_power)
            denom = 1.0 + glog @ step
            if abs(denom) > 1e-14:
                step = step / denom
        m0 = merit(x)
        s = 1.0
        while True:
            trial = x + s * step
            if merit(trial) < m0:
                x = trial
                break
            s *= options.backtrack
            if s < options.min_step:
                raise ConvergenceError(
                    f"line search failed at iteration {it} (residual {rnorm:.3e})", rnorm, it)
    raise ConvergenceError(
        f"no convergence after {options.max_iter} iterations (residual {rnorm:.3e})",
        rnorm, options.max_iter)


def _make_solution(state: SpinorState, params: ProblemParams, branch: int, mode,
                   rnorm: float, iterations: int, converged: bool, diag: dict) -> Solution:
    basis = state.basis
    c = state.coeffs
    plus = basis.eigenvalues > params.omega
    w = np.abs(basis.eigenvalues - params.omega) * np.abs(c) ** 2
    return Solution(
        state=state, params=params, branch=branch, mode=tuple(mode),
        action=_action_coeffs(basis, c, params), q=_q_coeffs(basis, c),
        residual=rnorm, x_norm=x_norm(state, params),
        x_norm_plus=float(np.sqrt(np.sum(w[plus]))), x_norm_minus=float(np.sqrt(np.sum(w[~plus]))),
        iterations=iterations, converged=converged, diagnostics=diag,
    )


def saddle_flow(init: SpinorState, params: ProblemParams, options: SolverOptions = SolverOptions(),
                history: list | None = None) -> SpinorState:
    """Explicit pseudo-gradient flow psi <- psi - tau (P+ - P-) grad_X I(psi).

    grad_X I = |D - omega|^{-1} F is the gradient for the X inner product, so
    the update is psi - tau (D - omega)^{-1} F(psi).  Every map involved is
    odd, hence flow(-psi) = -flow(psi).
    """
    basis = init.basis
    params.check(basis)
    inv = 1.0 / (basis.eigenvalues - params.omega)
    c = init.coeffs.copy()
    limit = 1e3 * max(np.linalg.norm(c), 1e-300)
    for _ in range(options.flow_max_steps):
        F = _residual_coeffs(basis, c, params)
        rnorm = float(np.linalg.norm(F))
        if history is not None:
            history.append(rnorm)
        if rnorm <= options.tol * max(1.0, float(np.linalg.norm(c))):
            break
        c = c - options.flow_step * inv * F
        if not np.linalg.norm(c) <= limit:
            raise SolverError("saddle flow diverged (norm grew beyond 1e3 x initial)")
    return SpinorState(basis, c)


def solve_branch(basis: BasisSet, params: ProblemParams, k: int,
                 options: SolverOptions = SolverOptions(),
                 known: list[np.ndarray] | None = None) -> Solution:
    """branch_init, optional saddle flow, then Newton."""
    params.check(basis)
    init = branch_init(basis, params, k)
    md = basis.dirac_modes[k - 1]
    start = saddle_flow(init, params, options) if options.flow else init
    return newton_solve(start, params, options, branch=k, mode=(md.m, md.n, md.sign), known=known)


def ladder(basis: BasisSet, params: ProblemParams, count: int,
           options: SolverOptions = SolverOptions()) -> list[Solution]:
    """Solutions on the first ``count`` available branches, in branch order.

    A branch that fails is reported as a non-converged Solution carrying the
    error message; the ladder raises only if every branch fails.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    params.check(basis)
    avail = available_branches(basis, params)
    if count > len(avail):
        raise BranchUnavailableError(f"only {len(avail)} branches available, {count} requested")
    out: list[Solution] = []
    known: list[np.ndarray] = []
    for k in avail[:count]:
        try:
            sol = solve_branch(basis, params, k, options, known=known)
        except (ConvergenceError, SingularSystemError) as exc:
            log.warning("branch %d failed: %s", k, exc)
            init = branch_init(basis, params, k)
            md = basis.dirac_modes[k - 1]
            sol = _make_solution(init, params, k, (md.m, md.n, md.sign), residual_norm(init, params),
                                 0, False, {"error": str(exc)})
        out.append(sol)
        if sol.converged:
            known.append(sol.state.coeffs)
    if not any(s.converged for s in out):
        raise SolverError("every branch of the ladder failed")
    for i, s in enumerate(out):
        dmin = min((phase_distance(s.state.coeffs, t.state.coeffs)
                    for j, t in enumerate(out) if j != i and t.converged), default=math.inf)
        s.diagnostics["min_distance"] = dmin
    return out
