"""Dirac operator, Hartree potential, action functional and its derivatives.

The action on the truncated space is

    I(psi) = 1/2 sum_k (lambda_k - omega) |c_k|^2 + (kappa / 4) Q(psi),
    Q(psi) = int V(psi) |psi|^2,   V(psi) = (-Delta)^{-1/2} |psi|^2,

so that its critical points solve (D - omega) psi + kappa V(psi) psi = 0.
For kappa = -1 this is the usual 1/2 <(D - omega) psi, psi> - Q/4.

Real coordinates: a coefficient vector c in C^n is identified with
x = (Re c, Im c) in R^{2n}.  With <u, v> = sum_k u_k conj(v_k) the
directional derivative is dI(psi)[h] = Re <F(psi), h>, hence the gradient of
I with respect to x is exactly (Re F, Im F), with no extra factor of 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, analyze_scalar, analyze_spinor, synth_scalar, synth_spinor

GAP_GUARD = 1e-8


class ProblemError(ValueError):
    """Problem parameters incompatible with the basis (e.g. omega in the spectrum)."""


@dataclass(frozen=True)
class ProblemParams:
    omega: float = 0.0
    kappa: float = -1.0

    def check(self, basis: BasisSet) -> "ProblemParams":
        gap = float(np.min(np.abs(basis.eigenvalues - self.omega)))
        if gap <= GAP_GUARD:
            raise ProblemError(f"omega={self.omega} lies on the truncated spectrum (distance {gap:.2e})")
        return self


@dataclass(frozen=True, eq=False)
class SpinorState:
    basis: BasisSet = field(repr=False)
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.basis.n_dirac,):
            raise ValueError(f"expected {self.basis.n_dirac} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("spinor coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def with_coeffs(self, coeffs) -> "SpinorState":
        return SpinorState(self.basis, coeffs)

    def values(self) -> np.ndarray:
        return synth_spinor(self.basis, self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __add__(self, other: "SpinorState"):
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpinorState"):
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(scalar * self.coeffs)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ScalarField:
    basis: BasisSet = field(repr=False)
    coeffs: np.ndarray
    values: np.ndarray = field(repr=False)

    @classmethod
    def from_coeffs(cls, basis: BasisSet, coeffs) -> "ScalarField":
        c = np.array(coeffs, dtype=float)
        v = synth_scalar(basis, c)
        c.setflags(write=False)
        v.setflags(write=False)
        return cls(basis, c, v)


def to_real(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c)
    return np.concatenate([c.real, c.imag], axis=-1)


def to_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def inner(u, v) -> complex:
    """<u, v> = sum u_k conj(v_k) on coefficient vectors."""
    return complex(np.vdot(v, u))


# grid-level kernels on raw coefficient arrays

def density(basis: BasisSet, coeffs) -> np.ndarray:
    vals = synth_spinor(basis, coeffs)
    return np.sum(vals.real ** 2 + vals.imag ** 2, axis=-3)


def riesz_coeffs(basis: BasisSet, rho) -> np.ndarray:
    """Dirichlet coefficients of (-Delta)^{-1/2} rho, rho given on the grid."""
    return analyze_scalar(basis, rho) / np.sqrt(basis.mu)


def riesz_grid(basis: BasisSet, rho) -> np.ndarray:
    return synth_scalar(basis, riesz_coeffs(basis, rho))


def _potential_and_values(basis: BasisSet, coeffs):
    vals = synth_spinor(basis, coeffs)
    rho = np.sum(vals.real ** 2 + vals.imag ** 2, axis=0)
    return riesz_grid(basis, rho), rho, vals


def _residual_coeffs(basis: BasisSet, coeffs, params: ProblemParams) -> np.ndarray:
    V, _, vals = _potential_and_values(basis, coeffs)
    lin = (basis.eigenvalues - params.omega) * coeffs
    if params.kappa == 0:
        return lin
    return lin + params.kappa * analyze_spinor(basis, V[None] * vals)


def _q_coeffs(basis: BasisSet, coeffs) -> float:
    V, rho, _ = _potential_and_values(basis, coeffs)
    return float(np.sum(basis.grid.weights * V * rho))


def _action_coeffs(basis: BasisSet, coeffs, params: ProblemParams) -> float:
    quad = 0.5 * float(np.sum((basis.eigenvalues - params.omega) * np.abs(coeffs) ** 2))
    if params.kappa == 0:
        return quad
    return quad + 0.25 * params.kappa * _q_coeffs(basis, coeffs)


# public operations

def apply_dirac(state: SpinorState) -> SpinorState:
    return state.with_coeffs(state.basis.eigenvalues * state.coeffs)


def hartree_from_density(basis: BasisSet, rho) -> ScalarField:
    """V = sum_n mu_n^{-1/2} <rho, e_n> e_n for a density sampled on the grid."""
    return ScalarField.from_coeffs(basis, riesz_coeffs(basis, rho))


def hartree_potential(state: SpinorState) -> ScalarField:
    return hartree_from_density(state.basis, density(state.basis, state.coeffs))


def q_form(state: SpinorState) -> float:
    """Q(psi) = int V(psi) |psi|^2 by grid quadrature."""
    return _q_coeffs(state.basis, state.coeffs)


def action(state: SpinorState, params: ProblemParams) -> float:
    return _action_coeffs(state.basis, state.coeffs, params)


def residual(state: SpinorState, params: ProblemParams) -> SpinorState:
    """F(psi) = (D - omega) psi + kappa V(psi) psi in the Dirac basis."""
    return state.with_coeffs(_residual_coeffs(state.basis, state.coeffs, params))


def action_gradient(state: SpinorState, params: ProblemParams) -> np.ndarray:
    """Gradient of I in the real coordinates (Re c, Im c)."""
    return to_real(_residual_coeffs(state.basis, state.coeffs, params))


def jacobian_apply(state: SpinorState, direction: SpinorState, params: ProblemParams) -> SpinorState:
    """Real-linear derivative of F at psi applied to h:

    J[h] = (D - omega) h + kappa V(psi) h + kappa ((-Delta)^{-1/2} 2 Re<psi, h>) psi.
    """
    basis = state.basis
    psi = synth_spinor(basis, state.coeffs)
    h = synth_spinor(basis, direction.coeffs)
    rho = np.sum(np.abs(psi) ** 2, axis=0)
    V = riesz_grid(basis, rho)
    drho = 2 * np.sum((psi.conj() * h).real, axis=0)
    dV = riesz_grid(basis, drho)
    out = (basis.eigenvalues - params.omega) * direction.coeffs
    if params.kappa != 0:
        out = out + params.kappa * analyze_spinor(basis, V[None] * h + dV[None] * psi)
    return state.with_coeffs(out)


def jacobian_matrix(state: SpinorState, params: ProblemParams, chunk: int = 128) -> np.ndarray:
    """Dense real Jacobian of F in (Re c, Im c) coordinates, shape (2n, 2n).

    Assembled from the same quadrature as ``residual``, so it is the exact
    derivative of the discrete residual map.  The matrix is symmetric.
    """
    basis = state.basis
    n = basis.n_dirac
    c = state.coeffs
    shift = (basis.eigenvalues - params.omega).astype(complex)
    lin = np.diag(shift)
    if params.kappa == 0:
        return _realify(lin)
    psi = synth_spinor(basis, c)
    rho = np.sum(np.abs(psi) ** 2, axis=0)
    V = riesz_grid(basis, rho)
    lin = lin + params.kappa * _potential_matrix(basis, V)
    J = _realify(lin)

    # density-coupling term: (kappa/2) C^T diag(mu^{-1/2}) C, where column j of C
    # holds the Dirichlet coefficients of 2 Re(conj(psi) . phi_j) for direction j
    prof = basis._profiles
    harm = basis._harmonics
    hmin = basis._harm_min
    table = basis._phase_table
    C = np.empty((basis.n_dirichlet, 2 * n))
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        z = np.zeros((idx.size,) + basis.grid.shape, dtype=complex)
        for comp in range(2):
            phi = prof[comp][:, idx].T[:, :, None] * table[harm[comp, idx] - hmin][:, None, :]
            z += psi[comp].conj()[None] * phi
        dens = np.concatenate([2 * z.real, -2 * z.imag])
        coef = analyze_scalar(basis, dens)
        C[:, idx] = coef[: idx.size].T
        C[:, n + idx] = coef[idx.size:].T
    Cw = C / basis.mu[:, None] ** 0.25
    J += 0.5 * params.kappa * (Cw.T @ Cw)
    return J


def _realify(A: np.ndarray) -> np.ndarray:
    """Real 2n x 2n form of a complex-linear map acting on (Re c, Im c)."""
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def _potential_matrix(basis: BasisSet, V: np.ndarray) -> np.ndarray:
    """Matrix <V phi_l, phi_k> of multiplication by a real grid function."""
    n = basis.n_dirac
    n_t = basis.grid.theta.size
    vhat = np.fft.fft(V, axis=1) * basis.grid.angular_weight  # int V e^{-i h theta} dtheta
    vhat = vhat * basis.grid.radial_weights[:, None]
    out = np.zeros((n, n), dtype=complex)
    hmin = basis._harm_min
    for comp in range(2):
        prof = basis._profiles[comp]
        groups = basis._harm_groups[comp]
        for hk, ik in groups:
            pk = prof[:, ik].conj()
            for hl, il in groups:
                # integrand conj(phi_k) V phi_l picks the harmonic (h_k - h_l) of V
                w = vhat[:, (hk - hl) % n_t]
                out[np.ix_(ik, il)] += pk.T @ (w[:, None] * prof[:, il])
    return out


def spectral_split(state: SpinorState, params: ProblemParams) -> tuple[SpinorState, SpinorState]:
    """Components on the positive and negative spectral subspaces of D - omega."""
    pos = state.basis.eigenvalues > params.omega
    plus = np.where(pos, state.coeffs, 0)
    minus = np.where(pos, 0, state.coeffs)
    return state.with_coeffs(plus), state.with_coeffs(minus)


def x_norm(state: SpinorState, params: ProblemParams, include_l2: bool = False) -> float:
    """(sum_k |lambda_k - omega| |c_k|^2)^{1/2}; optionally with the L^2 term added."""
    w = np.abs(state.basis.eigenvalues - params.omega)
    if include_l2:
        w = w + 1.0
    return float(np.sqrt(np.sum(w * np.abs(state.coeffs) ** 2)))
