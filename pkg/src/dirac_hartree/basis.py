"""Dirac and Dirichlet eigenbases on the disk and their grid transforms.

Conventions
-----------
Dirac modes in angular channel ``m`` with energy sign ``s`` are

    psi(r, theta) = a * ( J_m(k r/R) e^{i m theta},
                          i s u J_{m+1}(k r/R) e^{i (m+1) theta} )

with ``u = lambda/|lambda|`` and eigenvalue ``s |lambda| k / R``; ``k`` is a
positive root of ``J_m(k) = s J_{m+1}(k)``.  Positive modes use channels
``m = -M..M``; negative modes use ``m = -M-1..M-1``, which is the image of the
positive window under ``U = sigma_1 C`` (so the truncated spectrum stays
symmetric).

Dirichlet modes are real: ``a J_l(j r/R) cos(l theta)`` and, for ``l >= 1``,
``a J_l(j r/R) sin(l theta)``, with ``l = 0..L``.

Grid arrays have shape ``(N_r, N_theta)``; spinor grid values carry a leading
component axis of length 2.  All transforms accept an optional leading batch
axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .specialfun import bessel_j_orders, dirac_secular_roots, dirichlet_roots

DEFAULT_M = 8
DEFAULT_N = 12
DEFAULT_N_D = 24
DEFAULT_N_R = 128
DEFAULT_N_THETA = 48


class BasisConfigError(ValueError):
    """Invalid truncation or grid parameters."""


@dataclass(frozen=True)
class Domain:
    R: float = 1.0

    def __post_init__(self):
        if not (self.R > 0 and math.isfinite(self.R)):
            raise BasisConfigError(f"disk radius must be positive, got {self.R}")

    @property
    def area(self) -> float:
        return math.pi * self.R ** 2


@dataclass(frozen=True)
class LatticeParameter:
    """The constant lambda of the matrix Lambda = diag(conj(lambda), lambda)."""

    lam: complex = 1.0 + 0.0j

    def __post_init__(self):
        if complex(self.lam) == 0:
            raise BasisConfigError("lattice parameter lambda must be nonzero")
        object.__setattr__(self, "lam", complex(self.lam))

    @property
    def modulus(self) -> float:
        return abs(self.lam)

    @property
    def phase(self) -> complex:
        return self.lam / abs(self.lam)

    def sigma_tilde(self) -> tuple[np.ndarray, np.ndarray]:
        """(Lambda sigma_1, Lambda sigma_2)."""
        lam_mat = np.diag([np.conj(self.lam), self.lam])
        s1 = np.array([[0, 1], [1, 0]], dtype=complex)
        s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
        return lam_mat @ s1, lam_mat @ s2


@dataclass(frozen=True)
class QuadGrid:
    """Tensor grid: Gauss-Legendre in r on [0, R], uniform in theta."""

    r: np.ndarray
    radial_weights: np.ndarray  # includes the Jacobian factor r
    theta: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.r.size, self.theta.size)

    @property
    def angular_weight(self) -> float:
        return 2 * math.pi / self.theta.size

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.radial_weights, np.full(self.theta.size, self.angular_weight))

    @classmethod
    def build(cls, R: float, n_r: int, n_theta: int) -> "QuadGrid":
        x, w = np.polynomial.legendre.leggauss(n_r)
        r = 0.5 * R * (x + 1)
        wr = 0.5 * R * w * r
        theta = 2 * math.pi * np.arange(n_theta) / n_theta
        for a in (r, wr, theta):
            a.setflags(write=False)
        return cls(r, wr, theta)


@dataclass(frozen=True)
class DiracMode:
    m: int
    n: int
    sign: int
    k: float
    eigenvalue: float
    norm: float

    @property
    def label(self) -> str:
        return f"({self.m:+d},{self.n},{'+' if self.sign > 0 else '-'})"


@dataclass(frozen=True)
class DirichletMode:
    m: int
    n: int
    kind: str  # "cos" or "sin"
    j: float
    mu: float
    norm: float


@dataclass(frozen=True, eq=False)
class DiracSpectrum:
    """Truncated Dirac spectrum without any quadrature grid.

    Mode norms here are the closed-form L^2 normalisations; a ``BasisSet``
    renormalises on its grid.
    """

    domain: Domain
    lattice: LatticeParameter
    M: int
    N: int
    dirac_modes: tuple[DiracMode, ...]
    eigenvalues: np.ndarray = field(repr=False)


def _channels(M: int) -> list[tuple[int, int]]:
    return [(m, 1) for m in range(-M, M + 1)] + [(m, -1) for m in range(-M - 1, M)]


def _mode_key(mode: DiracMode):
    return (abs(mode.eigenvalue), -mode.sign, mode.m, mode.n)


def dirac_spectrum(domain: Domain | None = None, lattice: LatticeParameter | None = None,
                   M: int = DEFAULT_M, N: int = DEFAULT_N) -> DiracSpectrum:
    """Eigenvalues s |lambda| k / R of all retained channels, sorted by modulus."""
    domain = domain or Domain()
    lattice = lattice or LatticeParameter()
    for name, value, low in (("M", M, 0), ("N", N, 1)):
        if int(value) != value or value < low:
            raise BasisConfigError(f"{name} must be an integer >= {low}, got {value}")
    R = domain.R
    modes = []
    for m, s in _channels(M):
        ks = dirac_secular_roots(m, s, N).as_array()
        top = max(abs(m - 1), abs(m + 2))
        J = bessel_j_orders(top, ks)
        jv = {q: _signed(J, q) for q in (m - 1, m, m + 1, m + 2)}
        # int_0^R J_q(k r/R)^2 r dr = R^2/2 (J_q(k)^2 - J_{q-1}(k) J_{q+1}(k))
        norms2 = math.pi * R ** 2 * (jv[m] ** 2 - jv[m - 1] * jv[m + 1]
                                     + jv[m + 1] ** 2 - jv[m] * jv[m + 2])
        for n, k in enumerate(ks, start=1):
            modes.append(DiracMode(m=m, n=n, sign=s, k=float(k),
                                   eigenvalue=s * lattice.modulus * float(k) / R,
                                   norm=1.0 / math.sqrt(norms2[n - 1])))
    modes.sort(key=_mode_key)
    ev = np.array([md.eigenvalue for md in modes])
    ev.setflags(write=False)
    return DiracSpectrum(domain, lattice, M, N, tuple(modes), ev)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BasisSet:
    domain: Domain
    lattice: LatticeParameter
    M: int
    N: int
    L: int
    N_d: int
    grid: QuadGrid
    dirac_modes: tuple[DiracMode, ...]
    dirichlet_modes: tuple[DirichletMode, ...]
    eigenvalues: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    # radial profiles of the two spinor components, (2, N_r, n), and the
    # angular harmonic carried by each component of each mode, (2, n)
    _profiles: np.ndarray = field(repr=False)
    _harmonics: np.ndarray = field(repr=False)
    _harm_min: int = field(repr=False)
    _harm_groups: tuple = field(repr=False)  # per component: ((hidx, mode idx), ...)
    _phase_table: np.ndarray = field(repr=False)  # e^{i h theta_j}, (n_h, N_theta)
    _scalar_profiles: np.ndarray = field(repr=False)  # (N_r, n_d)
    _scalar_angles: np.ndarray = field(repr=False)  # unique cos/sin rows, (n_u, N_theta)
    _scalar_groups: tuple = field(repr=False)  # ((angle idx, mode idx), ...)

    @property
    def n_dirac(self) -> int:
        return len(self.dirac_modes)

    @property
    def n_dirichlet(self) -> int:
        return len(self.dirichlet_modes)

    def truncation(self) -> dict:
        return {"M": self.M, "N": self.N, "L": self.L, "N_d": self.N_d,
                "N_r": self.grid.r.size, "N_theta": self.grid.theta.size}

    def index_of(self, m: int, n: int, sign: int) -> int:
        for i, mode in enumerate(self.dirac_modes):
            if mode.m == m and mode.n == n and mode.sign == sign:
                return i
        raise KeyError((m, n, sign))

    def partner_index(self, i: int) -> int:
        """Index of the U-image of mode i: channel -m-1, opposite sign."""
        mode = self.dirac_modes[i]
        return self.index_of(-mode.m - 1, mode.n, -mode.sign)

    # pointwise evaluation away from the quadrature grid

    def dirac_mode_values(self, i: int, r, theta) -> np.ndarray:
        """Both components of mode i at points (r, theta) (broadcast)."""
        mode = self.dirac_modes[i]
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        x = mode.k * r / self.domain.R
        order = max(abs(mode.m), abs(mode.m + 1))
        J = bessel_j_orders(order, x)
        jm = _signed(J, mode.m)
        jm1 = _signed(J, mode.m + 1)
        c1 = mode.norm * jm * np.exp(1j * mode.m * theta)
        c2 = (mode.norm * 1j * mode.sign * self.lattice.phase) * jm1 * np.exp(1j * (mode.m + 1) * theta)
        return np.stack([c1, c2])

    def dirichlet_mode_values(self, d: int, r, theta) -> np.ndarray:
        mode = self.dirichlet_modes[d]
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        J = bessel_j_orders(mode.m, mode.j * r / self.domain.R)[mode.m]
        ang = np.cos(mode.m * theta) if mode.kind == "cos" else np.sin(mode.m * theta)
        return mode.norm * J * ang


def _signed(J: np.ndarray, m: int) -> np.ndarray:
    """Select J_m from a table of nonnegative orders using J_{-m} = (-1)^m J_m."""
    if m >= 0:
        return J[m]
    return J[-m] * (-1.0 if m % 2 else 1.0)


def build_basis(domain: Domain | None = None, lattice: LatticeParameter | None = None,
                M: int = DEFAULT_M, N: int = DEFAULT_N, N_d: int = DEFAULT_N_D,
                N_r: int = DEFAULT_N_R, N_theta: int = DEFAULT_N_THETA,
                L: int | None = None) -> BasisSet:
    """Truncated Dirac and Dirichlet eigenbases on the disk of radius R."""
    domain = domain or Domain()
    lattice = lattice or LatticeParameter()
    if L is None:
        L = 2 * M + 2
    for name, value, low in (("M", M, 0), ("N", N, 1), ("N_d", N_d, 1), ("N_r", N_r, 1)):
        if int(value) != value or value < low:
            raise BasisConfigError(f"{name} must be an integer >= {low}, got {value}")
    if L < 2 * M + 2:
        raise BasisConfigError(f"Dirichlet angular order L={L} must be >= 2M+2={2 * M + 2}")
    if N_theta < 4 * M + 8:
        raise BasisConfigError(f"N_theta={N_theta} violates anti-aliasing rule N_theta >= 4M+8={4 * M + 8}")
    R = domain.R
    grid = QuadGrid.build(R, N_r, N_theta)
    wr = grid.radial_weights
    two_pi = 2 * math.pi

    # Dirac modes, renormalised on the grid
    spectrum = dirac_spectrum(domain, lattice, M, N)
    by_channel: dict[tuple[int, int], list[DiracMode]] = {}
    for md in spectrum.dirac_modes:
        by_channel.setdefault((md.m, md.sign), []).append(md)
    raw = []  # (mode, profile1, profile2)
    for (m, s), chan in by_channel.items():
        chan.sort(key=lambda md: md.n)
        ks = np.array([md.k for md in chan])
        order = max(abs(m), abs(m + 1))
        J = bessel_j_orders(order, np.outer(ks, grid.r / R))  # (order+1, N, N_r)
        jm = _signed(J, m)
        jm1 = _signed(J, m + 1)
        norms2 = two_pi * ((jm ** 2 + jm1 ** 2) @ wr)
        for i, md in enumerate(chan):
            a = 1.0 / math.sqrt(norms2[i])
            raw.append((replace(md, norm=a), a * jm[i], (a * 1j * s * lattice.phase) * jm1[i]))
    raw.sort(key=lambda t: _mode_key(t[0]))
    modes = tuple(t[0] for t in raw)
    profiles = np.zeros((2, N_r, len(modes)), dtype=complex)
    for i, (_, p1, p2) in enumerate(raw):
        profiles[0, :, i] = p1
        profiles[1, :, i] = p2
    harmonics = np.array([[md.m for md in modes], [md.m + 1 for md in modes]])
    hmin = -M - 1
    hmax = M + 1
    hs = np.arange(hmin, hmax + 1)
    phase_table = np.exp(1j * np.outer(hs, grid.theta))
    groups = []
    for c in range(2):
        gc = []
        for h in hs:
            idx = np.nonzero(harmonics[c] == h)[0]
            if idx.size:
                gc.append((int(h - hmin), _readonly(idx)))
        groups.append(tuple(gc))

    # Dirichlet modes
    sraw = []
    for ell in range(L + 1):
        table = dirichlet_roots(ell, N_d)
        js = table.as_array()
        J = bessel_j_orders(ell, np.outer(js, grid.r / R))[ell]  # (N_d, N_r)
        radial2 = (J ** 2) @ wr
        kinds = ("cos",) if ell == 0 else ("cos", "sin")
        for kind in kinds:
            ang2 = two_pi if ell == 0 else math.pi
            for n, jv in enumerate(js, start=1):
                a = 1.0 / math.sqrt(ang2 * radial2[n - 1])
                sraw.append((DirichletMode(m=ell, n=n, kind=kind, j=float(jv),
                                           mu=(float(jv) / R) ** 2, norm=a), a * J[n - 1]))
    sraw.sort(key=lambda t: (t[0].mu, t[0].m, t[0].kind, t[0].n))
    smodes = tuple(t[0] for t in sraw)
    sprof = np.stack([t[1] for t in sraw], axis=1)
    angle_keys = [(0, "cos")] + [(ell, kind) for ell in range(1, L + 1) for kind in ("cos", "sin")]
    angle_rows = np.array([np.cos(ell * grid.theta) if kind == "cos" else np.sin(ell * grid.theta)
                           for ell, kind in angle_keys])
    key_index = {key: u for u, key in enumerate(angle_keys)}
    mode_angle = np.array([key_index[(md.m, md.kind)] for md in smodes])
    sgroups = tuple((u, _readonly(np.nonzero(mode_angle == u)[0])) for u in range(len(angle_keys)))

    return BasisSet(
        domain=domain, lattice=lattice, M=M, N=N, L=L, N_d=N_d, grid=grid,
        dirac_modes=modes, dirichlet_modes=smodes,
        eigenvalues=_readonly(np.array([md.eigenvalue for md in modes])),
        mu=_readonly(np.array([md.mu for md in smodes])),
        _profiles=_readonly(profiles), _harmonics=_readonly(harmonics), _harm_min=hmin,
        _harm_groups=tuple(groups), _phase_table=_readonly(phase_table),
        _scalar_profiles=_readonly(sprof), _scalar_angles=_readonly(angle_rows),
        _scalar_groups=sgroups,
    )


# Transforms.  Coefficient arrays: (..., n); spinor grids: (..., 2, N_r, N_theta);
# scalar grids: (..., N_r, N_theta).

def synth_spinor(basis: BasisSet, coeffs) -> np.ndarray:
    """Grid values of sum_k c_k psi_k."""
    c = np.asarray(coeffs, dtype=complex)
    if c.shape[-1] != basis.n_dirac:
        raise ValueError(f"expected {basis.n_dirac} coefficients, got {c.shape[-1]}")
    batch = c.shape[:-1]
    c2 = c.reshape(-1, basis.n_dirac)
    n_r, n_t = basis.grid.shape
    n_h = basis._phase_table.shape[0]
    out = np.empty((c2.shape[0], 2, n_r, n_t), dtype=complex)
    for comp in range(2):
        prof = basis._profiles[comp]
        radial = np.zeros((c2.shape[0], n_r, n_h), dtype=complex)
        for hi, idx in basis._harm_groups[comp]:
            radial[:, :, hi] = c2[:, idx] @ prof[:, idx].T
        out[:, comp] = radial @ basis._phase_table
    return out.reshape(batch + (2, n_r, n_t))


def analyze_spinor(basis: BasisSet, values) -> np.ndarray:
    """Coefficients <field, psi_k> by quadrature on the basis grid."""
    v = np.asarray(values, dtype=complex)
    n_r, n_t = basis.grid.shape
    if v.shape[-3:] != (2, n_r, n_t):
        raise ValueError(f"grid mismatch: expected (..., 2, {n_r}, {n_t}), got {v.shape}")
    batch = v.shape[:-3]
    v2 = v.reshape((-1, 2, n_r, n_t))
    fourier = (v2 @ basis._phase_table.conj().T) * basis.grid.angular_weight
    fourier *= basis.grid.radial_weights[:, None]
    out = np.zeros((v2.shape[0], basis.n_dirac), dtype=complex)
    for comp in range(2):
        prof = basis._profiles[comp].conj()
        for hi, idx in basis._harm_groups[comp]:
            out[:, idx] += fourier[:, comp, :, hi] @ prof[:, idx]
    return out.reshape(batch + (basis.n_dirac,))


def synth_scalar(basis: BasisSet, coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.shape[-1] != basis.n_dirichlet:
        raise ValueError(f"expected {basis.n_dirichlet} coefficients, got {c.shape[-1]}")
    batch = c.shape[:-1]
    c2 = c.reshape(-1, basis.n_dirichlet)
    prof = basis._scalar_profiles
    n_r, n_t = basis.grid.shape
    radial = np.zeros((c2.shape[0], n_r, basis._scalar_angles.shape[0]))
    for u, idx in basis._scalar_groups:
        radial[:, :, u] = c2[:, idx] @ prof[:, idx].T
    out = radial @ basis._scalar_angles
    return out.reshape(batch + (n_r, n_t))


def analyze_scalar(basis: BasisSet, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    n_r, n_t = basis.grid.shape
    if v.shape[-2:] != (n_r, n_t):
        raise ValueError(f"grid mismatch: expected (..., {n_r}, {n_t}), got {v.shape}")
    batch = v.shape[:-2]
    v2 = v.reshape((-1, n_r, n_t))
    proj = (v2 @ basis._scalar_angles.T) * basis.grid.angular_weight
    proj *= basis.grid.radial_weights[:, None]
    prof = basis._scalar_profiles
    out = np.zeros((v2.shape[0], basis.n_dirichlet))
    for u, idx in basis._scalar_groups:
        out[:, idx] = proj[:, :, u] @ prof[:, idx]
    return out.reshape(batch + (basis.n_dirichlet,))


def boundary_residual(mode: DiracMode) -> float:
    """|J_m(k) - s J_{m+1}(k)| at the rim (angle independent for the disk ansatz)."""
    order = max(abs(mode.m), abs(mode.m + 1))
    J = bessel_j_orders(order, np.array([mode.k]))
    return float(abs(_signed(J, mode.m)[0] - mode.sign * _signed(J, mode.m + 1)[0]))


def boundary_projection_defect(basis: BasisSet, i: int, n_theta: int = 64) -> float:
    """max_theta |(1/2)(1 - sigma_tilde.t/|lambda|) psi_i| on r = R."""
    theta = 2 * math.pi * np.arange(n_theta) / n_theta
    vals = basis.dirac_mode_values(i, np.full(n_theta, basis.domain.R), theta)
    s1, s2 = basis.lattice.sigma_tilde()
    tx, ty = -np.sin(theta), np.cos(theta)
    st = (s1[None] * tx[:, None, None] + s2[None] * ty[:, None, None]) / basis.lattice.modulus
    proj = 0.5 * (np.eye(2)[None] - st)
    out = np.einsum("tab,bt->at", proj, vals)
    return float(np.max(np.abs(out)))
