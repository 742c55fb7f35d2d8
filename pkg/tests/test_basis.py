import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.special as sp

from dirac_hartree.basis import (
    BasisConfigError,
    Domain,
    LatticeParameter,
    QuadGrid,
    analyze_scalar,
    analyze_spinor,
    boundary_projection_defect,
    boundary_residual,
    build_basis,
    dirac_spectrum,
    synth_scalar,
    synth_spinor,
)

K01 = 1.434695650819563  # lowest root of J_0 - J_1 (specialfun oracle, mpmath-checked)
J01 = 2.404825557695773


def _l2(basis, vals):
    w = basis.grid.weights
    return float(np.sqrt(np.sum(w * np.sum(np.abs(vals) ** 2, axis=0))))


def test_domain_and_lattice():
    assert Domain(2.0).area == math.pi * 4.0
    with pytest.raises(BasisConfigError):
        Domain(0.0)
    with pytest.raises(BasisConfigError):
        LatticeParameter(0)
    lat = LatticeParameter(3 + 4j)
    assert lat.modulus == 5.0
    assert lat.phase == pytest.approx((3 + 4j) / 5)
    s1, s2 = lat.sigma_tilde()
    # sigma~_j^2 = |lambda|^2 Id and Hermitian
    for s in (s1, s2):
        np.testing.assert_allclose(s @ s, 25 * np.eye(2))
        np.testing.assert_allclose(s, s.conj().T)


def test_quadrature_weights_sum_to_area():
    for R in (1.0, 0.5, 3.0):
        g = QuadGrid.build(R, 40, 24)
        assert abs(g.weights.sum() - math.pi * R ** 2) <= 1e-13 * math.pi * R ** 2
        assert g.shape == (40, 24)
        assert np.all((g.r > 0) & (g.r < R))


def test_single_channel_example():
    b = build_basis(M=0, N=1, N_d=4, N_r=32, N_theta=8)
    assert b.n_dirac == 2
    np.testing.assert_allclose(sorted(b.eigenvalues), [-K01, K01], rtol=1e-14)


def test_mode_counts_and_order(default_basis):
    b = default_basis
    assert b.n_dirac == 2 * (2 * b.M + 1) * b.N == 408
    assert b.n_dirichlet == (2 * b.L + 1) * b.N_d == 888
    keys = [(abs(md.eigenvalue), -md.sign, md.m, md.n) for md in b.dirac_modes]
    assert keys == sorted(keys)
    assert len({(md.m, md.n, md.sign) for md in b.dirac_modes}) == b.n_dirac
    assert np.all(np.diff(b.mu) >= 0)
    assert len({(d.m, d.n, d.kind) for d in b.dirichlet_modes}) == b.n_dirichlet
    assert b.mu[0] == pytest.approx(J01 ** 2, rel=1e-14)
    # positive window m in [-M, M]; negative window is its U-image
    plus = {md.m for md in b.dirac_modes if md.sign > 0}
    minus = {md.m for md in b.dirac_modes if md.sign < 0}
    assert plus == set(range(-b.M, b.M + 1))
    assert minus == {-m - 1 for m in plus}


def test_eigenvalue_symmetry_and_gap(default_basis):
    ev = np.sort(default_basis.eigenvalues)
    np.testing.assert_allclose(ev, -ev[::-1], rtol=0, atol=1e-12 * np.abs(ev).max())
    assert np.min(ev ** 2) >= 2 - 1e-12


def test_partner_index(default_basis):
    b = default_basis
    for i in range(0, b.n_dirac, 17):
        j = b.partner_index(i)
        assert b.eigenvalues[j] == pytest.approx(-b.eigenvalues[i], rel=1e-14)
        assert b.partner_index(j) == i
    i = b.index_of(0, 1, -1)
    j = b.index_of(-1, 1, 1)
    assert b.dirac_modes[i].k == b.dirac_modes[j].k == pytest.approx(3.1128644954171802, rel=1e-14)
    with pytest.raises(KeyError):
        b.index_of(99, 1, 1)


def test_radius_scaling():
    a = build_basis(Domain(1.0), M=1, N=3, N_d=4, N_r=48, N_theta=12)
    b = build_basis(Domain(0.5), M=1, N=3, N_d=4, N_r=48, N_theta=12)
    np.testing.assert_allclose(b.eigenvalues, 2 * a.eigenvalues, rtol=1e-14)
    np.testing.assert_allclose(b.mu, 4 * a.mu, rtol=1e-14)


def test_lattice_scaling():
    a = build_basis(M=1, N=3, N_d=4, N_r=48, N_theta=12)
    b = build_basis(lattice=LatticeParameter(2j), M=1, N=3, N_d=4, N_r=48, N_theta=12)
    np.testing.assert_allclose(b.eigenvalues, 2 * a.eigenvalues, rtol=1e-14)


def test_grid_gram_matrices(default_basis):
    b = default_basis
    G = analyze_spinor(b, synth_spinor(b, np.eye(b.n_dirac)))
    assert np.max(np.abs(G - np.eye(b.n_dirac))) < 1e-9
    S = analyze_scalar(b, synth_scalar(b, np.eye(b.n_dirichlet)))
    assert np.max(np.abs(S - np.eye(b.n_dirichlet))) < 1e-9


def test_single_mode_unit_norm(default_basis):
    b = default_basis
    for i in (0, 1, 57, b.n_dirac - 1):
        c = np.zeros(b.n_dirac, complex)
        c[i] = 1
        assert _l2(b, synth_spinor(b, c)) == pytest.approx(1.0, abs=1e-10)
        e = analyze_spinor(b, synth_spinor(b, c))
        np.testing.assert_allclose(e, c, atol=1e-10)
    for d in (0, 100, b.n_dirichlet - 1):
        c = np.zeros(b.n_dirichlet)
        c[d] = 1
        v = synth_scalar(b, c)
        assert math.sqrt(np.sum(b.grid.weights * v ** 2)) == pytest.approx(1.0, abs=1e-10)


def test_normalisation_matches_closed_form(small_basis):
    # int_0^1 J_m(kr)^2 r dr = 1/2 [J_m'(k)^2 + (1 - m^2/k^2) J_m(k)^2]
    def radial(m, k):
        return 0.5 * (sp.jvp(m, k) ** 2 + (1 - m * m / (k * k)) * sp.jv(m, k) ** 2)

    for md in small_basis.dirac_modes:
        total = 2 * math.pi * (radial(md.m, md.k) + radial(md.m + 1, md.k))
        assert md.norm == pytest.approx(1 / math.sqrt(total), rel=1e-10)


def test_zero_and_linearity(small_basis):
    b = small_basis
    assert np.all(synth_spinor(b, np.zeros(b.n_dirac)) == 0)
    assert np.all(synth_scalar(b, np.zeros(b.n_dirichlet)) == 0)
    rng = np.random.default_rng(3)
    c = rng.normal(size=b.n_dirac) + 1j * rng.normal(size=b.n_dirac)
    d = rng.normal(size=b.n_dirac) + 1j * rng.normal(size=b.n_dirac)
    a, s = 0.7 - 0.2j, -1.3
    lhs = synth_spinor(b, a * c + s * d)
    rhs = a * synth_spinor(b, c) + s * synth_spinor(b, d)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))


def test_round_trips_and_parseval(default_basis):
    b = default_basis
    rng = np.random.default_rng(11)
    for _ in range(5):
        c = rng.normal(size=b.n_dirac) + 1j * rng.normal(size=b.n_dirac)
        vals = synth_spinor(b, c)
        np.testing.assert_allclose(analyze_spinor(b, vals), c, atol=1e-10)
        assert _l2(b, vals) ** 2 == pytest.approx(np.sum(np.abs(c) ** 2), rel=1e-10)
        e = rng.normal(size=b.n_dirichlet)
        np.testing.assert_allclose(analyze_scalar(b, synth_scalar(b, e)), e, atol=1e-10)


def test_batch_transforms(small_basis):
    b = small_basis
    rng = np.random.default_rng(5)
    C = rng.normal(size=(3, b.n_dirac)) + 1j * rng.normal(size=(3, b.n_dirac))
    batch = synth_spinor(b, C)
    assert batch.shape == (3, 2) + b.grid.shape
    for i in range(3):
        np.testing.assert_allclose(batch[i], synth_spinor(b, C[i]), atol=1e-15)


def test_transform_shape_errors(small_basis):
    b = small_basis
    with pytest.raises(ValueError):
        synth_spinor(b, np.zeros(b.n_dirac + 1))
    with pytest.raises(ValueError):
        analyze_spinor(b, np.zeros((2, 3, 3)))
    with pytest.raises(ValueError):
        analyze_scalar(b, np.zeros((3, 3)))


def test_pointwise_values_match_grid(small_basis):
    b = small_basis
    g = b.grid
    rr, tt = np.meshgrid(g.r, g.theta, indexing="ij")
    for i in (0, 5, b.n_dirac - 1):
        c = np.zeros(b.n_dirac, complex)
        c[i] = 1
        np.testing.assert_allclose(b.dirac_mode_values(i, rr, tt), synth_spinor(b, c), atol=1e-13)
    for d in (0, 7, b.n_dirichlet - 1):
        c = np.zeros(b.n_dirichlet)
        c[d] = 1
        np.testing.assert_allclose(b.dirichlet_mode_values(d, rr, tt), synth_scalar(b, c), atol=1e-13)


def test_dirichlet_modes_vanish_on_rim(small_basis):
    b = small_basis
    th = np.linspace(0, 2 * np.pi, 13)
    for d in range(b.n_dirichlet):
        assert np.max(np.abs(b.dirichlet_mode_values(d, np.ones_like(th), th))) < 1e-12


def test_boundary_residuals(default_basis):
    b = default_basis
    assert max(boundary_residual(md) for md in b.dirac_modes) <= 1e-12
    md = b.dirac_modes[0]
    assert boundary_residual(replace(md, k=md.k + 0.1)) > 1e-3
    # the negative channel uses J_m + J_{m+1}
    neg = b.dirac_modes[b.index_of(0, 1, -1)]
    assert abs(sp.jv(0, neg.k) + sp.jv(1, neg.k)) < 1e-12


def test_boundary_projection(default_basis):
    b = default_basis
    assert max(boundary_projection_defect(b, i) for i in range(0, b.n_dirac, 7)) < 1e-10


def test_boundary_projection_complex_lambda():
    b = build_basis(lattice=LatticeParameter(0.6 + 0.8j), M=2, N=3, N_d=4, N_r=48, N_theta=16)
    assert max(boundary_projection_defect(b, i) for i in range(b.n_dirac)) < 1e-10


def test_spectrum_without_grid(default_basis):
    sp_ = dirac_spectrum(M=default_basis.M, N=default_basis.N)
    assert np.array_equal(sp_.eigenvalues, default_basis.eigenvalues)
    assert [(m.m, m.n, m.sign) for m in sp_.dirac_modes] == \
        [(m.m, m.n, m.sign) for m in default_basis.dirac_modes]


@pytest.mark.parametrize("kwargs", [
    dict(M=-1), dict(N=0), dict(N_d=0), dict(N_r=0), dict(M=2, N_theta=15),
    dict(M=2, L=5), dict(N=1.5),
])
def test_invalid_truncation(kwargs):
    base = dict(M=1, N=2, N_d=2, N_r=16, N_theta=16)
    base.update(kwargs)
    with pytest.raises(BasisConfigError):
        build_basis(**base)


def test_basis_arrays_read_only(small_basis):
    with pytest.raises(ValueError):
        small_basis.eigenvalues[0] = 0.0
