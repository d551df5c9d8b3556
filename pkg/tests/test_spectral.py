import warnings

import numpy as np
import pytest

from esqpt.models import (ExtendedDicke, Lipkin, QuasispinBasis, RealSymmetricOperator,
                          build, build_quasispin_ops, dicke_block_tridiagonal, split_lambda)
from esqpt.spectral import (BasisMismatchError, DensityCurve, GridTooCoarseError,
                            NearDegeneracyWarning, SmoothingKernel, continuity_residual,
                            convolve_densities, count_below_block_tridiagonal, diagonalize,
                            eigenvalues, expectation_values, fidelity_loss, geometric_tensor,
                            lattice_slope, level_slopes, observable_density,
                            oscillatory_density, peres_lattice, smoothed_flow,
                            smoothed_level_density)

import oracles


def test_pauli_x_eigenvalues():
    b = diagonalize(RealSymmetricOperator.from_dense(np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert np.allclose(b.eigenvalues, [-1.0, 1.0])


def test_lipkin_small_matches_characteristic_polynomial():
    H = build(Lipkin(4, 0.3))
    b = diagonalize(H)
    assert np.allclose(b.eigenvalues, oracles.char_poly_roots(H.to_dense()), atol=1e-10)


def test_bundle_is_orthonormal_and_sign_fixed():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(40, 40))
    H = RealSymmetricOperator.from_dense(a + a.T)
    b = diagonalize(H)
    v = b.eigenvectors
    assert np.max(np.abs(v.T @ v - np.eye(40))) < 1e-12
    resid = H.to_dense() @ v - v * b.eigenvalues
    assert np.max(np.abs(resid)) < 1e-11 * max(1.0, np.max(np.abs(b.eigenvalues)))
    largest = v[np.argmax(np.abs(v), axis=0), np.arange(40)]
    assert np.all(largest > 0)


def test_diagonalize_is_bitwise_deterministic():
    H = build(Lipkin(60, 1.3, 0.5))
    a, b = diagonalize(H), diagonalize(H)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_single_level_peak_height():
    k = SmoothingKernel("gaussian", 0.2)
    grid = np.linspace(-2, 2, 401)
    curve = smoothed_level_density([0.0], k, grid)
    assert curve.values[200] == pytest.approx(1 / (0.2 * np.sqrt(2 * np.pi)), rel=1e-12)


def test_density_integrates_to_level_count():
    levels = eigenvalues(build(Lipkin(80, 1.5)))
    curve = smoothed_level_density(levels)
    assert curve.integral() == pytest.approx(levels.size, abs=1e-6)


def test_coarse_grid_rejected():
    with pytest.raises(GridTooCoarseError):
        smoothed_level_density([0.0], SmoothingKernel("gaussian", 0.1), np.linspace(-1, 1, 21))


def test_nonuniform_grid_rejected():
    with pytest.raises(ValueError):
        DensityCurve(np.array([0.0, 1.0, 3.0]), np.zeros(3))


def test_lipkin_density_peak_at_saddle():
    levels = eigenvalues(build(Lipkin(200, 2.0)))
    curve = smoothed_level_density(levels)
    sigma = curve.kernel.width
    interior = (curve.energies > levels.min() + 3 * sigma) & (curve.energies < levels.max() - 3 * sigma)
    peak = curve.energies[interior][np.argmax(curve.values[interior])]
    assert abs(peak + 100) < sigma


def test_slopes_zero_for_lambda_free_model():
    b = diagonalize(build(Lipkin(20, 0.0)))
    zero = RealSymmetricOperator.from_dense(np.zeros((21, 21)))
    assert np.all(level_slopes(b, zero) == 0)


def test_slopes_match_finite_differences():
    spec = Lipkin(50, 1.4, 0.3)
    H0, V = split_lambda(spec)
    b = diagonalize(H0 + V * spec.lam)
    slopes = level_slopes(b, V)
    h = 1e-5
    up = eigenvalues(H0 + V * (spec.lam + h))
    down = eigenvalues(H0 + V * (spec.lam - h))
    fd = (up - down) / (2 * h)
    gaps = np.diff(b.eigenvalues)
    isolated = np.ones(b.dim, bool)
    isolated[:-1] &= gaps > 1e-3
    isolated[1:] &= gaps > 1e-3
    assert isolated.sum() > 40
    assert np.max(np.abs(slopes - fd)[isolated]) < 1e-6


def test_slope_sum_rule():
    spec = Lipkin(40, 0.7, 1.0)
    H0, V = split_lambda(spec)
    b = diagonalize(build(spec))
    assert level_slopes(b, V).sum() == pytest.approx(np.trace(V.to_dense()), abs=1e-9)


def test_basis_mismatch_rejected():
    b = diagonalize(build(Lipkin(10, 1.0)))
    with pytest.raises(BasisMismatchError):
        expectation_values(b, build(Lipkin(12, 1.0)))


def test_flow_vanishes_without_lambda_dependence():
    levels = eigenvalues(build(Lipkin(30, 0.0)))
    k = SmoothingKernel("gaussian", 0.5)
    grid = np.linspace(-20, 20, 401)
    res = smoothed_flow([0.0, 0.1], [levels, levels], [np.zeros(31)] * 2, k, grid)
    assert np.all(res.flow == 0)
    assert np.isnan(res.rate[0, 0])          # far below the spectrum: masked


def _lipkin_flow(n_lam, step_frac):
    spec = Lipkin(100, 1.0)
    H0, V = split_lambda(spec)
    lams = np.linspace(1.4, 1.6, n_lam)
    levels, slopes = [], []
    for lam in lams:
        b = diagonalize(H0 + V * lam)
        levels.append(b.eigenvalues)
        slopes.append(level_slopes(b, V))
    k = SmoothingKernel("gaussian", 4.0)
    grid = np.arange(-150.0, 60.0, k.width * step_frac)
    return continuity_residual(smoothed_flow(lams, levels, slopes, k, grid))


def test_continuity_residual_shrinks_under_refinement():
    r = [_lipkin_flow(n, s) for n, s in ((3, 0.25), (5, 0.125), (9, 0.0625))]
    assert r[0] > r[1] > r[2]
    assert r[2] < 0.1 * r[0]


def test_dicke_flow_equals_observable_density():
    spec = ExtendedDicke(6, 1.0, 1.0, 0.8, 0.4, n_max=30)
    H0, V = split_lambda(spec)
    b = diagonalize(H0 + V * spec.lam)
    k = SmoothingKernel("gaussian", 0.3)
    grid = np.linspace(-6, 10, 641)
    flow = smoothed_flow([spec.lam], [b.eigenvalues], [level_slopes(b, V)], k, grid)
    assert np.allclose(flow.flow[0], observable_density(b, V, k, grid).values, atol=1e-12)


def test_identity_lattice_and_density():
    b = diagonalize(build(Lipkin(40, 1.2)))
    one = RealSymmetricOperator.from_dense(np.eye(41))
    lat = peres_lattice(b, one, "1")
    assert np.allclose(lat.expectations, 1.0)
    k = SmoothingKernel("gaussian", 1.0)
    grid = np.linspace(-40, 30, 701)
    assert np.allclose(observable_density(b, one, k, grid).values,
                       smoothed_level_density(b, k, grid).values, atol=1e-12)


def test_energy_observable_averages_to_energy():
    b = diagonalize(build(Lipkin(200, 2.0)))
    H = build(Lipkin(200, 2.0))
    k = SmoothingKernel("gaussian", 2.0)
    grid = np.linspace(-130, 90, 1101)
    ratio = observable_density(b, H, k, grid).values / smoothed_level_density(b, k, grid).values
    inside = (grid > b.eigenvalues.min() + 10) & (grid < b.eigenvalues.max() - 10)
    assert np.max(np.abs(ratio - grid)[inside]) < 0.5 * k.width


@pytest.mark.parametrize("name", ["Jx", "Jz", "-dH"])
def test_first_order_lattice_branches_merge_at_saddle(name):
    # between the upper minimum (-j) and the saddle two branches interleave;
    # outside that window neighbouring levels sit on one smooth curve
    spec = Lipkin(200, 0.08, 4.0)
    b = diagonalize(build(spec))
    ops = build_quasispin_ops(QuasispinBasis.from_size(200))
    A = ops.get(name) or split_lambda(spec)[1] * -1.0
    lat = peres_lattice(b, A, name)
    saddle = -0.82765 * 100
    e, a = lat.energies, lat.expectations

    def jump_ratio(lo, hi):
        s = a[(e > lo) & (e < hi)]
        return np.median(np.abs(np.diff(s))) / np.median(np.abs(s[2:] - s[:-2]))

    assert jump_ratio(-99.0, saddle - 1.5) > 10
    assert jump_ratio(saddle + 3, saddle + 30) < 1
    assert jump_ratio(-140, -101) < 1


def test_lattice_slope_largest_at_saddle():
    b = diagonalize(build(Lipkin(200, 2.0)))
    jz = build_quasispin_ops(QuasispinBasis.from_size(200))["Jz"]
    centers, slopes = lattice_slope(peres_lattice(b, jz, "Jz"))
    sigma = 5 * np.median(np.diff(b.eigenvalues))
    assert abs(centers[np.argmax(np.abs(slopes))] + 100) < sigma


def test_metric_zero_for_commuting_perturbation():
    b = diagonalize(build(Lipkin(20, 0.0)))
    jz = build_quasispin_ops(QuasispinBasis.from_size(20))["Jz"]
    assert np.allclose(geometric_tensor(b, jz), 0.0)


@pytest.mark.parametrize("lam", [-1.5, 0.0, 0.4, 2.0])
def test_two_level_metric(lam):
    sz = RealSymmetricOperator.from_dense(np.diag([1.0, -1.0]))
    H = RealSymmetricOperator.from_dense(np.array([[lam, 1.0], [1.0, -lam]]))
    g = geometric_tensor(diagonalize(H), sz, levels=0)[0]
    assert g == pytest.approx(oracles.two_level_metric(lam), rel=1e-12)


def test_metric_matches_overlap_loss():
    spec = Lipkin(30, 0.9, 0.2)
    H0, V = split_lambda(spec)
    h = 1e-4
    a = diagonalize(H0 + V * spec.lam)
    c = diagonalize(H0 + V * (spec.lam + h))
    for i in (0, 3, 10):
        g = geometric_tensor(a, V, levels=i)[0]
        loss = fidelity_loss(a.eigenvectors[:, i], c.eigenvectors[:, i])
        assert loss == pytest.approx(g * h * h, rel=1e-3)


def test_near_degeneracy_warns():
    H = RealSymmetricOperator.from_dense(np.diag([0.0, 1e-10, 1.0]))
    with pytest.warns(NearDegeneracyWarning):
        geometric_tensor(diagonalize(H), H, levels=0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        geometric_tensor(diagonalize(H), H, levels=2)


def test_convolution_with_delta_shifts():
    h = 0.01
    k = SmoothingKernel("gaussian", 0.1)
    rho = smoothed_level_density([0.0, 0.7], k, np.arange(-1, 2, h))
    delta = DensityCurve(np.arange(0.0, 0.5, h), np.r_[np.zeros(30), 1 / h, np.zeros(19)])
    out = convolve_densities(rho, delta)
    moved = smoothed_level_density([0.3, 1.0], k, out.energies)
    assert np.max(np.abs(out.values - moved.values)) < 1e-10


def test_convolving_ladders_gives_triangle():
    k = SmoothingKernel("gaussian", 0.05)
    h = 0.01
    grid = np.arange(-0.5, 9.5, h)
    ladder = smoothed_level_density(np.arange(8.0), k, grid)
    out = convolve_densities(ladder, ladder)
    # the self-convolution of two gaussians of width s has width s*sqrt(2)
    heights = [out.values[np.argmin(np.abs(out.energies - n))] * k.width * np.sqrt(4 * np.pi)
               for n in range(8)]
    assert np.allclose(heights, np.arange(1, 9), rtol=1e-6)


def test_product_spectrum_is_convolution():
    rng = np.random.default_rng(5)
    e1, e2 = rng.uniform(0, 3, 7), rng.uniform(0, 2, 5)
    k_fine = SmoothingKernel("gaussian", 0.1 / np.sqrt(2))
    h = 0.005
    g1, g2 = np.arange(-1, 4, h), np.arange(-1, 3, h)
    conv = convolve_densities(smoothed_level_density(e1, k_fine, g1),
                              smoothed_level_density(e2, k_fine, g2))
    product = (e1[:, None] + e2[None, :]).ravel()
    direct = smoothed_level_density(product, SmoothingKernel("gaussian", 0.1), conv.energies)
    inner = (conv.energies > 0) & (conv.energies < 5)
    assert np.max(np.abs(conv.values - direct.values)[inner]) < 1e-8


def test_convolution_rejects_mismatched_spacing():
    a = DensityCurve(np.linspace(0, 1, 11), np.ones(11))
    b = DensityCurve(np.linspace(0, 1, 21), np.ones(21))
    with pytest.raises(ValueError):
        convolve_densities(a, b)


def test_oscillatory_part_of_smooth_curve_is_zero():
    curve = smoothed_level_density([0.0, 1.0], SmoothingKernel("gaussian", 0.2),
                                   np.linspace(-2, 3, 201))
    assert np.all(oscillatory_density(curve, curve).values == 0)


def test_rabi_regime_band_stripes():
    # omega0 >> omega: levels bunch into bands omega0 apart, so the residual
    # against a broadly smoothed background alternates sign every omega0/2
    levels = eigenvalues(build(ExtendedDicke(6, 1.0, 30.0, 3.0, 0.0, n_max=400)))
    levels = levels[levels < 150]
    grid = np.linspace(-150, 220, 7401)
    exact = smoothed_level_density(levels, SmoothingKernel("gaussian", 1.0), grid)
    background = smoothed_level_density(levels, SmoothingKernel("gaussian", 10.0), grid)
    resid = oscillatory_density(exact, background)
    assert abs(resid.integral()) < 1e-3 * levels.size
    window = (grid > -80) & (grid < 100)
    flips = grid[window][np.flatnonzero(np.diff(np.sign(resid.values[window])))]
    assert len(flips) >= 10
    assert np.allclose(np.diff(flips), 15.0, atol=2.0)


def test_inertia_count_matches_dense():
    spec = ExtendedDicke(8, 1.0, 1.0, 1.1, 0.3)
    diag, off = dicke_block_tridiagonal(spec, 1, 40)
    pos = np.r_[0, np.cumsum([len(d) for d in diag])]
    dense = np.diag(np.concatenate(diag))
    for n, o in enumerate(off):
        dense[pos[n + 1]:pos[n + 2], pos[n]:pos[n + 1]] = o
        dense[pos[n]:pos[n + 1], pos[n + 1]:pos[n + 2]] = o.T
    levels = np.linalg.eigvalsh(dense)
    probes = np.linspace(levels.min() - 1, levels.min() + 30, 97)
    counts = count_below_block_tridiagonal(diag, off, probes)
    assert np.array_equal(counts, np.searchsorted(levels, probes))
