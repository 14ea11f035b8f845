import numpy as np
import pytest

from poltomo.field import (BumpField, ScalarVolume, TensorField, apply_cutoff,
                           bump_phantom, components_to_matrix,
                           contract_components, make_cutoff, standard_phantom,
                           voxel_centers)


def small_phantom(n=16, scale=0.1):
    return standard_phantom(scale=scale).to_grid(n, 1.0)


def test_empty_bump_list_gives_zero_field():
    fld = bump_phantom(8, 1.0, 0.8, [])
    assert np.all(fld.comps == 0)


def test_isotropic_bump_components():
    fld = bump_phantom(16, 1.0, 0.8, [(np.zeros(3), 0.5, np.eye(3, dtype=complex))])
    assert np.array_equal(fld.comps[0], fld.comps[1])
    assert np.array_equal(fld.comps[0], fld.comps[2])
    assert np.all(fld.comps[3:] == 0)
    assert np.max(np.abs(fld.comps[0])) > 0


def test_imaginary_phantom_is_skew_hermitian():
    fld = standard_phantom(scale=0.1, imaginary=True).to_grid(16, 1.0)
    # symmetric + purely imaginary: f_ij = -conj(f_ji) voxelwise
    m = components_to_matrix(np.moveaxis(fld.comps, 0, -1))
    assert np.max(np.abs(m + np.conj(np.swapaxes(m, -1, -2)))) == 0


def test_bump_leak_rejected():
    with pytest.raises(ValueError):
        bump_phantom(8, 1.0, 0.5, [(np.array([0.4, 0, 0]), 0.2, np.eye(3))])
    with pytest.raises(ValueError):
        bump_phantom(8, 1.0, 0.8, [(np.zeros(3), 0.2, np.diag([1.0, 2.0, 3.0]) + np.diag([1], k=1))])


def test_sample_at_voxel_centers_exact():
    fld = small_phantom()
    c = voxel_centers(fld.n, fld.half_width)
    pts = np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1)
    vals = fld.sample_components(pts)
    assert np.max(np.abs(np.moveaxis(vals, -1, 0) - fld.comps)) < 1e-14


def test_sample_midpoint_is_mean():
    fld = small_phantom()
    c = voxel_centers(fld.n, fld.half_width)
    i = fld.n // 2
    mid = np.array([0.5 * (c[i] + c[i + 1]), c[i], c[i]])
    got = fld.sample(mid)
    want = 0.5 * (components_to_matrix(fld.comps[:, i, i, i])
                  + components_to_matrix(fld.comps[:, i + 1, i, i]))
    assert np.max(np.abs(got - want)) < 1e-14


def test_sample_outside_support_is_zero():
    fld = small_phantom()
    cut = fld.support_radius + np.sqrt(3.0) * fld.voxel_step()
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(50, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = dirs * (cut * 1.0001)
    assert np.all(fld.sample_components(pts) == 0)
    # far outside the cube too
    assert np.all(fld.sample(np.array([5.0, 5.0, 5.0])) == 0)


def test_sample_is_symmetric_matrix():
    fld = small_phantom()
    m = fld.sample(np.array([0.21, -0.11, 0.08]))
    assert np.array_equal(m, m.T)


def test_cutoff_plateau_and_support():
    chi = make_cutoff(0.8, 0.95)
    assert chi.profile(0.5) == 1.0
    assert chi.profile(0.8) == 1.0
    assert chi.profile(1.0) == 0.0
    assert chi.profile(0.95) == 0.0
    # midpoint symmetry of the transition profile
    assert abs(chi.profile(0.875) - 0.5) < 1e-12
    r = np.linspace(0, 1.2, 400)
    vals = chi.profile(r)
    assert np.all(vals >= 0) and np.all(vals <= 1)
    assert np.all(np.diff(vals) <= 1e-15)  # radially nonincreasing


def test_cutoff_validation():
    with pytest.raises(ValueError):
        make_cutoff(0.9, 0.8)
    with pytest.raises(ValueError):
        make_cutoff(0.0, 0.5)


def test_apply_cutoff_identity_on_supported_field():
    fld = small_phantom()  # supported in r0 = 0.8
    chi = make_cutoff(0.8, 0.95)
    out = apply_cutoff(chi, fld)
    assert np.array_equal(out.comps, fld.comps)
    assert out.support_radius == 0.95


def test_apply_cutoff_truncates_constant_component():
    n = 16
    comps = np.zeros((6, n, n, n), dtype=complex)
    comps[0] = 1.0
    fld = TensorField(n, 1.0, np.sqrt(3.0), comps)
    out = apply_cutoff(make_cutoff(0.5, 0.7), fld)
    c = voxel_centers(n, 1.0)
    X, Y, Z = np.meshgrid(c, c, c, indexing="ij")
    r = np.sqrt(X**2 + Y**2 + Z**2)
    assert np.all(out.comps[0][r >= 0.7] == 0)
    assert np.all(out.comps[0][r <= 0.5] == 1.0)


def test_contract_components_matches_matrix_form():
    rng = np.random.default_rng(1)
    c = rng.normal(size=(10, 6)) + 1j * rng.normal(size=(10, 6))
    xi = rng.normal(size=3)
    zeta = rng.normal(size=3)
    want = np.einsum("i,nij,j->n", xi, components_to_matrix(c), zeta)
    got = contract_components(c, xi, zeta)
    assert np.max(np.abs(got - want)) < 1e-12


def test_contract_components_batched_vectors():
    rng = np.random.default_rng(2)
    c = rng.normal(size=(5, 4, 6))
    xi = rng.normal(size=(5, 1, 3))
    zeta = rng.normal(size=(5, 1, 3))
    got = contract_components(c, xi, zeta)
    for i in range(5):
        want = np.einsum("j,njk,k->n", xi[i, 0], components_to_matrix(c[i]), zeta[i, 0])
        assert np.max(np.abs(got[i] - want)) < 1e-12


def test_bump_field_matches_grid_at_centers():
    bf = standard_phantom(scale=0.3)
    fld = bf.to_grid(24, 1.0)
    c = voxel_centers(24, 1.0)
    pts = np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1)
    vals = bf.sample_components(pts)
    assert np.max(np.abs(np.moveaxis(vals, -1, 0) - fld.comps)) < 1e-14


def test_scaled_and_peaks():
    fld = small_phantom(scale=1.0)
    peaks = fld.peak_magnitudes()
    assert abs(peaks["f11"] - np.max(np.abs(fld.comps[0]))) == 0
    half = fld.scaled(0.5)
    assert np.array_equal(half.comps, 0.5 * fld.comps)


def test_volume_rejects_non_finite():
    data = np.zeros((4, 4, 4), dtype=complex)
    data[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarVolume(4, 1.0, data)
