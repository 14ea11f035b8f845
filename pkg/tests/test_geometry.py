import numpy as np
import pytest

from poltomo.geometry import (RayCoord, ViewFrame, frame_basis, grid_centers,
                              project_transverse, standard_directions,
                              standard_views)


def test_standard_directions_exact():
    d = standard_directions()
    s = 1.0 / np.sqrt(2.0)
    assert np.array_equal(d[0], [1.0, 0.0, 0.0])
    assert np.array_equal(d[1], [0.0, 1.0, 0.0])
    assert np.array_equal(d[2], [0.0, 0.0, 1.0])
    assert np.allclose(d[3], [s, s, 0.0], atol=0)
    assert np.allclose(d[4], [s, 0.0, s], atol=0)
    assert np.allclose(d[5], [0.0, s, s], atol=0)


def test_frame_basis_canonical_e3():
    a, b = frame_basis(np.array([0.0, 0.0, 1.0]))
    # e3 hits the fallback branch: a = normalize(e1 x e3) = -e2, b = e3 x a = e1
    assert np.allclose(np.cross(a, b), [0, 0, 1], atol=1e-15)
    assert abs(a @ b) < 1e-15


@pytest.mark.parametrize("omega", standard_directions())
def test_frame_basis_orthonormal_right_handed(omega):
    a, b = frame_basis(omega)
    assert abs(np.linalg.norm(a) - 1) < 1e-12
    assert abs(np.linalg.norm(b) - 1) < 1e-12
    assert abs(a @ omega) < 1e-12
    assert abs(b @ omega) < 1e-12
    assert np.allclose(np.cross(a, b), omega, atol=1e-12)


def test_frame_basis_rejects_non_unit():
    with pytest.raises(ValueError):
        frame_basis(np.array([1.0, 1.0, 0.0]))


def test_project_transverse_coordinate_cases():
    out = project_transverse(np.array([1.0, 0.0, 0.0]), np.array([1.0, 2.0, 3.0]))
    assert np.allclose(out, [0, 2, 3], atol=0)
    theta = np.array([0.0, 0.0, 1.0])
    out = project_transverse(theta, np.array([1j, 1.0, 5j]))
    assert np.allclose(out, [1j, 1.0, 0.0], atol=0)
    # theta itself is in the kernel
    assert np.allclose(project_transverse(theta, theta.astype(complex)), 0, atol=1e-15)


def test_projector_idempotent_on_random_vectors():
    rng = np.random.default_rng(7)
    for omega in standard_directions():
        a, _ = frame_basis(omega)
        for _ in range(5):
            z = rng.normal(size=3) + 1j * rng.normal(size=3)
            w = project_transverse(a, z)
            assert abs(w @ a) < 1e-12
            assert np.max(np.abs(project_transverse(a, w) - w)) < 1e-12


def test_ray_coord_round_trip():
    views = standard_views(12, 8, 1.0)
    rng = np.random.default_rng(3)
    for vi in range(6):
        fr = views.frame(vi, 5)
        xi1, xi2 = rng.uniform(-1, 1, 2)
        x0 = RayCoord(fr, xi1, xi2).base_point()
        assert abs(x0 @ fr.theta) < 1e-12
        # re-encode by projection onto the frame
        assert abs(x0 @ fr.theta_perp - xi1) < 1e-12
        assert abs(x0 @ fr.omega - xi2) < 1e-12


def test_view_frames_orthonormal():
    views = standard_views(8, 8, 1.0)
    for vi in range(6):
        for k in range(8):
            fr = views.frame(vi, k)
            m = np.stack([fr.theta, fr.theta_perp, fr.omega])
            assert np.allclose(m @ m.T, np.eye(3), atol=1e-12)
            assert np.allclose(np.cross(fr.omega, fr.theta), fr.theta_perp, atol=1e-12)


def test_angle_grid_uniform():
    views = standard_views(90, 8, 1.0)
    ang = views.angles()
    assert np.allclose(np.diff(ang), 2 * np.pi / 90, atol=1e-14)
    # consecutive thetas separated by exactly the grid step (chord check)
    t0, t1 = views.theta(0, 0), views.theta(0, 1)
    assert abs(np.arccos(np.clip(t0 @ t1, -1, 1)) - 2 * np.pi / 90) < 1e-12


def test_grid_centers_layout():
    c = grid_centers(4, 1.0)
    assert np.allclose(c, [-0.75, -0.25, 0.25, 0.75], atol=1e-15)


def test_standard_views_validation():
    with pytest.raises(ValueError):
        standard_views(9, 8, 1.0)  # odd K
    with pytest.raises(ValueError):
        standard_views(6, 8, 1.0)  # K too small
    with pytest.raises(ValueError):
        standard_views(8, 4, 1.0)  # M too small
    with pytest.raises(ValueError):
        standard_views(8, 8, -1.0)


def test_view_frame_rejects_non_orthogonal():
    with pytest.raises(ValueError):
        ViewFrame.from_omega_theta(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))
