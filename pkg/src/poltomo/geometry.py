"""
Ray geometry: view frames, the six standard directions, and the sampling
of the data manifold (rays orthogonal to one of the fixed directions).

Conventions used everywhere else in the package:

  * a view direction ``omega`` is a unit 3-vector,
  * for each in-plane direction ``theta`` (unit, theta . omega = 0) the
    third frame vector is ``theta_perp = omega x theta`` (right-handed),
  * a ray is the line {x0 + s theta} with base point
    x0 = xi1 * theta_perp + xi2 * omega, so x0 . theta = 0.
"""

from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-12


def _as_unit(v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"{name} must be a unit vector (|v| = {nrm})")
    return v


def frame_basis(omega):
    """Deterministic right-handed orthonormal basis (a, b) of the plane
    orthogonal to ``omega``.

    Rule: if |omega . e3| < 0.9 take a = normalize(e3 x omega), else
    a = normalize(e1 x omega); then b = omega x a.  Stable across runs and
    never degenerate.
    """
    omega = _as_unit(omega, "omega")
    if abs(omega[2]) < 0.9:
        ref = np.array([0.0, 0.0, 1.0])
    else:
        ref = np.array([1.0, 0.0, 0.0])
    a = np.cross(ref, omega)
    a /= np.linalg.norm(a)
    b = np.cross(omega, a)
    return a, b


def project_transverse(theta, z):
    """Project a complex 3-vector onto the plane {z : z . theta = 0}.

    The dot product is bilinear (no conjugation), matching the transverse
    constraint of the polarization model.
    """
    theta = _as_unit(theta, "theta")
    z = np.asarray(z, dtype=complex)
    return z - (z @ theta) * theta


@dataclass(frozen=True)
class ViewFrame:
    """Orthonormal triple (theta, theta_perp, omega) with theta_perp = omega x theta."""

    omega: np.ndarray
    theta: np.ndarray
    theta_perp: np.ndarray

    @classmethod
    def from_omega_theta(cls, omega, theta):
        omega = _as_unit(omega, "omega")
        theta = _as_unit(theta, "theta")
        if abs(omega @ theta) > 1e-9:
            raise ValueError("theta must be orthogonal to omega")
        return cls(omega=omega, theta=theta, theta_perp=np.cross(omega, theta))


@dataclass(frozen=True)
class RayCoord:
    """A ray in the plane family of a view frame.

    Decodes to the base point x0 = xi1 * theta_perp + xi2 * omega; the ray
    itself is {x0 + s * theta}.
    """

    frame: ViewFrame
    xi1: float
    xi2: float

    def base_point(self):
        return self.xi1 * self.frame.theta_perp + self.xi2 * self.frame.omega


def standard_directions():
    """The six fixed view directions: the three axes and the three
    diagonal bisectors (e_i + e_j)/sqrt(2)."""
    s = 1.0 / np.sqrt(2.0)
    return np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [s, s, 0.0],
            [s, 0.0, s],
            [0.0, s, s],
        ]
    )


def grid_centers(m, half_width):
    """m uniformly spaced cell centers covering [-half_width, half_width]."""
    step = 2.0 * half_width / m
    return -half_width + (np.arange(m) + 0.5) * step


@dataclass(frozen=True)
class ViewSet:
    """The discrete sampling of the six-view data manifold.

    Per view: K in-plane angles theta_k = cos(2 pi k / K) a + sin(2 pi k / K) b
    with (a, b) = frame_basis(omega), M_slice offsets xi2 and M_det detector
    positions xi1, both on uniform center grids over [-H, H].
    """

    omegas: np.ndarray  # (6, 3)
    angles_per_view: int
    detector_count: int
    slice_count: int
    half_width: float

    @property
    def n_views(self):
        return self.omegas.shape[0]

    def angles(self):
        k = np.arange(self.angles_per_view)
        return 2.0 * np.pi * k / self.angles_per_view

    def theta(self, view_index, k):
        a, b = frame_basis(self.omegas[view_index])
        phi = 2.0 * np.pi * k / self.angles_per_view
        return np.cos(phi) * a + np.sin(phi) * b

    def frame(self, view_index, k):
        return ViewFrame.from_omega_theta(self.omegas[view_index], self.theta(view_index, k))

    def xi1_centers(self):
        return grid_centers(self.detector_count, self.half_width)

    def xi2_centers(self):
        return grid_centers(self.slice_count, self.half_width)

    def detector_spacing(self):
        return 2.0 * self.half_width / self.detector_count


def standard_views(K, M, half_width):
    """Build the six-direction ViewSet with K angles and M detectors/slices
    per view.

    K must be even (so every angle grid contains both orientations of each
    line) and at least 8; M at least 8.
    """
    if K % 2 != 0 or K < 8:
        raise ValueError(f"K must be even and >= 8, got {K}")
    if M < 8:
        raise ValueError(f"M must be >= 8, got {M}")
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    return ViewSet(
        omegas=standard_directions(),
        angles_per_view=int(K),
        detector_count=int(M),
        slice_count=int(M),
        half_width=float(half_width),
    )
