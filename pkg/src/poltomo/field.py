"""
Gridded scalar/tensor fields on the cube [-H, H]^3, smooth phantoms, and
the radial cutoff used by the iterative scheme.

The tensor field is symmetric 3x3 complex; only the six independent
components are stored, in the fixed order f11, f22, f33, f12, f13, f23.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

COMPONENTS = ("f11", "f22", "f33", "f12", "f13", "f23")

# index pairs (i, j) for the stored upper-triangle components
_COMP_IJ = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


def voxel_centers(n, half_width):
    step = 2.0 * half_width / n
    return -half_width + (np.arange(n) + 0.5) * step


def center_grid(n, half_width):
    """Meshgrid of voxel centers, three arrays of shape (n, n, n) indexed [ix, iy, iz]."""
    c = voxel_centers(n, half_width)
    return np.meshgrid(c, c, c, indexing="ij")


def _trilinear(padded, n, half_width, points):
    """Trilinear interpolation of zero-padded data at arbitrary points
    (..., 3); exact zero outside the padded cube.

    ``padded`` is either (n+2)^3 or (c, (n+2)^3); with a component axis the
    result gains a trailing component dimension.
    """
    points = np.asarray(points, dtype=float)
    step = 2.0 * half_width / n
    # continuous index into the padded array (one ghost layer of zeros)
    u = (points + half_width) / step + 0.5
    inside = np.all((u >= 0.0) & (u <= n + 1.0), axis=-1)
    u = np.clip(u, 0.0, n + 1.0 - 1e-12)
    i0 = np.floor(u).astype(np.intp)
    i0 = np.minimum(i0, n)
    w = u - i0
    # components (if any) live on the trailing axis so one gather fetches
    # contiguous per-voxel records
    multi = padded.ndim == 4
    ncomp = padded.shape[3] if multi else 1
    flat = padded.reshape(-1, ncomp)
    stride_y = padded.shape[2]
    stride_x = padded.shape[1] * stride_y
    base = (i0[..., 0] * stride_x + i0[..., 1] * stride_y + i0[..., 2]).ravel()
    wx, wy, wz = (w[..., 0].ravel(), w[..., 1].ravel(), w[..., 2].ravel())

    def grab(off, weight):
        return flat[base + off] * weight[:, None]

    out = (
        grab(0, (1 - wx) * (1 - wy) * (1 - wz))
        + grab(stride_x, wx * (1 - wy) * (1 - wz))
        + grab(stride_y, (1 - wx) * wy * (1 - wz))
        + grab(1, (1 - wx) * (1 - wy) * wz)
        + grab(stride_x + stride_y, wx * wy * (1 - wz))
        + grab(stride_x + 1, wx * (1 - wy) * wz)
        + grab(stride_y + 1, (1 - wx) * wy * wz)
        + grab(stride_x + stride_y + 1, wx * wy * wz)
    )
    out[~inside.ravel()] = 0
    out = out.reshape(inside.shape + (ncomp,))
    if not multi:
        out = out[..., 0]
    return out


@dataclass
class ScalarVolume:
    """Complex scalar field sampled at voxel centers of [-H, H]^3."""

    n: int
    half_width: float
    data: np.ndarray  # (n, n, n) complex, indexed [ix, iy, iz]
    _padded: np.ndarray = dc_field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=complex)
        if self.data.shape != (self.n, self.n, self.n):
            raise ValueError("data shape does not match grid size")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("volume contains non-finite values")

    @classmethod
    def zeros(cls, n, half_width):
        return cls(n=n, half_width=half_width, data=np.zeros((n, n, n), dtype=complex))

    def _pad(self):
        if self._padded is None:
            p = np.zeros((self.n + 2,) * 3, dtype=complex)
            p[1:-1, 1:-1, 1:-1] = self.data
            object.__setattr__(self, "_padded", p)
        return self._padded

    def sample_many(self, points):
        """Trilinear interpolation at points of shape (..., 3); zero outside."""
        return _trilinear(self._pad(), self.n, self.half_width, points)

    def voxel_step(self):
        return 2.0 * self.half_width / self.n


@dataclass
class TensorField:
    """Symmetric 3x3 complex tensor field; six stacked scalar components.

    ``support_radius`` declares the radius outside which the field vanishes;
    samples beyond it (plus one voxel diagonal) are exactly zero.
    """

    n: int
    half_width: float
    support_radius: float
    comps: np.ndarray  # (6, n, n, n) complex, order COMPONENTS
    _padded: np.ndarray = dc_field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.comps = np.ascontiguousarray(self.comps, dtype=complex)
        if self.comps.shape != (6, self.n, self.n, self.n):
            raise ValueError("comps must have shape (6, n, n, n)")
        if not np.all(np.isfinite(self.comps)):
            raise ValueError("tensor field contains non-finite values")

    @classmethod
    def zeros(cls, n, half_width, support_radius):
        return cls(n, half_width, support_radius, np.zeros((6, n, n, n), dtype=complex))

    def component(self, name):
        return ScalarVolume(self.n, self.half_width, self.comps[COMPONENTS.index(name)])

    def voxel_step(self):
        return 2.0 * self.half_width / self.n

    def _pad(self):
        if self._padded is None:
            # trailing component axis keeps the per-voxel records contiguous
            # for the interpolation gathers
            p = np.zeros((self.n + 2, self.n + 2, self.n + 2, 6), dtype=complex)
            p[1:-1, 1:-1, 1:-1, :] = np.moveaxis(self.comps, 0, -1)
            object.__setattr__(self, "_padded", p)
        return self._padded

    def sample_components(self, points):
        """Trilinear samples of the six components at points (..., 3) -> (..., 6).

        Exact zero beyond support_radius + one voxel diagonal.
        """
        points = np.asarray(points, dtype=float)
        vals = _trilinear(self._pad(), self.n, self.half_width, points)
        cut = self.support_radius + np.sqrt(3.0) * self.voxel_step()
        outside = np.sum(points * points, axis=-1) >= cut * cut
        vals[outside] = 0.0
        return vals

    def sample(self, x):
        """Full symmetric 3x3 matrix at a single point."""
        c = self.sample_components(np.asarray(x, dtype=float).reshape(1, 3))[0]
        return components_to_matrix(c)

    def peak_magnitudes(self):
        return {name: float(np.max(np.abs(self.comps[i]))) for i, name in enumerate(COMPONENTS)}

    def scaled(self, factor):
        return TensorField(self.n, self.half_width, self.support_radius, self.comps * factor)


def components_to_matrix(c):
    """(..., 6) component values -> (..., 3, 3) symmetric matrices."""
    c = np.asarray(c)
    m = np.zeros(c.shape[:-1] + (3, 3), dtype=complex)
    for k, (i, j) in enumerate(_COMP_IJ):
        m[..., i, j] = c[..., k]
        m[..., j, i] = c[..., k]
    return m


def contract_components(c, xi, zeta):
    """Bilinear contraction xi . f . zeta from component values.

    c has shape (..., 6) in COMPONENTS order; xi and zeta are real 3-vectors,
    or batches of vectors broadcastable against c[..., k].
    """
    xi = np.asarray(xi, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    out = 0
    for k, (i, j) in enumerate(_COMP_IJ):
        w = xi[..., i] * zeta[..., j]
        if i != j:
            w = w + xi[..., j] * zeta[..., i]
        out = out + c[..., k] * w
    return out


# ---------------------------------------------------------------------------
# cutoff


def _smooth_step(t):
    """C-infinity transition: 1 for t <= 0, 0 for t >= 1, strictly
    decreasing in between (standard partition-of-unity profile)."""
    t = np.asarray(t, dtype=float)
    phi_t = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    phi_1t = np.where(1 - t > 0, np.exp(-1.0 / np.maximum(1 - t, 1e-300)), 0.0)
    with np.errstate(invalid="ignore"):
        out = np.where(t <= 0, 1.0, np.where(t >= 1, 0.0, phi_1t / (phi_t + phi_1t)))
    return out


@dataclass(frozen=True)
class Cutoff:
    """Smooth radial truncation: identically 1 for |x| <= r0, 0 for |x| >= r1,
    radially nonincreasing, values in [0, 1]."""

    r0: float
    r1: float

    def profile(self, r):
        """Evaluate at radii r."""
        return _smooth_step((np.asarray(r, dtype=float) - self.r0) / (self.r1 - self.r0))

    def __call__(self, points):
        """Evaluate at points of shape (..., 3)."""
        r = np.sqrt(np.sum(np.asarray(points, dtype=float) ** 2, axis=-1))
        return self.profile(r)


def make_cutoff(r0, r1):
    if not (0 < r0 < r1):
        raise ValueError(f"need 0 < r0 < r1, got r0={r0}, r1={r1}")
    return Cutoff(r0=float(r0), r1=float(r1))


def apply_cutoff(chi, fld):
    """Multiply every tensor component pointwise by chi; the result is
    supported in |x| <= r1."""
    x, y, z = center_grid(fld.n, fld.half_width)
    w = chi.profile(np.sqrt(x * x + y * y + z * z))
    return TensorField(fld.n, fld.half_width, chi.r1, fld.comps * w[None])


# ---------------------------------------------------------------------------
# phantoms


def _bump_profile(t):
    """exp(1 - 1/(1 - t^2)) for |t| < 1, zero outside; peak value 1 at t = 0."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    t2 = np.where(inside, t * t, 0.0)
    with np.errstate(over="ignore"):
        vals = np.exp(1.0 - 1.0 / (1.0 - t2))
    return np.where(inside, vals, 0.0)


def _check_bumps(bumps, r0):
    checked = []
    for center, radius, amp in bumps:
        center = np.asarray(center, dtype=float)
        amp = np.asarray(amp, dtype=complex)
        if amp.shape != (3, 3):
            raise ValueError("bump amplitude must be a 3x3 matrix")
        if np.max(np.abs(amp - amp.T)) > 0:
            raise ValueError("bump amplitude must be symmetric")
        if np.linalg.norm(center) + radius > r0 + 1e-12:
            raise ValueError(
                f"bump at {center} with radius {radius} leaks outside the support ball r0={r0}"
            )
        checked.append((center, float(radius), amp))
    return checked


def _amp_components(amp):
    return np.array([amp[i, j] for (i, j) in _COMP_IJ], dtype=complex)


def bump_phantom(n, half_width, r0, bumps):
    """Sum-of-bumps tensor phantom on the grid.

    ``bumps`` is a list of (center, radius, 3x3 symmetric complex amplitude);
    every bump ball must lie inside |x| <= r0.
    """
    bumps = _check_bumps(bumps, r0)
    x, y, z = center_grid(n, half_width)
    comps = np.zeros((6, n, n, n), dtype=complex)
    for center, radius, amp in bumps:
        r = np.sqrt((x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2)
        prof = _bump_profile(r / radius)
        a = _amp_components(amp)
        comps += a[:, None, None, None] * prof[None]
    return TensorField(n, half_width, float(r0), comps)


class BumpField:
    """Analytic (grid-free) evaluation of the same sum-of-bumps phantom.

    Satisfies the field protocol used by the transport module
    (sample_components, support_radius); useful when interpolation error
    must be excluded.
    """

    def __init__(self, r0, bumps):
        self.support_radius = float(r0)
        self.bumps = _check_bumps(bumps, r0)

    def sample_components(self, points):
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1] + (6,), dtype=complex)
        for center, radius, amp in self.bumps:
            r = np.sqrt(np.sum((points - center) ** 2, axis=-1))
            prof = _bump_profile(r / radius)
            out += prof[..., None] * _amp_components(amp)
        return out

    def to_grid(self, n, half_width):
        return bump_phantom(n, half_width, self.support_radius, self.bumps)


def standard_phantom(scale=1.0, r0=0.8, imaginary=False):
    """Two-bump test phantom with mixed diagonal/off-diagonal structure.

    Peak component magnitude is ``scale``.  With ``imaginary=True`` the
    amplitudes are purely imaginary symmetric (the physically admissible
    skew-Hermitian case, giving unitary scattering).
    """
    a1 = np.array(
        [
            [1.0, 0.4, -0.2],
            [0.4, -0.6, 0.3],
            [-0.2, 0.3, 0.8],
        ]
    )
    a2 = np.array(
        [
            [-0.5, 0.2, 0.5],
            [0.2, 0.9, -0.3],
            [0.5, -0.3, -0.4],
        ]
    )
    unit = 1j if imaginary else 1.0
    bumps = [
        (np.array([0.22, 0.10, -0.14]), 0.38, scale * unit * a1),
        (np.array([-0.26, -0.18, 0.18]), 0.32, scale * unit * a2),
    ]
    return BumpField(r0, bumps)
