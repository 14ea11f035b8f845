"""
2D filtered backprojection on slice sinograms, slice-by-slice assembly of
3D volumes per view, and a projection-slice (Fourier) inversion used as an
independent cross-check.

The inversion formula (a Hilbert transform followed by d/ds, then angular
averaging with weight 1/4pi) is realized per angle as the single spectral
multiplier |k| (ramp filter) after 4x zero padding.  Data is symmetrized
over ray orientation first; both orientations then contribute to the
backprojection sum.
"""

from dataclasses import dataclass

import numpy as np

from .field import ScalarVolume
from .geometry import frame_basis, grid_centers


@dataclass
class SliceSinogram:
    """Parallel-beam data in one plane: data[angle, detector], complex.

    Angles are uniform over the full circle (2 pi k / K); detector centers
    are uniform over [-half_width, half_width].
    """

    data: np.ndarray  # (K, M)
    half_width: float

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 2:
            raise ValueError("slice sinogram must be 2D (angles x detectors)")
        if self.data.shape[0] < 8 or self.data.shape[0] % 2 != 0:
            raise ValueError("need an even number of angles >= 8")

    @property
    def n_angles(self):
        return self.data.shape[0]

    @property
    def n_det(self):
        return self.data.shape[1]

    def spacing(self):
        return 2.0 * self.half_width / self.n_det


def symmetrize(g):
    """Average each ray with its reversed orientation: the angle shifts by
    pi (K/2 grid steps) and the detector coordinate flips sign."""
    K = g.shape[0]
    flipped = np.roll(g, -K // 2, axis=0)[:, ::-1]
    return 0.5 * (g + flipped)


def ramp_multiplier(npad, spacing, apodize=False):
    """|k| frequency multiplier on the padded detector grid; optional
    raised-cosine rolloff over the top 20% of the band."""
    k = 2.0 * np.pi * np.fft.fftfreq(npad, d=spacing)
    filt = np.abs(k)
    if apodize:
        kmax = np.max(filt)
        t = np.clip((filt / kmax - 0.8) / 0.2, 0.0, 1.0)
        filt = filt * (0.5 * (1.0 + np.cos(np.pi * t)))
    return filt


def _filter_rows(g, spacing, pad_factor=4, apodize=False):
    """Ramp-filter each angle's detector row.  Returns the filtered rows
    reordered to a contiguous detector window extending beyond [-H, H],
    plus the coordinate of its first sample."""
    K, M = g.shape
    P = pad_factor * M
    gpad = np.zeros((K, P), dtype=complex)
    gpad[:, :M] = g
    q = np.fft.ifft(np.fft.fft(gpad, axis=1) * ramp_multiplier(P, spacing)[None, :], axis=1)
    # circular index m >= P/2 corresponds to detector coordinate s - P*spacing
    half = P // 2
    ext = np.concatenate([q[:, half:], q[:, :half]], axis=1)
    s0 = -g.shape[1] * spacing / 2.0 + 0.5 * spacing - half * spacing
    return ext, s0


def invert_slice(g: SliceSinogram, pad_factor=4, apodize=False):
    """Filtered backprojection: returns the (M, M) image on the grid of
    cell centers over [-H, H]^2, image[i, j] = f(p_i, q_j)."""
    K, M = g.n_angles, g.n_det
    spacing = g.spacing()
    gs = symmetrize(g.data)
    ext, s0 = _filter_rows(gs, spacing, pad_factor=pad_factor, apodize=apodize)

    c = grid_centers(M, g.half_width)
    P, Q = np.meshgrid(c, c, indexing="ij")
    phis = 2.0 * np.pi * np.arange(K) / K
    img = np.zeros((M, M), dtype=complex)
    nmax = ext.shape[1] - 2
    for k in range(K):
        # theta = (cos, sin), theta_perp = (-sin, cos); detector coord s = x . theta_perp
        s = -P * np.sin(phis[k]) + Q * np.cos(phis[k])
        t = (s - s0) / spacing
        i0 = np.clip(np.floor(t).astype(np.intp), 0, nmax)
        w = t - i0
        img += ext[k, i0] * (1.0 - w) + ext[k, i0 + 1] * w
    return img * (2.0 * np.pi / K) / (4.0 * np.pi)


def invert_slice_fourier(g: SliceSinogram, pad_factor=4):
    """Projection-slice inversion: populate the 2D spectrum from 1D
    transforms of the projections (nearest angle, linear in radius), then
    inverse transform.  Validator for invert_slice."""
    K, M = g.n_angles, g.n_det
    spacing = g.spacing()
    gs = symmetrize(g.data)
    P = pad_factor * M
    gpad = np.zeros((K, P), dtype=complex)
    gpad[:, :M] = gs
    kfreq = 2.0 * np.pi * np.fft.fftfreq(P, d=spacing)
    s_first = -g.half_width + 0.5 * spacing
    # ghat(p1) = integral e^{+i p1 xi} g dxi, sampled on the padded grid
    ghat = spacing * np.exp(1j * kfreq * s_first)[None, :] * (P * np.fft.ifft(gpad, axis=1))
    order = np.argsort(kfreq)
    kf_sorted = kfreq[order]
    ghat_sorted = ghat[:, order]

    # target Cartesian frequency grid of the M x M image
    pf = 2.0 * np.pi * np.fft.fftfreq(M, d=spacing)
    PX, PY = np.meshgrid(pf, pf, indexing="ij")
    r = np.hypot(PX, PY)
    beta = np.arctan2(PY, PX)
    # p points along theta_perp(phi), i.e. phi = beta - pi/2
    phi = np.mod(beta - 0.5 * np.pi, 2.0 * np.pi)
    knear = np.rint(phi * K / (2.0 * np.pi)).astype(int) % K

    uhat = np.zeros((M, M), dtype=complex)
    for k in range(K):
        mask = knear == k
        if not np.any(mask):
            continue
        row = ghat_sorted[k]
        uhat[mask] = (
            np.interp(r[mask], kf_sorted, row.real)
            + 1j * np.interp(r[mask], kf_sorted, row.imag)
        )
    uhat /= (2.0 * np.pi) ** 2

    # u(x) = integral uhat(p) e^{-i p x} dp, on the cell-center grid
    dp = 2.0 * np.pi / (M * spacing)
    x_first = -g.half_width + 0.5 * spacing
    phase = np.exp(-1j * pf * x_first)
    img = np.fft.fft2(uhat * phase[:, None] * phase[None, :]) * dp * dp
    return img


def _trilinear_rect(padded, sizes, half_width, pts):
    """Trilinear interpolation on a rectangular grid of cell centers over
    [-H, H] per axis; ``padded`` carries one ghost layer of zeros."""
    pts = np.asarray(pts, dtype=float)
    idx = []
    wts = []
    inside = np.ones(pts.shape[:-1], dtype=bool)
    for ax in range(3):
        step = 2.0 * half_width / sizes[ax]
        u = (pts[..., ax] + half_width) / step + 0.5
        inside &= (u >= 0.0) & (u <= sizes[ax] + 1.0)
        u = np.clip(u, 0.0, sizes[ax] + 1.0 - 1e-12)
        i0 = np.minimum(np.floor(u).astype(np.intp), sizes[ax])
        idx.append(i0)
        wts.append(u - i0)
    ix, iy, iz = idx
    wx, wy, wz = wts
    out = (
        padded[ix, iy, iz] * (1 - wx) * (1 - wy) * (1 - wz)
        + padded[ix + 1, iy, iz] * wx * (1 - wy) * (1 - wz)
        + padded[ix, iy + 1, iz] * (1 - wx) * wy * (1 - wz)
        + padded[ix, iy, iz + 1] * (1 - wx) * (1 - wy) * wz
        + padded[ix + 1, iy + 1, iz] * wx * wy * (1 - wz)
        + padded[ix + 1, iy, iz + 1] * wx * (1 - wy) * wz
        + padded[ix, iy + 1, iz + 1] * (1 - wx) * wy * wz
        + padded[ix + 1, iy + 1, iz + 1] * wx * wy * wz
    )
    return np.where(inside, out, 0)


def invert_volume(sino, view_index, output_n=None, pad_factor=4, apodize=False):
    """Slice-by-slice 3D inversion of one view's scalar data.

    Each slice offset xi2 yields a 2D reconstruction in the plane spanned
    by the view's in-plane basis (a, b); the slab stack is then resampled
    onto the canonical cube grid (trilinear; exact at nodes for axis views
    when grids coincide).
    """
    views = sino.views
    if not (0 <= view_index < views.n_views):
        raise IndexError(f"view_index {view_index} out of range")
    block = sino.data[view_index]  # (K, Ms, Md)
    K, Ms, Md = block.shape
    H = views.half_width
    slab = np.empty((Ms, Md, Md), dtype=complex)
    for j in range(Ms):
        slab[j] = invert_slice(
            SliceSinogram(block[:, j, :], H), pad_factor=pad_factor, apodize=apodize
        )

    omega = views.omegas[view_index]
    a, b = frame_basis(omega)
    n = output_n if output_n is not None else Md
    c = grid_centers(n, H)
    X, Y, Z = np.meshgrid(c, c, c, indexing="ij")
    pts = np.stack([X, Y, Z], axis=-1)
    coords = np.stack([pts @ omega, pts @ a, pts @ b], axis=-1)

    padded = np.zeros((Ms + 2, Md + 2, Md + 2), dtype=complex)
    padded[1:-1, 1:-1, 1:-1] = slab
    vol = _trilinear_rect(padded, (Ms, Md, Md), H, coords)
    return ScalarVolume(n=n, half_width=H, data=vol)
