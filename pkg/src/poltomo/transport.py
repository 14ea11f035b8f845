"""
Forward model: integrate the 2x2 matrix transport system along rays.

For a ray with frame (theta, theta_perp, omega) the propagator solves
mu'(s) = F(x0 + s theta) mu(s) with mu = Id where the ray enters the field
support; the exit value is the scattering matrix.  The generator is

    F = [[w.f.w,  w.f.tp],
         [tp.f.w, tp.f.tp]]     (w = omega, tp = theta_perp)

with the bilinear (non-conjugating) contraction.  Only the (1,1) entry of
the scattering matrix constitutes the measured data, but the full matrix is
available for invariant checks.

Any object exposing ``sample_components(points) -> (..., 6)`` and
``support_radius`` can serve as the field (gridded or analytic).
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .field import contract_components
from .geometry import ViewSet, frame_basis

KIND_S11 = "S11"
KIND_CLASSICAL = "classical"
KIND_RESIDUAL = "residual"


@dataclass
class Sinogram:
    """Complex data over the six-view ray family: data[view, angle, slice, detector]."""

    views: ViewSet
    kind: str
    data: np.ndarray

    def __post_init__(self):
        v = self.views
        expected = (v.n_views, v.angles_per_view, v.slice_count, v.detector_count)
        if self.data.shape != expected:
            raise ValueError(f"sinogram shape {self.data.shape} != {expected}")

    @classmethod
    def zeros(cls, views, kind):
        v = views
        shape = (v.n_views, v.angles_per_view, v.slice_count, v.detector_count)
        return cls(views=views, kind=kind, data=np.zeros(shape, dtype=complex))


def thread_count():
    """Worker count for ray-parallel loops; PTOMO_THREADS overrides."""
    env = os.environ.get("PTOMO_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _parallel_over(items, fn):
    """Run fn(item) for each item; items write to disjoint output slots, so
    thread count cannot change results."""
    nt = thread_count()
    if nt == 1:
        for it in items:
            fn(it)
    else:
        with ThreadPoolExecutor(max_workers=nt) as pool:
            list(pool.map(fn, items))


def local_F(f_mat, frame):
    """2x2 transport generator from a full 3x3 tensor value at a point."""
    f_mat = np.asarray(f_mat, dtype=complex)
    w, tp = frame.omega, frame.theta_perp
    return np.array(
        [
            [w @ f_mat @ w, w @ f_mat @ tp],
            [tp @ f_mat @ w, tp @ f_mat @ tp],
        ]
    )


def _gen_batch(cvals, omega, theta_perp):
    """Generator matrices (..., 2, 2) from component samples (..., 6).

    omega and theta_perp may be plain 3-vectors or arrays broadcastable
    against the sample batch (e.g. per-ray frames of shape (N, 1, 3))."""
    F = np.empty(cvals.shape[:-1] + (2, 2), dtype=complex)
    F[..., 0, 0] = contract_components(cvals, omega, omega)
    F[..., 0, 1] = contract_components(cvals, omega, theta_perp)
    F[..., 1, 0] = contract_components(cvals, theta_perp, omega)
    F[..., 1, 1] = contract_components(cvals, theta_perp, theta_perp)
    return F


def _clip_radius(field):
    """Radius beyond which field samples are guaranteed zero."""
    r = field.support_radius
    if hasattr(field, "voxel_step"):
        r += np.sqrt(3.0) * field.voxel_step()
    return r


def _integrate_batch(field, omega, theta, theta_perp, points0, step):
    """RK4 propagators for a bundle of rays sharing one view direction omega.

    points0: (N, 3) base points; theta and theta_perp are either single
    3-vectors or per-ray (N, 3) arrays.  All rays are stepped in lockstep
    over the common chord of the clipping ball; outside each ray's support
    the generator vanishes and the steps are exact identities.
    """
    points0 = np.asarray(points0, dtype=float)
    N = points0.shape[0]
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (N, 3))
    theta_perp = np.broadcast_to(np.asarray(theta_perp, dtype=float), (N, 3))
    mu = np.broadcast_to(np.eye(2, dtype=complex), (N, 2, 2)).copy()
    R = _clip_radius(field)
    d2 = np.min(np.sum(points0 * points0, axis=1))
    if d2 >= R * R:
        return mu
    L = np.sqrt(R * R - d2)
    nsteps = max(1, int(np.ceil(2.0 * L / step)))
    h = 2.0 * L / nsteps

    # every RK4 stage lies on the half-step stencil; sample it in one pass
    # (chunked over rays to bound memory)
    stencil = -L + 0.5 * h * np.arange(2 * nsteps + 1)
    # keep per-chunk gathers inside cache: ~200k stencil points at a time
    chunk = max(1, int(200_000 / len(stencil)))
    for lo in range(0, N, chunk):
        th = theta[lo:lo + chunk, None, :]
        pts = points0[lo:lo + chunk, None, :] + stencil[None, :, None] * th
        tp = theta_perp[lo:lo + chunk, None, :]
        F = _gen_batch(field.sample_components(pts), omega, tp)
        m = mu[lo:lo + chunk]
        for i in range(nsteps):
            F0, Fm, F1 = F[:, 2 * i], F[:, 2 * i + 1], F[:, 2 * i + 2]
            k1 = F0 @ m
            k2 = Fm @ (m + 0.5 * h * k1)
            k3 = Fm @ (m + 0.5 * h * k2)
            k4 = F1 @ (m + h * k3)
            m = m + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        mu[lo:lo + chunk] = m
    return mu


def solve_ray(field, ray, step):
    """Scattering matrix (2x2) for a single ray; Id if the ray misses the
    field support."""
    if step <= 0:
        raise ValueError("step must be positive")
    fr = ray.frame
    x0 = ray.base_point()
    if x0 @ x0 >= _clip_radius(field) ** 2:
        return np.eye(2, dtype=complex)
    return _integrate_batch(field, fr.omega, fr.theta, fr.theta_perp, x0[None, :], step)[0]


def _view_angle_items(views):
    return [(v, k) for v in range(views.n_views) for k in range(views.angles_per_view)]


def _batch_base_points(views, v, k):
    """Base points for all (slice, detector) rays of one view/angle,
    flattened to (Ms*Md, 3), plus the frame vectors."""
    omega = views.omegas[v]
    a, b = frame_basis(omega)
    phi = 2.0 * np.pi * k / views.angles_per_view
    theta = np.cos(phi) * a + np.sin(phi) * b
    theta_perp = np.cross(omega, theta)
    xi1 = views.xi1_centers()
    xi2 = views.xi2_centers()
    pts = xi1[None, :, None] * theta_perp[None, None, :] + xi2[:, None, None] * omega[None, None, :]
    return omega, theta, theta_perp, pts.reshape(-1, 3)


def _view_ray_bundle(views, v):
    """Every ray of one view, all angles at once: per-ray theta/theta_perp
    of shape (K*Ms*Md, 3) and matching base points."""
    omega = views.omegas[v]
    a, b = frame_basis(omega)
    phi = 2.0 * np.pi * np.arange(views.angles_per_view) / views.angles_per_view
    thetas = np.cos(phi)[:, None] * a + np.sin(phi)[:, None] * b  # (K, 3)
    tperps = np.cross(omega, thetas)
    xi1 = views.xi1_centers()
    xi2 = views.xi2_centers()
    pts = (xi1[None, None, :, None] * tperps[:, None, None, :]
           + xi2[None, :, None, None] * omega)  # (K, Ms, Md, 3)
    nray = views.angles_per_view * views.slice_count * views.detector_count
    rep = np.repeat(np.arange(views.angles_per_view), views.slice_count * views.detector_count)
    return omega, thetas[rep], tperps[rep], pts.reshape(nray, 3)


def forward_scattering(field, views, step):
    """Full 2x2 scattering matrices over the sampled ray family:
    array of shape (6, K, Ms, Md, 2, 2).  Memory-heavy; prefer forward_s11
    for production data."""
    if step <= 0:
        raise ValueError("step must be positive")
    v = views
    out = np.zeros((v.n_views, v.angles_per_view, v.slice_count, v.detector_count, 2, 2), dtype=complex)

    def work(vi):
        omega, theta, theta_perp, pts = _view_ray_bundle(views, vi)
        mu = _integrate_batch(field, omega, theta, theta_perp, pts, step)
        out[vi] = mu.reshape(v.angles_per_view, v.slice_count, v.detector_count, 2, 2)

    _parallel_over(range(views.n_views), work)
    return out


def forward_s11(field, views, step):
    """Measured data: the (1,1) scattering entry on the six-view ray family."""
    if step <= 0:
        raise ValueError("step must be positive")
    if hasattr(field, "half_width") and abs(field.half_width - views.half_width) > 1e-12:
        raise ValueError("field and views disagree on half_width")
    sino = Sinogram.zeros(views, KIND_S11)

    def work(vi):
        omega, theta, theta_perp, pts = _view_ray_bundle(views, vi)
        mu = _integrate_batch(field, omega, theta, theta_perp, pts, step)
        sino.data[vi] = mu[:, 0, 0].reshape(
            views.angles_per_view, views.slice_count, views.detector_count)

    _parallel_over(range(views.n_views), work)
    return sino


def _ray_nodes(field, points0, theta, step):
    """Uniform sample nodes covering every ray's support chord: returns
    (points (N, S, 3), ds) or None if the whole bundle misses the support."""
    R = _clip_radius(field)
    d2 = np.min(np.sum(points0 * points0, axis=1))
    if d2 >= R * R:
        return None
    L = np.sqrt(R * R - d2)
    nseg = max(2, int(np.ceil(2.0 * L / step)))
    s = np.linspace(-L, L, nseg + 1)
    pts = points0[:, None, :] + s[None, :, None] * theta[None, None, :]
    return pts, s[1] - s[0]


def _cumtrapz(w, ds, axis=1):
    pair = 0.5 * ds * (np.take(w, range(w.shape[axis] - 1), axis=axis)
                       + np.take(w, range(1, w.shape[axis]), axis=axis))
    c = np.cumsum(pair, axis=axis)
    zshape = list(w.shape)
    zshape[axis] = 1
    return np.concatenate([np.zeros(zshape, dtype=w.dtype), c], axis=axis)


def _trapz(w, ds, axis=1):
    return ds * (np.sum(w, axis=axis) - 0.5 * np.take(w, 0, axis=axis)
                 - 0.5 * np.take(w, -1, axis=axis))


def forward_s11_neumann(field, views, terms, step):
    """Born/Neumann-series forward solver, truncated at ``terms`` terms.

    Scattering = Id + sum_j of the line integral of w_j, with w_1 the
    generator and w_{j+1} = F . (running integral of w_j).  Converges for
    small fields; serves as an independent validator of the RK4 path.
    One term gives exactly 1 + (line integral of w.f.w) in the (1,1) entry.
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if step <= 0:
        raise ValueError("step must be positive")
    sino = Sinogram.zeros(views, KIND_S11)
    sino.data[:] = 1.0

    def work(item):
        vi, k = item
        omega, theta, theta_perp, pts0 = _batch_base_points(views, vi, k)
        nodes = _ray_nodes(field, pts0, theta, step)
        if nodes is None:
            return
        pts, ds = nodes
        F = _gen_batch(field.sample_components(pts), omega, theta_perp)
        w = F
        s11 = 1.0 + _trapz(w, ds)[:, 0, 0]
        for _ in range(terms - 1):
            w = F @ _cumtrapz(w, ds)
            s11 = s11 + _trapz(w, ds)[:, 0, 0]
        sino.data[vi, k] = s11.reshape(views.slice_count, views.detector_count)

    _parallel_over(_view_angle_items(views), work)
    return sino


def classical_ray_transform(volume, views, support_radius=None, view_indices=None, step=None):
    """Scalar line integrals of a volume over the six-view ray family
    (trapezoid rule, default step half a voxel).

    ``support_radius`` optionally restricts integration to a ball where the
    volume is known to be supported; by default the full cube is covered.
    ``view_indices`` restricts the work to a subset of views (the rest of
    the sinogram stays zero).
    """
    if step is None:
        if not hasattr(volume, "voxel_step"):
            raise ValueError("grid-free volumes need an explicit step")
        step = 0.5 * volume.voxel_step()
    if support_radius is None:
        support_radius = np.sqrt(3.0) * views.half_width

    class _Support:
        pass

    sup = _Support()
    sup.support_radius = support_radius
    if hasattr(volume, "voxel_step"):
        sup.voxel_step = volume.voxel_step
    sino = Sinogram.zeros(views, KIND_CLASSICAL)

    def work(item):
        vi, k = item
        omega, theta, theta_perp, pts0 = _batch_base_points(views, vi, k)
        nodes = _ray_nodes(sup, pts0, theta, step)
        if nodes is None:
            return
        pts, ds = nodes
        vals = volume.sample_many(pts)
        sino.data[vi, k] = _trapz(vals, ds).reshape(views.slice_count, views.detector_count)

    if view_indices is None:
        items = _view_angle_items(views)
    else:
        items = [(v, k) for v in view_indices for k in range(views.angles_per_view)]
    _parallel_over(items, work)
    return sino
