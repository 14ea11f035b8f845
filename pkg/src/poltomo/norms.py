"""
Fourier-weighted sup norms used as convergence diagnostics.

Transform convention: u_hat(p) = (1/2pi)^d * integral of e^{i p.x} u(x) dx,
discretized with the grid cell volume as quadrature weight and the sup over
frequencies taken on the grid's own frequency band.  Matrix-valued inputs
use the entrywise max.
"""

import numpy as np

from .field import TensorField


def _grid_spectrum(data, half_width):
    """Discrete transform of gridded data (any dimension d): returns
    (u_hat on the fftfreq grid, tuple of per-axis angular frequencies)."""
    d = data.ndim
    steps = [2.0 * half_width / m for m in data.shape]
    freqs = [2.0 * np.pi * np.fft.fftfreq(m, d=s) for m, s in zip(data.shape, steps)]
    uhat = np.fft.ifftn(data) * data.size
    for ax, (pf, s) in enumerate(zip(freqs, steps)):
        x0 = -half_width + 0.5 * s
        shape = [1] * d
        shape[ax] = len(pf)
        uhat = uhat * (s / (2.0 * np.pi)) * np.exp(1j * pf * x0).reshape(shape)
    return uhat, freqs


def _freq_magnitude(freqs):
    d = len(freqs)
    out = 0.0
    for ax, pf in enumerate(freqs):
        shape = [1] * d
        shape[ax] = len(pf)
        out = out + (pf.reshape(shape)) ** 2
    return np.sqrt(out)


def hat_linf_sigma(obj, sigma):
    """Weighted sup of the 3D transform: max over grid frequencies of
    (1 + |p|)^sigma |u_hat(p)|.  Accepts a ScalarVolume or TensorField."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if isinstance(obj, TensorField):
        return max(
            hat_linf_sigma_data(obj.comps[c], obj.half_width, sigma) for c in range(6)
        )
    return hat_linf_sigma_data(obj.data, obj.half_width, sigma)


def hat_linf_sigma_data(data, half_width, sigma):
    uhat, freqs = _grid_spectrum(data, half_width)
    w = (1.0 + _freq_magnitude(freqs)) ** sigma
    return float(np.max(w * np.abs(uhat)))


def hat_c_sigma(volume, sigma, order=0):
    """Weighted sup over u_hat and (for order 1) its first frequency
    derivatives, approximated by central differences on the frequency grid."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if order == 0:
        return hat_linf_sigma(volume, sigma)
    uhat, freqs = _grid_spectrum(volume.data, volume.half_width)
    # sort into monotone frequency order so central differences are valid
    orders = [np.argsort(pf) for pf in freqs]
    uh = uhat[np.ix_(*orders)]
    sorted_freqs = [pf[o] for pf, o in zip(freqs, orders)]
    w = (1.0 + _freq_magnitude(sorted_freqs)) ** sigma
    best = float(np.max(w * np.abs(uh)))
    for ax in range(3):
        dp = sorted_freqs[ax][1] - sorted_freqs[ax][0]
        duh = np.gradient(uh, dp, axis=ax)
        best = max(best, float(np.max(w * np.abs(duh))))
    return best


def lambda_norm(data, sigma):
    """Weighted sup over the six-view data: per view and angle, the 2D
    transform over the ray coordinates (xi1, xi2), then the max of
    (1 + |p|)^sigma magnitudes over everything."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    views = data.views
    best = 0.0
    for vi in range(views.n_views):
        for k in range(views.angles_per_view):
            g = data.blocks[vi, k]  # (Ms, Md), axes (xi2, xi1)
            ghat, freqs = _grid_spectrum(g, views.half_width)
            w = (1.0 + _freq_magnitude(freqs)) ** sigma
            best = max(best, float(np.max(w * np.abs(ghat))))
    return best
