"""
The transverse ray transform (line integrals of the scalar contraction
w.f.w per view) and its closed-form six-direction inversion.

The inversion is triangular: the three axis views give the diagonal
components directly, and each diagonal view gives one off-diagonal after
subtracting the already-known diagonals.  It is applied verbatim to
arbitrary data (residuals are never exactly in the range of the forward
transform).
"""

from dataclasses import dataclass

import numpy as np

from .field import ScalarVolume, TensorField, contract_components
from .geometry import ViewSet
from .radon import invert_volume
from .transport import KIND_CLASSICAL, Sinogram, classical_ray_transform


@dataclass
class LambdaData:
    """Six scalar data blocks, one per view: blocks[view, angle, slice, detector]."""

    views: ViewSet
    kind: str
    blocks: np.ndarray

    def __post_init__(self):
        v = self.views
        expected = (v.n_views, v.angles_per_view, v.slice_count, v.detector_count)
        if self.blocks.shape != expected:
            raise ValueError(f"lambda data shape {self.blocks.shape} != {expected}")

    @classmethod
    def from_sinogram(cls, sino):
        return cls(views=sino.views, kind=sino.kind, blocks=sino.data)

    def as_sinogram(self):
        return Sinogram(views=self.views, kind=self.kind, data=self.blocks)


def contracted_volume(fld, omega):
    """Voxelwise scalar w.f.w of a gridded tensor field."""
    vals = np.moveaxis(fld.comps, 0, -1)
    return ScalarVolume(fld.n, fld.half_width, contract_components(vals, omega, omega))


def transverse_transform(fld, views, step=None):
    """Line integrals of w.f.w per view over the sampled ray family.

    Works for any field exposing sample_components/support_radius (gridded
    or analytic).  Default step is half a voxel for gridded fields; analytic
    fields need an explicit step.
    """
    if step is None:
        if not hasattr(fld, "voxel_step"):
            raise ValueError("analytic fields need an explicit step")
        step = 0.5 * fld.voxel_step()
    data = LambdaData(
        views=views,
        kind=KIND_CLASSICAL,
        blocks=np.zeros(
            (views.n_views, views.angles_per_view, views.slice_count, views.detector_count),
            dtype=complex,
        ),
    )
    for vi in range(views.n_views):
        vol = _contracted_sampler(fld, views.omegas[vi])
        sino = classical_ray_transform(
            vol, views, support_radius=fld.support_radius, view_indices=[vi], step=step)
        data.blocks[vi] = sino.data[vi]
    return data


class _contracted_sampler:
    """Scalar w.f.w view of a tensor field, duck-typed as a volume."""

    def __init__(self, fld, omega):
        self.fld = fld
        self.omega = np.asarray(omega, dtype=float)
        if hasattr(fld, "voxel_step"):
            self.voxel_step = fld.voxel_step

    def sample_many(self, points):
        return contract_components(self.fld.sample_components(points), self.omega, self.omega)


def invert_lambda(data, output_n=None, pad_factor=4, apodize=False):
    """Closed-form tensor recovery from six scalar blocks.

    Per-view slice-by-slice inversions give u_i; the diagonal components
    are the three axis-view results and the off-diagonals follow by
    subtracting half-sums of diagonals.  Defined for arbitrary input data.
    """
    views = data.views
    if views.n_views != 6:
        raise ValueError("six view blocks are required")
    sino = data.as_sinogram()
    u = [invert_volume(sino, vi, output_n=output_n, pad_factor=pad_factor, apodize=apodize)
         for vi in range(6)]
    n = u[0].n
    H = views.half_width
    comps = np.empty((6, n, n, n), dtype=complex)
    comps[0] = u[0].data  # f11
    comps[1] = u[1].data  # f22
    comps[2] = u[2].data  # f33
    comps[3] = u[3].data - 0.5 * (comps[0] + comps[1])  # f12
    comps[4] = u[4].data - 0.5 * (comps[0] + comps[2])  # f13
    comps[5] = u[5].data - 0.5 * (comps[1] + comps[2])  # f23
    # the inversion cannot certify any support radius; callers apply the cutoff
    return TensorField(n=n, half_width=H, support_radius=np.sqrt(3.0) * H, comps=comps)
