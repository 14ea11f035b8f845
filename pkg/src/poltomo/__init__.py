"""Polarization tomography: matrix ray transport along six view families
and iterative reconstruction of a small symmetric dielectric perturbation
tensor from the (1,1) scattering entry."""

from .field import (BumpField, Cutoff, ScalarVolume, TensorField,
                    apply_cutoff, bump_phantom, make_cutoff, standard_phantom)
from .geometry import (RayCoord, ViewFrame, ViewSet, frame_basis,
                       project_transverse, standard_views)
from .norms import hat_c_sigma, hat_linf_sigma, lambda_norm
from .radon import SliceSinogram, invert_slice, invert_slice_fourier, invert_volume
from .reconstruct import ReconConfig, ReconState, initial_estimate, refine, run
from .tensor_inversion import LambdaData, invert_lambda, transverse_transform
from .transport import (Sinogram, classical_ray_transform, forward_s11,
                        forward_s11_neumann, local_F, solve_ray)

__all__ = [
    "BumpField", "Cutoff", "ScalarVolume", "TensorField", "apply_cutoff",
    "bump_phantom", "make_cutoff", "standard_phantom",
    "RayCoord", "ViewFrame", "ViewSet", "frame_basis", "project_transverse",
    "standard_views",
    "hat_c_sigma", "hat_linf_sigma", "lambda_norm",
    "SliceSinogram", "invert_slice", "invert_slice_fourier", "invert_volume",
    "ReconConfig", "ReconState", "initial_estimate", "refine", "run",
    "LambdaData", "invert_lambda", "transverse_transform",
    "Sinogram", "classical_ray_transform", "forward_s11", "forward_s11_neumann",
    "local_F", "solve_ray",
]
