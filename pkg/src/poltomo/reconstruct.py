"""
Iterative reconstruction from the (1,1) scattering entry on the six-view
ray family.

The initial estimate inverts the linearized data (S11 - 1); each refinement
step forward-projects the current iterate, inverts the data residual, adds
the correction and re-applies the cutoff.  In the smallness regime the
error contracts geometrically; divergence (update norm growing twice in a
row) is flagged rather than raised mid-loop.
"""

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import TensorField, apply_cutoff
from .norms import hat_linf_sigma
from .tensor_inversion import LambdaData, invert_lambda
from .transport import KIND_RESIDUAL, KIND_S11, forward_s11, forward_s11_neumann


@dataclass
class ReconConfig:
    max_iters: int = 8
    stop_tol: float = 1e-4
    step: float = None  # ODE step; default half voxel of the recon grid
    sigma: float = 4.0
    forward: str = "rk4"  # "rk4" or "neumann"
    neumann_terms: int = 12
    output_n: int = None  # recon grid size; default detector count

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_tol <= 0:
            raise ValueError("stop_tol must be positive")
        if self.sigma <= 3:
            raise ValueError("sigma must exceed 3")
        if self.forward not in ("rk4", "neumann"):
            raise ValueError(f"unknown forward solver {self.forward!r}")


@dataclass
class HistoryEntry:
    n: int
    residual_sup: float
    update_sup: float
    err_sup: float = float("nan")
    err_fourier: float = float("nan")
    seconds: float = 0.0


@dataclass
class ReconState:
    iterate: TensorField
    history: list = dc_field(default_factory=list)
    diverged: bool = False


def sup_norm(fld):
    return float(np.max(np.abs(fld.comps)))


def _solve_step(views, cfg):
    if cfg.step is not None:
        return cfg.step
    n = cfg.output_n if cfg.output_n is not None else views.detector_count
    return views.half_width / n  # half the voxel spacing 2H/n


def _run_forward(fld, views, cfg):
    step = _solve_step(views, cfg)
    if cfg.forward == "neumann":
        return forward_s11_neumann(fld, views, cfg.neumann_terms, step)
    return forward_s11(fld, views, step)


def initial_estimate(s11, chi, cfg=None):
    """Linearized reconstruction: invert (S11 - 1) and apply the cutoff."""
    if s11.kind != KIND_S11:
        raise ValueError(f"expected S11 data, got kind {s11.kind!r}")
    cfg = cfg or ReconConfig()
    delta0 = LambdaData(views=s11.views, kind=KIND_RESIDUAL, blocks=s11.data - 1.0)
    f1 = invert_lambda(delta0, output_n=cfg.output_n)
    return apply_cutoff(chi, f1)


def refine(s11, state, chi, cfg):
    """One fixed-point iteration: residual against the forward data of the
    current iterate, inverted and added under the cutoff."""
    t0 = time.perf_counter()
    fn = state.iterate
    model = _run_forward(fn, s11.views, cfg)
    delta = LambdaData(views=s11.views, kind=KIND_RESIDUAL, blocks=s11.data - model.data)
    corr = invert_lambda(delta, output_n=cfg.output_n)
    fnext = apply_cutoff(
        chi, TensorField(fn.n, fn.half_width, chi.r1, fn.comps + corr.comps)
    )
    update = float(np.max(np.abs(fnext.comps - fn.comps)))
    entry = HistoryEntry(
        n=len(state.history) + 1,
        residual_sup=float(np.max(np.abs(delta.blocks))),
        update_sup=update,
        seconds=time.perf_counter() - t0,
    )
    history = state.history + [entry]
    diverged = state.diverged
    if len(history) >= 3 and history[-1].update_sup > history[-2].update_sup > history[-3].update_sup:
        diverged = True
    return ReconState(iterate=fnext, history=history, diverged=diverged)


def _log_truth(state, truth, sigma):
    if truth is None:
        return
    e = state.history[-1]
    diff = TensorField(
        truth.n, truth.half_width, max(truth.support_radius, state.iterate.support_radius),
        state.iterate.comps - truth.comps,
    )
    e.err_sup = sup_norm(diff)
    e.err_fourier = hat_linf_sigma(diff, sigma)


def run(s11, chi, cfg, truth=None):
    """Full reconstruction: initial estimate, then refine until the relative
    update drops below stop_tol, max_iters is reached, or divergence is
    flagged."""
    t0 = time.perf_counter()
    f1 = initial_estimate(s11, chi, cfg)
    scale = max(sup_norm(f1), np.finfo(float).tiny)
    state = ReconState(iterate=f1)
    state.history.append(
        HistoryEntry(
            n=1,
            residual_sup=float(np.max(np.abs(s11.data - 1.0))),
            update_sup=scale,
            seconds=time.perf_counter() - t0,
        )
    )
    _log_truth(state, truth, cfg.sigma)
    for _ in range(cfg.max_iters - 1):
        state = refine(s11, state, chi, cfg)
        _log_truth(state, truth, cfg.sigma)
        if state.diverged:
            break
        if state.history[-1].update_sup / scale < cfg.stop_tol:
            break
    return state
