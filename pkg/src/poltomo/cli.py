"""
Command-line driver.

Subcommands: phantom, forward, transverse, invert-j, reconstruct, norms,
selftest.  Options can come from a flat key=value config file (--config);
command-line flags win over config values.  PTOMO_THREADS sets the worker
count for ray-parallel loops (results are thread-count independent).
"""

import argparse
import sys

import numpy as np

from . import fileio
from .field import BumpField, apply_cutoff, make_cutoff, standard_phantom
from .geometry import standard_views
from .norms import hat_linf_sigma
from .reconstruct import ReconConfig, run, sup_norm
from .tensor_inversion import invert_lambda, transverse_transform
from .transport import forward_s11, forward_s11_neumann


class ConfigError(ValueError):
    pass


def load_config(path):
    """Flat key=value file; '#' starts a comment; the 'bump' key repeats."""
    values = {}
    bumps = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key == "bump":
                bumps.append((lineno, val))
            else:
                values[key] = val
    values["_bumps"] = bumps
    values["_path"] = path
    return values


def _parse_bump(path, lineno, text, imaginary):
    parts = text.split()
    if len(parts) != 10:
        raise ConfigError(
            f"{path}:{lineno}: bump needs 10 numbers "
            f"(cx cy cz radius a11 a22 a33 a12 a13 a23), got {len(parts)}"
        )
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: {exc}") from None
    center = nums[0:3]
    radius = nums[3]
    a11, a22, a33, a12, a13, a23 = nums[4:10]
    amp = np.array([[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]], dtype=complex)
    if imaginary:
        amp = 1j * amp
    return (center, radius, amp)


def _add_common(p):
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--n", type=int, default=64, help="grid size per axis")
    p.add_argument("--half-width", type=float, default=1.0)
    p.add_argument("--r0", type=float, default=0.8, help="field support radius")
    p.add_argument("--r1", type=float, default=0.95, help="cutoff outer radius")
    p.add_argument("--K", type=int, default=180, help="angles per view")
    p.add_argument("--M", type=int, default=64, help="detectors and slices per view")
    p.add_argument("--step", type=float, default=None, help="ODE step (default half voxel)")
    p.add_argument("--sigma", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)


def _apply_config(args):
    """Config values fill in only options the user left at their default."""
    if not args.config:
        args._bumps = []
        return args
    cfg = load_config(args.config)
    defaults = {
        "n": 64, "half_width": 1.0, "r0": 0.8, "r1": 0.95, "K": 180, "M": 64,
        "step": None, "sigma": 4.0, "seed": 0, "scale": 1.0, "max_iters": 8,
        "stop_tol": 1e-4, "forward": "rk4", "terms": 12,
    }
    casts = {
        "n": int, "K": int, "M": int, "seed": int, "max_iters": int, "terms": int,
        "forward": str,
    }
    for key, val in cfg.items():
        if key.startswith("_"):
            continue
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"{cfg['_path']}: unknown config key {key!r}")
        if getattr(args, attr) == defaults.get(attr, None):
            cast = casts.get(attr, float)
            setattr(args, attr, cast(val))
    args._bumps = [
        _parse_bump(cfg["_path"], lineno, text, getattr(args, "imaginary", False))
        for lineno, text in cfg["_bumps"]
    ]
    return args


def _field_from_args(args):
    if getattr(args, "_bumps", None):
        return BumpField(args.r0, args._bumps)
    return standard_phantom(
        scale=1.0, r0=args.r0, imaginary=getattr(args, "imaginary", False)
    )


def cmd_phantom(args):
    bf = _field_from_args(args)
    fld = bf.to_grid(args.n, args.half_width).scaled(args.scale)
    fileio.write_volume(args.out, fld)
    peaks = fld.peak_magnitudes()
    for name, peak in peaks.items():
        print(f"{name} peak {peak:.6g}")
    cut = fld.support_radius + np.sqrt(3.0) * fld.voxel_step()
    print(f"support ok: field vanishes beyond |x| = {fld.support_radius:g} (checked to {cut:g})")
    return 0


def cmd_forward(args):
    fld = fileio.read_volume(args.field)
    views = standard_views(args.K, args.M, args.half_width)
    step = args.step if args.step is not None else 0.5 * fld.voxel_step()
    if args.forward == "neumann":
        sino = forward_s11_neumann(fld, views, args.terms, step)
    else:
        sino = forward_s11(fld, views, step)
    fileio.write_sinogram(args.out, sino)
    print(f"sup|S11 - 1| = {np.max(np.abs(sino.data - 1.0)):.6g}")
    return 0


def cmd_transverse(args):
    fld = fileio.read_volume(args.field)
    views = standard_views(args.K, args.M, args.half_width)
    data = transverse_transform(fld, views)
    fileio.write_lambda(args.out, data)
    print(f"sup|Jf| = {np.max(np.abs(data.blocks)):.6g}")
    return 0


def cmd_invert_j(args):
    data = fileio.read_lambda(args.data)
    fld = invert_lambda(data)
    chi = make_cutoff(args.r0, args.r1)
    fld = apply_cutoff(chi, fld)
    fileio.write_volume(args.out, fld)
    print(f"sup|f| = {sup_norm(fld):.6g}")
    return 0


def cmd_reconstruct(args):
    sino = fileio.read_sinogram(args.data)
    chi = make_cutoff(args.r0, args.r1)
    cfg = ReconConfig(
        max_iters=args.max_iters,
        stop_tol=args.stop_tol,
        step=args.step,
        sigma=args.sigma,
        forward=args.forward,
        neumann_terms=args.terms,
    )
    truth = fileio.read_volume(args.truth) if args.truth else None
    state = run(sino, chi, cfg, truth=truth)
    fileio.write_volume(args.out, state.iterate)
    fileio.write_history_csv(args.history, state.history)
    if args.heatmaps:
        mid = state.iterate.n // 2
        from .field import COMPONENTS
        for i, name in enumerate(COMPONENTS):
            img = state.iterate.comps[i][:, :, mid]
            fileio.write_heatmap(
                f"{args.heatmaps}_{name}_recon.pgm", img,
                sidecar_path=f"{args.heatmaps}_{name}_recon.txt",
            )
            if truth is not None:
                fileio.write_heatmap(
                    f"{args.heatmaps}_{name}_truth.pgm", truth.comps[i][:, :, mid],
                    sidecar_path=f"{args.heatmaps}_{name}_truth.txt",
                )
                fileio.write_heatmap(
                    f"{args.heatmaps}_{name}_diff.pgm",
                    state.iterate.comps[i][:, :, mid] - truth.comps[i][:, :, mid],
                    sidecar_path=f"{args.heatmaps}_{name}_diff.txt",
                )
    for e in state.history:
        print(
            f"n={e.n} residual={e.residual_sup:.3e} update={e.update_sup:.3e} "
            f"err_sup={e.err_sup:.3e} err_fourier={e.err_fourier:.3e} ({e.seconds:.1f}s)"
        )
    if state.diverged:
        print("DIVERGED: update norm grew on two consecutive iterations", file=sys.stderr)
        return 2
    return 0


def cmd_norms(args):
    obj = fileio.read_volume(args.field)
    print(f"hat_linf_sigma(sigma={args.sigma}) = {hat_linf_sigma(obj, args.sigma):.6g}")
    return 0


def run_selftest(n=32, K=90, quick=False, perturb_inversion=0.0, seed=0):
    """Reduced-resolution invariant suites.  Returns list of
    (name, passed, measured) tuples.  ``perturb_inversion`` injects a
    relative error into the tensor inversion (fault-injection hook)."""
    from .geometry import frame_basis, standard_directions
    from .transport import Sinogram, solve_ray
    results = []
    rng = np.random.default_rng(seed)
    H, r0, r1 = 1.0, 0.8, 0.95
    views = standard_views(K, n, H)

    # projector idempotence on random frames and vectors
    from .geometry import project_transverse
    worst = 0.0
    for omega in standard_directions():
        a, b = frame_basis(omega)
        for _ in range(4):
            z = rng.normal(size=3) + 1j * rng.normal(size=3)
            w = project_transverse(a, z)
            worst = max(worst, abs(w @ a), np.max(np.abs(project_transverse(a, w) - w)))
    results.append(("projector idempotence", worst <= 1e-12, worst))

    # unitarity on a purely imaginary phantom
    bf = standard_phantom(scale=0.05, r0=r0, imaginary=True)
    fld = bf.to_grid(n, H)
    step = H / n
    worst = 0.0
    for vi in range(2):
        for k in (0, K // 4):
            fr = views.frame(vi, k)
            from .geometry import RayCoord
            S = solve_ray(fld, RayCoord(fr, 0.13, -0.21), step)
            worst = max(worst, np.max(np.abs(S @ S.conj().T - np.eye(2))))
    results.append(("unitarity", worst <= 1e-7, worst))

    # multiplicativity: split a ray at an interior point
    bf2 = standard_phantom(scale=0.1, r0=r0)
    fr = views.frame(0, 3)
    from .geometry import RayCoord
    full = solve_ray(bf2, RayCoord(fr, 0.1, 0.05), step / 2)
    x0 = RayCoord(fr, 0.1, 0.05).base_point()
    R = bf2.support_radius + step / 2
    L = np.sqrt(R * R - x0 @ x0)
    sstar = 0.2 * L
    # integrate the two sub-chords with matched stepping
    mu1 = _segment(bf2, fr, x0, -L, sstar, step / 2)
    mu2 = _segment(bf2, fr, x0, sstar, L, step / 2)
    worst = float(np.max(np.abs(mu2 @ mu1 - full)))
    results.append(("multiplicativity", worst <= 1e-6, worst))

    if not quick:
        # tensor round-trip at reduced resolution (with optional fault injection)
        fld05 = bf2.to_grid(n, H)
        data = transverse_transform(fld05, views)
        rec = invert_lambda(data)
        if perturb_inversion:
            rec = rec.scaled(1.0 + perturb_inversion)
        chi = make_cutoff(r0, r1)
        rec = apply_cutoff(chi, rec)
        num = np.sqrt(np.sum(np.abs(rec.comps - fld05.comps) ** 2))
        den = np.sqrt(np.sum(np.abs(fld05.comps) ** 2))
        rel = float(num / den)
        results.append(("tensor round-trip", rel <= 0.08, rel))

        # FBP round-trip on a radial slice phantom
        from .radon import SliceSinogram, invert_slice
        M = n
        g = _radial_bump_sinogram(K, M, H, radius=0.45)
        img = invert_slice(SliceSinogram(g, H))
        ref = _radial_bump_image(M, H, radius=0.45)
        rel2 = float(np.linalg.norm(img - ref) / np.linalg.norm(ref))
        results.append(("FBP round-trip", rel2 <= 0.03, rel2))

    # norm homogeneity
    vol = fld.component("f11")
    n1 = hat_linf_sigma(vol, 4.0)
    from .field import ScalarVolume
    n2 = hat_linf_sigma(ScalarVolume(vol.n, vol.half_width, 2.0 * vol.data), 4.0)
    rel3 = abs(n2 - 2.0 * n1) / max(n1, 1e-300)
    results.append(("norm homogeneity", rel3 <= 1e-9, rel3))
    return results


def _segment(field, fr, x0, s_from, s_to, step):
    """RK4 propagator over a ray sub-segment [s_from, s_to]."""
    from .transport import _gen_batch
    nsteps = max(1, int(np.ceil((s_to - s_from) / step)))
    h = (s_to - s_from) / nsteps
    mu = np.eye(2, dtype=complex)
    s = s_from
    for _ in range(nsteps):
        F0 = _gen_batch(field.sample_components((x0 + s * fr.theta)[None]), fr.omega, fr.theta_perp)[0]
        Fm = _gen_batch(field.sample_components((x0 + (s + h / 2) * fr.theta)[None]), fr.omega, fr.theta_perp)[0]
        F1 = _gen_batch(field.sample_components((x0 + (s + h) * fr.theta)[None]), fr.omega, fr.theta_perp)[0]
        k1 = F0 @ mu
        k2 = Fm @ (mu + 0.5 * h * k1)
        k3 = Fm @ (mu + 0.5 * h * k2)
        k4 = F1 @ (mu + h * k3)
        mu = mu + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    return mu


def _radial_bump_image(M, H, radius):
    from .field import _bump_profile
    from .geometry import grid_centers
    c = grid_centers(M, H)
    X, Y = np.meshgrid(c, c, indexing="ij")
    return _bump_profile(np.hypot(X, Y) / radius).astype(complex)


def _radial_bump_sinogram(K, M, H, radius, nquad=2048):
    """Brute-force line integrals of the radial bump (radially symmetric, so
    every angle shares one detector profile)."""
    from .field import _bump_profile
    from .geometry import grid_centers
    xi = grid_centers(M, H)
    s = np.linspace(-radius, radius, nquad)
    prof = np.array(
        [np.trapezoid(_bump_profile(np.hypot(x, s) / radius), s) for x in xi]
    )
    return np.tile(prof.astype(complex), (K, 1))


def cmd_selftest(args):
    results = run_selftest(n=args.n, K=args.K, quick=args.quick, seed=args.seed)
    ok = True
    for name, passed, measured in results:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {measured:.3e}")
        ok = ok and passed
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="poltomo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="build and write a tensor phantom")
    _add_common(p)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--imaginary", action="store_true",
                   help="purely imaginary amplitudes (unitary scattering)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("forward", help="polarization forward data (S11)")
    _add_common(p)
    p.add_argument("--field", required=True)
    p.add_argument("--forward", choices=["rk4", "neumann"], default="rk4")
    p.add_argument("--terms", type=int, default=12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("transverse", help="linear transverse transform data")
    _add_common(p)
    p.add_argument("--field", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transverse)

    p = sub.add_parser("invert-j", help="closed-form six-view tensor inversion")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_invert_j)

    p = sub.add_parser("reconstruct", help="iterative reconstruction from S11 data")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--max-iters", type=int, default=8)
    p.add_argument("--stop-tol", type=float, default=1e-4)
    p.add_argument("--forward", choices=["rk4", "neumann"], default="rk4")
    p.add_argument("--terms", type=int, default=12)
    p.add_argument("--out", required=True)
    p.add_argument("--history", required=True)
    p.add_argument("--heatmaps", default=None, help="path prefix for PGM slice images")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("norms", help="weighted Fourier norm of a volume file")
    _add_common(p)
    p.add_argument("--field", required=True)
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("selftest", help="run the invariant suites at reduced resolution")
    _add_common(p)
    p.set_defaults(n=32, K=90)
    p.add_argument("--quick", action="store_true")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "config"):
            args = _apply_config(args)
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
