"""
File formats: PTVOL1 volumes/tensor fields, PTSIN1 sinograms, PTLAM1
six-block data, reconstruction history CSV, and grayscale PGM heatmaps.

All binary payloads are little-endian float64 (re, im) pairs.  Volume
components are serialized x-fastest; sinograms are view-major, then angle,
slice, detector.  Headers are a single ASCII line, so files round-trip
bit-exactly.
"""

import csv

import numpy as np

from .field import ScalarVolume, TensorField
from .geometry import ViewSet
from .tensor_inversion import LambdaData
from .transport import Sinogram

_LE_F8 = np.dtype("<f8")


def _write_complex(fh, arr):
    flat = np.ascontiguousarray(arr).reshape(-1)
    pairs = np.empty((flat.size, 2), dtype=_LE_F8)
    pairs[:, 0] = flat.real
    pairs[:, 1] = flat.imag
    fh.write(pairs.tobytes())


def _read_complex(fh, count):
    raw = np.frombuffer(fh.read(count * 16), dtype=_LE_F8).reshape(count, 2)
    return raw[:, 0] + 1j * raw[:, 1]


def write_volume(path, obj):
    """Write a ScalarVolume (1 component) or TensorField (6 components)."""
    with open(path, "wb") as fh:
        if isinstance(obj, TensorField):
            header = f"PTVOL1 {obj.n} {obj.half_width!r} 6 1 {obj.support_radius!r}\n"
            fh.write(header.encode())
            for c in range(6):
                _write_complex(fh, obj.comps[c].ravel(order="F"))
        else:
            header = f"PTVOL1 {obj.n} {obj.half_width!r} 1 1\n"
            fh.write(header.encode())
            _write_complex(fh, obj.data.ravel(order="F"))


def read_volume(path):
    with open(path, "rb") as fh:
        parts = fh.readline().decode().split()
        if parts[0] != "PTVOL1":
            raise ValueError(f"{path}: not a PTVOL1 file")
        n = int(parts[1])
        half_width = float(parts[2])
        ncomp = int(parts[3])
        if ncomp == 1:
            data = _read_complex(fh, n**3).reshape((n, n, n), order="F")
            return ScalarVolume(n=n, half_width=half_width, data=data)
        if ncomp != 6:
            raise ValueError(f"{path}: unsupported component count {ncomp}")
        support_radius = float(parts[5])
        comps = np.empty((6, n, n, n), dtype=complex)
        for c in range(6):
            comps[c] = _read_complex(fh, n**3).reshape((n, n, n), order="F")
        return TensorField(n=n, half_width=half_width, support_radius=support_radius, comps=comps)


def _views_header(views):
    flat = " ".join(repr(float(x)) for x in views.omegas.reshape(-1))
    return (
        f"{views.angles_per_view} {views.slice_count} {views.detector_count} "
        f"{views.half_width!r} {flat}"
    )


def _parse_views(parts):
    K, Ms, Md = int(parts[0]), int(parts[1]), int(parts[2])
    H = float(parts[3])
    omegas = np.array([float(x) for x in parts[4:22]]).reshape(6, 3)
    return ViewSet(
        omegas=omegas, angles_per_view=K, detector_count=Md, slice_count=Ms, half_width=H
    )


def write_sinogram(path, sino):
    with open(path, "wb") as fh:
        fh.write(f"PTSIN1 {sino.kind} {_views_header(sino.views)}\n".encode())
        _write_complex(fh, sino.data)


def read_sinogram(path):
    with open(path, "rb") as fh:
        parts = fh.readline().decode().split()
        if parts[0] != "PTSIN1":
            raise ValueError(f"{path}: not a PTSIN1 file")
        kind = parts[1]
        views = _parse_views(parts[2:])
        shape = (6, views.angles_per_view, views.slice_count, views.detector_count)
        data = _read_complex(fh, int(np.prod(shape))).reshape(shape)
        return Sinogram(views=views, kind=kind, data=data)


def write_lambda(path, data):
    with open(path, "wb") as fh:
        fh.write(f"PTLAM1 {data.kind} {_views_header(data.views)}\n".encode())
        _write_complex(fh, data.blocks)


def read_lambda(path):
    with open(path, "rb") as fh:
        parts = fh.readline().decode().split()
        if parts[0] != "PTLAM1":
            raise ValueError(f"{path}: not a PTLAM1 file")
        kind = parts[1]
        views = _parse_views(parts[2:])
        shape = (6, views.angles_per_view, views.slice_count, views.detector_count)
        blocks = _read_complex(fh, int(np.prod(shape))).reshape(shape)
        return LambdaData(views=views, kind=kind, blocks=blocks)


def write_history_csv(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "residual_sup", "update_sup", "err_sup", "err_fourier", "seconds"])
        for e in history:
            w.writerow([e.n, e.residual_sup, e.update_sup, e.err_sup, e.err_fourier, e.seconds])


def write_heatmap(path, image, sidecar_path=None):
    """Grayscale binary PGM of |image| with a fixed linear ramp; the value
    of full white is recorded in a sidecar text file."""
    mag = np.abs(np.asarray(image))
    vmax = float(np.max(mag)) if mag.size else 0.0
    scale = 255.0 / vmax if vmax > 0 else 0.0
    pix = np.clip(np.rint(mag * scale), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode())
        fh.write(pix.tobytes())
    if sidecar_path is not None:
        with open(sidecar_path, "w") as fh:
            fh.write(f"white_level {vmax!r}\n")
