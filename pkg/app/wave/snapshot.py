"""Binary (WNSF) and CSV persistence of SolutionField slices.

Layout, little-endian: header {magic b"WNSF", version u32, h f64, k f64,
n_slices u32}, then per slice {t f64, n_points u32, u f64[n_points]}.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from app.core.errors import ArtifactError
from app.wave.field import SolutionField

MAGIC = b"WNSF"
VERSION = 1
_HEADER = struct.Struct("<4sIddI")
_SLICE = struct.Struct("<dI")


def write_snapshot(field: SolutionField, path: str | Path) -> None:
    """Write all stored slices"""
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, field.h, field.k, field.n_slices))
            for t, u in zip(field.times, field.slices, strict=True):
                fh.write(_SLICE.pack(float(t), u.size))
                fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())
    except OSError as e:
        raise ArtifactError(f"cannot write snapshot {path}: {e}") from e


def read_snapshot(
    path: str | Path,
    R: float,
    epsilon: float = 0.0,
    c_coeffs: tuple[float, ...] = (1.0,),
) -> SolutionField:
    """Read a snapshot; R, epsilon and c(u) come from the run configuration"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactError(f"cannot read snapshot {path}: {e}") from e
    if len(data) < _HEADER.size:
        raise ArtifactError(f"{path}: truncated header")
    magic, version, h, k, n_slices = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ArtifactError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ArtifactError(f"{path}: unsupported version {version}")
    offset = _HEADER.size
    times, slices = [], []
    for _ in range(n_slices):
        if offset + _SLICE.size > len(data):
            raise ArtifactError(f"{path}: truncated slice header")
        t, n_points = _SLICE.unpack_from(data, offset)
        offset += _SLICE.size
        end = offset + 8 * n_points
        if end > len(data):
            raise ArtifactError(f"{path}: truncated slice at t={t}")
        slices.append(np.frombuffer(data, dtype="<f8", count=n_points, offset=offset).copy())
        times.append(t)
        offset = end
    return SolutionField(h, k, times, slices, R=R, epsilon=epsilon, c_coeffs=c_coeffs)


def export_csv(field: SolutionField, path: str | Path, r_stride: int = 1) -> None:
    """Columns t, r, u; every ``r_stride``-th node of every slice"""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "r", "u"])
            for i, t in enumerate(field.times):
                r = field.r_grid(i)[::r_stride]
                u = field.slices[i][::r_stride]
                writer.writerows(
                    (f"{t:.17g}", f"{ri:.17g}", f"{ui:.17g}") for ri, ui in zip(r, u, strict=True)
                )
    except OSError as e:
        raise ArtifactError(f"cannot write {path}: {e}") from e
