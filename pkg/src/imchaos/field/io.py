"""Binary and CSV containers for field realizations, chaos fields and CUE spectra."""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from imchaos.errors import ConfigError
from imchaos.field.grids import Grid, angles_grid, points_grid
from imchaos.field.models import Domain, LogCorrelatedModel
from imchaos.field.samplers import FieldRealization
from imchaos.field.schemes import ApproxScheme, SchemeKind

MAGIC = b"IMCF"
VERSION = 1
HEADER = "<4sHBBQQ"  # magic, version, d, scheme tag, n_points, seed


def encode_field(r: FieldRealization) -> bytes:
    """Header, then little-endian f64 grid coordinates (n x d, row-major), values, variance profile."""
    d = 1 if r.grid.domain is Domain.CIRCLE else 2
    coords = np.ascontiguousarray(r.grid.coords, dtype="<f8")
    head = struct.pack(HEADER, MAGIC, VERSION, d, r.scheme.kind.value, len(r.grid), r.seed & ((1 << 64) - 1))
    values = np.ascontiguousarray(np.real(r.values), dtype="<f8")
    var = np.ascontiguousarray(r.variance_profile, dtype="<f8")
    return head + coords.tobytes() + values.tobytes() + var.tobytes()


def decode_field(buf: bytes) -> FieldRealization:
    """Inverse of :func:`encode_field`.

    The container has no domain tag: d = 1 is the circle; for d = 2 a grid with negative
    coordinates is read as the disc (disc grids are centred at 0), otherwise as the square.
    Grid cells are recovered from the point spacing; scheme parameters beyond the tag are not stored.
    """
    size = struct.calcsize(HEADER)
    if len(buf) < size:
        raise ConfigError("truncated IMCF header")
    magic, version, d, tag, n, seed = struct.unpack_from(HEADER, buf)
    if magic != MAGIC:
        raise ConfigError("not an IMCF container")
    if version != VERSION:
        raise ConfigError(f"unsupported IMCF version {version}")
    if d not in (1, 2):
        raise ConfigError(f"bad dimension {d}")
    expect = size + 8 * n * (d + 2)
    if len(buf) != expect:
        raise ConfigError(f"IMCF payload has {len(buf)} bytes, expected {expect}")
    data = np.frombuffer(buf, dtype="<f8", offset=size).astype(float)
    coords = data[: n * d].reshape(n, d)
    values = data[n * d: n * (d + 1)]
    var = data[n * (d + 1):]
    kind = SchemeKind(tag)
    if d == 1:
        grid = angles_grid(coords[:, 0])
        domain = Domain.CIRCLE
    else:
        domain = Domain.UNIT_DISC if np.any(coords < 0) else Domain.UNIT_SQUARE
        pts = coords[:, 0] + 1j * coords[:, 1]
        xs = np.unique(coords[:, 0])
        cell = float(np.min(np.diff(xs))) if xs.size > 1 else 1.0
        grid = points_grid(domain, pts, cell)
    scheme = ApproxScheme(kind, epsilon=grid.spacing) if kind is SchemeKind.CONVOLUTION else ApproxScheme(kind)
    return FieldRealization(grid, values, scheme, int(seed), var, LogCorrelatedModel(domain))


def write_field(path: str | Path, r: FieldRealization) -> None:
    Path(path).write_bytes(encode_field(r))


def read_field(path: str | Path) -> FieldRealization:
    return decode_field(Path(path).read_bytes())


def _coord_header(grid: Grid) -> list[str]:
    return ["x"] if grid.domain is Domain.CIRCLE else ["x", "y"]


def _fmt(x: float) -> str:
    return repr(float(x))


def field_csv(r: FieldRealization) -> str:
    """Columns x[,y],value,variance."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(_coord_header(r.grid) + ["value", "variance"])
    for c, v, s in zip(r.grid.coords, np.real(r.values), r.variance_profile):
        w.writerow([_fmt(t) for t in c] + [_fmt(v), _fmt(s)])
    return out.getvalue()


def chaos_csv(grid: Grid, values: np.ndarray) -> str:
    """Columns x[,y],re,im,modulus."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(_coord_header(grid) + ["re", "im", "modulus"])
    for c, v in zip(grid.coords, np.asarray(values, dtype=complex)):
        w.writerow([_fmt(t) for t in c] + [_fmt(v.real), _fmt(v.imag), _fmt(abs(v))])
    return out.getvalue()


def spectrum_csv(angles) -> str:
    """One eigenangle per row."""
    return "theta\n" + "".join(_fmt(t) + "\n" for t in np.asarray(angles, dtype=float))


def read_spectrum_csv(text: str) -> np.ndarray:
    rows = text.strip().splitlines()
    if not rows or rows[0] != "theta":
        raise ConfigError("spectrum CSV needs a 'theta' header")
    return np.array([float(r) for r in rows[1:]])
