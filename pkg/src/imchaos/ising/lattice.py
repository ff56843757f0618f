"""Faces of the scaled square lattice inside a domain, with a pinned + boundary ring."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from imchaos.errors import ConfigError, OutsideDomain

BETA_C = 0.5 * np.log1p(np.sqrt(2.0))

OUTSIDE, FREE, BOUNDARY = 0, 1, 2
MAGIC = b"IMIS"


@dataclass
class SpinLattice:
    """Spins on the faces delta*([n, n+1) x [m, m+1)) held in a padded box.

    Cell (i, j) of the box is the face with n = i + n0, m = j + m0.  ``kind`` marks
    free faces, boundary faces (spin pinned to +1) and unused cells.
    """

    delta: float
    kind: np.ndarray
    n0: int
    m0: int
    spins: np.ndarray = field(default=None)

    def __post_init__(self):
        self.kind = np.ascontiguousarray(self.kind, dtype=np.int8)
        if self.spins is None:
            self.spins = np.ones(self.kind.shape, dtype=np.int8)
        self.spins = np.ascontiguousarray(self.spins, dtype=np.int8)
        if self.spins.shape != self.kind.shape:
            raise ConfigError("spin array does not match the lattice")

    # -- construction -------------------------------------------------------------

    @classmethod
    def from_mask(cls, free: np.ndarray, delta: float = 1.0, n0: int = 0, m0: int = 0) -> "SpinLattice":
        """Free faces from a boolean mask; the boundary is every non-free 4-neighbour."""
        free = np.asarray(free, dtype=bool)
        if not free.any():
            raise ConfigError("no free faces")
        box = np.zeros((free.shape[0] + 2, free.shape[1] + 2), dtype=bool)
        box[1:-1, 1:-1] = free
        nb = np.zeros_like(box)
        nb[1:, :] |= box[:-1, :]
        nb[:-1, :] |= box[1:, :]
        nb[:, 1:] |= box[:, :-1]
        nb[:, :-1] |= box[:, 1:]
        kind = np.where(box, FREE, np.where(nb, BOUNDARY, OUTSIDE)).astype(np.int8)
        return cls(delta, kind, n0 - 1, m0 - 1)

    @classmethod
    def disc(cls, delta: float) -> "SpinLattice":
        """Faces contained in the open unit disc."""
        if not 0 < delta <= 0.5:
            raise ConfigError("mesh must lie in (0, 1/2]")
        M = int(np.ceil(1.0 / delta)) + 1
        n = np.arange(-M, M)
        lo = n * delta
        hi = (n + 1) * delta
        far = np.maximum(np.abs(lo), np.abs(hi))  # farthest coordinate of the closed face
        mask = far[:, None] ** 2 + far[None, :] ** 2 < 1.0
        return cls.from_mask(mask, delta, -M, -M)

    # -- geometry -----------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.kind.shape

    @property
    def n_free(self) -> int:
        return int(np.count_nonzero(self.kind == FREE))

    def face_index(self, x) -> np.ndarray:
        """Flat box index of the face containing each point; OutsideDomain if not free."""
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        i = np.floor(x.real / self.delta).astype(np.int64) - self.n0
        j = np.floor(x.imag / self.delta).astype(np.int64) - self.m0
        W, H = self.shape
        ok = (i >= 0) & (i < W) & (j >= 0) & (j < H)
        if not ok.all() or np.any(self.kind[i, j] != FREE):
            raise OutsideDomain("point not in a free face")
        return i * H + j

    def centers(self, which: int = FREE) -> tuple[np.ndarray, np.ndarray]:
        """Flat indices and face centres of one kind of cell."""
        idx = np.flatnonzero(self.kind.ravel() == which)
        H = self.shape[1]
        i, j = np.divmod(idx, H)
        z = (i + self.n0 + 0.5) * self.delta + 1j * (j + self.m0 + 0.5) * self.delta
        return idx, z

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Nearest-neighbour pairs with at least one free face, each pair once."""
        k = self.kind
        flat = np.arange(k.size).reshape(k.shape)
        a, b = [], []
        for sl_a, sl_b in (((slice(None, -1), slice(None)), (slice(1, None), slice(None))),
                           ((slice(None), slice(None, -1)), (slice(None), slice(1, None)))):
            ka, kb = k[sl_a], k[sl_b]
            use = ((ka == FREE) & (kb != OUTSIDE)) | ((kb == FREE) & (ka != OUTSIDE))
            a.append(flat[sl_a][use])
            b.append(flat[sl_b][use])
        return np.concatenate(a).astype(np.int64), np.concatenate(b).astype(np.int64)

    def check(self) -> None:
        """Every free face has its four neighbours free or boundary; boundary spins are +1."""
        k = self.kind
        free = k == FREE
        pad = np.pad(k, 1)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = pad[1 + di: 1 + di + k.shape[0], 1 + dj: 1 + dj + k.shape[1]]
            if np.any(free & (nb == OUTSIDE)):
                raise ConfigError("free face with a missing neighbour")
        if np.any(self.spins[k == BOUNDARY] != 1):
            raise ConfigError("boundary spin not pinned to +1")

    def spin_at(self, x) -> np.ndarray:
        """sigma_delta(x): the face spin, +1 off the free faces."""
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        i = np.floor(x.real / self.delta).astype(np.int64) - self.n0
        j = np.floor(x.imag / self.delta).astype(np.int64) - self.m0
        W, H = self.shape
        out = np.ones(x.shape, dtype=np.int8)
        ok = (i >= 0) & (i < W) & (j >= 0) & (j < H)
        ok[ok] = self.kind[i[ok], j[ok]] == FREE
        out[ok] = self.spins[i[ok], j[ok]]
        return out

    def copy(self) -> "SpinLattice":
        return SpinLattice(self.delta, self.kind, self.n0, self.m0, self.spins.copy())


def xor_field(a: SpinLattice, b: SpinLattice) -> np.ndarray:
    """S = sigma * sigma~ on the box; +1 off the free faces."""
    if a.kind.shape != b.kind.shape or a.delta != b.delta:
        raise ConfigError("XOR needs two copies of the same lattice")
    s = (a.spins * b.spins).astype(np.int8)
    s[a.kind != FREE] = 1
    return s


# -- run-length encoded snapshots ---------------------------------------------------


def _varint(n: int) -> bytes:
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        out.append(b | (0x80 if n else 0))
        if not n:
            return bytes(out)


def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    n = shift = 0
    while True:
        b = buf[pos]
        pos += 1
        n |= (b & 0x7F) << shift
        shift += 7
        if not b & 0x80:
            return n, pos


def encode_snapshot(lat: SpinLattice) -> bytes:
    """IMIS record: magic, delta (f64), box (n0, m0, width, height as i32), then runs.

    Bits are 1 for spin -1, scanned row-major; runs alternate starting with 0 bits.
    Unused cells are written as +1.
    """
    s = np.where(lat.kind == OUTSIDE, 1, lat.spins).ravel()
    bits = (s < 0).astype(np.int8)
    change = np.flatnonzero(np.diff(bits)) + 1
    bounds = np.concatenate([[0], change, [bits.size]])
    runs = np.diff(bounds).tolist()
    if bits.size and bits[0] == 1:
        runs = [0] + runs
    W, H = lat.shape
    head = MAGIC + struct.pack("<d4i", lat.delta, lat.n0, lat.m0, W, H)
    return head + b"".join(_varint(r) for r in runs)


def decode_snapshot(buf: bytes, kind: np.ndarray | None = None) -> SpinLattice:
    """Inverse of :func:`encode_snapshot`; the lattice geometry is rebuilt from delta."""
    if buf[:4] != MAGIC:
        raise ConfigError("not an IMIS snapshot")
    delta, n0, m0, W, H = struct.unpack_from("<d4i", buf, 4)
    pos = 4 + struct.calcsize("<d4i")
    bits = np.empty(W * H, dtype=np.int8)
    at, val = 0, 0
    while pos < len(buf):
        r, pos = _read_varint(buf, pos)
        bits[at: at + r] = val
        at += r
        val ^= 1
    if at != W * H:
        raise ConfigError("truncated snapshot")
    if kind is None:
        kind = SpinLattice.disc(delta).kind
    spins = (1 - 2 * bits).reshape(W, H).astype(np.int8)
    return SpinLattice(delta, kind, n0, m0, spins)
