"""Binary state frames with a fixed self-describing layout.

Header: magic "MHDVS1\\0\\0", u32 version, u32 nx/ny/nz, f64 t, f64
sigma/rho_plus/rho_minus.  Then little-endian float64 arrays in declaration
order: f, theta (ny x nx), the four curl fields (3 x nz x ny x nx each),
and the eight wall-average constants.  Row-major with the first horizontal
coordinate fastest, so a frame round-trips byte-exactly.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

MAGIC = b"MHDVS1\x00\x00"
VERSION = 1
_HEADER = struct.Struct("<8sIIIIdddd")


@dataclass
class SnapshotFrame:
    t: float
    sigma: float
    rho_plus: float
    rho_minus: float
    f: np.ndarray
    theta: np.ndarray
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    j_plus: np.ndarray
    j_minus: np.ndarray
    a_plus: tuple = (0.0, 0.0)
    a_minus: tuple = (0.0, 0.0)
    b_plus: tuple = (0.0, 0.0)
    b_minus: tuple = (0.0, 0.0)

    @property
    def shape2(self) -> tuple:
        return self.f.shape

    @property
    def nz(self) -> int:
        return self.omega_minus.shape[1]


def _arrays(frame: SnapshotFrame) -> tuple:
    return (frame.f, frame.theta, frame.omega_plus, frame.omega_minus,
            frame.j_plus, frame.j_minus)


def write_snapshot(path: str, frame: SnapshotFrame) -> None:
    ny, nx = frame.f.shape
    nz = frame.nz
    head = _HEADER.pack(MAGIC, VERSION, nx, ny, nz, float(frame.t),
                        float(frame.sigma), float(frame.rho_plus),
                        float(frame.rho_minus))
    with open(path, "wb") as fh:
        fh.write(head)
        for arr in _arrays(frame):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        wall = np.array([*frame.a_plus, *frame.a_minus,
                         *frame.b_plus, *frame.b_minus], dtype="<f8")
        fh.write(wall.tobytes())


def read_snapshot(path: str) -> SnapshotFrame:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ConfigError(f"snapshot {path}: truncated header")
    magic, version, nx, ny, nz, t, sigma, rp, rm = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ConfigError(f"snapshot {path}: bad magic {magic!r}")
    if version != VERSION:
        raise ConfigError(f"snapshot {path}: unsupported version {version}")
    n2 = ny * nx
    n3 = 3 * nz * n2
    need = _HEADER.size + 8 * (2 * n2 + 4 * n3 + 8)
    if len(raw) != need:
        raise ConfigError(
            f"snapshot {path}: size {len(raw)} != expected {need}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    pos = 0

    def take(count, shape):
        nonlocal pos
        out = data[pos:pos + count].reshape(shape).astype(np.float64)
        pos += count
        return out

    f = take(n2, (ny, nx))
    theta = take(n2, (ny, nx))
    curls = [take(n3, (3, nz, ny, nx)) for _ in range(4)]
    wall = data[pos:pos + 8]
    return SnapshotFrame(
        t=float(t), sigma=float(sigma), rho_plus=float(rp),
        rho_minus=float(rm), f=f, theta=theta,
        omega_plus=curls[0], omega_minus=curls[1],
        j_plus=curls[2], j_minus=curls[3],
        a_plus=(float(wall[0]), float(wall[1])),
        a_minus=(float(wall[2]), float(wall[3])),
        b_plus=(float(wall[4]), float(wall[5])),
        b_minus=(float(wall[6]), float(wall[7])),
    )
