"""Read-only access to run artifacts: the CSV time series and snapshots.

Everything here parses the documented file formats directly; the solver
package is never imported, so these scripts work on any artifact
directory regardless of how it was produced.
"""

import os
import re
import struct
from dataclasses import dataclass

import numpy as np

CSV_VERSION = 1
SNAPSHOT_VERSION = 1

# the driver's documented fixed column list, in order
DOC_COLUMNS = ("t", "dt", "E1", "E2", "G1", "G2", "Lambda",
               "Hs_f", "Hs_theta", "mean_f", "max_f", "min_f")

_MAGIC = b"MHDVS1\x00\x00"
_HEADER = struct.Struct("<8sIIIIdddd")
_PROBE_RE = re.compile(r"re_(-?\d+)_(-?\d+)$")


class SchemaError(ValueError):
    """Artifact does not match the documented format."""


def _schema_hint():
    return ("expected '# mhdvs csv 1', a header row starting with "
            + ",".join(DOC_COLUMNS)
            + ", then re_{k1}_{k2},im_{k1}_{k2} pairs per probe mode")


@dataclass
class SnapshotFrame:
    """One decoded binary state frame."""

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
    a_plus: tuple
    a_minus: tuple
    b_plus: tuple
    b_minus: tuple


def read_snapshot(path):
    """Decode a .bin frame per the documented layout."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SchemaError(f"{path}: truncated snapshot header")
    magic, version, nx, ny, nz, t, sigma, rp, rm = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise SchemaError(f"{path}: bad snapshot magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise SchemaError(f"{path}: unsupported snapshot version {version}")
    n2 = ny * nx
    n3 = 3 * nz * n2
    need = _HEADER.size + 8 * (2 * n2 + 4 * n3 + 8)
    if len(raw) != need:
        raise SchemaError(f"{path}: size {len(raw)} != expected {need}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    pos = 0

    def take(count, shape):
        nonlocal pos
        out = data[pos:pos + count].reshape(shape)
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


def _find_csv(path):
    cand = os.path.join(path, "series.csv")
    if os.path.exists(cand):
        return cand
    hits = []
    for name in sorted(os.listdir(path)):
        if not name.endswith(".csv"):
            continue
        full = os.path.join(path, name)
        with open(full, "r", encoding="utf-8") as fh:
            if fh.readline().startswith("# mhdvs csv"):
                hits.append(full)
    if len(hits) == 1:
        return hits[0]
    if not hits:
        raise SchemaError(f"{path}: no time-series CSV found")
    raise SchemaError(f"{path}: multiple series CSVs, cannot choose: {hits}")


class RunArtifact:
    """One run directory: parsed CSV table plus a lazy snapshot index."""

    def __init__(self, path):
        self.path = path
        self.csv_path = _find_csv(path)
        with open(self.csv_path, "r", encoding="utf-8") as fh:
            first = fh.readline().strip()
            header = fh.readline().strip()
            body = fh.read()
        m = re.match(r"# mhdvs csv (\d+)$", first)
        if not m:
            raise SchemaError(
                f"{self.csv_path}: bad format line {first!r}; "
                + _schema_hint())
        if int(m.group(1)) != CSV_VERSION:
            raise SchemaError(
                f"{self.csv_path}: schema version {m.group(1)} != "
                f"{CSV_VERSION}")
        self.columns = tuple(header.split(","))
        if self.columns[:len(DOC_COLUMNS)] != DOC_COLUMNS:
            raise SchemaError(
                f"{self.csv_path}: column mismatch {self.columns[:12]}; "
                + _schema_hint())
        self.probe_modes = []
        extras = self.columns[len(DOC_COLUMNS):]
        for i in range(0, len(extras), 2):
            m = _PROBE_RE.match(extras[i])
            partner = f"im_{m.group(1)}_{m.group(2)}" if m else None
            if m is None or i + 1 >= len(extras) or extras[i + 1] != partner:
                raise SchemaError(
                    f"{self.csv_path}: unrecognized columns {extras[i:]}; "
                    + _schema_hint())
            self.probe_modes.append((int(m.group(1)), int(m.group(2))))
        rows = [line.split(",") for line in body.splitlines() if line]
        self.data = np.array(rows, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise SchemaError(f"{self.csv_path}: ragged table")
        self._index = {name: i for i, name in enumerate(self.columns)}
        self._frames = {}

    def column(self, name):
        if name not in self._index:
            raise SchemaError(
                f"{self.csv_path}: no column {name!r}; has "
                f"{', '.join(self.columns)}")
        return self.data[:, self._index[name]]

    @property
    def t(self):
        return self.column("t")

    def probe(self, k1, k2):
        """Complex mode coefficient series for probe (k1, k2)."""
        if (k1, k2) not in self.probe_modes:
            raise SchemaError(
                f"{self.csv_path}: no probe columns for mode ({k1},{k2}); "
                f"probed modes: {self.probe_modes or 'none'}")
        return self.column(f"re_{k1}_{k2}") + 1j * self.column(f"im_{k1}_{k2}")

    @property
    def snapshots(self):
        return sorted(n for n in os.listdir(self.path) if n.endswith(".bin"))

    def frame(self, name="final.bin"):
        if name not in self._frames:
            full = os.path.join(self.path, name)
            if not os.path.exists(full):
                raise SchemaError(f"{self.path}: no snapshot {name}")
            self._frames[name] = read_snapshot(full)
        return self._frames[name]


class SweepArtifact:
    """A sweep directory: the pairwise-distance table."""

    def __init__(self, path):
        self.path = path
        self.table_path = os.path.join(path, "sweep.csv")
        if not os.path.exists(self.table_path):
            raise SchemaError(f"{path}: no sweep.csv")
        with open(self.table_path, "r", encoding="utf-8") as fh:
            first = fh.readline().strip()
            header = fh.readline().strip()
            body = fh.read()
        m = re.match(r"# mhdvs sweep (\d+)$", first)
        if not m or int(m.group(1)) != CSV_VERSION:
            raise SchemaError(
                f"{self.table_path}: bad format line {first!r}")
        self.columns = tuple(header.split(","))
        if not self.columns or self.columns[0] != "t":
            raise SchemaError(f"{self.table_path}: first column must be t")
        self.pairs = []
        for name in self.columns[1:]:
            bits = name.split("_")
            if len(bits) != 3 or bits[0] != "d":
                raise SchemaError(
                    f"{self.table_path}: unrecognized column {name!r}")
            self.pairs.append((float(bits[1]), float(bits[2])))
        rows = [line.split(",") for line in body.splitlines() if line]
        self.data = np.array(rows, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise SchemaError(f"{self.table_path}: ragged table")

    @property
    def t(self):
        return self.data[:, 0]

    def distance(self, i):
        return self.data[:, 1 + i]
