"""Format parsing: CSV schema checks and snapshot decoding."""

import math
import struct

import numpy as np
import pytest

from mhdviz import (DOC_COLUMNS, RunArtifact, SchemaError, SweepArtifact,
                    read_snapshot)

HEADER = ",".join(DOC_COLUMNS)


def write_series(path, columns, rows, version=1):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# mhdvs csv {version}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def pack_frame(nx=8, ny=8, nz=5, t=1.5, sigma=0.1, rho=(1.0, 1.0),
               wall=(0.0,) * 8, f=None):
    head = struct.pack("<8sIIIIdddd", b"MHDVS1\x00\x00", 1, nx, ny, nz,
                       t, sigma, rho[0], rho[1])
    if f is None:
        f = np.zeros((ny, nx))
    theta = np.zeros((ny, nx))
    curl = np.zeros((4, 3, nz, ny, nx))
    body = np.concatenate([f.ravel(), theta.ravel(), curl.ravel(),
                           np.array(wall)])
    return head + body.astype("<f8").tobytes()


def make_run(tmp_path, probes=((1, 0),), nrows=12, write_frame=True):
    cols = list(DOC_COLUMNS)
    for k1, k2 in probes:
        cols += [f"re_{k1}_{k2}", f"im_{k1}_{k2}"]
    t = np.arange(nrows) * 0.5
    rows = []
    for i, tt in enumerate(t):
        base = [tt, 0.5] + [0.0] * (len(DOC_COLUMNS) - 2)
        for k1, k2 in probes:
            w = math.sqrt(0.1 * (k1 ** 2 + k2 ** 2) ** 1.5 / 2.0)
            base += [1e-4 * math.cos(w * tt), 0.0]
        rows.append(base)
    write_series(tmp_path / "series.csv", cols, rows)
    if write_frame:
        (tmp_path / "final.bin").write_bytes(pack_frame())
    return tmp_path


class TestRunArtifact:
    def test_parses_columns_and_probes(self, tmp_path):
        make_run(tmp_path, probes=((1, 0), (2, 1)))
        art = RunArtifact(str(tmp_path))
        assert art.columns[:12] == DOC_COLUMNS
        assert art.probe_modes == [(1, 0), (2, 1)]
        assert art.t.shape == (12,)
        z = art.probe(2, 1)
        assert np.iscomplexobj(z) and z.shape == (12,)

    def test_version_mismatch_is_hard_error(self, tmp_path):
        write_series(tmp_path / "series.csv", DOC_COLUMNS,
                     [[0.0] * 12], version=7)
        with pytest.raises(SchemaError, match="schema version"):
            RunArtifact(str(tmp_path))

    def test_column_mismatch_mentions_expected_schema(self, tmp_path):
        cols = ("t", "dt", "bogus") + DOC_COLUMNS[3:]
        write_series(tmp_path / "series.csv", cols, [[0.0] * 12])
        with pytest.raises(SchemaError, match="expected '# mhdvs csv 1'"):
            RunArtifact(str(tmp_path))

    def test_missing_probe_lists_available_modes(self, tmp_path):
        make_run(tmp_path, probes=((1, 0),))
        art = RunArtifact(str(tmp_path))
        with pytest.raises(SchemaError, match=r"\(1, 0\)"):
            art.probe(3, 0)

    def test_unpaired_probe_columns_rejected(self, tmp_path):
        cols = DOC_COLUMNS + ("re_1_0", "im_2_0")
        write_series(tmp_path / "series.csv", cols, [[0.0] * 14])
        with pytest.raises(SchemaError, match="unrecognized columns"):
            RunArtifact(str(tmp_path))

    def test_no_csv_found(self, tmp_path):
        with pytest.raises(SchemaError, match="no time-series CSV"):
            RunArtifact(str(tmp_path))

    def test_missing_snapshot(self, tmp_path):
        make_run(tmp_path, write_frame=False)
        art = RunArtifact(str(tmp_path))
        with pytest.raises(SchemaError, match="no snapshot"):
            art.frame("final.bin")


class TestSnapshots:
    def test_decode_fields(self, tmp_path):
        f = np.arange(64, dtype=float).reshape(8, 8)
        p = tmp_path / "x.bin"
        p.write_bytes(pack_frame(t=2.25, sigma=0.01, rho=(2.0, 3.0),
                                 wall=(1, 0, -1, 0, 2, 0, 0, 2), f=f))
        fr = read_snapshot(str(p))
        assert fr.t == 2.25 and fr.sigma == 0.01
        assert fr.rho_plus == 2.0 and fr.rho_minus == 3.0
        assert fr.a_plus == (1.0, 0.0) and fr.b_minus == (0.0, 2.0)
        assert np.array_equal(fr.f, f)
        assert fr.omega_plus.shape == (3, 5, 8, 8)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"NOTMAGIC" + bytes(64))
        with pytest.raises(SchemaError, match="bad snapshot magic"):
            read_snapshot(str(p))

    def test_truncated_body(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(pack_frame()[:-16])
        with pytest.raises(SchemaError, match="size"):
            read_snapshot(str(p))


class TestSweepArtifact:
    def test_parse(self, tmp_path):
        with open(tmp_path / "sweep.csv", "w", encoding="utf-8") as fh:
            fh.write("# mhdvs sweep 1\n")
            fh.write("t,d_0.1_0.01,d_0.01_0.001\n")
            fh.write("0,1e-9,1e-10\n1,2e-5,3e-6\n")
        sw = SweepArtifact(str(tmp_path))
        assert sw.pairs == [(0.1, 0.01), (0.01, 0.001)]
        assert sw.t.tolist() == [0.0, 1.0]
        assert sw.distance(1)[1] == 3e-6

    def test_bad_version_line(self, tmp_path):
        (tmp_path / "sweep.csv").write_text("# mhdvs sweep 9\nt\n")
        with pytest.raises(SchemaError, match="bad format line"):
            SweepArtifact(str(tmp_path))

    def test_missing_table(self, tmp_path):
        with pytest.raises(SchemaError, match="no sweep.csv"):
            SweepArtifact(str(tmp_path))
