"""Figure generation on synthetic artifacts: files, warnings, idempotency."""

import math
import os

import numpy as np
import pytest

from mhdviz import DOC_COLUMNS, SchemaError, plot_dispersion, plot_energy, \
    plot_heatmap, plot_sigma_sweep

from test_artifact import pack_frame, write_series


def synth_run(tmp_path, sigma=0.1, probes=((1, 0), (2, 0)), t_end=40.0,
              dt=0.5):
    """Quiescent-background run whose probes oscillate exactly on-curve."""
    tmp_path.mkdir(parents=True, exist_ok=True)
    cols = list(DOC_COLUMNS)
    for k1, k2 in probes:
        cols += [f"re_{k1}_{k2}", f"im_{k1}_{k2}"]
    rows = []
    t = 0.0
    while t <= t_end + 1e-9:
        row = [t, dt, 1e-9, 1e-9, 1e-9, 1e-9, 0.0,
               1e-4, 1e-5, 0.0, 1e-4, -1e-4]
        for k1, k2 in probes:
            k = math.hypot(k1, k2)
            w = math.sqrt(sigma * k ** 3 * math.tanh(k) / 2.0)
            row += [1e-4 * math.cos(w * t), 0.0]
        rows.append(row)
        t += dt
    write_series(tmp_path / "series.csv", cols, rows)
    (tmp_path / "final.bin").write_bytes(
        pack_frame(nx=16, ny=16, nz=5, t=t_end, sigma=sigma,
                   f=1e-4 * np.ones((16, 16))))
    return str(tmp_path)


class TestDispersion:
    def test_points_on_curve_and_files(self, tmp_path):
        run = synth_run(tmp_path / "run", probes=((1, 0), (2, 0), (3, 0)))
        os.makedirs(tmp_path / "figs")
        out = str(tmp_path / "figs" / "disp")
        paths, points = plot_dispersion([run], out=out)
        assert [os.path.basename(p) for p in paths] == ["disp.png",
                                                        "disp.svg"]
        assert all(os.path.getsize(p) > 0 for p in paths)
        assert len(points) == 3
        assert max(p.rel_dev for p in points) < 1e-6

    def test_empty_run_list_warns_and_noops(self, tmp_path):
        with pytest.warns(UserWarning, match="no run directories"):
            paths, points = plot_dispersion([], out=str(tmp_path / "x"))
        assert paths == [] and points == []
        assert not os.path.exists(tmp_path / "x.png")

    def test_unprobed_mode_is_schema_error(self, tmp_path):
        run = synth_run(tmp_path / "run")
        with pytest.raises(SchemaError, match="no probe columns"):
            plot_dispersion([run], modes=[(5, 5)],
                            out=str(tmp_path / "x"))

    def test_regeneration_is_byte_identical(self, tmp_path):
        run = synth_run(tmp_path / "run")
        out = str(tmp_path / "disp")
        paths, _ = plot_dispersion([run], out=out)
        first = [open(p, "rb").read() for p in paths]
        paths2, _ = plot_dispersion([run], out=out)
        second = [open(p, "rb").read() for p in paths2]
        assert paths == paths2
        for a, b in zip(first, second):
            assert a == b


class TestEnergyAndSweep:
    def test_energy_files(self, tmp_path):
        run = synth_run(tmp_path / "run")
        paths = plot_energy(run)
        assert [os.path.basename(p) for p in paths] == ["viz_energy.png",
                                                        "viz_energy.svg"]

    def test_energy_quiescent_zero_series(self, tmp_path):
        # all-zero energies must survive the log-style axis
        d = tmp_path / "run"
        d.mkdir()
        rows = [[t, 0.02] + [0.0] * 10 + [0.0, 0.0]
                for t in np.arange(0.0, 2.01, 0.2)]
        write_series(d / "series.csv",
                     list(DOC_COLUMNS) + ["re_1_0", "im_1_0"], rows)
        paths = plot_energy(str(d))
        assert all(os.path.getsize(p) > 0 for p in paths)

    def test_sweep_files_and_noop(self, tmp_path):
        d = tmp_path / "sweep"
        d.mkdir()
        with pytest.warns(UserWarning, match="no sweep.csv"):
            assert plot_sigma_sweep(str(d)) == []
        with open(d / "sweep.csv", "w", encoding="utf-8") as fh:
            fh.write("# mhdvs sweep 1\n")
            fh.write("t,d_0.1_0.01,d_0.01_0.001\n")
            for t in np.arange(0.0, 5.01, 0.25):
                fh.write(f"{t},{1e-3 * (1 + t)},{1e-4 * (1 + t)}\n")
        paths = plot_sigma_sweep(str(d))
        assert [os.path.basename(p) for p in paths] == ["viz_sweep.png",
                                                        "viz_sweep.svg"]

    def test_heatmap_from_frame(self, tmp_path):
        run = synth_run(tmp_path / "run")
        paths = plot_heatmap(run)
        assert [os.path.basename(p) for p in paths] == \
            ["viz_heatmap_final.png", "viz_heatmap_final.svg"]
