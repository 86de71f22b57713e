"""Figure generation from run artifacts.

All plots re-derive their content from the CSV tables; snapshots are
touched only for the interface heatmap and for the background constants
(sigma, densities, wall means) that fix the overlay curves.  Reruns on
unchanged inputs produce byte-identical files: the SVG id salt is
pinned and the writers are given fixed metadata.
"""

import math
import os
import warnings
from dataclasses import dataclass

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import fits, oracle  # noqa: E402
from .artifact import RunArtifact, SweepArtifact, SchemaError  # noqa: E402

_RC = {"svg.hashsalt": "mhdviz"}


def _save(fig, base):
    paths = []
    with plt.rc_context(_RC):
        png = base + ".png"
        fig.savefig(png, dpi=150, metadata={"Software": "mhdviz"})
        paths.append(png)
        svg = base + ".svg"
        fig.savefig(svg, metadata={"Date": None, "Creator": "mhdviz"})
        paths.append(svg)
    plt.close(fig)
    return paths


@dataclass
class OverlayPoint:
    run: str
    k1: int
    k2: int
    measured_omega: float
    measured_mu: float
    oracle_omega: float
    oracle_mu: float
    rel_dev: float


def _point_deviation(w_m, mu_m, w_o, mu_o):
    # compare on the dominant branch: growth when the oracle grows,
    # frequency otherwise
    if mu_o > 1e-9:
        return abs(mu_m - mu_o) / mu_o
    if w_o > 1e-9:
        return abs(w_m - w_o) / w_o
    return max(abs(w_m), abs(mu_m))


def plot_dispersion(run_dirs, modes=None, out="dispersion"):
    """Overlay measured mode frequencies/growth rates on linear theory.

    Points come from fitting each requested probe series; curves are the
    dispersion roots along the (k, 0) ray for each run's background
    (read from its final snapshot).  Returns (written paths, overlay
    points); an empty run list is a warned no-op.
    """
    if not run_dirs:
        warnings.warn("plot_dispersion: no run directories given")
        return [], []
    points = []
    curves = []
    for d in run_dirs:
        art = RunArtifact(d)
        frame = art.frame("final.bin")
        label = os.path.basename(os.path.normpath(d))
        curves.append((label, frame))
        for k1, k2 in (modes or art.probe_modes):
            fit = fits.fit_mode(art.t, art.probe(k1, k2))
            if fit is None:
                warnings.warn(f"{d}: probe ({k1},{k2}) has no usable signal")
                continue
            w_m, mu_m = fit
            w_o, mu_o = oracle.from_frame(frame, k1, k2)
            points.append(OverlayPoint(
                run=label, k1=k1, k2=k2,
                measured_omega=w_m, measured_mu=mu_m,
                oracle_omega=w_o, oracle_mu=mu_o,
                rel_dev=_point_deviation(w_m, mu_m, w_o, mu_o)))

    kmax = max([math.hypot(p.k1, p.k2) for p in points] + [4.0])
    kk = np.linspace(0.25, kmax + 0.75, 200)
    fig, (ax_w, ax_mu) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for label, frame in curves:
        roots = [oracle.from_frame(frame, k, 0.0) for k in kk]
        ax_w.plot(kk, [r[0] for r in roots], lw=1.2, label=label)
        ax_mu.plot(kk, [r[1] for r in roots], lw=1.2, label=label)
    for p in points:
        kabs = math.hypot(p.k1, p.k2)
        if p.oracle_mu > 1e-9:
            ax_mu.plot([kabs], [p.measured_mu], "ko", ms=5, mfc="none")
        else:
            ax_w.plot([kabs], [p.measured_omega], "ko", ms=5, mfc="none")
    ax_w.set_xlabel("|xi|")
    ax_w.set_ylabel("omega")
    ax_w.set_title("oscillation frequency")
    ax_mu.set_xlabel("|xi|")
    ax_mu.set_ylabel("mu")
    ax_mu.set_title("growth rate")
    ax_w.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out), points


def plot_energy(run_dir, out=None):
    """Energy pair and stability-form histories for one run."""
    art = RunArtifact(run_dir)
    t = art.t
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.6), sharex=True)
    for name in ("E1", "E2", "G1", "G2"):
        ax1.plot(t, art.column(name), lw=1.1, label=name)
    # symlog keeps exact-zero (quiescent) series visible as flat lines
    ax1.set_yscale("symlog", linthresh=1e-18)
    ax1.set_ylabel("energy")
    ax1.legend(fontsize=8, ncol=4)
    ax2.plot(t, art.column("Lambda"), color="k", lw=1.1)
    ax2.set_xlabel("t")
    ax2.set_ylabel("Lambda")
    fig.tight_layout()
    base = out or os.path.join(run_dir, "viz_energy")
    return _save(fig, base)


def plot_sigma_sweep(sweep_dir, out=None):
    """Pairwise interface-distance curves from a sweep table.

    A directory without a sweep table is a warned no-op (nothing was
    swept); a malformed table is a hard error.
    """
    if not os.path.exists(os.path.join(sweep_dir, "sweep.csv")):
        warnings.warn(f"plot_sigma_sweep: no sweep.csv in {sweep_dir}")
        return []
    sw = SweepArtifact(sweep_dir)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, (sa, sb) in enumerate(sw.pairs):
        ax.plot(sw.t, sw.distance(i), lw=1.2,
                label=f"sigma {sa:g} vs {sb:g}")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("interface distance")
    ax.legend(fontsize=8)
    fig.tight_layout()
    base = out or os.path.join(sweep_dir, "viz_sweep")
    return _save(fig, base)


def plot_heatmap(run_dir, snapshot="final.bin", out=None):
    """Interface height heatmap from one binary frame."""
    art = RunArtifact(run_dir)
    frame = art.frame(snapshot)
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    im = ax.imshow(frame.f, origin="lower", cmap="RdBu_r",
                   extent=(0.0, 2.0 * math.pi, 0.0, 2.0 * math.pi),
                   aspect="equal")
    fig.colorbar(im, ax=ax, label="f")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"t = {frame.t:g}")
    fig.tight_layout()
    stem = os.path.splitext(snapshot)[0]
    base = out or os.path.join(run_dir, f"viz_heatmap_{stem}")
    return _save(fig, base)
