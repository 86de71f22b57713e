"""Time integration and experiment orchestration.

Classical RK4 on the surface-plus-curl state: every stage rebuilds the
strip geometry from its own interface and re-recovers the bulk fields, so
the scheme is a true method of lines on the prognostic variables
(f, theta, curls, wall averages).  The loop writes a delimited series, a
figure pair, and binary snapshots, and aborts cleanly on NaN, solver
failure, or a graph-bound violation, keeping the last good state.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as diag
from . import dynamics as dyn
from .config import SimConfig
from .errors import ConfigError, MHDVSError, NaNDetected
from .geometry import Interface
from .snapshots import SnapshotFrame, read_snapshot, write_snapshot
from .spectral import FourierField2D, Grid2D, sobolev_norm

log = logging.getLogger(__name__)

CSV_VERSION = 1
BASE_COLUMNS = ("t", "dt", "E1", "E2", "G1", "G2", "Lambda",
                "Hs_f", "Hs_theta", "mean_f", "max_f", "min_f")
MEAN_DRIFT_ABORT = 1e-8


def csv_columns(probe_modes) -> tuple:
    cols = list(BASE_COLUMNS)
    for k1, k2 in probe_modes:
        cols.append(f"re_{k1}_{k2}")
        cols.append(f"im_{k1}_{k2}")
    return tuple(cols)


# ---------------------------------------------------------------------------
# prognostic vector


@dataclass
class StateVec:
    """Raw prognostic arrays; the linear-combination side of RK4.

    wall packs the eight drift constants as (a+_1, a+_2, a-_1, a-_2,
    b+_1, b+_2, b-_1, b-_2).
    """

    f: np.ndarray
    theta: np.ndarray
    w_p: np.ndarray
    w_m: np.ndarray
    jc_p: np.ndarray
    jc_m: np.ndarray
    wall: np.ndarray

    @property
    def parts(self) -> tuple:
        return (self.f, self.theta, self.w_p, self.w_m,
                self.jc_p, self.jc_m, self.wall)

    def axpy(self, c: float, other: "StateVec") -> "StateVec":
        return StateVec(*(a + c * b
                          for a, b in zip(self.parts, other.parts)))

    def check_finite(self) -> None:
        for a in self.parts:
            if not np.all(np.isfinite(a)):
                raise NaNDetected("state left the finite range")


def _combine_rk4(y: StateVec, dt: float, k1, k2, k3, k4) -> StateVec:
    return StateVec(*(a + (dt / 6.0) * (p + 2.0 * q + 2.0 * r + s)
                      for a, p, q, r, s in zip(
                          y.parts, k1.parts, k2.parts, k3.parts, k4.parts)))


def _deriv_vec(d: dyn.StateDerivative) -> StateVec:
    return StateVec(
        f=d.df.values, theta=d.dtheta.values,
        w_p=np.stack(d.domega_plus.comps),
        w_m=np.stack(d.domega_minus.comps),
        jc_p=np.stack(d.dj_plus.comps),
        jc_m=np.stack(d.dj_minus.comps),
        wall=np.array([*d.da_plus, *d.da_minus, *d.db_plus, *d.db_minus]),
    )


# ---------------------------------------------------------------------------
# initial data


def _preset_state(cfg: SimConfig, grid: Grid2D) -> StateVec:
    if cfg.seed_probes:
        modes = cfg.probe_modes
    else:
        modes = ((cfg.mode_k1, cfg.mode_k2),)
    fv = np.zeros(grid.X1.shape)
    tv = np.zeros(grid.X1.shape)
    for k1, k2 in modes:
        fv += cfg.amplitude * np.cos(k1 * grid.X1 + k2 * grid.X2)
        tv += cfg.theta_amplitude * np.cos(k1 * grid.X1 + k2 * grid.X2)
    half = 0.5 * cfg.u_jump
    wall = np.zeros(8)
    if cfg.preset in ("kh", "stable"):
        wall[0], wall[2] = half, -half
    if cfg.preset == "stable":
        wall[4], wall[7] = 2.0, 2.0  # h+ along x1, h- along x2
    if cfg.preset == "quiescent":
        fv = np.zeros(grid.X1.shape)
        tv = np.zeros(grid.X1.shape)
    shape3 = (3, cfg.nz, grid.ny, grid.nx)
    z = lambda: np.zeros(shape3)
    return StateVec(f=fv, theta=tv, w_p=z(), w_m=z(), jc_p=z(), jc_m=z(),
                    wall=wall)


def _snapshot_state(cfg: SimConfig, params: dyn.PhysParams) -> tuple:
    frame = read_snapshot(cfg.snapshot)
    ny, nx = frame.shape2
    if (nx, ny, frame.nz) != (cfg.nx, cfg.ny, cfg.nz):
        raise ConfigError(
            f"snapshot grid {nx}x{ny}x{frame.nz} does not match config "
            f"{cfg.nx}x{cfg.ny}x{cfg.nz}")
    for name, have, want in (("sigma", frame.sigma, params.sigma),
                             ("rho_plus", frame.rho_plus, params.rho_plus),
                             ("rho_minus", frame.rho_minus, params.rho_minus)):
        if have != want:
            raise ConfigError(
                f"snapshot {name} = {have} disagrees with config {want}")
    wall = np.array([*frame.a_plus, *frame.a_minus,
                     *frame.b_plus, *frame.b_minus])
    sv = StateVec(f=frame.f.copy(), theta=frame.theta.copy(),
                  w_p=frame.omega_plus.copy(), w_m=frame.omega_minus.copy(),
                  jc_p=frame.j_plus.copy(), jc_m=frame.j_minus.copy(),
                  wall=wall)
    return sv, frame.t


def initial_state(cfg: SimConfig, params: dyn.PhysParams) -> tuple:
    """(StateVec, start time) from the preset or a snapshot."""
    if cfg.snapshot:
        return _snapshot_state(cfg, params)
    grid = Grid2D.get(cfg.nx, cfg.ny)
    return _preset_state(cfg, grid), 0.0


def params_from_config(cfg: SimConfig, sigma=None) -> dyn.PhysParams:
    return dyn.PhysParams(
        sigma=cfg.sigma if sigma is None else float(sigma),
        rho_plus=cfg.rho_plus, rho_minus=cfg.rho_minus,
        variant=cfg.variant, c0=cfg.c0, s=cfg.s)


# ---------------------------------------------------------------------------
# timestep control


def timestep_control(cfg: SimConfig, surface: dyn.SurfaceState,
                     bulk: dyn.BulkState, sigma=None) -> float:
    """CFL bound: advective dx/|u| against the capillary dx^{3/2} scale."""
    sig = cfg.sigma if sigma is None else float(sigma)
    dx = 2.0 * math.pi / max(cfg.nx, cfg.ny)
    limit = math.inf
    umax = max((float(np.max(np.abs(np.stack(bulk.u(s).comps))))
                for s in (1, -1)), default=0.0)
    if umax > 0.0:
        limit = dx / umax
    if sig > 0.0:
        steep = 1.0 + surface.f.sup_grad
        limit = min(limit, dx ** 1.5 / math.sqrt(sig / 2.0) / steep)
    dt = cfg.cfl * limit
    return float(min(dt, cfg.dt_max))


# ---------------------------------------------------------------------------
# the integration loop


@dataclass
class RunResult:
    status: str                # "ok" | "aborted"
    t: float
    steps: int
    csv_path: str = ""
    error: str = ""
    error_type: str = ""
    samples: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    columns: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class Simulation:
    """One configured run; step() advances the state by one RK4 step."""

    def __init__(self, cfg: SimConfig, sigma=None, outdir=None):
        self.cfg = cfg
        self.params = params_from_config(cfg, sigma=sigma)
        self.sigma = self.params.sigma
        self.grid = Grid2D.get(cfg.nx, cfg.ny)
        self.state, self.t = initial_state(cfg, self.params)
        self.step_index = 0
        self.outdir = cfg.directory if outdir is None else outdir
        self.mean_f0 = float(np.mean(self.state.f))
        self._stage_cache = None

    # -- state materialization ------------------------------------------

    def materialize(self, sv: StateVec) -> tuple:
        cfg = self.cfg
        f = Interface(FourierField2D.from_values(self.grid, sv.f),
                      c0=self.params.c0)
        surface = dyn.SurfaceState(
            f, FourierField2D.from_values(self.grid, sv.theta))
        bulk = dyn.recover_bulk(
            surface,
            omega_plus=tuple(sv.w_p), omega_minus=tuple(sv.w_m),
            j_plus=tuple(sv.jc_p), j_minus=tuple(sv.jc_m),
            a_plus=tuple(sv.wall[0:2]), a_minus=tuple(sv.wall[2:4]),
            b_plus=tuple(sv.wall[4:6]), b_minus=tuple(sv.wall[6:8]),
            nz=cfg.nz, tol=cfg.tol, compat_tol=cfg.compat_tol,
            sides=self.params.sides)
        return surface, bulk

    def _rhs(self, sv: StateVec) -> tuple:
        surface, bulk = self.materialize(sv)
        deriv = dyn.full_rhs(surface, bulk, self.params,
                             tol=self.cfg.tol, dn_tol=self.cfg.dn_tol)
        return _deriv_vec(deriv), surface, bulk, deriv

    def stage_one(self) -> tuple:
        """RHS at the current state, cached for the step that follows."""
        if self._stage_cache is None:
            self._stage_cache = self._rhs(self.state)
        return self._stage_cache

    # -- stepping --------------------------------------------------------

    def pick_dt(self) -> float:
        if self.cfg.dt > 0.0:
            return self.cfg.dt
        _, surface, bulk, _ = self.stage_one()
        return timestep_control(self.cfg, surface, bulk, sigma=self.sigma)

    def step(self, dt: float) -> None:
        y = self.state
        k1, _, _, _ = self.stage_one()
        k2, _, _, _ = self._rhs(y.axpy(0.5 * dt, k1))
        k3, _, _, _ = self._rhs(y.axpy(0.5 * dt, k2))
        k4, _, _, _ = self._rhs(y.axpy(dt, k3))
        ynew = _combine_rk4(y, dt, k1, k2, k3, k4)
        ynew.check_finite()
        drift = abs(float(np.mean(ynew.f)) - self.mean_f0)
        if drift > MEAN_DRIFT_ABORT:
            raise NaNDetected(f"interface mean drifted by {drift:.3e}")
        self.state = ynew
        self.t += dt
        self.step_index += 1
        self._stage_cache = None

    # -- persistence -----------------------------------------------------

    def frame(self) -> SnapshotFrame:
        sv = self.state
        return SnapshotFrame(
            t=self.t, sigma=self.params.sigma,
            rho_plus=self.params.rho_plus, rho_minus=self.params.rho_minus,
            f=sv.f, theta=sv.theta,
            omega_plus=sv.w_p, omega_minus=sv.w_m,
            j_plus=sv.jc_p, j_minus=sv.jc_m,
            a_plus=tuple(sv.wall[0:2]), a_minus=tuple(sv.wall[2:4]),
            b_plus=tuple(sv.wall[4:6]), b_minus=tuple(sv.wall[6:8]))

    def report_row(self, dt: float) -> list:
        _, surface, bulk, deriv = self.stage_one()
        rep = diag.energy_functionals(surface, bulk, self.params, deriv.df,
                                      t=self.t)
        fv = surface.f.f
        row = [self.t, dt, rep.E1, rep.E2, rep.G1, rep.G2, rep.lam,
               sobolev_norm(fv, self.params.s + 0.5),
               sobolev_norm(surface.theta, self.params.s - 0.5),
               rep.mean_f,
               float(np.max(fv.values)), float(np.min(fv.values))]
        coeffs = fv.coeffs
        for k1, k2 in self.cfg.probe_modes:
            c = coeffs[self.grid.mode_index(k1, k2)]
            row.extend([float(c.real), float(c.imag)])
        return row


def _write_csv(path: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# mhdvs csv {CSV_VERSION}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _render_figures(outdir: str, columns, rows, surface) -> list:
    """Energy history and final interface heatmap, PNG files."""
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    out = []
    idx = {name: i for i, name in enumerate(columns)}
    data = np.array(rows, dtype=float)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for name in ("E1", "E2", "G1", "G2"):
        ax1.plot(data[:, idx["t"]], data[:, idx[name]], label=name)
    ax1.set_ylabel("energy")
    ax1.legend(loc="best", fontsize=8)
    ax2.plot(data[:, idx["t"]], data[:, idx["Lambda"]], color="k")
    ax2.set_xlabel("t")
    ax2.set_ylabel("Lambda")
    fig.tight_layout()
    p1 = os.path.join(outdir, "energy.png")
    fig.savefig(p1, dpi=120)
    plt.close(fig)
    out.append(p1)

    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(surface.f.f.values, origin="lower",
                   extent=(0.0, 2.0 * math.pi, 0.0, 2.0 * math.pi),
                   cmap="RdBu_r")
    fig.colorbar(im, ax=ax, label="f")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    fig.tight_layout()
    p2 = os.path.join(outdir, "interface.png")
    fig.savefig(p2, dpi=120)
    plt.close(fig)
    out.append(p2)
    return out


def integrate(cfg: SimConfig, sigma=None, outdir=None, step_monitor=None,
              collect_samples=False, write_artifacts=True) -> RunResult:
    """Run one configuration to t_end, writing artifacts as it goes.

    step_monitor(sim, surface, bulk, deriv) is called at every accepted
    reporting of stage one, before the step is taken; collect_samples keeps
    the interface coefficients at every report time in RunResult.samples.
    """
    sim = Simulation(cfg, sigma=sigma, outdir=outdir)
    outdir = sim.outdir
    if write_artifacts:
        os.makedirs(outdir, exist_ok=True)
    columns = csv_columns(cfg.probe_modes)
    rows = []
    samples = {}
    csv_path = os.path.join(outdir, cfg.csv) if write_artifacts else ""
    next_report = sim.t
    last_surface = None
    result = RunResult(status="ok", t=sim.t, steps=0, csv_path=csv_path,
                       samples=samples, rows=rows, columns=columns)

    def do_report(dt):
        nonlocal last_surface
        _, surface, bulk, deriv = sim.stage_one()
        rows.append(sim.report_row(dt))
        last_surface = surface
        if collect_samples:
            samples[round(sim.t, 12)] = surface.f.f.coeffs.copy()

    def do_monitor():
        if step_monitor is not None:
            _, surface, bulk, deriv = sim.stage_one()
            step_monitor(sim, surface, bulk, deriv)

    try:
        while sim.t < cfg.t_end - 1e-12:
            if sim.step_index >= cfg.max_steps:
                raise MHDVSError(
                    f"exceeded max_steps = {cfg.max_steps}")
            dt = min(sim.pick_dt(), cfg.t_end - sim.t)
            if sim.t >= next_report - 1e-9:
                do_report(dt)
                next_report = sim.t + cfg.report_interval
            do_monitor()
            if write_artifacts and cfg.snapshot_stride > 0 \
                    and sim.step_index % cfg.snapshot_stride == 0:
                write_snapshot(os.path.join(
                    outdir, f"snap_{sim.step_index:06d}.bin"), sim.frame())
            sim.step(dt)
        do_report(0.0)
        do_monitor()
        result.t = sim.t
        result.steps = sim.step_index
    except MHDVSError as exc:
        result.status = "aborted"
        result.error = str(exc)
        result.error_type = type(exc).__name__
        result.t = sim.t
        result.steps = sim.step_index
        if write_artifacts:
            write_snapshot(os.path.join(outdir, "last_good.bin"), sim.frame())
            with open(os.path.join(outdir, "abort.json"), "w",
                      encoding="utf-8") as fh:
                json.dump({"t": sim.t, "step": sim.step_index,
                           "error_type": result.error_type,
                           "error": result.error}, fh, indent=2)
        log.error("run aborted at t=%.6f: %s", sim.t, exc)

    if write_artifacts:
        _write_csv(csv_path, columns, rows)
        write_snapshot(os.path.join(outdir, "final.bin"), sim.frame())
        if cfg.figures and rows and last_surface is not None:
            _render_figures(outdir, columns, rows, last_surface)
    return result


# ---------------------------------------------------------------------------
# sigma sweep


@dataclass
class SweepResult:
    sigmas: tuple
    times: tuple
    distances: dict          # (sigma_i, sigma_j) -> array over times
    failures: dict           # sigma -> error string
    table_path: str = ""
    s_prime: float = 0.0


def sweep_lambda_gate(cfg: SimConfig) -> float:
    """Initial-data stability margin used by the sweep precondition."""
    sim = Simulation(cfg)
    _, bulk = sim.materialize(sim.state)
    return diag.stability_from_bulk(bulk, sim.params, grid=sim.grid).lam


def sigma_sweep(cfg: SimConfig, sigmas, s_prime=None,
                write_artifacts=True) -> SweepResult:
    """Common-initial-data runs across sigmas with pairwise Hs' distances.

    Refuses to start unless the initial data clears twice the configured
    stability margin; individual run failures abandon that sigma only.
    """
    sigmas = tuple(float(s) for s in sigmas)
    if not sigmas:
        raise ConfigError("sigma sweep needs at least one sigma")
    sp = (cfg.s - 2.0) if s_prime is None else float(s_prime)
    if sp > cfg.s - 1.5:
        raise ConfigError(
            f"s' = {sp} must be <= s - 3/2 = {cfg.s - 1.5}")
    lam = sweep_lambda_gate(cfg)
    if lam < 2.0 * cfg.c0:
        raise ConfigError(
            f"initial data fails the stability gate: Lambda = {lam:.6f} "
            f"< 2 c0 = {2.0 * cfg.c0:.6f}")

    # one fixed dt for every run so the sample times line up exactly
    if cfg.dt > 0.0:
        dt = cfg.dt
    else:
        sim0 = Simulation(cfg, sigma=max(sigmas))
        dt = sim0.pick_dt()
        dt = cfg.report_interval / math.ceil(cfg.report_interval / dt)
    run_cfg = SimConfig(values=dict(cfg.values), path=cfg.path)
    run_cfg.values["dt"] = dt

    grid = Grid2D.get(cfg.nx, cfg.ny)
    samples = {}
    failures = {}
    root = cfg.directory
    for sig in sigmas:
        sub = os.path.join(root, f"sigma_{sig:g}") if write_artifacts else None
        res = integrate(run_cfg, sigma=sig, outdir=sub,
                        collect_samples=True, write_artifacts=write_artifacts)
        if res.ok:
            samples[sig] = res.samples
        else:
            failures[sig] = f"{res.error_type}: {res.error}"
            log.warning("sweep entry sigma=%g failed: %s", sig, res.error)

    good = [s for s in sigmas if s in samples]
    times = sorted(set.intersection(*[set(samples[s]) for s in good])) \
        if good else []
    distances = {}
    for sa, sb in zip(good[:-1], good[1:]):
        vals = []
        for t in times:
            delta = FourierField2D.from_coeffs(
                grid, samples[sa][t] - samples[sb][t])
            vals.append(sobolev_norm(delta, sp))
        distances[(sa, sb)] = np.array(vals)

    table_path = ""
    if write_artifacts:
        os.makedirs(root, exist_ok=True)
        table_path = os.path.join(root, "sweep.csv")
        pair_names = [f"d_{sa:g}_{sb:g}" for sa, sb in distances]
        with open(table_path, "w", encoding="utf-8") as fh:
            fh.write(f"# mhdvs sweep {CSV_VERSION}\n")
            fh.write(",".join(["t"] + pair_names) + "\n")
            for i, t in enumerate(times):
                row = [t] + [distances[p][i] for p in distances]
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return SweepResult(sigmas=sigmas, times=tuple(times),
                       distances=distances, failures=failures,
                       table_path=table_path, s_prime=sp)
