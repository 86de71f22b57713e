"""Two-phase incompressible current-vortex sheet solver on T^2 x [-1, 1]."""

__version__ = "0.1.0"

from .config import SimConfig, load_config, parse_config_text
from .diagnostics import (
    EnergyReport,
    StabilityReport,
    dispersion_extract,
    energy_functionals,
    numeric_jacobian,
    stability_from_bulk,
    syrovatskij_lambda,
)
from .driver import (
    RunResult,
    Simulation,
    SweepResult,
    integrate,
    sigma_sweep,
    timestep_control,
)
from .dynamics import (
    BulkState,
    PhysParams,
    StateDerivative,
    SurfaceState,
    full_rhs,
    quiescent_bulk,
    recover_bulk,
    recover_pressure,
    theta_rhs,
)
from .errors import (
    CompatibilityViolated,
    ConfigError,
    FitPoorlyConditioned,
    GraphBoundViolated,
    MHDVSError,
    NaNDetected,
    NonInjectiveMap,
    SolverDiverged,
)
from .geometry import Interface
from .snapshots import SnapshotFrame, read_snapshot, write_snapshot
from .spectral import FourierField2D, Grid2D, l2_norm, sobolev_norm
