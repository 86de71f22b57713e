"""Figure generation over mhdvs run artifacts.

Reads the documented CSV/snapshot formats only; the solver package is
not a dependency.
"""

__version__ = "0.1.0"

from .artifact import (CSV_VERSION, DOC_COLUMNS, RunArtifact, SchemaError,
                       SnapshotFrame, SweepArtifact, read_snapshot)
from .fits import fit_mode
from .oracle import capillary_omega, dispersion_root, strip_multiplier
from .plots import (OverlayPoint, plot_dispersion, plot_energy,
                    plot_heatmap, plot_sigma_sweep)

__all__ = [
    "CSV_VERSION", "DOC_COLUMNS", "RunArtifact", "SchemaError",
    "SnapshotFrame", "SweepArtifact", "read_snapshot", "fit_mode",
    "capillary_omega", "dispersion_root", "strip_multiplier",
    "OverlayPoint", "plot_dispersion", "plot_energy", "plot_heatmap",
    "plot_sigma_sweep", "__version__",
]
