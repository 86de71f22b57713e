"""Run configuration: flat key=value files with [section] headers.

The grammar is deliberately tiny: blank lines and #-comments are skipped,
a [name] line opens a section, and every other line must be key = value.
Unknown sections or keys are errors, as are missing required entries, so a
config diff always means a behavior diff.
"""

import math
import os
from dataclasses import dataclass, field

from .dynamics import VARIANTS
from .errors import ConfigError
from .spectral import validate_grid_size

PRESETS = ("quiescent", "capillary", "kh", "stable")

# section -> key -> (converter, default); _REQUIRED means no default
_REQUIRED = object()


def _boolean(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _mode_list(text: str) -> tuple:
    """Semicolon-separated integer pairs: '1,0; 2,0' -> ((1,0),(2,0))."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(",")
        if len(bits) != 2:
            raise ValueError(f"mode {part!r} is not k1,k2")
        out.append((int(bits[0]), int(bits[1])))
    return tuple(out)


_SCHEMA = {
    "grid": {
        "nx": (int, _REQUIRED),
        "ny": (int, _REQUIRED),
        "nz": (int, _REQUIRED),
    },
    "physics": {
        "sigma": (float, _REQUIRED),
        "rho_plus": (float, 1.0),
        "rho_minus": (float, 1.0),
        "variant": (str, "two-fluid-equal"),
        "c0": (float, 0.1),
        "s": (float, 6.0),
    },
    "init": {
        "preset": (str, "quiescent"),
        "amplitude": (float, 0.0),
        "mode_k1": (int, 1),
        "mode_k2": (int, 0),
        "theta_amplitude": (float, 0.0),
        "u_jump": (float, 2.0),
        "seed_probes": (_boolean, False),
        "snapshot": (str, ""),
    },
    "time": {
        "dt": (float, 0.0),
        "cfl": (float, 0.3),
        "dt_max": (float, 0.05),
        "t_end": (float, _REQUIRED),
        "report_interval": (float, 0.1),
    },
    "output": {
        "directory": (str, "out"),
        "csv": (str, "series.csv"),
        "snapshot_stride": (int, 0),
        "probe_modes": (_mode_list, ((1, 0),)),
        "figures": (_boolean, True),
    },
    "solver": {
        "tol": (float, 1e-9),
        "dn_tol": (float, 1e-11),
        "compat_tol": (float, 1e-8),
        "max_steps": (int, 100000),
    },
}


@dataclass
class SimConfig:
    """Validated run configuration; one attribute per schema key."""

    values: dict = field(default_factory=dict)
    path: str = ""

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None


def _validate(cfg: dict, path: str) -> SimConfig:
    flat = {}
    for sec, keys in _SCHEMA.items():
        got = cfg.get(sec, {})
        for key, (conv, default) in keys.items():
            if key in got:
                raw = got[key]
                try:
                    val = conv(raw)
                except (ValueError, TypeError) as exc:
                    raise ConfigError(
                        f"{path}: [{sec}] {key} = {raw!r}: {exc}") from None
            elif default is _REQUIRED:
                raise ConfigError(f"{path}: missing required [{sec}] {key}")
            else:
                val = default
            flat[key] = val

    for n in ("nx", "ny"):
        try:
            validate_grid_size(flat[n], n)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if flat["nz"] < 5 or flat["nz"] % 2 == 0:
        raise ConfigError(f"{path}: nz = {flat['nz']} must be odd and >= 5")
    if flat["sigma"] < 0.0:
        raise ConfigError(f"{path}: sigma = {flat['sigma']} must be >= 0")
    if flat["rho_plus"] <= 0.0 or flat["rho_minus"] <= 0.0:
        raise ConfigError(f"{path}: densities must be positive")
    if not 0.0 < flat["c0"] < 0.5:
        raise ConfigError(f"{path}: c0 = {flat['c0']} outside (0, 1/2)")
    if flat["variant"] not in VARIANTS:
        raise ConfigError(f"{path}: unknown variant {flat['variant']!r}")
    if flat["preset"] not in PRESETS:
        raise ConfigError(f"{path}: unknown preset {flat['preset']!r}")
    if flat["t_end"] <= 0.0:
        raise ConfigError(f"{path}: t_end must be positive")
    if flat["dt"] < 0.0 or flat["dt_max"] <= 0.0:
        raise ConfigError(f"{path}: time steps must be positive")
    if flat["report_interval"] <= 0.0:
        raise ConfigError(f"{path}: report_interval must be positive")
    if flat["snapshot"] and not os.path.exists(flat["snapshot"]):
        raise ConfigError(f"{path}: snapshot {flat['snapshot']!r} not found")
    for v in flat.values():
        if isinstance(v, float) and not math.isfinite(v):
            raise ConfigError(f"{path}: non-finite value in config")
    return SimConfig(values=flat, path=path)


def parse_config_text(text: str, path: str = "<string>") -> SimConfig:
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown section [{name}]")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        if current is None:
            raise ConfigError(f"{path}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        sec_name = [n for n, s in sections.items() if s is current][0]
        if key not in _SCHEMA[sec_name]:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} "
                              f"in [{sec_name}]")
        if key in current:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        current[key] = value.split("#", 1)[0].strip()
    return _validate(sections, path)


def load_config(path: str) -> SimConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, path=path)
