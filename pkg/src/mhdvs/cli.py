"""Command line entry point.

Subcommands: run, sweep, verify, dispersion.  Exit codes: 0 success,
2 configuration error, 3 solver failure, 4 verification or fit failure.
"""

import argparse
import json
import logging
import sys

from . import __version__, verify
from . import diagnostics as diag
from . import driver
from .config import load_config
from .errors import ConfigError, FitPoorlyConditioned, MHDVSError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mhdvs",
        description="Two-phase interface dynamics: integrate, sweep, "
                    "verify, and fit dispersion from probe series.")
    p.add_argument("--version", action="version",
                   version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true",
                   help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate one configuration")
    run.add_argument("config")

    sweep = sub.add_parser("sweep",
                           help="integrate across surface tensions")
    sweep.add_argument("config")
    sweep.add_argument("--sigmas", required=True,
                       help="comma-separated values, e.g. 0.1,0.01,0.001")
    sweep.add_argument("--s-prime", type=float, default=None,
                       help="comparison regularity (default s - 2)")

    ver = sub.add_parser("verify", help="run numerical verification")
    ver.add_argument("suite", nargs="?", default="all",
                     help="one of %s or all" % ", ".join(
                         sorted(verify.SUITES)))
    ver.add_argument("--json", dest="json_path", default=None,
                     help="also write the report to this file")

    disp = sub.add_parser("dispersion",
                          help="integrate and fit one probe mode")
    disp.add_argument("config")
    disp.add_argument("--mode", default="1,0",
                      help="k1,k2 of the probe to fit (default 1,0)")
    return p


def _parse_mode(text: str) -> tuple:
    bits = text.split(",")
    if len(bits) != 2:
        raise ConfigError(f"--mode {text!r} is not k1,k2")
    try:
        return int(bits[0]), int(bits[1])
    except ValueError:
        raise ConfigError(f"--mode {text!r} is not a pair of integers") \
            from None


def _parse_sigmas(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"--sigmas {text!r} is not a float list") from None
    if not vals:
        raise ConfigError("--sigmas is empty")
    return vals


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = driver.integrate(cfg)
    if res.ok:
        print(f"completed t={res.t:g} in {res.steps} steps; "
              f"series at {res.csv_path}")
        return EXIT_OK
    print(f"aborted at t={res.t:g} after {res.steps} steps: "
          f"{res.error_type}: {res.error}", file=sys.stderr)
    return EXIT_SOLVER


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    sigmas = _parse_sigmas(args.sigmas)
    out = driver.sigma_sweep(cfg, sigmas, s_prime=args.s_prime)
    for (sa, sb), vals in out.distances.items():
        print(f"d(sigma={sa:g}, sigma={sb:g}) at t_end: {vals[-1]:.6e}")
    for sig, err in out.failures.items():
        print(f"sigma={sig:g} failed: {err}", file=sys.stderr)
    if out.table_path:
        print(f"distance table at {out.table_path}")
    return EXIT_SOLVER if out.failures else EXIT_OK


def cmd_verify(args) -> int:
    rep = verify.run_suites(args.suite,
                            progress=lambda n: print(f"suite {n} ...",
                                                     flush=True))
    for c in rep["results"]:
        print(c.line())
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fh:
            json.dump({k: rep[k] for k in ("suite", "passed", "checks")},
                      fh, indent=2)
    print("verification", "PASSED" if rep["passed"] else "FAILED")
    return EXIT_OK if rep["passed"] else EXIT_VERIFY


def cmd_dispersion(args) -> int:
    cfg = load_config(args.config)
    k1, k2 = _parse_mode(args.mode)
    if (k1, k2) not in cfg.probe_modes:
        raise ConfigError(
            f"mode ({k1},{k2}) is not probed; set probe_modes in [output]")
    res = driver.integrate(cfg)
    if not res.ok:
        print(f"aborted at t={res.t:g}: {res.error}", file=sys.stderr)
        return EXIT_SOLVER
    import numpy as np
    data = np.array(res.rows)
    idx = {name: i for i, name in enumerate(res.columns)}
    z = data[:, idx[f"re_{k1}_{k2}"]] + 1j * data[:, idx[f"im_{k1}_{k2}"]]
    try:
        omega, mu, resid = diag.dispersion_extract(data[:, idx["t"]], z)
    except FitPoorlyConditioned as exc:
        print(f"fit rejected: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"mode ({k1},{k2}): omega {omega:.6g}  mu {mu:+.6g}  "
          f"residual {resid:.3g}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "sweep": cmd_sweep,
                "verify": cmd_verify, "dispersion": cmd_dispersion}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MHDVSError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
