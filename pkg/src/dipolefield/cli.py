"""Command-line front end.

Subcommands
-----------
constants   print the mode constants (D_inf, Gamma, g_c, physical coefficients)
analytic    tabulate limiting densities (closed form or inversion) to files
simulate    run Monte Carlo experiments and write histograms
compare     check a histogram against a curve; exit status encodes PASS/FAIL

A JSON config file (``--config``) may carry one section per subcommand;
explicit flags override config values.  All randomness derives from the
single configured seed.  Exit codes: 0 success/PASS, 1 comparison FAIL,
2 usage or config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import analytic as an
from . import montecarlo as mc
from ._io import SchemaError, atomic_write_text, fmt
from .errors import NumericalError
from .kernels import OrientationMode
from .limits import DistributionCurve, default_grid, excluded_volume_curve

__all__ = ["main"]

#: Environment variable overriding the default output directory.
OUTDIR_ENV = "DIPOLEFIELD_OUTDIR"

_DEFAULTS = {
    "constants": {"mode": "parallel", "format": "csv", "out": None},
    "analytic": {"mode": "parallel", "epsilon": [0.0], "grid": None,
                 "tol": 1e-9, "out": None, "format": "csv", "plot": False},
    "simulate": {"mode": "parallel", "epsilon": [0.0], "n_dipoles": 10000,
                 "realizations": 100000, "seed": 0, "bins": None,
                 "workers": 1, "out": None, "format": "csv", "plot": False},
    "compare": {"threshold": 5.0, "chi2_band": (0.8, 1.3), "out": None,
                "format": "csv", "plot": False},
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# option parsing helpers
# ---------------------------------------------------------------------------

def _parse_epsilon_list(value) -> list:
    if isinstance(value, (list, tuple)):
        raw = list(value)
    else:
        raw = [v for v in str(value).split(",") if v.strip()]
    try:
        eps = [float(v) for v in raw]
    except ValueError:
        raise ConfigError(f"epsilon must be a comma-separated list of numbers, got {value!r}")
    if not eps:
        raise ConfigError("epsilon list must not be empty")
    for e in eps:
        if e < 0.0:
            raise ConfigError(f"epsilon must be >= 0, got {e}")
    return eps


def _parse_triple(value, name, integer_last=True):
    parts = str(value).split(":")
    if len(parts) != 3:
        raise ConfigError(f"{name} must look like min:max:{'count' if integer_last else 'points'}, got {value!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        n = int(parts[2])
    except ValueError:
        raise ConfigError(f"{name} has a non-numeric component: {value!r}")
    if not lo < hi:
        raise ConfigError(f"{name}: min must be < max, got {value!r}")
    if n < 2:
        raise ConfigError(f"{name}: need at least 2 {'bins' if integer_last else 'points'}, got {n}")
    return lo, hi, n


def _parse_band(value):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        lo, hi = float(value[0]), float(value[1])
    else:
        parts = str(value).split(":")
        if len(parts) != 2:
            raise ConfigError(f"chi2_band must look like lo:hi, got {value!r}")
        lo, hi = float(parts[0]), float(parts[1])
    if not 0 < lo < hi:
        raise ConfigError(f"chi2_band needs 0 < lo < hi, got {value!r}")
    return lo, hi


def _resolve(command, args, config):
    """Merge defaults, the config-file section, and explicit flags."""
    section = config.get(command, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {command!r} must be an object")
    merged = dict(_DEFAULTS[command])
    for key, value in section.items():
        if key not in merged:
            raise ConfigError(f"unknown config key {command}.{key}")
        merged[key] = value
    for key in merged:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    if not isinstance(obj, dict):
        raise ConfigError("config file must hold a JSON object")
    return obj


def _outdir(explicit):
    if explicit is not None:
        return explicit
    return os.environ.get(OUTDIR_ENV, ".")


def _eps_tag(eps: float) -> str:
    return f"{eps:g}".replace("-", "m")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_constants(opts):
    mode = OrientationMode.parse(str(opts["mode"]))
    geometry = an.geometry_factor(mode)
    d_inf = an.d_infinity(mode)
    gamma = math.pi * d_inf
    g_c = an.shift_constant(geometry, g0=3.0)
    # F0 = C * 4 pi rho / 3 turns reduced widths into field units per C*rho
    unit = 4.0 * math.pi / 3.0
    table = [
        ("d_infinity", d_inf),
        ("gamma", gamma),
        ("g_c", g_c),
        ("width_coefficient", gamma * unit),
        ("center_coefficient", g_c * unit),
    ]
    for key, value in table:
        print(f"{key:>20} = {value:.12g}")
    if opts["out"]:
        path = opts["out"]
        if opts["format"] == "json":
            payload = {"kind": "constants", "mode": mode.value,
                       **{k: v for k, v in table}}
            atomic_write_text(path, json.dumps(payload) + "\n")
        else:
            lines = ["# dipolefield constants", f"# mode={mode.value}", "key,value"]
            lines += [f"{k},{fmt(v)}" for k, v in table]
            atomic_write_text(path, "\n".join(lines) + "\n")
        print(f"wrote {path}")
    return 0


def _cmd_analytic(opts):
    mode = OrientationMode.parse(str(opts["mode"]))
    eps_list = _parse_epsilon_list(opts["epsilon"])
    tol = float(opts["tol"])
    if tol <= 0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    if opts["grid"] is not None:
        lo, hi, n = _parse_triple(opts["grid"], "grid", integer_last=False)
        grid = np.linspace(lo, hi, n)
    else:
        grid = default_grid(mode)
    outdir = _outdir(opts["out"])
    os.makedirs(outdir, exist_ok=True)
    ext = opts["format"]
    curves = []
    for eps in eps_list:
        curve = excluded_volume_curve(eps, mode, grid=grid, tol=tol)
        path = os.path.join(outdir, f"curve_{mode.value}_eps{_eps_tag(eps)}.{ext}")
        curve.save(path, ext)
        curves.append(curve)
        print(f"wrote {path}")
    if opts["plot"]:
        from .plotting import save_curve_figure
        fig_path = os.path.join(outdir, f"curves_{mode.value}.png")
        save_curve_figure(curves, fig_path)
        print(f"wrote {fig_path}")
    return 0


def _cmd_simulate(opts):
    mode = OrientationMode.parse(str(opts["mode"]))
    eps_list = _parse_epsilon_list(opts["epsilon"])
    if opts["bins"] is not None:
        g_min, g_max, bins = _parse_triple(opts["bins"], "bins")
    else:
        g_min, g_max, bins = -8.0, 8.0, 401
    workers = int(opts["workers"])
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    outdir = _outdir(opts["out"])
    os.makedirs(outdir, exist_ok=True)
    ext = opts["format"]
    for eps in eps_list:
        spec = mc.SimulationSpec(
            mode=mode, n_dipoles=int(opts["n_dipoles"]),
            realizations=int(opts["realizations"]), epsilon=eps,
            seed=int(opts["seed"]), g_min=g_min, g_max=g_max, bins=bins)
        hist = mc.run_simulation(spec, workers=workers)
        path = os.path.join(outdir, f"hist_{mode.value}_eps{_eps_tag(eps)}.{ext}")
        hist.save(path, ext)
        print(f"wrote {path} (seed={spec.seed})")
        if opts["plot"]:
            from .plotting import save_histogram_figure
            fig_path = os.path.splitext(path)[0] + ".png"
            save_histogram_figure(hist, fig_path)
            print(f"wrote {fig_path}")
    return 0


def _cmd_compare(opts, hist_path, curve_path):
    hist = mc.FieldHistogram.load(hist_path)
    curve = DistributionCurve.load(curve_path)
    report = mc.compare(hist, curve, threshold=float(opts["threshold"]),
                        chi2_band=_parse_band(opts["chi2_band"]))
    print(f"sup_norm      = {report.sup_norm:.6g}")
    print(f"max_z         = {report.max_z:.4f} (threshold {report.threshold:g})")
    print(f"chi2/dof      = {report.chi2_per_dof:.4f} "
          f"(band {report.chi2_band[0]:g}:{report.chi2_band[1]:g}, dof {report.dof})")
    print(f"excluded_bins = {report.excluded_bins}")
    print(f"verdict       = {report.verdict}")
    if opts["out"]:
        report.save(opts["out"], opts["format"])
        print(f"wrote {opts['out']}")
    if opts["plot"]:
        from .plotting import save_comparison_figure
        base = opts["out"] or os.path.join(
            _outdir(None), os.path.splitext(os.path.basename(hist_path))[0] + "_compare")
        fig_path = os.path.splitext(base)[0] + ".png"
        save_comparison_figure(hist, curve, fig_path, report)
        print(f"wrote {fig_path}")
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dipolefield",
        description="Field statistics inside a random distribution of dipoles.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, plot=True):
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--out", help="output path (compare/constants) or directory")
        if plot:
            p.add_argument("--plot", action="store_const", const=True,
                           help="also render a figure next to the output")

    p = sub.add_parser("constants", help="print mode constants")
    p.add_argument("--mode", choices=("parallel", "random"))
    common(p, plot=False)

    p = sub.add_parser("analytic", help="tabulate limiting densities")
    p.add_argument("--mode", choices=("parallel", "random"))
    p.add_argument("--epsilon", help="comma-separated excluded-volume values")
    p.add_argument("--grid", help="g grid as min:max:points")
    p.add_argument("--tol", type=float, help="inversion tolerance")
    common(p)

    p = sub.add_parser("simulate", help="run Monte Carlo experiments")
    p.add_argument("--mode", choices=("parallel", "random"))
    p.add_argument("--epsilon", help="comma-separated excluded-volume values")
    p.add_argument("--n-dipoles", dest="n_dipoles", type=int)
    p.add_argument("--realizations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--bins", help="binning as min:max:count")
    p.add_argument("--workers", type=int)
    common(p)

    p = sub.add_parser("compare", help="check a histogram against a curve")
    p.add_argument("histogram", help="histogram file from 'simulate'")
    p.add_argument("curve", help="curve file from 'analytic'")
    p.add_argument("--threshold", type=float, help="max |z| allowed for PASS")
    common(p)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _load_config(args.config)
        opts = _resolve(args.command, args, config)
        if args.command == "constants":
            return _cmd_constants(opts)
        if args.command == "analytic":
            return _cmd_analytic(opts)
        if args.command == "simulate":
            return _cmd_simulate(opts)
        return _cmd_compare(opts, args.histogram, args.curve)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
