"""Command-line interface: ``levyflights <command> [options]``.

Settings are resolved as built-in defaults, then the ``[<command>]`` (and
``[global]``) section of an INI file given by ``--config``, then flags. A
run report written by an earlier run can be passed to ``--config`` as well;
its recorded settings are replayed, so without a command it repeats the run.

Exit status is 0 on success, 2 for configuration errors and 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fpe
from .catalog import (
    CatalogError,
    TargetDensity,
    catalog_get,
    load_target_spec,
    read_tabulated_csv,
    target_moment,
)
from .ensemble import SimulationError
from .fracops import OperatorConfig, TailModel, frac_laplacian
from .grid import GridError, GridFunction
from .langevin import ConfigError, LangevinConfig, default_snapshots, run_langevin_ensemble
from .report import RunReport, Stopwatch, config_hash, versions, write_csv
from .reverse import (
    LangevinDriftReconstructor,
    ReconstructionError,
    reconstruct,
)
from .semigroup import SemigroupConfig, run_semigroup_ensemble
from .stable import StableParams, RngStream, sample_stable

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
SATURATION_WINDOW = (15.0, 20.0)


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text in (None, "", "none", "None") else float(text)


# key: (type, default, help)
_TARGET = {
    "target": (str, "quadratic_cauchy", "catalog name, target .ini spec or tabulated .csv"),
    "alpha": (_opt_float, None, "exponent of the cauchy_family target"),
}
_PHYS = {
    "mu": (float, 1.0, "stability index"),
    "lam": (float, 1.0, "noise intensity"),
}
_ENSEMBLE = {
    "n_paths": (int, 100_000, "number of paths"),
    "t_final": (float, 20.0, "final time"),
    "every": (float, 0.5, "snapshot spacing"),
    "initial": (str, "normal:0.2", "point:<x0>, normal:<width> or sample"),
    "chunk_size": (int, 25_000, "paths per random stream"),
}

COMMANDS = {
    "sample": {
        "mu": (float, 1.0, "stability index"),
        "scale": (float, 1.0, "scale of the characteristic exponent"),
        "n": (int, 1000, "number of variates"),
        "stream": (int, 0, "stream id under the seed"),
    },
    "fraclap": {
        "input": (str, None, "CSV with x,value columns on a uniform grid"),
        "mu": (float, 1.0, "stability index"),
        "method": (str, "pv", "pv or spectral"),
        "tail": (str, "zero", "zero or power_law(<p>)"),
    },
    "reverse": {
        **_TARGET,
        **_PHYS,
        "n": (int, 8001, "grid points"),
        "x_min": (_opt_float, None, "left window edge (default: target window)"),
        "x_max": (_opt_float, None, "right window edge (default: target window)"),
    },
    "sim-langevin": {
        **_TARGET,
        **_PHYS,
        **_ENSEMBLE,
        "dt": (float, 1e-3, "time step"),
        "scheme": (str, "implicit_euler", "explicit_euler, tamed_euler or implicit_euler"),
        "drift_n": (int, 8001, "grid points of the drift reconstruction"),
    },
    "sim-semigroup": {
        **_TARGET,
        **_PHYS,
        **_ENSEMBLE,
        "epsilon": (float, 1e-2, "smallest jump length"),
        "envelope": (str, "composite", "composite or global rejection envelope"),
    },
    "solve-fpe": {
        **_TARGET,
        **_PHYS,
        "form": (str, "langevin", "langevin or semigroup"),
        "dt": (float, 1e-2, "time step"),
        "t_final": (float, 20.0, "final time"),
        "every": (float, 0.5, "snapshot spacing of the summary"),
        "n": (int, 8001, "grid points"),
        "x_min": (float, -200.0, "left window edge"),
        "x_max": (float, 200.0, "right window edge"),
        "initial": (str, "normal:0.2", "normal:<width> or target"),
        "exterior": (str, "default", "default, censor, return, absorb or tail"),
        "profiles": (str, "0,1,2,5,10,20", "times of the density profiles written out"),
    },
    "compare": {
        **_TARGET,
        **_PHYS,
        **_ENSEMBLE,
        "dt": (float, 1e-3, "Langevin time step"),
        "scheme": (str, "implicit_euler", "Langevin scheme"),
        "epsilon": (float, 1e-2, "semigroup smallest jump length"),
        "statistic": (str, "auto", "variance, iqr or auto"),
        "pde": (_bool, False, "also run both grid evolvers"),
        "pde_dt": (float, 1e-2, "grid evolver time step"),
        "drift_n": (int, 8001, "grid points of the drift reconstruction"),
    },
}
GLOBAL_KEYS = {"seed": (int, 0, "master seed"), "workers": (int, 1, "worker processes")}
SUMMARIES = {
    "sample": "draw symmetric stable variates",
    "fraclap": "apply the fractional Laplacian to a tabulated function",
    "reverse": "reconstruct drift and semigroup potential of a target",
    "sim-langevin": "simulate the Langevin ensemble",
    "sim-semigroup": "kinetic Monte Carlo of the semigroup process",
    "solve-fpe": "evolve a density on the grid",
    "compare": "run both simulators side by side",
}
# settings that cannot change any output
_NEUTRAL = ("workers", "out_dir")


class UsageError(ValueError):
    pass


def _flag(key):
    return "--" + key.replace("_", "-")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="INI file or run report JSON")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default 0)")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                        help="worker processes; results do not depend on it (default 1)")
    common.add_argument("--out-dir", dest="out_dir", default=argparse.SUPPRESS,
                        help="output folder (default .)")
    parser = argparse.ArgumentParser(prog="levyflights", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, keys in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=SUMMARIES[name], description=SUMMARIES[name])
        for key, (_, default, text) in keys.items():
            flags = [_flag(key)]
            if key == "lam":
                flags.append("--lambda")
            if key == "n" and name == "sample":
                flags.append("-n")
            p.add_argument(*flags, dest=key, default=argparse.SUPPRESS, help=f"{text} (default {default})")
    return parser


def _read_config(path):
    """Return ``(command or None, settings dict)`` from an INI file or a run report."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            report = RunReport.load(path)
        except (ValueError, TypeError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read run report {path}: {exc}") from None
        return report.command, dict(report.settings)
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from None
    sections = {s: dict(cp[s]) for s in cp.sections()}
    return None, sections


def resolve(command, args: dict):
    """Merge defaults, the config file and flags into typed settings."""
    keys = {**COMMANDS[command], **GLOBAL_KEYS}
    settings = {k: default for k, (_, default, _) in keys.items()}
    file_cmd, file_settings = (None, {})
    if "config" in args:
        file_cmd, file_settings = _read_config(args["config"])
    if file_cmd is not None:
        if file_cmd != command:
            raise UsageError(f"run report is for {file_cmd!r}, not {command!r}")
        raw = file_settings
    else:
        raw = {**file_settings.get("global", {}), **file_settings.get(command, {})}
    out_dir = raw.pop("out_dir", None)
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key not in keys:
            raise UsageError(f"unknown setting {key!r} for {command}")
        settings[key] = value
    for key, value in args.items():
        if key in keys:
            settings[key] = value
    for key, (conv, _, _) in keys.items():
        if settings[key] is not None and not isinstance(settings[key], bool):
            try:
                settings[key] = conv(settings[key])
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key}: {exc}") from None
    out_dir = args.get("out_dir", out_dir) or "."
    return settings, Path(out_dir)


# ---------------------------------------------------------------------------
# helpers


def load_target(s) -> TargetDensity:
    spec = s["target"]
    if spec.endswith(".csv"):
        return read_tabulated_csv(spec)
    if spec.endswith(".ini"):
        return load_target_spec(spec)
    params = {"alpha": s["alpha"]} if s.get("alpha") is not None else None
    return catalog_get(spec, params)


def parse_initial(text, target=None):
    kind, _, value = str(text).partition(":")
    kind = kind.strip()
    if kind == "point":
        return ("point", float(value or 0.0))
    if kind == "normal":
        return ("normal", float(value or 0.2))
    if kind in ("sample", "target"):
        if target is None:
            raise UsageError("initial=sample needs a target")
        return ("sample", target)
    raise UsageError(f"initial must be point:<x0>, normal:<width> or sample, got {text!r}")


def _initial_echo(initial):
    kind, value = initial
    return kind if kind == "sample" else f"{kind}:{value!r}"


def _snapshots(t_final, every):
    return default_snapshots(t_final, every)


def _stat_choice(s, target):
    if s["statistic"] != "auto":
        if s["statistic"] not in ("variance", "iqr"):
            raise UsageError("statistic must be variance, iqr or auto")
        return s["statistic"]
    return "iqr" if math.isinf(target_moment(target, 2)) else "variance"


def _langevin_cfg(s, target, report_variance=True):
    drift = LangevinDriftReconstructor(mu=s["mu"], lam=s["lam"], n=s["drift_n"]).fit(target)
    return LangevinConfig(
        drift=drift,
        mu=s["mu"],
        lam=s["lam"],
        dt=s["dt"],
        t_final=s["t_final"],
        n_paths=s["n_paths"],
        scheme=s["scheme"],
        initial=parse_initial(s["initial"], target),
        seed=s["seed"],
        chunk_size=s["chunk_size"],
        superlinear=target.superlinear_drift(s["mu"]),
        report_variance=report_variance,
    )


def _semigroup_cfg(s, target, report_variance=True):
    return SemigroupConfig(
        target=target,
        mu=s["mu"],
        lam=s["lam"],
        epsilon=s["epsilon"],
        n_paths=s["n_paths"],
        t_final=s["t_final"],
        initial=parse_initial(s["initial"], target),
        seed=s["seed"],
        chunk_size=s["chunk_size"],
        envelope=s.get("envelope", "composite"),
        report_variance=report_variance,
    )


def _stats_columns(stats):
    cols = ["t", "median", "median_se", "iqr"]
    units = ["time", "length", "length", "length"]
    data = [stats.times, stats.median, stats.median_se, stats.iqr]
    if stats.variance is not None:
        cols += ["variance", "variance_se"]
        units += ["length^2", "length^2"]
        data += [stats.variance, stats.variance_se]
    return cols, units, data


def _write_histogram(path, stats, h, title):
    edges, counts = stats.histograms[-1]
    inner = counts[1:-1]
    density = inner / (stats.n_paths - stats.n_failed) / np.diff(edges)
    return write_csv(
        path,
        ["left", "right", "count", "density"],
        ["length", "length", "paths", "1/length"],
        [edges[:-1], edges[1:], inner, density],
        h,
        title,
        {"t": stats.times[-1], "underflow": counts[0], "overflow": counts[-1]},
    )


# ---------------------------------------------------------------------------
# commands; each returns (outputs, diagnostics, numerics)


def cmd_sample(s, out, h):
    rng = RngStream(s["seed"], s["stream"])
    x = sample_stable(StableParams(s["mu"], s["scale"]), rng, s["n"])
    path = write_csv(out / "sample.csv", ["x"], ["length"], [x], h,
                     f"symmetric stable sample mu={s['mu']!r}", {"n": s["n"]})
    return [path], {"median": float(np.median(x))}, {"stream": rng.layout()}


def cmd_fraclap(s, out, h):
    if not s["input"]:
        raise UsageError("fraclap needs --input")
    method = {"pv": "pv_quadrature", "spectral": "spectral"}.get(s["method"], s["method"])
    f = GridFunction.read_csv(s["input"])
    g = frac_laplacian(f, OperatorConfig(s["mu"], method, TailModel.parse(s["tail"])))
    path = write_csv(out / "fraclap.csv", ["x", "value"], ["length", "1/length^mu"],
                     [f.x, g.values], h, f"fractional laplacian mu={s['mu']!r} method={method}")
    return [path], {"max_abs": float(np.max(np.abs(g.values)))}, {"grid": [f.x_min, f.x_max, f.n]}


def cmd_reverse(s, out, h):
    target = load_target(s)
    lo = target.window[0] if s["x_min"] is None else s["x_min"]
    hi = target.window[1] if s["x_max"] is None else s["x_max"]
    res = reconstruct(target, s["mu"], s["lam"], (lo, hi, s["n"]))
    diag = {
        "residual_norm": res.residual_norm,
        "drift_asymmetry": res.method_metadata["drift_asymmetry"],
        "potential_asymmetry": res.method_metadata["potential_asymmetry"],
    }
    path = write_csv(
        out / "reverse.csv",
        ["x", "drift", "potential"],
        ["length", "length/time", "1/time"],
        [res.drift.x, res.drift.values, res.potential.values],
        h,
        f"reverse engineering target={target.name}",
        diag,
    )
    return [path], diag, res.method_metadata


def cmd_sim_langevin(s, out, h):
    target = load_target(s)
    cfg = _langevin_cfg(s, target, not math.isinf(target_moment(target, 2)))
    stats = run_langevin_ensemble(cfg, _snapshots(s["t_final"], s["every"]), workers=s["workers"])
    cols, units, data = _stats_columns(stats)
    diag = {"n_failed": stats.n_failed}
    if stats.variance is not None and s["t_final"] >= SATURATION_WINDOW[1]:
        diag["saturation"], diag["saturation_se"] = stats.saturation(*SATURATION_WINDOW)
    p1 = write_csv(out / "langevin_stats.csv", cols, units, data, h, f"langevin ensemble target={target.name}", diag)
    p2 = _write_histogram(out / "langevin_histogram.csv", stats, h, "langevin final histogram")
    return [p1, p2], diag, {**stats.meta, "explicit_interval": list(cfg.explicit_interval)}


def cmd_sim_semigroup(s, out, h):
    target = load_target(s)
    cfg = _semigroup_cfg(s, target, not math.isinf(target_moment(target, 2)))
    stats = run_semigroup_ensemble(cfg, _snapshots(s["t_final"], s["every"]), workers=s["workers"])
    cols, units, data = _stats_columns(stats)
    diag = {"n_failed": stats.n_failed}
    if stats.variance is not None and s["t_final"] >= SATURATION_WINDOW[1]:
        diag["saturation"], diag["saturation_se"] = stats.saturation(*SATURATION_WINDOW)
    p1 = write_csv(out / "semigroup_stats.csv", cols, units, data, h, f"semigroup kmc target={target.name}", diag)
    p2 = _write_histogram(out / "semigroup_histogram.csv", stats, h, "semigroup final histogram")
    return [p1, p2], diag, stats.meta


def _pde_initial(s, cfg, target):
    kind, _, value = str(s["initial"]).partition(":")
    if kind == "normal":
        return fpe.gaussian_bump(cfg, float(value or 0.2))
    if kind in ("target", "sample"):
        rho = np.asarray(target.density(cfg.x), dtype=float)
        return GridFunction(cfg.x_min, cfg.x_max, rho / (rho.sum() * cfg.h), {"initial": "target"})
    raise UsageError("grid initial data must be normal:<width> or target")


def run_pde(form, s, target, snapshot_times, dt=None):
    exterior = None if s.get("exterior", "default") == "default" else s["exterior"]
    cfg = fpe.SolveConfig(
        x_min=s.get("x_min", -200.0),
        x_max=s.get("x_max", 200.0),
        n=s.get("n", 8001),
        dt=dt if dt is not None else s["dt"],
        t_final=s["t_final"],
        mu=s["mu"],
        lam=s["lam"],
        exterior=exterior,
        snapshot_times=snapshot_times,
    )
    rho0 = _pde_initial(s, cfg, target)
    if form == "langevin":
        drift = LangevinDriftReconstructor(mu=s["mu"], lam=s["lam"], x_min=cfg.x_min,
                                           x_max=cfg.x_max, n=cfg.n).fit(target)
        return fpe.evolve_langevin_fpe(rho0, drift.field_, cfg, target=target)
    if form == "semigroup":
        return fpe.evolve_semigroup_fpe(rho0, target, cfg)
    raise UsageError("form must be langevin or semigroup")


def cmd_solve_fpe(s, out, h):
    target = load_target(s)
    snaps = _snapshots(s["t_final"], s["every"])
    try:
        wanted = [float(t) for t in s["profiles"].split(",") if t.strip()]
    except ValueError:
        raise UsageError("profiles must be a comma-separated list of times") from None
    wanted = [t for t in wanted if t <= s["t_final"] + 1e-12]
    traj = run_pde(s["form"], s, target, sorted(set(snaps) | set(wanted)))
    l1 = traj.l1_to_target if traj.l1_to_target is not None else np.full(traj.times.size, np.nan)
    keep = np.isin(np.round(traj.times, 9), np.round(snaps, 9))
    diag = {k: traj.meta[k] for k in ("min_before_clip", "max_clipped_mass_per_step", "exterior")}
    paths = [write_csv(
        out / "fpe_summary.csv",
        ["t", "mass", "variance", "l1_to_target"],
        ["time", "probability", "length^2", "probability"],
        [traj.times[keep], traj.mass[keep], traj.variance[keep], l1[keep]],
        h,
        f"{s['form']} grid evolution target={target.name}",
        diag,
    )]
    for t, snap in zip(traj.times, traj.snapshots):
        if any(abs(t - w) < 1e-9 for w in wanted):
            paths.append(write_csv(out / f"fpe_density_t{t:g}.csv", ["x", "density"],
                                   ["length", "1/length"], [snap.x, snap.values], h,
                                   f"{s['form']} density t={t!r}"))
    meta = {k: v for k, v in traj.meta.items() if k != "transit_mass"}
    return paths, diag, meta


PLOT_SCRIPT = '''"""Overlay of the two simulated processes; run with python after the compare command."""
import sys

import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
names = open(path).read().splitlines()
header = [l for l in names if l.startswith("#")][-1][1:].strip().split(",")
data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
col = {{n: data[:, i] for i, n in enumerate(header)}}
t = col["t"]
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(t, col["langevin"], "-", color="k", label="Langevin")
ax.plot(t, col["semigroup"], "--", color="k", label="semigroup")
for key, style in (("pde_langevin", ":"), ("pde_semigroup", "-.")):
    if key in col:
        ax.plot(t, col[key], style, color="0.5", label=key.replace("_", " "))
ax.set_xlabel("t")
ax.set_ylabel("{ylabel}")
ax.legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def cmd_compare(s, out, h):
    target = load_target(s)
    stat = _stat_choice(s, target)
    snaps = _snapshots(s["t_final"], s["every"])
    want_var = stat == "variance"
    lang = run_langevin_ensemble(_langevin_cfg(s, target, want_var), snaps, workers=s["workers"])
    semi = run_semigroup_ensemble(_semigroup_cfg(s, target, want_var), snaps, workers=s["workers"])
    if want_var:
        a, ea, b, eb = lang.variance, lang.variance_se, semi.variance, semi.variance_se
    else:
        nan = np.full(lang.iqr.shape, np.nan)
        a, ea, b, eb = lang.iqr, nan, semi.iqr, nan
    diff = a - b
    cols = ["t", "langevin", "langevin_se", "semigroup", "semigroup_se", "difference"]
    unit = "length^2" if want_var else "length"
    units = ["time", unit, unit, unit, unit, unit]
    data = [lang.times, a, ea, b, eb, diff]
    diag = {"statistic": stat}
    if want_var:
        se = np.sqrt(ea**2 + eb**2)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, np.abs(diff) / se, 0.0)
        diag["max_separation_sigma"] = float(np.max(z))
        diag["t_max_separation"] = float(lang.times[int(np.argmax(z))])
        if s["t_final"] >= SATURATION_WINDOW[1]:
            diag["langevin_saturation"], diag["langevin_saturation_se"] = lang.saturation(*SATURATION_WINDOW)
            diag["semigroup_saturation"], diag["semigroup_saturation_se"] = semi.saturation(*SATURATION_WINDOW)
    else:
        diag["langevin_final_iqr"] = float(lang.iqr[-1])
        diag["semigroup_final_iqr"] = float(semi.iqr[-1])
    if s["pde"]:
        for form in ("langevin", "semigroup"):
            traj = run_pde(form, {**s, "exterior": "default"}, target, snaps, dt=s["pde_dt"])
            if want_var:
                curve = traj.variance
            else:
                curve = np.array([_grid_iqr(g) for g in traj.snapshots])
            cols.append(f"pde_{form}")
            units.append(unit)
            data.append(curve)
    path = write_csv(out / "compare.csv", cols, units, data, h, f"langevin vs semigroup target={target.name}", diag)
    script = out / "compare_plot.py"
    script.write_text(PLOT_SCRIPT.format(csv=path.name, ylabel="X^2(t)" if want_var else "IQR(t)"))
    return [path, script], diag, {"langevin": lang.meta, "semigroup": semi.meta}


def _grid_iqr(g: GridFunction):
    c = np.cumsum(g.values) * g.h
    c /= c[-1]
    q1, q3 = np.interp([0.25, 0.75], c, g.x)
    return float(q3 - q1)


HANDLERS = {
    "sample": cmd_sample,
    "fraclap": cmd_fraclap,
    "reverse": cmd_reverse,
    "sim-langevin": cmd_sim_langevin,
    "sim-semigroup": cmd_sim_semigroup,
    "solve-fpe": cmd_solve_fpe,
    "compare": cmd_compare,
}


def run(command, settings, out_dir):
    """Run one command with resolved settings; returns the written RunReport."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h = config_hash({"command": command, **{k: v for k, v in settings.items() if k not in _NEUTRAL}})
    with Stopwatch() as clock:
        paths, diag, numerics = HANDLERS[command](settings, out_dir, h)
    report = RunReport(
        command=command,
        settings=settings,
        config_hash=h,
        seed=settings.get("seed"),
        numerics=numerics,
        diagnostics=diag,
        wall_clock_s=clock.elapsed,
        versions=versions(),
    )
    for p in paths:
        report.add_output(p)
    report.write(out_dir / f"{command}_report.json")
    return report


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    args = vars(ns)
    command = args.pop("command", None)
    try:
        if command is None:
            if "config" not in args:
                parser.print_usage(sys.stderr)
                return EXIT_CONFIG
            command, _ = _read_config(args["config"])
            if command is None:
                raise UsageError("an INI config needs a command; only run reports replay on their own")
        settings, out_dir = resolve(command, args)
        report = run(command, settings, out_dir)
    except (UsageError, ConfigError, CatalogError, GridError, FileNotFoundError) as exc:
        print(f"levyflights: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, fpe.SolverError, ReconstructionError, FloatingPointError) as exc:
        print(f"levyflights: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"levyflights: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for item in report.outputs:
        print(out_dir / item["path"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
