"""Command-line front end.

Subcommands::

    collective-decay run --config scenario.toml --out results/
    collective-decay figure fig3 --out results/
    collective-decay sweep --config scenario.toml --param params.n_total --values 100,1000 --jobs 2
    collective-decay oracle-check --seed 7

Exit codes: 0 success, 2 configuration error, 3 integration failure,
1 for a failed oracle check.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bb import bb_inflection, bb_simulate, peak_rate_fraction
from .bf import bf_exponential_bound, bf_plateau_metric, bf_simulate, log_time_grid
from .config import ScenarioConfig, load_config, parse_flat
from .errors import (ConfigInvalid, EmptyTrajectory, IntegrationError, NoCrossing, OracleError,
                     ThresholdNotReached)
from .fb import fb_sharpness, fb_simulate
from .trajectory import Trajectory, write_csv, write_metadata

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_INTEGRATION = 0, 1, 2, 3
SUMMARY_COLUMNS = ("t_50", "sharpness", "residual", "plateau", "inflection")


def simulate(cfg: ScenarioConfig) -> Trajectory:
    ts = cfg.sample_times()
    if cfg.model == "bf":
        return bf_simulate(cfg.params, ts, bool(cfg.options.get("fast_neutrino", False)), cfg.integrator)
    if cfg.model == "fb":
        return fb_simulate(cfg.params, ts, cfg.options.get("form", "pair"), cfg.integrator)
    return bb_simulate(cfg.params, cfg.model[3:], ts, cfg.integrator)


def _with_ext(base: Path, ext: str) -> Path:
    # stems may contain dots (ratio_0.1), so append rather than replace a suffix
    return base.with_name(base.name + ext)


def write_run(cfg: ScenarioConfig, traj: Trajectory, out_dir, stem: str | None = None):
    """Write the selected columns to ``<stem>.csv`` and the sidecar ``<stem>.json``."""
    stem = stem or cfg.output_path
    base = Path(out_dir) / stem
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = write_csv(traj, _with_ext(base, ".csv"), cfg.outputs)
    meta = dict(traj.metadata)
    meta.update({"config": {**cfg.flat, "output_path": stem}, "outputs": cfg.outputs,
                 "tags": cfg.tags, "time_grid": {"t_end": cfg.t_end, "n_samples": cfg.n_samples,
                                                 "spacing": cfg.spacing, "t_min": cfg.t_min}})
    json_path = write_metadata(meta, _with_ext(base, ".json"))
    return csv_path, json_path


def run(cfg: ScenarioConfig, out_dir, stem: str | None = None) -> Trajectory:
    traj = simulate(cfg)
    write_run(cfg, traj, out_dir, stem)
    return traj


def summarize(cfg: ScenarioConfig, traj: Trajectory) -> dict:
    """Derived scalars of one run; NaN where a scalar does not apply or is not reached."""
    frac = "decayed_frac" if cfg.model == "bf" else "n_b_frac"

    def guarded(fn):
        try:
            return float(fn())
        except (NoCrossing, ThresholdNotReached, EmptyTrajectory):
            return math.nan

    if "n_a" in traj.columns:
        residual = float(traj["n_a"][-1])
    else:
        residual = float(cfg.params.n_total - traj["n_b"][-1])
    if cfg.model in ("bb_logistic", "bb_interacting"):
        inflection = bb_inflection(cfg.params, cfg.model[3:])
    elif cfg.model == "bb_full":
        inflection = peak_rate_fraction(traj)
    else:
        inflection = math.nan
    return {
        "t_50": guarded(lambda: traj.crossing_time(frac, 0.5)),
        "sharpness": guarded(lambda: fb_sharpness(traj, frac)),
        "residual": residual,
        "plateau": guarded(lambda: bf_plateau_metric(traj)) if cfg.model == "bf" else math.nan,
        "inflection": inflection,
    }


# --- figures ----------------------------------------------------------------------------

def _bb_flat(model, n, t_end, stem, tags, **params):
    flat = {"schema": 1, "model": model, "params.n_total": n, "params.omega": 1.0, "params.gamma_cap": 1.0,
            "time.t_end": t_end, "time.n_samples": 401, "output_path": stem}
    flat.update({f"params.{k}": v for k, v in params.items()})
    flat.update({f"tags.{k}": v for k, v in tags.items()})
    return flat


def figure_scenarios(name: str) -> tuple:
    """Scenario configs and exponential references making up one figure.

    Returns ``(configs, references)`` where a reference is
    ``(stem, rate, times)`` for the curve ``1 - exp(-rate t)``.
    """
    if name == "fig1":
        tags = {"figure": "fig1", "legend_unavailable": True}
        configs = [parse_flat(_bb_flat("bb_logistic", n, 40.0 / (n + 1), f"fig1/N_{n}", tags))
                   for n in (1, 10, 100, 1000, 10_000, 100_000)]
        return configs, [("fig1/reference_exponential", 1.0, np.linspace(0.0, 20.0, 401))]
    if name == "fig2":
        n = 100_000
        configs = [parse_flat(_bb_flat("bb_interacting", n, 40.0 * (1 + eta) / (n + 1), f"fig2/eta_{eta:g}",
                                       {"figure": "fig2"}, eta=float(eta)))
                   for eta in (0, 1, 100, 10_000)]
        return configs, []
    if name == "fig3":
        configs, refs = [], []
        times = log_time_grid(1e-3, 1e3, 400)
        for ratio in (1.0, 0.1, 0.01):
            flat = {"schema": 1, "model": "bf", "params.n_total": 100, "params.alpha": 80,
                    "params.g_alpha": ratio, "params.gamma_th": 1.0, "options.fast_neutrino": True,
                    "time.t_end": 1e3, "time.t_min": 1e-3, "time.n_samples": 400, "time.spacing": "log",
                    "output_path": f"fig3/ratio_{ratio:g}", "tags.figure": "fig3", "tags.time_unit": "1/gamma_th"}
            configs.append(parse_flat(flat))
            refs.append((f"fig3/reference_exponential_ratio_{ratio:g}", ratio, times))
        return configs, refs
    if name == "figfb":
        configs = []
        for n in (100, 1000, 10_000):
            t_end = 4.0 * math.log(2.0) / n
            flat = {"schema": 1, "model": "fb", "params.n_total": n, "params.gamma_decay": 1.0,
                    "time.t_end": t_end, "time.n_samples": 401, "output_path": f"figfb/N_{n}",
                    "tags.figure": "figfb", "tags.legend_unavailable": True}
            configs.append(parse_flat(flat))
        return configs, []
    raise ConfigInvalid("figure", f"unknown figure {name!r}")


def write_reference(out_dir, stem: str, rate: float, times, figure: str):
    traj = Trajectory(times, {"decayed_frac": bf_exponential_bound(times, rate)})
    base = Path(out_dir) / stem
    base.parent.mkdir(parents=True, exist_ok=True)
    write_csv(traj, _with_ext(base, ".csv"))
    write_metadata({"reference": "1 - exp(-rate * t)", "rate": rate, "figure": figure,
                    "regenerate": f"figure {figure}", "tool_version": __version__}, _with_ext(base, ".json"))


def reproduce_figure(name: str, out_dir) -> list:
    configs, refs = figure_scenarios(name)
    written = []
    for cfg in configs:
        run(cfg, out_dir)
        written.append(cfg.output_path)
    for stem, rate, times in refs:
        write_reference(out_dir, stem, rate, times, name)
        written.append(stem)
    return written


# --- sweeps -----------------------------------------------------------------------------

def _parse_value(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigInvalid("--values", f"not a number: {text!r}") from None


def _sweep_one(flat: dict, out_dir: str, stem: str) -> dict:
    cfg = parse_flat(flat)
    return summarize(cfg, run(cfg, out_dir, stem))


def sweep(cfg: ScenarioConfig, path: str, values, out_dir, jobs: int = 1) -> Path:
    """Run one scenario per value and write ``<output_path>_summary.csv``, rows sorted by value."""
    if not values:
        raise ConfigInvalid("--values", "empty value list")
    current = cfg.flat.get(path)
    if current is not None and (isinstance(current, bool) or not isinstance(current, (int, float))):
        raise ConfigInvalid(path, "sweep path must address a numeric setting")
    values = sorted(values)
    leaf = path.rsplit(".", 1)[-1]
    tasks = []
    for value in values:
        run_cfg = cfg.with_value(path, value)  # validates every point before anything runs
        tasks.append((run_cfg.flat, str(out_dir), f"{cfg.output_path}_{leaf}_{value:g}"))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, *zip(*tasks)))
    else:
        rows = [_sweep_one(*task) for task in tasks]

    summary = Path(out_dir) / f"{cfg.output_path}_summary.csv"
    summary.parent.mkdir(parents=True, exist_ok=True)
    with open(summary, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([leaf, *SUMMARY_COLUMNS])
        for value, row in zip(values, rows):
            writer.writerow([repr(value)] + ["%.17g" % row[c] for c in SUMMARY_COLUMNS])
    return summary


# --- entry point ------------------------------------------------------------------------

def _oracle_check(seed: int, out_dir) -> int:
    from .oracle import identity_battery

    results = identity_battery(seed)
    ok = True
    for r in results:
        ok &= r.passed
        print(f"{r.name:18s} residual={r.max_residual:.3e} tol={r.tolerance:.0e} "
              f"states={r.n_states} {'PASS' if r.passed else 'FAIL'}")
    if out_dir is not None:
        write_metadata({"seed": seed, "tool_version": __version__,
                        "results": [{"name": r.name, "max_residual": r.max_residual, "n_states": r.n_states,
                                     "tolerance": r.tolerance, "passed": r.passed} for r in results]},
                       Path(out_dir) / "oracle_check.json")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collective-decay", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one scenario")
    p.add_argument("--config", required=True, help="TOML scenario or sidecar JSON")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("figure", help="emit the data behind one figure")
    p.add_argument("name", choices=("fig1", "fig2", "fig3", "figfb"))
    p.add_argument("--out", default=".")

    p = sub.add_parser("sweep", help="run a scenario across values of one parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, help="dotted path, e.g. params.n_total")
    p.add_argument("--values", required=True, help="comma-separated numbers")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=".")

    p = sub.add_parser("oracle-check", help="verify the exact equations of motion on random states")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            run(cfg, args.out)
            print(Path(args.out) / f"{cfg.output_path}.csv")
        elif args.command == "figure":
            for stem in reproduce_figure(args.name, args.out):
                print(Path(args.out) / f"{stem}.csv")
        elif args.command == "sweep":
            if args.jobs < 1:
                raise ConfigInvalid("--jobs", "must be >= 1")
            values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
            print(sweep(load_config(args.config), args.param, values, args.out, args.jobs))
        else:
            return _oracle_check(args.seed, args.out)
    except ConfigInvalid as exc:
        print(f"config error: {exc.field}: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"integration failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except OracleError as exc:
        print(f"oracle error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
