"""Sweep execution, CSV emission and gnuplot script generation.

One task is a (sweep point, seed) pair and runs every requested scheme on the
same channel draw, so radar-only can start from the ISAC solution.  The QoS
sweep is the exception: a task is a whole seed, walked from the strictest
``Gamma`` down, each point warm-started from the previous one.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .comm import ber_monte_carlo
from .config_io import ExperimentSpec, LoadedConfig
from .detection import detection_probability
from .driver import RunOptions, SolverReport, run_algorithm1, run_baseline
from .scenario import ScenarioConfig, build_scenario, sample_channels

# fixed column order of the main results file, grid parameters are inserted after "point"
BASE_COLUMNS = (
    "point", "scheme", "seed", "status", "scnr", "scnr_db", "min_margin",
    "min_margin_normalized", "modulus_deviation", "phi_max", "ber", "iterations", "converged",
)
DEFAULT_RIS = [(-12.0, 45.0), (12.0, 45.0)]


def _velocity_direction(cfg: ScenarioConfig) -> np.ndarray:
    v = np.asarray(cfg.target_velocity, dtype=float)
    n = float(np.linalg.norm(v))
    return v / n if n > 0 else np.array([0.0, 1.0])


def apply_parameter(cfg: ScenarioConfig, name: str, value) -> ScenarioConfig:
    """Return ``cfg`` with one sweep parameter set."""
    value = float(value)
    if name in ("total_power", "a_max", "clutter_reflectivity", "noise_power_radar"):
        return cfg.replace(**{name: value})
    if name == "qos_gamma_db":
        return cfg.replace(qos_gamma=10.0 ** (value / 10.0))
    if name == "ris_y":
        return cfg.replace(ris_positions=[(p[0], value) for p in cfg.ris_positions])
    if name == "n_ris":
        n = int(value)
        pos = list(cfg.ris_positions) + DEFAULT_RIS[len(cfg.ris_positions):]
        if n > len(pos):
            raise ValueError(f"n_ris={n} exceeds the {len(pos)} available RIS positions")
        return cfg.replace(n_ris=n, ris_positions=pos[:n])
    if name == "speed":
        return cfg.replace(target_velocity=tuple(value * _velocity_direction(cfg)))
    if name == "direction_deg":
        speed = float(np.linalg.norm(cfg.target_velocity)) or 30.0
        a = math.radians(value)
        return cfg.replace(target_velocity=(speed * math.cos(a), speed * math.sin(a)))
    raise ValueError(f"unknown sweep parameter {name!r}")


def grid_points(spec: ExperimentSpec) -> list:
    names = list(spec.grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(spec.grid[n] for n in names))]


def point_config(base: ScenarioConfig, point: dict) -> ScenarioConfig:
    cfg = base
    for name, value in point.items():
        cfg = apply_parameter(cfg, name, value)
    return cfg


@dataclass
class RunRecord:
    point: int
    values: dict
    scheme: str
    seed: int
    status: str
    scnr: float
    min_margin: float
    min_margin_normalized: float
    modulus_deviation: float
    phi_max: float
    ber: float
    iterations: int
    converged: bool
    runtime: float
    trace: list


def _record(point, values, seed, rep: SolverReport, runtime, n_noise) -> RunRecord:
    if rep.status == "ok":
        ber = float(np.mean(ber_monte_carlo(rep.x, rep.phi, rep.ci, n_noise,
                                            np.random.SeedSequence([seed, 3]))))
    else:
        ber = float("nan")
    return RunRecord(point, values, rep.scheme, seed, rep.status, float(rep.scnr),
                     rep.min_margin, rep.min_margin_normalized, rep.modulus_deviation,
                     rep.phi_max, ber, rep.iterations, rep.converged, runtime,
                     [float(v) for v in rep.scnr_trace])


def _run_schemes(cfg, seed, schemes, opts, n_noise, point, values, warm=None):
    scenario = build_scenario(cfg)
    channels = sample_channels(scenario, seed)
    out, sols = [], {}
    # proposed first so that radar-only can reuse it
    order = sorted(schemes, key=lambda s: s == "radar_only")
    for scheme in order:
        t0 = time.perf_counter()
        ws = (warm or {}).get(scheme)
        if scheme == "radar_only" and ws is None and "proposed" in sols:
            ws = sols["proposed"]
        if scheme == "proposed" and ws is not None:
            rep = run_algorithm1(scenario, channels, opts, warm_start=ws)
        else:
            rep = run_baseline(scheme, scenario, channels, opts, warm_start=ws)
        if rep.status == "ok":
            sols[scheme] = (rep.x, rep.phi)
        out.append(_record(point, values, seed, rep, time.perf_counter() - t0, n_noise))
    return out, sols


def _point_task(args):
    cfg, seed, schemes, opts, n_noise, point, values = args
    return _run_schemes(cfg, seed, schemes, opts, n_noise, point, values)[0]


def _qos_chain_task(args):
    """All QoS points of one seed, strictest first, warm-starting down the chain."""
    base, seed, schemes, opts, n_noise, points = args
    order = sorted(range(len(points)), key=lambda i: -points[i]["qos_gamma_db"])
    records, warm = [], {}
    for i in order:
        cfg = point_config(base, points[i])
        recs, sols = _run_schemes(cfg, seed, schemes, opts, n_noise, i, points[i], warm)
        # random_ris and no_ris keep their own fixed phi, only (x, phi) pairs are carried
        warm = {s: v for s, v in sols.items() if s in ("proposed", "radar_only")}
        records.extend(recs)
    return records


def execute(loaded: LoadedConfig, seeds=None, jobs: int = 1) -> list:
    """Run every task of an experiment and return the records sorted."""
    spec = loaded.experiment
    seeds = list(spec.seeds if seeds is None else seeds)
    opts = spec.run_options()
    points = grid_points(spec)
    if spec.kind == "qos_tradeoff" and "qos_gamma_db" in spec.grid and len(spec.grid) == 1:
        tasks = [(loaded.scenario, s, spec.schemes, opts, spec.n_noise, points) for s in seeds]
        fn = _qos_chain_task
    else:
        tasks = [(point_config(loaded.scenario, p), s, spec.schemes, opts, spec.n_noise, i, p)
                 for i, p in enumerate(points) for s in seeds]
        fn = _point_task
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(fn, tasks))
    else:
        chunks = [fn(t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (r.point, r.scheme, r.seed))
    return records


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".10g")
    return str(v)


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).resolve().parent)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _header(loaded: LoadedConfig, seeds, columns, what: str) -> str:
    spec = loaded.experiment
    lines = [
        f"risisac {__version__} {what}",
        f"kind: {spec.kind}",
        f"git: {git_describe()}",
        f"profile: {loaded.profile}",
        f"seeds: {','.join(str(s) for s in seeds)}",
        f"columns: {','.join(columns)}",
    ]
    return "".join(f"# {l}\n" for l in lines)


def _write_csv(path: Path, header: str, columns, rows):
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def results_rows(records, grid_names):
    columns = list(BASE_COLUMNS[:1]) + list(grid_names) + list(BASE_COLUMNS[1:])
    rows = []
    for r in records:
        db = 10 * math.log10(r.scnr) if r.scnr > 0 else float("-inf")
        rows.append([r.point, *[float(r.values[n]) for n in grid_names], r.scheme, r.seed,
                     r.status, r.scnr, db, r.min_margin, r.min_margin_normalized,
                     r.modulus_deviation, r.phi_max, r.ber, r.iterations, r.converged])
    return columns, rows


def summarize(records, grid_names):
    """Median SCNR and BER per (point, scheme) over successful seeds."""
    groups = {}
    for r in records:
        groups.setdefault((r.point, r.scheme), []).append(r)
    columns = ["point", *grid_names, "scheme", "n_ok", "n_total", "scnr_db_median", "ber_median"]
    rows = []
    for (p, s), recs in sorted(groups.items()):
        ok = [r for r in recs if r.status == "ok"]
        med = float(np.median([10 * math.log10(r.scnr) for r in ok])) if ok else float("nan")
        ber = float(np.median([r.ber for r in ok])) if ok else float("nan")
        rows.append([p, *[float(recs[0].values[n]) for n in grid_names], s, len(ok), len(recs),
                     med, ber])
    return columns, rows


def roc_rows(records, grid_names, p_fa_grid):
    """P_d from the median SCNR of each (point, scheme) over a P_fa grid."""
    groups = {}
    for r in records:
        if r.status == "ok":
            groups.setdefault((r.point, r.scheme), []).append(r)
    columns = ["point", *grid_names, "scheme", "p_fa", "p_d"]
    rows = []
    for (p, s), recs in sorted(groups.items()):
        med = float(np.median([r.scnr for r in recs]))
        for pf in p_fa_grid:
            rows.append([p, *[float(recs[0].values[n]) for n in grid_names], s, float(pf),
                         detection_probability(med, pf)])
    return columns, rows


def gnuplot_script(kind: str, grid_names, schemes) -> str:
    """Plot commands reading summary.csv (or roc.csv / traces.csv)."""
    xcol = 2 if grid_names else 1
    sch_col = 2 + len(grid_names)
    xlabel = grid_names[0] if grid_names else "point"
    head = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
        "set terminal pngcairo size 800,600",
        f"set output '{kind}.png'",
        "set grid",
    ]
    plots = []
    if kind == "convergence":
        head += ["set xlabel 'iteration'", "set ylabel 'SCNR (dB)'"]
        for s in schemes:
            plots.append(f"'traces.csv' using {sch_col + 2}:(strcol({sch_col})eq'{s}' ? "
                         f"${sch_col + 3} : 1/0) with linespoints title '{s}'")
    elif kind == "roc":
        head += ["set xlabel 'P_fa'", "set ylabel 'P_d'", "set logscale x"]
        for s in schemes:
            plots.append(f"'roc.csv' using {sch_col + 1}:(strcol({sch_col})eq'{s}' ? "
                         f"${sch_col + 2} : 1/0) with linespoints title '{s}'")
    else:
        ycol = sch_col + 3
        ylabel = "BER" if kind == "qos_tradeoff" else "SCNR (dB)"
        if kind == "qos_tradeoff":
            ycol = sch_col + 4
            head.append("set logscale y")
        head += [f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
        for s in schemes:
            plots.append(f"'summary.csv' using {xcol}:(strcol({sch_col})eq'{s}' ? "
                         f"${ycol} : 1/0) with linespoints title '{s}'")
    return "\n".join(head) + "\nplot " + ", \\\n     ".join(plots) + "\n"


def write_outputs(loaded: LoadedConfig, records, out_dir, seeds) -> dict:
    """Write results, summary, timing and kind-specific files; return their paths."""
    spec = loaded.experiment
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = list(spec.grid)
    paths = {}

    cols, rows = results_rows(records, names)
    paths["results"] = out / "results.csv"
    _write_csv(paths["results"], _header(loaded, seeds, cols, "results"), cols, rows)

    cols, rows = summarize(records, names)
    paths["summary"] = out / "summary.csv"
    _write_csv(paths["summary"], _header(loaded, seeds, cols, "summary"), cols, rows)

    # wall-clock numbers differ run to run, kept apart from the reproducible files
    tcols = ["point", "scheme", "seed", "runtime_s"]
    paths["timings"] = out / "timings.csv"
    _write_csv(paths["timings"], _header(loaded, seeds, tcols, "timings"), tcols,
               [[r.point, r.scheme, r.seed, r.runtime] for r in records])

    if spec.kind == "convergence":
        tcols = ["point", *names, "scheme", "seed", "iteration", "scnr_db"]
        trows = [[r.point, *[float(r.values[n]) for n in names], r.scheme, r.seed, i + 1,
                  10 * math.log10(v)] for r in records for i, v in enumerate(r.trace)]
        paths["traces"] = out / "traces.csv"
        _write_csv(paths["traces"], _header(loaded, seeds, tcols, "traces"), tcols, trows)
    if spec.kind == "roc":
        rcols, rrows = roc_rows(records, names, spec.p_fa)
        paths["roc"] = out / "roc.csv"
        _write_csv(paths["roc"], _header(loaded, seeds, rcols, "roc"), rcols, rrows)

    paths["plot"] = out / f"{spec.kind}.gp"
    paths["plot"].write_text(gnuplot_script(spec.kind, names, spec.schemes), encoding="utf-8")
    return paths


def run_experiment(loaded: LoadedConfig, out_dir=None, seeds=None, jobs: int = 1) -> dict:
    seeds = list(loaded.experiment.seeds if seeds is None else seeds)
    records = execute(loaded, seeds=seeds, jobs=jobs)
    return write_outputs(loaded, records, out_dir or loaded.experiment.output_dir, seeds)
