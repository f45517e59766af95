"""CSV, gnuplot and manifest writers.

All floats are printed with ``%.9g``, rows end in LF and every file starts
with a header, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_to_dict
from .model import ScenarioConfig

FLOAT_FMT = "%.9g"
UNDEFINED = "undefined"

MEAN_FIELD_HEADER = ["t", "degree", "type", "m_S", "m_E", "m_L", "m_I", "alpha"]
AGGREGATES_HEADER = ["t", "theta", "eta", "theta_baseline", "eta_baseline"]
QOI_HEADER = ["t", "degree", "type", "qoi_mfe", "qoi_baseline"]
SUMMARY_HEADER = [
    "degree", "type", "infected_mfe", "infected_baseline", "infection_reduction_pct",
    "qoi_mfe", "qoi_baseline", "qoi_ratio", "alpha_at_T", "theta_mfe", "theta_baseline",
    "theta_reduction_pct",
]


def fmt(value) -> str:
    if value is None:
        return UNDEFINED
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return FLOAT_FMT % float(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _mean_field_rows(traj, alpha, net):
    times = traj.grid.times
    for j, t in enumerate(times):
        for c, cls in enumerate(net.classes):
            m = traj.m[j, c]
            yield (t, cls.degree, cls.type_id, m[0], m[1], m[2], m[3], alpha[j, c])


def write_mean_field(path, traj, alpha, net) -> Path:
    return write_csv(path, MEAN_FIELD_HEADER, _mean_field_rows(traj, np.asarray(alpha), net))


def emit_trajectories(solution, baseline, config: ScenarioConfig, out_dir, summary=None) -> list[Path]:
    """Write the equilibrium and baseline paths plus a gnuplot script to ``out_dir``."""
    from .solver import qoi_path, summary_metrics

    out = Path(out_dir)
    net, grid = config.network, config.grid
    times = grid.times
    ones = np.ones_like(solution.policy.alpha)
    files = [
        write_mean_field(out / "mean_field.csv", solution.trajectory, solution.policy.alpha, net),
        write_mean_field(out / "mean_field_baseline.csv", baseline.trajectory, ones, net),
    ]
    a, b = solution.aggregates, baseline.aggregates
    files.append(write_csv(out / "aggregates.csv", AGGREGATES_HEADER,
                           zip(times, a.theta, a.eta, b.theta, b.eta)))
    qm = qoi_path(solution.policy.alpha, a, config)
    qb = baseline.qoi
    files.append(write_csv(out / "qoi.csv", QOI_HEADER, (
        (t, cls.degree, cls.type_id, qm[j, c], qb[j, c])
        for j, t in enumerate(times) for c, cls in enumerate(net.classes))))
    s = summary or summary_metrics(solution, baseline, config)
    files.append(write_csv(out / "summary.csv", SUMMARY_HEADER, (
        (cls.degree, cls.type_id, s.infected_mfe[c], s.infected_baseline[c], s.infection_reduction_pct[c],
         s.qoi_mfe[c], s.qoi_baseline[c], s.qoi_ratio[c], solution.policy.alpha[-1, c],
         s.theta_mfe, s.theta_baseline, s.theta_reduction_pct)
        for c, cls in enumerate(net.classes))))
    files.append(write_plot_script(out / "plots.gp", net))
    return files


def write_baseline(baseline, config: ScenarioConfig, out_dir) -> list[Path]:
    out = Path(out_dir)
    net, times = config.network, config.grid.times
    ones = np.ones((len(times), len(net)))
    b = baseline.aggregates
    return [
        write_mean_field(out / "mean_field_baseline.csv", baseline.trajectory, ones, net),
        write_csv(out / "aggregates_baseline.csv", ["t", "theta", "eta"], zip(times, b.theta, b.eta)),
        write_csv(out / "qoi_baseline.csv", ["t", "degree", "type", "qoi_baseline"], (
            (t, cls.degree, cls.type_id, baseline.qoi[j, c])
            for j, t in enumerate(times) for c, cls in enumerate(net.classes))),
    ]


def _plot_block(title, ylabel, output, series):
    lines = [f"set output '{output}'", f"set title '{title}'", f"set ylabel '{ylabel}'"]
    lines.append("plot " + ", \\\n     ".join(series))
    return "\n".join(lines) + "\n"


def write_plot_script(path, net) -> Path:
    """Gnuplot script drawing every curve from the CSVs next to it."""
    blocks = [
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set terminal pngcairo size 900,600\n"
        "set xlabel 't'\n"
        "set grid\n"
    ]
    per_class = [(c.degree, c.type_id) for c in net.classes]

    def sel(col, k, i, file):
        return (f"'{file}' using 1:($2=={k} && $3=={i} ? ${col} : 1/0) "
                f"with lines title 'k={k} i={i}'")

    blocks.append(_plot_block("Infected fraction, equilibrium", "m_I", "infected_mfe.png",
                              [sel(7, k, i, "mean_field.csv") for k, i in per_class]))
    blocks.append(_plot_block("Infected fraction, baseline", "m_I", "infected_baseline.png",
                              [sel(7, k, i, "mean_field_baseline.csv") for k, i in per_class]))
    blocks.append(_plot_block("Equilibrium acceptance probability", "alpha", "alpha.png",
                              [sel(8, k, i, "mean_field.csv") for k, i in per_class]))
    blocks.append(_plot_block("Infected link share", "theta", "theta.png", [
        "'aggregates.csv' using 1:2 with lines title 'equilibrium'",
        "'aggregates.csv' using 1:4 with lines title 'baseline'",
    ]))
    qoi_series = []
    for k, i in per_class:
        qoi_series.append(sel(4, k, i, "qoi.csv").replace(f"title 'k={k}", f"title 'eq k={k}"))
        qoi_series.append(sel(5, k, i, "qoi.csv").replace(f"title 'k={k}", f"title 'base k={k}"))
    blocks.append(_plot_block("Expected quality of information", "QoI", "qoi.png", qoi_series))
    path = Path(path)
    path.write_text("\n".join(blocks), encoding="utf-8", newline="\n")
    return path


def sha256_of(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, config: ScenarioConfig, files, extra: dict | None = None) -> Path:
    """JSON record of the resolved inputs and a digest of every emitted file."""
    out = Path(out_dir)
    doc = {
        "tool": "seli_mfg",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seed": config.seed,
        "config": config_to_dict(config),
        "defaults_applied": list(config.defaults_applied),
        "files": {Path(f).relative_to(out).as_posix() if Path(f).is_relative_to(out) else str(f): sha256_of(f)
                  for f in files},
    }
    if extra:
        doc.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n", encoding="utf-8", newline="\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
