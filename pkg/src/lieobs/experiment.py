"""Running scenarios to CSV files, run manifests, and plot scripts.

Output layout for a run written to ``out_dir``::

    out_dir/manifest.json
    out_dir/<scenario name>.csv               (sigma = 0 or a single seed)
    out_dir/<scenario name>-seed<k>.csv       (one per seed otherwise)

The output directory defaults to ``$LIEOBS_OUT/<source name>`` when the
environment variable is set and ``./lieobs-out/<source name>`` otherwise.
"""

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import norm_columns, simulate_batch
from .error_functions import decay_rate_fit
from .exceptions import InsufficientData, MissingData, ParseError, ScenarioInvalid
from .scenario import BUILTINS, builtin, load, serialize

OUT_ENV = "LIEOBS_OUT"
STEADY_FRACTION = 0.5


@dataclass
class RunSummary:
    scenario: str
    observer: str
    sigma: float
    seed: int
    csv: str
    terminal_error: float
    fitted_rate: float
    failure_time: float


@dataclass
class NoiseStatistics:
    """Time-averaged error over the final half of the horizon, across seeds."""

    scenario: str
    observer: str
    sigma: float
    column: str
    seeds: int
    mean: float
    std: float


@dataclass
class RunManifest:
    source: str
    version: str
    scenarios: list  # serialized scenario texts
    integrator: list  # per scenario metadata dicts
    runs: list = field(default_factory=list)
    statistics: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)
    path: str = None

    @property
    def failed(self):
        return any(r.failure_time is not None for r in self.runs)

    def to_dict(self):
        d = asdict(self)
        d.pop("path")
        return d

    def write(self, path):
        self.path = str(path)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, allow_nan=False)
            fh.write("\n")
        return self

    @classmethod
    def read(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except FileNotFoundError as exc:
            raise MissingData(f"no manifest at {path}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"manifest is not valid JSON: {exc}", line=exc.lineno) from exc
        m = cls(
            source=d.get("source", ""),
            version=d.get("version", ""),
            scenarios=d.get("scenarios", []),
            integrator=d.get("integrator", []),
            runs=[RunSummary(**r) for r in d.get("runs", [])],
            statistics=[NoiseStatistics(**s) for s in d.get("statistics", [])],
            comparisons=d.get("comparisons", []),
        )
        m.path = str(path)
        return m


def _cell(v):
    return "" if not np.isfinite(v) else "%.17g" % v


def write_csv(path, t, norms, d):
    """One row per output sample; empty cells for undefined entries."""
    cols = norm_columns(d)
    lines = [",".join(["t"] + cols)]
    for k in range(len(t)):
        if not np.isfinite(norms["err_state"][k]):
            break
        lines.append(",".join([_cell(t[k])] + [_cell(norms[c][k]) for c in cols]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path):
    """Columns of a run CSV as float arrays (NaN for empty cells)."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split(",")
    rows = [[float(c) if c else np.nan for c in line.split(",")] for line in text[1:] if line]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def resolve_source(source):
    """Scenario list and a short name for a file path or built-in name."""
    p = Path(source)
    if p.is_file():
        return [load(p)], p.stem
    if source in BUILTINS:
        return builtin(source), source
    if p.suffix or os.sep in str(source):
        raise MissingData(f"no scenario file at {source}")
    raise ScenarioInvalid(f"{source!r} is neither a scenario file nor a built-in ({', '.join(BUILTINS)})")


def default_out_dir(name):
    root = os.environ.get(OUT_ENV)
    return Path(root) / name if root else Path("lieobs-out") / name


def _fit_rate(t, series):
    ok = np.isfinite(series)
    try:
        return decay_rate_fit(t[ok], series[ok])[0]
    except InsufficientData:
        return None


def _steady_mean(t, series):
    keep = t >= t[-1] * (1.0 - STEADY_FRACTION)
    vals = series[keep]
    return float(np.mean(vals)) if np.all(np.isfinite(vals)) else np.nan


def run_scenario(source, out_dir=None, seeds=None, dt=None, t_end=None):
    """Simulate every scenario in ``source`` and write CSVs plus a manifest.

    ``seeds`` overrides the number of replicas of noisy scenarios; ``dt``
    and ``t_end`` override the integrator step and horizon.  Step failures
    are recorded in the manifest (``failure_time``), not raised.
    """
    scenarios, name = resolve_source(source)
    scenarios = [sc.with_overrides(dt=dt, t_end=t_end).validate() for sc in scenarios]
    out = Path(out_dir) if out_dir is not None else default_out_dir(name)
    out.mkdir(parents=True, exist_ok=True)

    manifest = RunManifest(
        source=str(source),
        version=__version__,
        scenarios=[serialize(sc) for sc in scenarios],
        integrator=[sc.integrator.metadata() for sc in scenarios],
    )
    for sc in scenarios:
        seed_list = sc.seeds(seeds)
        batch = simulate_batch(sc, seeds=seed_list, store_states=False)
        steady = {c: [] for c in norm_columns(sc.d) if c == "err_state" or c.startswith("err_x")}
        for b in range(len(batch)):
            traj = batch.member(b)
            single = seed_list is None or len(seed_list) == 1
            fname = f"{sc.name}.csv" if single else f"{sc.name}-seed{traj.seed}.csv"
            write_csv(out / fname, traj.t, traj.norms, sc.d)
            err = traj.norms["err_state"]
            valid = np.isfinite(err)
            manifest.runs.append(RunSummary(
                scenario=sc.name,
                observer=sc.observer.value,
                sigma=sc.sigma,
                seed=traj.seed,
                csv=fname,
                terminal_error=float(err[valid][-1]) if np.any(valid) else None,
                fitted_rate=_fit_rate(traj.t, err) if sc.sigma == 0 else None,
                failure_time=traj.failure_time,
            ))
            for c in steady:
                steady[c].append(_steady_mean(traj.t, traj.norms[c]))
        if seed_list is not None:
            for c, vals in steady.items():
                vals = np.array(vals)
                vals = vals[np.isfinite(vals)]
                manifest.statistics.append(NoiseStatistics(
                    scenario=sc.name,
                    observer=sc.observer.value,
                    sigma=sc.sigma,
                    column=c,
                    seeds=int(len(vals)),
                    mean=float(np.mean(vals)) if len(vals) else None,
                    std=float(np.std(vals, ddof=1)) if len(vals) > 1 else None,
                ))
    manifest.comparisons = compare_observers(manifest.statistics)
    return manifest.write(out / "manifest.json")


def compare_observers(statistics):
    """Descriptive passive-vs-direct comparison at equal sigma and column."""
    groups = {}
    for s in statistics:
        if s.mean is not None:
            groups.setdefault((s.sigma, s.column), []).append(s)
    out = []
    for (sigma, column), stats in sorted(groups.items()):
        if len(stats) < 2:
            continue
        best = min(stats, key=lambda s: s.mean)
        out.append({
            "sigma": sigma,
            "column": column,
            "means": {s.observer: s.mean for s in stats},
            "stds": {s.observer: s.std for s in stats},
            "lowest_mean": best.observer,
        })
    return out


_PLOT_TEMPLATE = '''\
"""Plot script written by lieobs for {source}."""

import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, {data!r})
LOG_Y = {log_y}

# (row label, [(column, axis label)], [(legend label, csv file)])
ROWS = {rows!r}


def load(name, column):
    ts, ys = [], []
    with open(os.path.join(DATA, name), newline="") as fh:
        for row in csv.DictReader(fh):
            if row[column]:
                ts.append(float(row["t"]))
                ys.append(float(row[column]))
    return ts, ys


ncols = max(len(cols) for _, cols, _ in ROWS)
fig, axes = plt.subplots(len(ROWS), ncols, figsize=(5 * ncols, 3.2 * len(ROWS)), squeeze=False)
for r, (label, cols, lines) in enumerate(ROWS):
    for c, (column, ylabel) in enumerate(cols):
        ax = axes[r][c]
        for legend, name in lines:
            ax.plot(*load(name, column), label=legend)
        if LOG_Y:
            ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel)
        if label:
            ax.set_title(label)
        ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{stem}.png"), dpi=150)
'''


def _axis_label(column, family):
    if family == "SO(3)":
        return {"err_state": "||R_hat - R||", "err_x2": "||w_hat - w||"}.get(column, column)
    return {"err_state": "||X_hat - X||"}.get(column, f"||{column[4:]}_hat - {column[4:]}||")


def emit_plot_script(manifest, path=None, log_y=True):
    """Write a matplotlib script that redraws the manifest's figure layout.

    One row per noise level, one column per error norm (state, then each
    algebra slot), one line per observer; for seed batches only the first
    seed of each observer is drawn.  Returns the script path.
    """
    if not isinstance(manifest, RunManifest):
        manifest = RunManifest.read(manifest)
    if not manifest.runs or manifest.path is None:
        raise MissingData("manifest lists no runs")
    base = Path(manifest.path).parent
    for r in manifest.runs:
        if not (base / r.csv).is_file():
            raise MissingData(f"CSV {r.csv} listed in the manifest is missing")
    header = (base / manifest.runs[0].csv).read_text(encoding="utf-8").splitlines()[0].split(",")
    slot_cols = [c for c in header if c.startswith("err_x")]
    family = "SO(3)" if "family = SO(3)" in (manifest.scenarios[0] if manifest.scenarios else "") else ""
    cols = [(c, _axis_label(c, family)) for c in ["err_state"] + slot_cols]

    rows = []
    sigmas = sorted({r.sigma for r in manifest.runs})
    for sigma in sigmas:
        lines, seen = [], set()
        for r in manifest.runs:
            if r.sigma == sigma and r.scenario not in seen:
                seen.add(r.scenario)
                lines.append((r.observer.replace("_", " "), r.csv))
        label = f"sigma = {sigma:g}" if len(sigmas) > 1 or sigma > 0 else ""
        rows.append((label, cols, lines))

    path = Path(path) if path is not None else base / "plot.py"
    path.write_text(
        _PLOT_TEMPLATE.format(source=manifest.source, log_y=bool(log_y), rows=rows, stem=path.stem,
                              data=os.path.relpath(base.resolve(), path.parent.resolve())),
        encoding="utf-8",
    )
    return path
