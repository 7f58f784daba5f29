"""Experiment orchestration and result persistence.

Every run produces a :class:`ResultTable`; writing it emits a CSV (with the
config echoed in ``#`` comment lines), a JSON metadata sidecar and a gnuplot
script that plots the CSV.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import itertools
import json
import logging
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .config import (REFERENCE_STREAM, ExperimentConfig, Interrupted, map_realizations,
                     realization_rng)
from .dynamics import (EntropySeries, Series, _initial_for, entanglement_realization,
                       page_value, transport_realization, u1_saturation_value)
from .gates import gate_sampler, gate_to_json
from .spectral import (POISSON_MEAN_R, RatioStatistics, levelstats_realization,
                       reference_mean, sample_cue_ratios, sample_poisson_ratios)

log = logging.getLogger(__name__)

COLUMNS = {
    "levelstats": ("L", "q", "r", "T", "family", "parameter", "realization_count",
                   "mean_r", "stderr_r"),
    "transport": ("t", "mean_C", "stderr_C", "n_up", "family", "T"),
    "entanglement": ("t", "mean_S", "stderr_S", "S_page", "S_u1", "family", "T"),
    "calibrate": ("ensemble", "N", "realization_count", "mean_r", "stderr_r", "reference_mean"),
    "sweep": ("parameter", "L", "T", "mean_r", "stderr_r", "status"),
}


@dataclass
class ResultTable:
    kind: str
    header: dict
    columns: tuple
    rows: list
    extra: dict = field(default_factory=dict)  # name -> (columns, rows)
    payload: object = None  # JSON-serializable, goes to the sidecar
    data: dict = field(default_factory=dict)  # in-memory objects, not persisted

    def csv_text(self, columns=None, rows=None, comments: bool = True) -> str:
        buf = io.StringIO()
        if comments:
            for key, value in self.header.items():
                buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns or self.columns)
        for row in rows if rows is not None else self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write(self, out_dir, stem: str | None = None) -> dict:
        """Write CSV, sidecar JSON, extra tables and gnuplot script; return paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or self.kind
        paths = {"csv": out / f"{stem}.csv", "json": out / f"{stem}.json"}
        paths["csv"].write_text(self.csv_text())
        for name, (cols, rows) in self.extra.items():
            paths[name] = out / f"{stem}_{name}.csv"
            paths[name].write_text(self.csv_text(cols, rows, comments=False))
        meta = dict(self.header, columns=list(self.columns),
                    files={k: p.name for k, p in paths.items() if k != "json"})
        if self.payload is not None:
            meta["payload"] = self.payload
        paths["json"].write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default))
        script = gnuplot_script(self, stem)
        if script:
            paths["gnuplot"] = out / f"{stem}.gp"
            paths["gnuplot"].write_text(script)
        return paths


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return "" if v is None else v


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def read_rows(path) -> list[dict]:
    """Data rows of a CSV written by :meth:`ResultTable.write` (comments skipped)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _header(config: ExperimentConfig, **extra) -> dict:
    return {
        "config": config.to_dict(),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        **extra,
    }


# -- per-experiment table builders -----------------------------------------------------

def _levelstats_table(config, results, **extra) -> ResultTable:
    stats = RatioStatistics([r for r, _ in results], [d for _, d in results], config.bin_width)
    row = (config.L, config.q, config.r, config.T, config.family, config.parameter,
           stats.n_realizations, stats.mean_r, stats.stderr_r)
    edges, dens = stats.histogram()
    hist = [(a, b, d) for a, b, d in zip(edges[:-1], edges[1:], dens)]
    header = _header(config, n_up=config.sector_n_up, n_degenerate_gaps=stats.n_degenerate,
                     gue_reference=reference_mean("GUE"), poisson_reference=POISSON_MEAN_R,
                     **extra)
    table = ResultTable("levelstats", header, COLUMNS["levelstats"], [row],
                        {"hist": (("bin_left", "bin_right", "density"), hist)})
    table.data = {"statistics": stats}
    return table


def _transport_table(config, results, **extra) -> ResultTable:
    initial = _initial_for(config)
    series = Series(config.snapshot_times(), np.array(results),
                    {"n_up": initial.n_up, "sector_dim": initial.sector.dim})
    rows = [(int(t), m, s, initial.n_up, config.family, config.T)
            for t, m, s in zip(series.times, series.mean, series.stderr)]
    header = _header(config, n_up=initial.n_up, sector_dim=initial.sector.dim, **extra)
    table = ResultTable("transport", header, COLUMNS["transport"], rows)
    table.data = {"series": series}
    return table


def _entanglement_table(config, results, **extra) -> ResultTable:
    initial = _initial_for(config)
    d_half = (2 * config.q) ** (config.L // 2)
    s_u1, s_u1_err = u1_saturation_value(config.L, config.q, initial.n_up, config.u1_samples,
                                         realization_rng(config.seed, 0, REFERENCE_STREAM))
    series = EntropySeries(config.snapshot_times(), np.array(results),
                           {"n_up": initial.n_up, "sector_dim": initial.sector.dim},
                           s_page=page_value(d_half, d_half), s_u1=s_u1, s_u1_stderr=s_u1_err)
    rows = [(int(t), m, s, series.s_page, s_u1, config.family, config.T)
            for t, m, s in zip(series.times, series.mean, series.stderr)]
    header = _header(config, n_up=initial.n_up, sector_dim=initial.sector.dim,
                     S_u1_stderr=s_u1_err, **extra)
    deficit = [(int(t), d, s) for t, d, s in zip(series.times, series.deficit, series.stderr)]
    table = ResultTable("entanglement", header, COLUMNS["entanglement"], rows,
                        {"deficit": (("t", "deficit", "stderr"), deficit)})
    table.data = {"series": series}
    return table


_REALIZATION = {
    "levelstats": (levelstats_realization, _levelstats_table),
    "transport": (transport_realization, _transport_table),
    "entanglement": (entanglement_realization, _entanglement_table),
}


def _poisson_task(seed, dim, k):
    return sample_poisson_ratios(dim, realization_rng(seed, k, REFERENCE_STREAM + 1))


def _cue_task(seed, dim, k):
    return sample_cue_ratios(dim, realization_rng(seed, k, REFERENCE_STREAM + 2))


def calibrate(config: ExperimentConfig) -> ResultTable:
    """Reference <r> of iid phases and of CUE matrices."""
    cal = config.calibration
    rows = []
    for name, task, dim, n, ref in (
            ("Poisson", _poisson_task, cal["poisson_dim"], cal["poisson_realizations"], POISSON_MEAN_R),
            ("CUE", _cue_task, cal["cue_dim"], cal["cue_realizations"], reference_mean("GUE"))):
        ratios = map_realizations(partial(task, config.seed, dim), range(n), config.threads)
        stats = RatioStatistics(ratios)
        rows.append((name, dim, n, stats.mean_r, stats.stderr_r, ref))
    return ResultTable("calibrate", _header(config), COLUMNS["calibrate"], rows)


def sample_gate(config: ExperimentConfig) -> ResultTable:
    rng = realization_rng(config.seed, config.first_realization)
    gate = gate_sampler(config.family, config.r, config.q, config.parameter)(rng)
    payload = dict(gate_to_json(gate), family=config.family, parameter=config.parameter,
                   seed=config.seed)
    return ResultTable("sample-gate", _header(config), (), [], payload=payload)


def run(config: ExperimentConfig, on_result=None) -> ResultTable:
    """Validate, dispatch and aggregate one experiment.

    Realization k always uses the stream derived from (seed, k), so the table
    does not depend on ``config.threads``.  On interrupt the completed
    realizations are aggregated and the header records how far the run got;
    a later run with ``first_realization`` set to that count resumes it.
    """
    config.validate()
    if config.experiment == "calibrate":
        return calibrate(config)
    if config.experiment == "sample-gate":
        return sample_gate(config)
    func, build = _REALIZATION[config.experiment]
    try:
        results = map_realizations(partial(func, config), config.realization_indices,
                                   config.threads, on_result)
    except Interrupted as exc:
        if not exc.partial:
            raise
        log.warning("interrupted: aggregating %d completed realizations", len(exc.partial))
        partial_cfg = config.replace(n_realizations=len(exc.partial))
        table = build(partial_cfg, exc.partial, interrupted=True,
                      requested_realizations=config.n_realizations)
        table.header["next_first_realization"] = config.first_realization + len(exc.partial)
        raise PartialResult(table) from exc
    return build(config, results)


class PartialResult(Exception):
    """Interrupted run; ``table`` holds the aggregate of completed realizations."""

    def __init__(self, table: ResultTable):
        super().__init__("run interrupted; partial table attached")
        self.table = table


def sweep(base: ExperimentConfig, parameters=(None,), sizes=None, periods=None):
    """One levelstats run per grid point plus a summary table.

    Failures are recorded in the summary (status column) and the sweep
    carries on with the next point.
    """
    sizes = sizes or [base.L]
    periods = periods or [base.T]
    tables, rows = [], []
    for T, L, p in itertools.product(periods, sizes, parameters):
        cfg = base.replace(experiment="levelstats", L=L, T=T,
                           parameter=base.parameter if p is None else p)
        try:
            table = run(cfg)
        except Exception as exc:  # noqa: BLE001 - isolate grid points
            log.error("sweep point L=%s T=%s parameter=%s failed: %s", L, T, cfg.parameter, exc)
            rows.append((cfg.parameter, L, T, float("nan"), float("nan"), f"error: {exc}"))
            tables.append(None)
            continue
        tables.append(table)
        _, _, _, _, _, _, _, mean_r, stderr_r = table.rows[0]
        rows.append((cfg.parameter, L, T, mean_r, stderr_r, "ok"))
    summary = ResultTable("sweep", _header(base, parameters=list(parameters), sizes=list(sizes),
                                           periods=list(periods)),
                          COLUMNS["sweep"], rows)
    return tables, summary


# -- plot scripts ------------------------------------------------------------------------

def gnuplot_script(table: ResultTable, stem: str) -> str | None:
    csv_name = f"{stem}.csv"
    head = f"set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo\nset output '{stem}.png'\n"
    if table.kind == "levelstats":
        return head + (
            "set xlabel 'r'\nset ylabel 'P(r)'\n"
            "Z = 4*pi/(81*sqrt(3))\n"
            "gue(x) = 2*(x+x**2)**2/(1+x+x**2)**4/Z\n"
            "poisson(x) = 2/(1+x)**2\n"
            f"plot '{stem}_hist.csv' using (($1+$2)/2):3 with steps title 'data', "
            "gue(x) title 'GUE', poisson(x) title 'Poisson'\n")
    if table.kind == "transport":
        return head + (
            "set logscale xy\nset xlabel 't'\nset ylabel 'C(t)'\n"
            f"plot '{csv_name}' using 1:2:3 with yerrorbars title 'C(t)', "
            "1/sqrt(x) title 't^{-1/2}' dashtype 2\n")
    if table.kind == "entanglement":
        return head + (
            "set logscale x\nset xlabel 't'\nset ylabel 'S_{L/2}'\n"
            f"plot '{csv_name}' using 1:2:3 with yerrorbars title 'S(t)', "
            f"'' using 1:4 with lines title 'S_Page', '' using 1:5 with lines title 'S_U(1)'\n")
    if table.kind == "sweep":
        return head + (
            "set xlabel 'parameter'\nset ylabel '<r>'\n"
            f"plot '{csv_name}' using 1:4:5 with yerrorbars title '<r>'\n")
    return None
