"""Aggregation of run results into result tables and CSV files.

Runs are grouped by (policy, scenario). Counts are summed, squared forecast
errors are pooled before taking the root, and anticipation times are pooled
per decision variant.

CPU rows: ``busy`` is the executing fraction of the simulated time and
``idle`` its complement. The three CPU labels of the results table are filled
as follows: *CPU utilization rate* = busy fraction of the whole horizon,
*CPU Busy* = busy fraction of the active span, *CPU Downtime* = idle fraction
of the active span, where the active span runs from 0 to the last instant a
job finished, missed or was aborted.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .predict import ForecastRecord

HORIZONS = (1, 3, 5)
SERIES_LIMIT = 500
CSV_SCHEMA_VERSION = 1

TABLE_ROWS = (
    "CPU utilization rate",
    "CPU Busy",
    "CPU Downtime",
    "Number of Completed Tasks",
    "Number of misses deadlines",
    "Percentage of misses deadlines",
    "MSE - Prediction 1 step ahead",
    "MSE - Prediction 3 steps ahead",
    "MSE - Prediction 5 steps ahead",
    "RMSE - Prediction 1 step ahead",
    "RMSE - Prediction 3 steps ahead",
    "RMSE - Prediction 5 steps ahead",
    "Average anticipation time of miss deadline",
    "Median anticipation time of miss deadline",
)

# (heading, trigger whose numbers fill the column, mono column?)
TABLE_COLUMNS = (
    ("Reactive/Mono", "reactive", True),
    ("Reactive/Multi", "reactive", False),
    ("Fuzzy/Mono", "fuzzy", True),
    ("Fuzzy/Multi", "fuzzy", False),
    ("Fuzzy+Predictor/Mono", "fuzzy+predictor", True),
    ("Fuzzy+Predictor/Multi", "fuzzy+predictor", False),
)


@dataclass
class CellSummary:
    policy: str
    scenario: str
    runs: int = 0
    seeds: list = field(default_factory=list)
    horizon: int = 0
    span: int = 0
    busy: int = 0
    idle: int = 0
    hi_time: int = 0
    released: int = 0
    completed: int = 0
    missed: int = 0
    aborted: int = 0
    aborted_started: int = 0
    suppressed: int = 0
    faults: int = 0
    commits: int = 0
    false_alarms: int = 0
    latencies: list = field(default_factory=list)
    per_task: dict = field(default_factory=dict)  # task -> {counter: n}
    squared_errors: dict = field(default_factory=dict)  # horizon -> [e^2]
    predictor_ran: bool = False
    anticipation: dict = field(default_factory=dict)  # variant -> [delays]

    @property
    def miss_percentage(self) -> float:
        return 100.0 * self.missed / self.released if self.released else 0.0

    @property
    def busy_fraction(self) -> float:
        return self.busy / self.horizon if self.horizon else 0.0

    @property
    def idle_fraction(self) -> float:
        return 1.0 - self.busy_fraction if self.horizon else 0.0

    @property
    def busy_of_span(self) -> float:
        return self.busy / self.span if self.span else 0.0

    @property
    def idle_of_span(self) -> float:
        return max(0.0, self.span - self.busy) / self.span if self.span else 0.0

    def mse(self, n: int) -> Optional[float]:
        errs = self.squared_errors.get(n)
        return sum(errs) / len(errs) if errs else None

    def rmse(self, n: int) -> Optional[float]:
        m = self.mse(n)
        return None if m is None else math.sqrt(m)

    def anticipation_stats(self, variant: str) -> Optional[tuple]:
        """(mean, median, count) or None when the variant was not monitored."""
        if variant not in self.anticipation:
            return None
        xs = self.anticipation[variant]
        if not xs:
            return (None, None, 0)
        return (statistics.fmean(xs), statistics.median(xs), len(xs))


@dataclass
class Report:
    cells: dict  # (policy, scenario) -> CellSummary

    def cell(self, policy: str, scenario: str) -> Optional[CellSummary]:
        return self.cells.get((policy, scenario))

    @property
    def policies(self) -> list:
        return sorted({p for p, _ in self.cells})


_COUNTERS = ("released", "completed", "missed", "aborted", "aborted_started",
             "discarded", "suppressed", "in_flight")


def aggregate(runs: Iterable) -> Report:
    runs = list(runs)
    if not runs:
        raise ValueError("no runs to aggregate")
    cells: dict = {}
    for r in runs:
        key = (r.policy, r.scenario)
        c = cells.get(key)
        if c is None:
            c = cells[key] = CellSummary(r.policy, r.scenario)
        c.runs += 1
        c.seeds.append(r.seed)
        c.horizon += r.horizon
        c.span += r.last_activity
        c.busy += r.busy
        c.idle += r.idle
        c.hi_time += r.hi_time
        c.released += r.total_released
        c.completed += r.total_completed
        c.missed += r.total_missed
        c.aborted += r.total_aborted
        c.aborted_started += sum(r.aborted_started.values())
        c.suppressed += sum(r.suppressed.values())
        c.faults += len(r.faults)
        for m in r.mode_changes:
            if m.kind == "false-alarm":
                c.false_alarms += 1
            else:
                c.commits += 1
                c.latencies.append(m.latency)
        for name in _COUNTERS:
            for tid, n in getattr(r, name).items():
                c.per_task.setdefault(tid, dict.fromkeys(_COUNTERS, 0))[name] += n
        if r.predictor_ran:
            c.predictor_ran = True
            for rec in r.forecasts:
                if rec.observed is not None:
                    c.squared_errors.setdefault(rec.horizon, []).append(rec.squared_error)
        for variant, xs in r.anticipation.items():
            c.anticipation.setdefault(variant, []).extend(xs)
    return Report(dict(sorted(cells.items())))


def pooled_rmse(records: Iterable[ForecastRecord], n: int) -> Optional[float]:
    errs = [r.squared_error for r in records if r.horizon == n and r.observed is not None]
    return math.sqrt(sum(errs) / len(errs)) if errs else None


# -- formatting ----------------------------------------------------------------

NA = "N/A"


def _pct(x: str) -> str:
    return f"{100.0 * float(x):.2f}%" if x else NA


def _num(x: str, digits: int = 4) -> str:
    return f"{float(x):.{digits}f}" if x else NA


_VARIANT_FIELD = {"fuzzy": "fuzzy", "fuzzy+predictor": "predictor"}


def _column_values(rows: dict, policy: str, trigger: str, mono: bool) -> list:
    row = rows.get((policy, "mono" if mono else trigger))
    if row is None:
        return [NA] * len(TABLE_ROWS)
    out = [_pct(row["busy_fraction"]), _pct(row["busy_of_span"]), _pct(row["idle_of_span"]),
           row["released"], row["missed"], f"{float(row['miss_pct']):.2f}%"]
    show_prediction = trigger == "fuzzy+predictor"
    out += [_num(row[f"mse_{n}"]) if show_prediction else NA for n in HORIZONS]
    out += [_num(row[f"rmse_{n}"]) if show_prediction else NA for n in HORIZONS]
    if mono and trigger in _VARIANT_FIELD:
        v = _VARIANT_FIELD[trigger]
        out += [_num(row[f"anticipation_{v}_mean"], 2), _num(row[f"anticipation_{v}_median"], 2)]
    else:
        out += [NA, NA]
    return out


def table_from_rows(rows: Iterable[dict]) -> str:
    """Results table built from summary rows (dicts keyed by SUMMARY_FIELDS)."""
    by_key = {(r["policy"], r["scenario"]): r for r in rows}
    if not by_key:
        raise ValueError("empty summary")
    heads = [h for h, _, _ in TABLE_COLUMNS]
    lw = max(len(r) for r in TABLE_ROWS)
    blocks = []
    for pol in sorted({p for p, _ in by_key}):
        cols = [_column_values(by_key, pol, trig, mono) for _, trig, mono in TABLE_COLUMNS]
        widths = [max(len(h), *(len(v) for v in col)) for h, col in zip(heads, cols)]
        lines = [f"Policy {pol}",
                 " | ".join([" " * lw] + [h.rjust(w) for h, w in zip(heads, widths)])]
        lines.append("-" * len(lines[-1]))
        for i, label in enumerate(TABLE_ROWS):
            cells = [col[i].rjust(w) for col, w in zip(cols, widths)]
            lines.append(" | ".join([label.ljust(lw)] + cells))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def table(report: Report) -> str:
    """Results table: one row per label, six trigger/mode columns, one block per policy."""
    return table_from_rows(summary_rows(report))


SUMMARY_FIELDS = (
    "policy", "scenario", "runs", "released", "completed", "missed", "miss_pct",
    "aborted", "aborted_started", "suppressed", "faults", "commits", "false_alarms",
    "mean_latency", "busy_fraction", "idle_fraction", "busy_of_span", "idle_of_span",
    "hi_fraction", "mse_1", "mse_3", "mse_5", "rmse_1", "rmse_3", "rmse_5",
    "anticipation_fuzzy_mean", "anticipation_fuzzy_median", "anticipation_fuzzy_n",
    "anticipation_predictor_mean", "anticipation_predictor_median",
    "anticipation_predictor_n",
)

PER_TASK_FIELDS = ("policy", "scenario", "task") + _COUNTERS


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _summary_row(c: CellSummary) -> list:
    lat = [x for x in c.latencies if x is not None]
    row = [c.policy, c.scenario, c.runs, c.released, c.completed, c.missed,
           c.miss_percentage, c.aborted, c.aborted_started, c.suppressed,
           c.faults, c.commits, c.false_alarms,
           statistics.fmean(lat) if lat else None,
           c.busy_fraction, c.idle_fraction, c.busy_of_span, c.idle_of_span,
           c.hi_time / c.horizon if c.horizon else None]
    row += [c.mse(n) for n in HORIZONS] + [c.rmse(n) for n in HORIZONS]
    for variant in ("fuzzy", "fuzzy+predictor"):
        stats = c.anticipation_stats(variant)
        row += list(stats) if stats else [None, None, None]
    return [_fmt(x) for x in row]


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def summary_rows(report: Report) -> list[dict]:
    return [dict(zip(SUMMARY_FIELDS, _summary_row(c))) for c in report.cells.values()]


def summary_csv(report: Report) -> str:
    return _csv(SUMMARY_FIELDS, [_summary_row(c) for c in report.cells.values()])


def read_summary(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and set(SUMMARY_FIELDS) - set(rows[0]):
        raise ValueError("not a summary CSV")
    return rows


def per_task_csv(report: Report) -> str:
    rows = []
    for c in report.cells.values():
        for tid in sorted(c.per_task):
            counts = c.per_task[tid]
            rows.append([c.policy, c.scenario, tid] + [counts[k] for k in _COUNTERS])
    return _csv(PER_TASK_FIELDS, rows)


def emit(report: Report, fmt: str = "table") -> str:
    """Serialize a report as the text table or the summary CSV."""
    if fmt == "table":
        return table(report)
    if fmt == "csv":
        return summary_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")


# -- per-run series --------------------------------------------------------------

def laxity_csv(result, limit: Optional[int] = None) -> str:
    rows = result.laxity if limit is None else result.laxity[:limit]
    return _csv(("time", "worst_laxity", "slope", "task"),
                [[t, _fmt(float(lax)), _fmt(float(acc)), "" if task is None else task]
                 for t, lax, acc, task in rows])


def forecast_csv(result, limit: Optional[int] = None) -> str:
    recs = sorted(result.forecasts, key=lambda r: (r.tick, r.horizon))
    if limit is not None:
        recs = recs[:limit]
    return _csv(("tick", "horizon", "predicted", "observed"),
                [[r.tick, r.horizon, _fmt(r.predicted), _fmt(r.observed)] for r in recs])


def run_csv(result) -> str:
    """Per-task counters of a single run."""
    rows = [[result.policy, result.scenario, tid] + [getattr(result, k)[tid] for k in _COUNTERS]
            for tid in sorted(result.released)]
    return _csv(PER_TASK_FIELDS, rows)


def mode_change_csv(result) -> str:
    return _csv(("kind", "trigger_time", "request_time", "commit_time", "latency",
                 "aborted", "aborted_started", "drained"),
                [[m.kind, _fmt(m.trigger_time), _fmt(m.request_time), _fmt(m.commit_time),
                  _fmt(m.latency), m.aborted, m.aborted_started, m.drained]
                 for m in result.mode_changes])


def transition_csv(result) -> str:
    return _csv(("old", "new", "request_time", "start_time", "complete_time", "latency"),
                [[t.old, t.new, t.request_time, t.start_time, _fmt(t.complete_time),
                  _fmt(t.latency)] for t in result.transitions])


def trace_csv(result) -> str:
    return _csv(("time", "event", "task", "job", "detail"),
                [[_fmt(x) for x in row] for row in (result.trace or [])])
