"""Command-line front end.

Subcommands: ``analyze``, ``simulate``, ``run-matrix``, ``report`` and
``fuzzy eval``. Exit codes: 0 success, 1 usage error, 2 infeasible analysis,
3 runtime failure. The default output directory is taken from
``MCSCHED_OUTPUT_DIR`` (falls back to ``./runs``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from . import config as cfgio
from . import metrics, rta, sim
from .core import Policy, base_period_stats, validate_task_set
from .fuzzy import decide, explain
from .modemgr import classify_transition

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_RUNTIME = 0, 1, 2, 3
OUTPUT_ENV = "MCSCHED_OUTPUT_DIR"
TRIGGERS = sim.CRITICALITY_SCENARIOS

log = logging.getLogger("mcsched")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_config_args(p) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--config", type=Path, help="YAML config file")
    g.add_argument("--bundled", choices=("table1", "table2"), help="shipped config")
    p.add_argument("--policy", choices=[x.value for x in Policy], help="override policy")


def _add_output_args(p) -> None:
    p.add_argument("--output", type=Path, help=f"output directory (default ${OUTPUT_ENV} or ./runs)")
    p.add_argument("--series-limit", type=int, default=metrics.SERIES_LIMIT,
                   help="rows kept in per-run series files, 0 keeps all (default 500)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mcsched", description="Mode-change scheduling analysis and simulation")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="response-time analysis of every mode and transition")
    _add_config_args(a)
    a.add_argument("--csv", action="store_true", help="print CSV instead of text")

    s = sub.add_parser("simulate", help="one simulation run")
    _add_config_args(s)
    _add_output_args(s)
    s.add_argument("--seed", type=int)
    s.add_argument("--scenario", help="steady, mode-change, or a trigger kind")
    s.add_argument("--horizon", type=int)
    s.add_argument("--mode", help="starting mode (plain configs)")
    s.add_argument("--trace", action="store_true", help="write the event trace")

    m = sub.add_parser("run-matrix", help="policies x triggers x seeds with paired seeds")
    _add_config_args(m)
    _add_output_args(m)
    seeds = m.add_mutually_exclusive_group()
    seeds.add_argument("--seeds", type=int, nargs="*", help="explicit seed list")
    seeds.add_argument("--repetitions", type=int, help="seeds seed..seed+n-1")
    m.add_argument("--policies", nargs="+", choices=[x.value for x in Policy])
    m.add_argument("--triggers", nargs="+", choices=TRIGGERS)
    m.add_argument("--horizon", type=int)
    m.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    m.add_argument("--trace", action="store_true")

    r = sub.add_parser("report", help="render a run directory's summary")
    r.add_argument("input", type=Path, help="run directory or summary.csv")
    r.add_argument("--format", choices=("table", "csv"), default="table")

    f = sub.add_parser("fuzzy", help="fuzzy risk evaluation")
    fsub = f.add_subparsers(dest="fuzzy_command", required=True, parser_class=_Parser)
    e = fsub.add_parser("eval", help="risk for one (slope, predicted laxity) pair")
    e.add_argument("acceleration", type=float)
    e.add_argument("predicted", type=float)
    g = e.add_mutually_exclusive_group()
    g.add_argument("--config", type=Path)
    g.add_argument("--bundled", choices=("table1", "table2"))
    return p


# -- helpers -----------------------------------------------------------------

def _load_config(args):
    cfg = cfgio.load(args.config) if args.config else cfgio.bundled(args.bundled)
    if getattr(args, "policy", None):
        cfg = cfg.with_policy(args.policy)
    return cfg


def _output_dir(args) -> Path:
    if args.output is not None:
        return args.output
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write(root: Path, rel: str, text: str, files: list) -> None:
    path = root / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode()
    path.write_bytes(data)
    files.append({"path": rel, "sha256": _sha256(data), "bytes": len(data)})


def _write_manifest(root: Path, files: list, extra: dict) -> None:
    manifest = {**extra, "files": sorted(files, key=lambda f: f["path"])}
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _run_files(result, limit: Optional[int]) -> dict:
    """Per-run CSV artifacts keyed by file name."""
    lim = limit or None
    out = {"tasks.csv": metrics.run_csv(result),
           "laxity.csv": metrics.laxity_csv(result, lim)}
    if result.predictor_ran:
        out["forecasts.csv"] = metrics.forecast_csv(result, lim)
    if result.mode_changes:
        out["mode_changes.csv"] = metrics.mode_change_csv(result)
    if result.transitions:
        out["transitions.csv"] = metrics.transition_csv(result)
    if result.trace is not None:
        out["trace.csv"] = metrics.trace_csv(result)
    return out


def _cell_name(policy: str, scenario: str, seed: int) -> str:
    return f"{policy}_{scenario.replace('+', '-')}_seed{seed}"


# -- analyze -----------------------------------------------------------------

def analyze_rows(cfg) -> tuple[list, list, bool]:
    """Steady-state rows, transition rows and overall feasibility."""
    steady, trans, ok = [], [], True
    for mode in cfg.modes:
        for t in mode.resolved():
            res = rta.steady_state_wcrt(mode, t.id, cfg.blocking.get(t.id, 0))
            feasible = res.converged and res.R <= t.D
            ok &= feasible
            steady.append([mode.name, t.id, t.C, t.T, t.D, t.P,
                           res.R if res.converged else "", "yes" if feasible else "no"])
    pairs = [(a, b) for a in cfg.modes for b in cfg.modes if a is not b]
    for old, new in pairs:
        classes = classify_transition(old, new).classes
        an = rta.analyze_transition(old, new, classes=classes, blocking=cfg.blocking)
        if an.latency is None:
            ok = False
        for tid in sorted(an.classes):
            cls = an.classes[tid]
            o, n = an.old_results.get(tid), an.new_results.get(tid)
            late = ((o is not None and (not o.converged or o.R > old.task(tid).D))
                    or (n is not None and (not n.converged or n.R > new.task(tid).D)))
            trans.append([f"{old.name}->{new.name}", tid, cls.value,
                          "" if o is None else o.R,
                          "" if n is None else n.R,
                          "overrun" if late else "",
                          "" if an.latency is None else an.latency])
    return steady, trans, ok


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    problems = validate_task_set(cfg)
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_USAGE
    steady, trans, ok = analyze_rows(cfg)
    sh = ["mode", "task", "C", "T", "D", "P", "R", "schedulable"]
    th = ["transition", "task", "class", "R_old", "R_new", "note", "latency"]
    if args.csv:
        sys.stdout.write(metrics._csv(sh, steady))
        sys.stdout.write("\n")
        sys.stdout.write(metrics._csv(th, trans))
    else:
        print(_text_table(sh, steady))
        if trans:
            print()
            print(_text_table(th, trans))
        for mode in cfg.modes:
            st = base_period_stats(mode)
            print(f"{mode.name}: utilization {float(st.utilization):.4f}, "
                  f"hyperperiod {st.hyperperiod}")
    if not ok:
        print("infeasible: a mode is unschedulable or a transition does not settle",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _text_table(header, rows) -> str:
    cols = list(zip(*([header] + [[str(x) for x in r] for r in rows])))
    widths = [max(len(x) for x in c) for c in cols]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    for r in rows:
        lines.append("  ".join(str(x).rjust(w) for x, w in zip(r, widths)))
    return "\n".join(lines)


# -- simulate ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    seed = cfg.seed if args.seed is None else args.seed
    try:
        result = sim.run(cfg, seed, args.scenario, args.horizon, args.trace, args.mode)
    except sim.ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    root = _output_dir(args) / _cell_name(result.policy, result.scenario, seed)
    files: list = []
    report = metrics.aggregate([result])
    _write(root, "summary.csv", metrics.summary_csv(report), files)
    for name, text in _run_files(result, args.series_limit).items():
        _write(root, name, text, files)
    _write_manifest(root, files, {"command": "simulate", "config": cfg.name,
                                  "policy": result.policy, "scenario": result.scenario,
                                  "seed": seed, "horizon": result.horizon})
    c = next(iter(report.cells.values()))
    print(f"{cfg.name} {result.policy} {result.scenario} seed={seed}: "
          f"released={c.released} missed={c.missed} ({c.miss_percentage:.2f}%)")
    if result.transitions:
        by_pair: dict = {}
        for tr in result.transitions:
            if tr.latency is not None:
                key = f"{tr.old}->{tr.new}"
                by_pair[key] = max(by_pair.get(key, 0), tr.latency)
        for key, lat in sorted(by_pair.items()):
            print(f"  worst latency {key}: {lat}")
    print(f"output: {root}")
    return EXIT_OK


# -- run-matrix ----------------------------------------------------------------

def _run_cell(job):
    cfg, policy, scenario, seed, horizon, trace = job
    try:
        return job, sim.run(cfg.with_policy(policy), seed, scenario, horizon, trace), None
    except Exception as exc:  # reported per cell
        return job, None, f"{type(exc).__name__}: {exc}"


def matrix_jobs(cfg, policies, triggers, seeds, horizon=None, trace=False) -> list:
    if not seeds:
        raise ValueError("empty seed list")
    return [(cfg, p, t, s, horizon, trace) for p in policies for t in triggers for s in seeds]


def run_matrix(cfg, policies, triggers, seeds, horizon=None, trace=False, jobs=1):
    """Run every (policy, trigger, seed) cell; returns (results, failures)."""
    work = matrix_jobs(cfg, policies, triggers, seeds, horizon, trace)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_run_cell, work))
    else:
        done = [_run_cell(j) for j in work]
    results, failures = [], []
    for job, result, err in done:
        if err is None:
            results.append(result)
        else:
            failures.append({"policy": job[1], "scenario": job[2], "seed": job[3],
                             "error": err})
    return results, failures


def cmd_run_matrix(args) -> int:
    cfg = _load_config(args)
    if not cfg.is_mixed_criticality:
        raise UsageError("run-matrix needs a config with LO and HI criticality modes")
    if args.seeds is not None:
        seeds = list(args.seeds)
        if not seeds:
            raise UsageError("empty seed list")
    else:
        n = cfg.repetitions if args.repetitions is None else args.repetitions
        if n < 1:
            raise UsageError("repetitions must be positive")
        seeds = [cfg.seed + k for k in range(n)]
    policies = args.policies or [cfg.policy.value]
    triggers = args.triggers or list(TRIGGERS)
    results, failures = run_matrix(cfg, policies, triggers, seeds, args.horizon,
                                   args.trace, args.jobs)
    root = _output_dir(args)
    files: list = []
    if results:
        report = metrics.aggregate(results)
        _write(root, "summary.csv", metrics.summary_csv(report), files)
        _write(root, "per_task.csv", metrics.per_task_csv(report), files)
        _write(root, "report.txt", metrics.table(report), files)
        for r in results:
            cell = _cell_name(r.policy, r.scenario, r.seed)
            for name, text in _run_files(r, args.series_limit).items():
                _write(root, f"cells/{cell}/{name}", text, files)
        sys.stdout.write(metrics.table(report))
    _write_manifest(root, files, {"command": "run-matrix", "config": cfg.name,
                                  "policies": policies, "triggers": triggers,
                                  "seeds": seeds, "failures": failures})
    for f in failures:
        print(f"cell failed: {f}", file=sys.stderr)
    print(f"output: {root}")
    return EXIT_RUNTIME if failures else EXIT_OK


# -- report / fuzzy ------------------------------------------------------------

def cmd_report(args) -> int:
    path = args.input / "summary.csv" if args.input.is_dir() else args.input
    text = path.read_text()
    if args.format == "csv":
        sys.stdout.write(text)
        return EXIT_OK
    rows = metrics.read_summary(text)
    sys.stdout.write(metrics.table_from_rows(rows))
    return EXIT_OK


def cmd_fuzzy(args) -> int:
    fz = None
    if args.config or args.bundled:
        fz = (cfgio.load(args.config) if args.config else cfgio.bundled(args.bundled)).fuzzy
    inf = explain(args.acceleration, args.predicted, fz)
    threshold = fz.threshold if fz else 0.5
    print("acceleration: " + ", ".join(f"{k}={v:.4f}" for k, v in inf.acceleration.items()))
    print("prediction:   " + ", ".join(f"{k}={v:.4f}" for k, v in inf.prediction.items()))
    for (a, p), s in inf.firing.items():
        if s > 0:
            print(f"rule {a} & {p}: {s:.4f}")
    print(f"risk {inf.risk:.4f} -> {'request mode change' if decide(inf.risk, threshold) else 'stay'}")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "run-matrix": cmd_run_matrix,
            "report": cmd_report, "fuzzy": cmd_fuzzy}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (cfgio.ConfigError, sim.ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        log.exception("runtime failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
