"""YAML configuration files.

Schema (all keys optional unless noted)::

    name: table-II
    policy: EDF | FP
    horizon: 420000          # time units; releases at t == horizon are included
    warmup: 2000
    repetitions: 10
    seed: 1
    window_multiplier: 20
    run_to_completion: false
    recovery_hyperperiods: 2
    confirmation_windows: 2
    mcr_mean: 2000           # random mode-change requests (validation runs only)
    blocking: {6: 0}
    tasks:                   # optional catalogue, referenced by id from modes
      - {id: 1, level: HI, P_lo: 1, P_hi: 1, C_lo: 10, C_hi: 10, T: 100, D: 100}
    modes:                   # required
      - name: LO
        criticality: LO      # LO | HI | omitted
        tasks: [1, 2, 3]     # ids, or inline task mappings
    fault: {distribution: exponential, mean: 10, stddev: 7, warmup: 2000,
            active: true, inflation: 1.5, in_ticks: true}
    predictor: {q: 1.0e-4, r: 1.0e-2, horizons: [1, 3, 5], decision_horizons: [1, 3, 5]}
    fuzzy:
      threshold: 0.5
      acceleration: {Fast: [-1, -1, -0.6, -0.4], Medium: [-0.7, -0.4, -0.1], ...}
      prediction: {...}
      output: {...}
      rules: {Fast: {Ultra: High, Short: High, Normal: Low}, ...}

Inline tasks accept ``C``/``P`` as shorthands for ``C_lo``/``P_lo`` and ``O``
for the offset; ``D`` defaults to ``T``.
"""

from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .core import (Criticality, FaultModel, ModeSpec, Policy, PredictorParams,
                   SystemConfig, TaskSpec)
from .fuzzy import FuzzyConfig, MembershipFunction


class ConfigError(ValueError):
    pass


def _task(d: dict) -> TaskSpec:
    try:
        T = int(d["T"])
        return TaskSpec(
            id=int(d["id"]),
            period=T,
            deadline=int(d.get("D", T)),
            wcet_lo=int(d.get("C_lo", d.get("C"))),
            priority_lo=int(d.get("P_lo", d.get("P"))),
            level=Criticality(d.get("level", "LO")),
            wcet_hi=None if d.get("C_hi") is None else int(d["C_hi"]),
            priority_hi=None if d.get("P_hi") is None else int(d["P_hi"]),
            offset=int(d.get("O", d.get("offset", 0))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad task entry {d!r}: {exc}") from None


def _task_dict(t: TaskSpec) -> dict:
    d = {"id": t.id, "level": t.level.value, "P_lo": t.priority_lo}
    if t.priority_hi is not None:
        d["P_hi"] = t.priority_hi
    d["C_lo"] = t.wcet_lo
    if t.wcet_hi is not None:
        d["C_hi"] = t.wcet_hi
    d.update(T=t.period, D=t.deadline, O=t.offset)
    return d


def _mfs(spec: dict, default) -> tuple:
    if spec is None:
        return default
    out = []
    for label, params in spec.items():
        if len(params) == 3:
            out.append(MembershipFunction.triangle(label, *params))
        elif len(params) == 4:
            out.append(MembershipFunction.trapezoid(label, *params))
        else:
            raise ConfigError(f"membership {label!r} needs 3 or 4 parameters")
    return tuple(out)


def _fuzzy(d: dict | None) -> FuzzyConfig:
    d = d or {}
    base = FuzzyConfig()
    rules = base.rules
    if "rules" in d:
        rules = {(a, p): out for a, row in d["rules"].items() for p, out in row.items()}
    return FuzzyConfig(
        acceleration=_mfs(d.get("acceleration"), base.acceleration),
        prediction=_mfs(d.get("prediction"), base.prediction),
        output=_mfs(d.get("output"), base.output),
        rules=rules,
        threshold=float(d.get("threshold", base.threshold)),
    )


def _fuzzy_dict(f: FuzzyConfig) -> dict:
    rows: dict[str, dict] = {}
    for (a, p), out in f.rules.items():
        rows.setdefault(a, {})[p] = out
    return {
        "threshold": f.threshold,
        "acceleration": {m.label: m.params for m in f.acceleration},
        "prediction": {m.label: m.params for m in f.prediction},
        "output": {m.label: m.params for m in f.output},
        "rules": rows,
    }


def from_dict(d: dict) -> SystemConfig:
    catalogue = {t.id: t for t in (_task(x) for x in d.get("tasks", []))}
    if "modes" not in d or not d["modes"]:
        raise ConfigError("config needs at least one mode")
    modes = []
    for m in d["modes"]:
        tasks = []
        for entry in m.get("tasks", []):
            if isinstance(entry, dict):
                tasks.append(_task(entry))
            elif entry in catalogue:
                tasks.append(catalogue[entry])
            else:
                raise ConfigError(f"mode {m.get('name')!r} references unknown task {entry}")
        crit = m.get("criticality")
        modes.append(ModeSpec(str(m["name"]), tuple(tasks),
                              None if crit is None else Criticality(crit)))

    fault = FaultModel(**{**dataclasses.asdict(FaultModel()), **d.get("fault", {})})
    pred = d.get("predictor", {})
    predictor = PredictorParams(
        q=float(pred.get("q", PredictorParams.q)),
        r=float(pred.get("r", PredictorParams.r)),
        horizons=tuple(pred.get("horizons", PredictorParams.horizons)),
        decision_horizons=tuple(pred.get("decision_horizons",
                                         PredictorParams.decision_horizons)),
    )
    try:
        return SystemConfig(
            name=str(d.get("name", "unnamed")),
            modes=tuple(modes),
            policy=Policy(d.get("policy", "FP")),
            horizon=int(d.get("horizon", 400)),
            warmup=int(d.get("warmup", 0)),
            repetitions=int(d.get("repetitions", 1)),
            seed=int(d.get("seed", 0)),
            fault=fault,
            predictor=predictor,
            fuzzy=_fuzzy(d.get("fuzzy")),
            window_multiplier=int(d.get("window_multiplier", 20)),
            blocking={int(k): int(v) for k, v in (d.get("blocking") or {}).items()},
            run_to_completion=bool(d.get("run_to_completion", False)),
            recovery_hyperperiods=int(d.get("recovery_hyperperiods", 2)),
            confirmation_windows=int(d.get("confirmation_windows", 2)),
            mcr_mean=None if d.get("mcr_mean") is None else float(d["mcr_mean"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def to_dict(cfg: SystemConfig) -> dict[str, Any]:
    return {
        "name": cfg.name,
        "policy": cfg.policy.value,
        "horizon": cfg.horizon,
        "warmup": cfg.warmup,
        "repetitions": cfg.repetitions,
        "seed": cfg.seed,
        "window_multiplier": cfg.window_multiplier,
        "run_to_completion": cfg.run_to_completion,
        "recovery_hyperperiods": cfg.recovery_hyperperiods,
        "confirmation_windows": cfg.confirmation_windows,
        "mcr_mean": cfg.mcr_mean,
        "blocking": dict(cfg.blocking),
        "modes": [
            {"name": m.name,
             **({"criticality": m.criticality.value} if m.criticality else {}),
             "tasks": [_task_dict(t) for t in m.tasks]}
            for m in cfg.modes
        ],
        "fault": dataclasses.asdict(cfg.fault),
        "predictor": {"q": cfg.predictor.q, "r": cfg.predictor.r,
                      "horizons": list(cfg.predictor.horizons),
                      "decision_horizons": list(cfg.predictor.decision_horizons)},
        "fuzzy": _fuzzy_dict(cfg.fuzzy),
    }


def loads(text: str) -> SystemConfig:
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return from_dict(data)


def dumps(cfg: SystemConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, allow_unicode=True)


def load(path) -> SystemConfig:
    return loads(Path(path).read_text())


def save(cfg: SystemConfig, path) -> None:
    Path(path).write_text(dumps(cfg))


def bundled(name: str) -> SystemConfig:
    """Load one of the shipped configs: ``"table1"`` or ``"table2"``."""
    text = resources.files("mcsched").joinpath("configs", f"{name}.yaml").read_text()
    return loads(text)
