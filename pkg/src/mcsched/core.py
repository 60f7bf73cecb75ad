"""Task, mode and system-configuration types.

All times are non-negative integers (abstract time units). Priorities follow
the usual table convention: a smaller number is a higher priority.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import reduce
from typing import Optional

from .fuzzy import FuzzyConfig


class Criticality(str, enum.Enum):
    LO = "LO"
    HI = "HI"


class Policy(str, enum.Enum):
    EDF = "EDF"
    FP = "FP"


class TransitionClass(str, enum.Enum):
    """Role of a task across one (old mode, new mode) pair."""

    COMPLETED = "O"  # old mode only, in-flight job runs to completion
    ABORTED = "A"  # old mode only, in-flight job killed at the request
    WHOLLY_NEW = "W"
    CHANGED = "C"
    UNCHANGED = "U"

    @property
    def in_old(self) -> bool:
        return self is not TransitionClass.WHOLLY_NEW

    @property
    def in_new(self) -> bool:
        return self in (TransitionClass.WHOLLY_NEW, TransitionClass.CHANGED,
                        TransitionClass.UNCHANGED)


@dataclass(frozen=True)
class TaskSpec:
    id: int
    period: int
    deadline: int
    wcet_lo: int
    priority_lo: int
    level: Criticality = Criticality.LO
    wcet_hi: Optional[int] = None
    priority_hi: Optional[int] = None
    offset: int = 0

    def wcet(self, crit: Optional[Criticality] = None) -> int:
        if crit is Criticality.HI and self.wcet_hi is not None:
            return self.wcet_hi
        return self.wcet_lo

    def priority(self, crit: Optional[Criticality] = None) -> int:
        if crit is Criticality.HI and self.priority_hi is not None:
            return self.priority_hi
        return self.priority_lo


@dataclass(frozen=True)
class ModeTask:
    """A task with its timing resolved for one particular mode."""

    id: int
    C: int
    T: int
    D: int
    P: int
    offset: int = 0
    level: Criticality = Criticality.LO

    def same_timing(self, other: "ModeTask") -> bool:
        return (self.C, self.T, self.D) == (other.C, other.T, other.D)


@dataclass(frozen=True)
class ModeSpec:
    """A fixed task set.

    ``criticality`` is ``None`` for plain operating modes (no LO/HI labels);
    in a HI mode tasks run with their HI budget and HI priority.
    """

    name: str
    tasks: tuple[TaskSpec, ...]
    criticality: Optional[Criticality] = None

    def resolved(self) -> list[ModeTask]:
        return [
            ModeTask(t.id, t.wcet(self.criticality), t.period, t.deadline,
                     t.priority(self.criticality), t.offset, t.level)
            for t in self.tasks
        ]

    def task(self, task_id: int) -> ModeTask:
        for mt in self.resolved():
            if mt.id == task_id:
                return mt
        raise KeyError(f"task {task_id} not active in mode {self.name}")

    @property
    def ids(self) -> list[int]:
        return [t.id for t in self.tasks]


@dataclass(frozen=True)
class FaultModel:
    """Processor-fault arrival process.

    Means and standard deviations are expressed in prediction ticks when
    ``in_ticks`` is true (one tick = gcd of the periods), otherwise in time
    units.
    """

    distribution: str = "exponential"  # or "normal"
    mean: float = 10.0
    stddev: float = 7.0
    warmup: int = 2000
    active: bool = True
    inflation: float = 1.5
    in_ticks: bool = True


@dataclass(frozen=True)
class PredictorParams:
    q: float = 1e-4
    r: float = 1e-2
    horizons: tuple[int, ...] = (1, 3, 5)
    # forecasts consulted by the proactive decision; the lowest one is used
    decision_horizons: tuple[int, ...] = (1, 3, 5)


@dataclass(frozen=True)
class SystemConfig:
    name: str
    modes: tuple[ModeSpec, ...]
    policy: Policy = Policy.FP
    horizon: int = 400
    warmup: int = 0
    repetitions: int = 1
    seed: int = 0
    fault: FaultModel = field(default_factory=FaultModel)
    predictor: PredictorParams = field(default_factory=PredictorParams)
    fuzzy: FuzzyConfig = field(default_factory=FuzzyConfig)
    window_multiplier: int = 20
    blocking: dict = field(default_factory=dict)
    run_to_completion: bool = False
    recovery_hyperperiods: int = 2
    confirmation_windows: int = 2
    # mean gap between randomly arriving mode-change requests (validation runs)
    mcr_mean: Optional[float] = None

    def mode(self, name: str) -> ModeSpec:
        for m in self.modes:
            if m.name == name:
                return m
        raise KeyError(f"no mode named {name!r}")

    def criticality_mode(self, crit: Criticality) -> ModeSpec:
        for m in self.modes:
            if m.criticality is crit:
                return m
        raise KeyError(f"no {crit.value} criticality mode")

    @property
    def is_mixed_criticality(self) -> bool:
        crits = {m.criticality for m in self.modes}
        return Criticality.LO in crits and Criticality.HI in crits

    def with_policy(self, policy: Policy) -> "SystemConfig":
        return replace(self, policy=Policy(policy))


@dataclass(frozen=True)
class Violation:
    task: Optional[int]
    field: str
    message: str
    mode: Optional[str] = None

    def __str__(self) -> str:
        where = f"mode {self.mode}" if self.mode else "config"
        if self.task is not None:
            where += f", task {self.task}"
        return f"{where}: {self.field}: {self.message}"


def _check_task(t: TaskSpec, mode: Optional[str]) -> list[Violation]:
    out = []
    budgets = [("wcet_lo", t.wcet_lo)]
    if t.level is Criticality.HI:
        if t.wcet_hi is None:
            out.append(Violation(t.id, "wcet_hi", "HI task must define C(HI)", mode))
        else:
            budgets.append(("wcet_hi", t.wcet_hi))
    elif t.wcet_hi is not None:
        out.append(Violation(t.id, "wcet_hi", "LO task must not define C(HI)", mode))
    for name, c in budgets:
        if c <= 0:
            out.append(Violation(t.id, name, "C > 0", mode))
        if c > t.deadline:
            out.append(Violation(t.id, name, "C ≤ D", mode))
    if t.deadline > t.period:
        out.append(Violation(t.id, "deadline", "D ≤ T", mode))
    if t.period <= 0:
        out.append(Violation(t.id, "period", "T > 0", mode))
    if t.offset < 0:
        out.append(Violation(t.id, "offset", "O ≥ 0", mode))
    if t.priority_lo <= 0 or (t.priority_hi is not None and t.priority_hi <= 0):
        out.append(Violation(t.id, "priority", "priorities are positive", mode))
    return out


def validate_task_set(config: SystemConfig) -> list[Violation]:
    """Return every violated constraint; an empty list means the config is usable."""
    out: list[Violation] = []
    names = [m.name for m in config.modes]
    if len(set(names)) != len(names):
        out.append(Violation(None, "modes", "mode names are unique"))
    for mode in config.modes:
        ids = mode.ids
        if len(set(ids)) != len(ids):
            out.append(Violation(None, "tasks", "task ids are unique", mode.name))
        for t in mode.tasks:
            out.extend(_check_task(t, mode.name))
            if mode.criticality is Criticality.HI and t.level is not Criticality.HI:
                out.append(Violation(t.id, "level", "only HI tasks run in a HI mode",
                                     mode.name))
            if mode.criticality is Criticality.HI and t.priority_hi is None:
                out.append(Violation(t.id, "priority_hi", "HI mode needs P(HI)",
                                     mode.name))
        prios = [mt.P for mt in mode.resolved()]
        if len(set(prios)) != len(prios):
            out.append(Violation(None, "priority", "unique priorities", mode.name))
    if config.horizon <= config.warmup or config.warmup < 0:
        out.append(Violation(None, "horizon", "horizon > warmup ≥ 0"))
    if config.repetitions < 1:
        out.append(Violation(None, "repetitions", "repetitions ≥ 1"))
    if config.window_multiplier < 1:
        out.append(Violation(None, "window_multiplier", "window multiplier ≥ 1"))
    return sorted(out, key=lambda v: (v.mode or "", -1 if v.task is None else v.task,
                                      v.field, v.message))


@dataclass(frozen=True)
class PeriodStats:
    gcd: int
    hyperperiod: int
    utilization: Fraction

    @property
    def utilization_float(self) -> float:
        return float(self.utilization)


def base_period_stats(mode: ModeSpec) -> PeriodStats:
    tasks = mode.resolved()
    if not tasks:
        raise ValueError("no tasks")
    periods = [t.T for t in tasks]
    return PeriodStats(
        gcd=reduce(math.gcd, periods),
        hyperperiod=reduce(math.lcm, periods),
        utilization=sum((Fraction(t.C, t.T) for t in tasks), Fraction(0)),
    )


def system_period_stats(config: SystemConfig) -> PeriodStats:
    """Period statistics over every task of every mode (utilization of the first)."""
    periods = sorted({t.period for m in config.modes for t in m.tasks})
    first = base_period_stats(config.modes[0])
    return PeriodStats(reduce(math.gcd, periods), reduce(math.lcm, periods),
                       first.utilization)
