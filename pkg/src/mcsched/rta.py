"""Worst-case response-time analysis for fixed-priority task sets.

Covers the steady state (classical time-demand recurrence) and the two
transient recurrences used across a mode change: one for old-mode tasks
caught by the request and one for the first job of a new-mode task.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import ModeSpec, ModeTask, TransitionClass

MAX_ITERATIONS = 1_000_000
TRANSITION_THRESHOLD_FACTOR = 10


class InfeasibleError(Exception):
    """Raised when a latency is requested but some task cannot be bounded."""

    def __init__(self, task, message):
        super().__init__(f"task {task}: {message}")
        self.task = task


def ceil_div(num: int, den: int) -> int:
    return -(-num // den)


def ceil0(num: int, den: int) -> int:
    """Ceiling of ``num/den`` clamped to zero for non-positive arguments."""
    return ceil_div(num, den) if num > 0 else 0


@dataclass(frozen=True)
class Interferer:
    id: int
    C: int
    T: int
    offset: int = 0  # Y for new-mode tasks, Z for unchanged tasks


@dataclass
class RecurrenceContext:
    task: ModeTask
    hp_old: list[Interferer] = field(default_factory=list)
    hp_aborted: list[Interferer] = field(default_factory=list)
    hp_new: list[Interferer] = field(default_factory=list)
    hp_unchanged: list[Interferer] = field(default_factory=list)
    x: Optional[int] = None  # phasing: request time measured from the task's release
    Y: Optional[int] = None  # own first-release offset (new-mode tasks)
    blocking: int = 0
    steady_R: Optional[int] = None  # steady-state bound in the new mode, if known
    # iteration stops once w exceeds this; None means the task's deadline
    threshold: Optional[int] = None

    def limit(self, base: int = 0) -> int:
        return base + (self.task.D if self.threshold is None else self.threshold)


@dataclass
class RtaResult:
    task: int
    R: int
    converged: bool
    iterations: int
    x_star: Optional[int] = None
    iterates: list[int] = field(default_factory=list)
    # time from the request to completion of the analysed job (mode changes only)
    completion: Optional[int] = None
    fallback: bool = False
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.converged and not self.message


def _fixpoint(demand, w0: int, limit: int):
    """Iterate ``w = demand(w)`` from ``w0``; stop on fixpoint or when ``w > limit``."""
    w, iterates = w0, [w0]
    for n in range(1, MAX_ITERATIONS + 1):
        nxt = demand(w)
        iterates.append(nxt)
        if nxt == w:
            return w, True, n, iterates
        w = nxt
        if w > limit:
            return w, False, n, iterates
    return w, False, MAX_ITERATIONS, iterates


def steady_state_wcrt(mode: ModeSpec, task_id: int, blocking: int = 0) -> RtaResult:
    tasks = mode.resolved()
    ti = next(t for t in tasks if t.id == task_id)
    hp = [t for t in tasks if t.P < ti.P]

    def demand(w):
        return ti.C + blocking + sum(ceil_div(w, t.T) * t.C for t in hp)

    w, ok, n, its = _fixpoint(demand, 0, ti.D)
    return RtaResult(ti.id, w, ok, n, iterates=its,
                     message="" if ok else "infeasible")


def old_mode_demand(ctx: RecurrenceContext, x: int, w: int) -> int:
    """Right-hand side of the old-mode recurrence at phasing ``x``.

    Jobs released before the request are counted only up to ``min(x, w)``:
    once the window closes before the request, nothing after it interferes.
    """
    m = min(x, w)
    total = ctx.task.C + ctx.blocking
    for j in ctx.hp_old:
        total += ceil_div(m, j.T) * j.C
    for j in ctx.hp_aborted:
        k = m // j.T
        total += k * j.C + min(m - k * j.T, j.C)
    for j in ctx.hp_new:
        total += ceil0(w - x - j.offset, j.T) * j.C
    for j in ctx.hp_unchanged:
        k = ceil_div(m, j.T)
        total += k * j.C + ceil0(w - k * j.T - j.offset, j.T) * j.C
    return total


def _old_mode_at(ctx: RecurrenceContext, x: int) -> RtaResult:
    w, ok, n, its = _fixpoint(lambda w: old_mode_demand(ctx, x, w), 0, ctx.limit())
    late = not ok or w > ctx.task.D
    return RtaResult(ctx.task.id, w, ok, n, x_star=x, iterates=its,
                     completion=w - x,
                     message="infeasible during mode change" if late else "")


def old_mode_wcrt(ctx: RecurrenceContext) -> RtaResult:
    """Response time of an old-mode job overtaken by a mode-change request.

    With ``ctx.x`` unset every integer phasing in ``[0, T)`` is tried and the
    worst one kept; ``completion`` then holds the latest finish measured from
    the request.
    """
    if ctx.x is not None:
        return _old_mode_at(ctx, ctx.x)
    worst, latest = None, 0
    for x in range(ctx.task.T):
        res = _old_mode_at(ctx, x)
        if not res.converged:
            return res
        latest = max(latest, res.R - x)
        if worst is None or res.R > worst.R:
            worst = res
    worst.completion = latest
    return worst


def new_mode_hp_demand(ctx: RecurrenceContext, w: int) -> int:
    total = ctx.blocking
    for j in ctx.hp_old:
        total += j.C
    for j in ctx.hp_new:
        total += ceil0(w - j.offset, j.T) * j.C
    for j in ctx.hp_unchanged:
        total += j.C + ceil0(w - j.T - j.offset, j.T) * j.C
    return total


def new_mode_wcrt(ctx: RecurrenceContext) -> RtaResult:
    """Response time of the first job of a new-mode task released ``Y`` after the request.

    ``w`` is measured from the request, so the response is ``w - Y``. When the
    higher-priority backlog drains before ``Y`` the processor idles first and
    the steady-state bound applies instead (``fallback``).
    """
    if ctx.Y is None:
        raise ValueError(f"task {ctx.task.id}: offset Y is required")
    ti, Y = ctx.task, ctx.Y
    limit = ctx.limit(Y)
    w_hp, ok, n_hp, its = _fixpoint(lambda w: new_mode_hp_demand(ctx, w), 0, limit)
    if ok and w_hp <= Y:
        R = ctx.steady_R if ctx.steady_R is not None else ti.C
        return RtaResult(ti.id, R, True, n_hp, iterates=its, completion=Y + R,
                         fallback=True,
                         message="" if R <= ti.D else "infeasible in steady state")
    if ok:
        w, ok, n, more = _fixpoint(lambda w: new_mode_hp_demand(ctx, w) + ti.C,
                                   w_hp, limit)
        its, n_hp = its + more[1:], n_hp + n
    else:
        w = w_hp
    R = w - Y
    if ctx.steady_R is not None:
        R = max(R, ctx.steady_R)
    late = not ok or R > ti.D
    return RtaResult(ti.id, R, ok, n_hp, iterates=its, completion=w,
                     message="infeasible during mode change" if late else "")


# -- transitions -------------------------------------------------------------

def classify(old: ModeSpec, new: ModeSpec, abort: bool = False) -> dict[int, TransitionClass]:
    """Transition class per task id; timing (C, T, D) decides changed vs unchanged."""
    o = {t.id: t for t in old.resolved()}
    n = {t.id: t for t in new.resolved()}
    out = {}
    for tid in sorted(set(o) | set(n)):
        if tid in o and tid in n:
            out[tid] = (TransitionClass.UNCHANGED if o[tid].same_timing(n[tid])
                        else TransitionClass.CHANGED)
        elif tid in o:
            out[tid] = TransitionClass.ABORTED if abort else TransitionClass.COMPLETED
        else:
            out[tid] = TransitionClass.WHOLLY_NEW
    return out


@dataclass(frozen=True)
class TransitionJobKey:
    """Identifies one side of a task across a transition ('old' or 'new')."""

    id: int
    side: str


def transition_priority(task: ModeTask, side: str) -> tuple:
    """Priority key used while old- and new-mode jobs coexist (smaller runs first).

    Deadline-monotonic across both modes, consistent with each mode's own
    ordering; at equal deadlines old-mode work goes first.
    """
    return (task.D, 0 if side == "old" else 1, task.P, task.id)


def _offsets(new: ModeSpec, offsets: Optional[dict]) -> dict[int, int]:
    if offsets is not None:
        return dict(offsets)
    return {t.id: t.offset for t in new.resolved()}


def _contexts(old: ModeSpec, new: ModeSpec, classes, offsets, blocking):
    o = {t.id: t for t in old.resolved()}
    n = {t.id: t for t in new.resolved()}
    old_side, new_side = [], []
    for tid, cls in classes.items():
        if cls in (TransitionClass.COMPLETED, TransitionClass.ABORTED,
                   TransitionClass.CHANGED):
            old_side.append((o[tid], cls))
        if cls in (TransitionClass.WHOLLY_NEW, TransitionClass.CHANGED):
            new_side.append((n[tid], cls))
    unchanged = [n[tid] for tid, c in classes.items() if c is TransitionClass.UNCHANGED]

    # let overrunning jobs still reach a fixpoint so the latency stays defined
    threshold = TRANSITION_THRESHOLD_FACTOR * max(t.D for t in [*o.values(), *n.values()])

    def build(target: ModeTask, side: str) -> RecurrenceContext:
        key = transition_priority(target, side)
        ctx = RecurrenceContext(target, blocking=blocking.get(target.id, 0),
                                threshold=threshold)
        for t, cls in old_side:
            if (t.id, "old") != (target.id, side) and transition_priority(t, "old") < key:
                if cls is TransitionClass.ABORTED:
                    ctx.hp_aborted.append(Interferer(t.id, t.C, t.T))
                else:
                    ctx.hp_old.append(Interferer(t.id, t.C, t.T))
        for t, _ in new_side:
            if (t.id, "new") != (target.id, side) and transition_priority(t, "new") < key:
                ctx.hp_new.append(Interferer(t.id, t.C, t.T, offsets.get(t.id, 0)))
        for t in unchanged:
            if t.id != target.id and transition_priority(t, "new") < key:
                ctx.hp_unchanged.append(Interferer(t.id, t.C, t.T, offsets.get(t.id, 0)))
        return ctx

    return old_side, new_side, unchanged, build


@dataclass
class TransitionAnalysis:
    old: str
    new: str
    classes: dict
    old_results: dict  # task id -> RtaResult for the old-mode side
    new_results: dict  # task id -> RtaResult for new-side first jobs and unchanged tasks
    latency: Optional[int]
    critical_task: Optional[int] = None


def analyze_transition(old: ModeSpec, new: ModeSpec, offsets: Optional[dict] = None,
                       classes: Optional[dict] = None,
                       blocking: Optional[dict] = None) -> TransitionAnalysis:
    """Mode-change response times for every task touched by ``old -> new``."""
    blocking = blocking or {}
    classes = classes or classify(old, new)
    offsets = _offsets(new, offsets)
    old_side, new_side, unchanged, build = _contexts(old, new, classes, offsets,
                                                     blocking)
    steady_new = {t.id: steady_state_wcrt(new, t.id, blocking.get(t.id, 0))
                  for t in new.resolved()}
    steady_old = {t.id: steady_state_wcrt(old, t.id, blocking.get(t.id, 0))
                  for t in old.resolved()}

    old_results = {}
    for t, cls in old_side:
        res = old_mode_wcrt(build(t, "old"))
        if res.converged:
            res.R = max(res.R, steady_old[t.id].R)
        old_results[t.id] = res
    for t in unchanged:
        # an unchanged job caught by the request behaves like an old-mode job
        res = old_mode_wcrt(build(t, "new"))
        if res.converged:
            res.R = max(res.R, steady_old[t.id].R, steady_new[t.id].R)
        old_results.setdefault(t.id, res)

    new_results = {}
    for t, cls in new_side:
        ctx = build(t, "new")
        ctx.Y = offsets.get(t.id, 0)
        ctx.steady_R = steady_new[t.id].R if steady_new[t.id].converged else None
        new_results[t.id] = new_mode_wcrt(ctx)

    return TransitionAnalysis(old.name, new.name, classes, old_results, new_results,
                              *_latency(old_results, new_results, classes))


def _latency(old_results, new_results, classes):
    """Latest finish, measured from the request, of any transition obligation.

    Obligations are every job pending at the request (unchanged tasks
    included) and the first job of every wholly-new or changed task.
    """
    worst, who = 0, None
    for tid, res in old_results.items():
        if not res.converged:
            return None, tid
        if res.completion > worst:
            worst, who = res.completion, tid
    for tid, res in new_results.items():
        if not res.converged:
            return None, tid
        if res.completion > worst:
            worst, who = res.completion, tid
    return worst, who


def mode_change_latency(old: ModeSpec, new: ModeSpec, offsets: Optional[dict] = None,
                        classes: Optional[dict] = None,
                        blocking: Optional[dict] = None) -> int:
    res = analyze_transition(old, new, offsets, classes, blocking)
    if res.latency is None:
        raise InfeasibleError(res.critical_task, "infeasible during mode change")
    return res.latency
