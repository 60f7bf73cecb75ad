"""Discrete-event simulation of a preemptive uniprocessor.

One engine serves two kinds of runs:

* plain multi-mode task sets (``scenario="steady"`` or ``"mode-change"``),
  where mode-change requests arrive at random and the transition follows the
  per-task classes and offsets of the target mode;
* LO/HI criticality task sets (``"mono"``, ``"reactive"``, ``"fuzzy"``,
  ``"fuzzy+predictor"``), with injected faults, laxity monitoring, the
  predictor and the fuzzy risk decision driving the mode manager.

Events at the same instant are handled in the order fault, control (mode
change, timers), release, deadline, prediction tick. Job completions are
settled while time advances, so a job finishing exactly at ``t`` is complete
before anything else at ``t`` happens.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .core import (Criticality, ModeSpec, ModeTask, Policy, SystemConfig,
                   TransitionClass, system_period_stats, validate_task_set)
from .fuzzy import infer
from .modemgr import (CriticalityManager, GateState, Trigger, classify_transition,
                      fault_gaps, rng_streams)
from .observe import LaxityWindow, laxity, tick_slope
from .predict import Predictor
from .rta import transition_priority

FAULT, CONTROL, RELEASE, DEADLINE, TICK = range(5)

PLAIN_SCENARIOS = ("steady", "mode-change")
CRITICALITY_SCENARIOS = tuple(t.value for t in Trigger)


class ConfigurationError(ValueError):
    pass


@dataclass(eq=False)
class Job:
    task: int
    mode: str
    release: int
    deadline: int  # absolute
    demand: int
    remaining: int
    mt: Optional[ModeTask] = None
    side: str = "new"
    seq: int = 0
    priority: object = 0
    start: Optional[int] = None
    completion: Optional[int] = None
    missed: bool = False
    aborted: bool = False
    discarded: bool = False
    tag: Optional[int] = None  # index of the transition the job took part in

    @property
    def level(self):
        return self.mt.level if self.mt is not None else Criticality.LO

    @property
    def done(self) -> bool:
        return self.completion is not None or self.aborted or self.discarded


def pick_next(ready, policy: Policy) -> Optional[Job]:
    """Job to run: earliest absolute deadline (EDF) or smallest priority value (FP).

    Ties go to the lower task id, then the earlier release.
    """
    if not ready:
        return None
    if Policy(policy) is Policy.EDF:
        return min(ready, key=lambda j: (j.deadline, j.task, j.release))
    return min(ready, key=lambda j: (j.priority, j.task, j.release))


@dataclass
class ModeChangeRecord:
    kind: str  # trigger kind, or "false-alarm"
    trigger_time: Optional[int]
    request_time: Optional[int]
    commit_time: Optional[int]
    aborted: int = 0
    aborted_started: int = 0
    drained: int = 0

    @property
    def latency(self) -> Optional[int]:
        if self.commit_time is None or self.request_time is None:
            return None
        return self.commit_time - self.request_time


@dataclass
class TransitionRecord:
    old: str
    new: str
    request_time: int
    start_time: int
    complete_time: Optional[int] = None

    @property
    def latency(self) -> Optional[int]:
        if self.complete_time is None:
            return None
        return self.complete_time - self.start_time


@dataclass
class RunResult:
    seed: int
    scenario: str
    policy: str
    horizon: int
    released: dict = field(default_factory=dict)
    completed: dict = field(default_factory=dict)
    missed: dict = field(default_factory=dict)
    aborted: dict = field(default_factory=dict)
    aborted_started: dict = field(default_factory=dict)
    discarded: dict = field(default_factory=dict)
    suppressed: dict = field(default_factory=dict)
    in_flight: dict = field(default_factory=dict)
    busy: int = 0
    idle: int = 0
    last_activity: int = 0  # last instant a job completed, missed or was aborted
    hi_time: int = 0
    max_response: dict = field(default_factory=dict)
    laxity: list = field(default_factory=list)  # (time, worst, slope, task)
    forecasts: list = field(default_factory=list)
    predictor_ran: bool = False
    mode_changes: list = field(default_factory=list)
    transitions: list = field(default_factory=list)
    transition_responses: dict = field(default_factory=dict)
    anticipation: dict = field(default_factory=dict)  # variant -> [delays]
    triggers: dict = field(default_factory=dict)  # variant -> rising edges
    faults: list = field(default_factory=list)
    gate_log: list = field(default_factory=list)
    trace: Optional[list] = None

    @property
    def total_released(self) -> int:
        return sum(self.released.values())

    @property
    def total_completed(self) -> int:
        return sum(self.completed.values())

    @property
    def total_missed(self) -> int:
        return sum(self.missed.values())

    @property
    def total_aborted(self) -> int:
        return sum(self.aborted.values())

    @property
    def busy_fraction(self) -> float:
        return self.busy / self.horizon if self.horizon else 0.0


class Simulator:
    def __init__(self, config: SystemConfig, seed: Optional[int] = None,
                 scenario: Optional[str] = None, horizon: Optional[int] = None,
                 trace: bool = False, mode: Optional[str] = None):
        problems = validate_task_set(config)
        if problems:
            raise ConfigurationError("; ".join(str(p) for p in problems))
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.policy = Policy(config.policy)
        self.horizon = config.horizon if horizon is None else horizon
        self.mixed = config.is_mixed_criticality
        if scenario is None:
            scenario = "mono" if self.mixed else "steady"
        allowed = CRITICALITY_SCENARIOS if self.mixed else PLAIN_SCENARIOS
        if scenario not in allowed:
            raise ConfigurationError(f"scenario {scenario!r} not one of {allowed}")
        if scenario == "mode-change" and (len(config.modes) < 2 or not config.mcr_mean):
            raise ConfigurationError("mode-change runs need two modes and mcr_mean")
        self.scenario = scenario

        self.now = 0
        self._heap: list = []
        self._seq = 0
        self._job_seq = 0
        self.ready: list[Job] = []
        self.rng = rng_streams(self.seed)
        self.stats = system_period_stats(config)
        self.tick = self.stats.gcd
        self.window_width = config.window_multiplier * self.tick

        self.modes = {m.name: m for m in config.modes}
        self.resolved = {m.name: {t.id: t for t in m.resolved()} for m in config.modes}
        if self.mixed:
            self.mode = config.criticality_mode(Criticality.LO).name
        else:
            self.mode = mode or config.modes[0].name

        all_ids = sorted({t.id for m in config.modes for t in m.tasks})
        r = RunResult(self.seed, scenario, self.policy.value, self.horizon)
        for name in ("released", "completed", "missed", "aborted", "aborted_started",
                     "discarded", "suppressed", "in_flight"):
            setattr(r, name, {tid: 0 for tid in all_ids})
        r.trace = [] if trace else None
        self.result = r

        # release streams: task id -> [generation, ModeTask, side, next release]
        self.streams: dict[int, list] = {}
        self.last_fault: Optional[int] = None
        self.window = LaxityWindow(self.window_width)
        self.prev_sample = None
        self.manager: Optional[CriticalityManager] = None
        self.predictor: Optional[Predictor] = None
        self.transition: Optional[dict] = None
        self.queued_requests = 0
        self._fault_gen = 0
        self._fault_gaps = None
        self._pending_triggers: dict[str, deque] = {}
        self._last_decision: dict[str, bool] = {}
        self._hi_entered: Optional[int] = None
        self._current_change: Optional[ModeChangeRecord] = None

    # -- event plumbing ------------------------------------------------------

    def _push(self, time: int, kind: int, payload=None) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (time, kind, self._seq, payload))

    def _trace(self, event: str, task=None, job=None, detail="") -> None:
        if self.result.trace is not None:
            self.result.trace.append((self.now, event, task, job, detail))

    def _start_stream(self, mt: ModeTask, first: int, side: str) -> None:
        gen = self.streams[mt.id][0] + 1 if mt.id in self.streams else 0
        self.streams[mt.id] = [gen, mt, side, first]
        self._push(first, RELEASE, (mt.id, gen))

    def _stop_stream(self, tid: int) -> None:
        if tid in self.streams:
            self.streams[tid][0] += 1
            self.streams[tid][3] = None

    # -- priorities ----------------------------------------------------------

    def _priority(self, job: Job):
        if self.transition is not None:
            return transition_priority(job.mt, job.side)
        return job.mt.P

    def _reprioritize(self) -> None:
        for j in self.ready:
            j.priority = self._priority(j)

    # -- execution -----------------------------------------------------------

    def _advance(self, until: int) -> None:
        r = self.result
        while self.now < until:
            job = pick_next(self.ready, self.policy)
            if job is None:
                r.idle += until - self.now
                self.now = until
                return
            if job.start is None:
                job.start = self.now
            run = min(job.remaining, until - self.now)
            job.remaining -= run
            r.busy += run
            self.now += run
            if job.remaining == 0:
                self._complete(job)

    def _complete(self, job: Job) -> None:
        r = self.result
        job.completion = self.now
        r.last_activity = self.now
        self.ready.remove(job)
        resp = self.now - job.release
        r.completed[job.task] += 1
        if resp > r.max_response.get(job.task, -1):
            r.max_response[job.task] = resp
        self.window.add(self.now, laxity(job.mt.D, resp), job.task)
        self._trace("complete", job.task, job.seq, f"response={resp}")
        if job.tag is not None:
            key = (job.task, job.side)
            table = r.transition_responses.setdefault(self._tag_key(job.tag), {})
            table[key] = max(table.get(key, 0), resp)
        self._after_job_left(job)

    def _after_job_left(self, job: Job) -> None:
        if self.transition is not None:
            self._discharge(job)
        if self.manager is not None and job.level is Criticality.LO:
            if self.manager.gate is GateState.DRAINING and self._current_change:
                if job.completion is not None:
                    self._current_change.drained += 1
            self._check_drained()

    # -- releases and deadlines ----------------------------------------------

    def _on_release(self, payload) -> None:
        tid, gen = payload
        stream = self.streams.get(tid)
        if stream is None or stream[0] != gen:
            return
        _, mt, side, _ = stream
        nxt = self.now + mt.T
        stream[3] = nxt
        self._push(nxt, RELEASE, (tid, gen))

        if (self.manager is not None and mt.level is Criticality.LO
                and not self.manager.lo_releases_allowed):
            self.result.suppressed[tid] += 1
            self._trace("suppress", tid)
            return

        demand = mt.C
        if (self.last_fault is not None and self.config.fault.inflation != 1.0
                and self.now - self.last_fault < self.window_width):
            demand = min(mt.D, math.ceil(mt.C * self.config.fault.inflation))
        self._job_seq += 1
        job = Job(tid, self.mode, self.now, self.now + mt.D, demand, demand, mt, side,
                  self._job_seq)
        job.priority = self._priority(job)
        if self.transition is not None:
            job.tag = self.transition["index"]
            if self.transition["awaiting_first"].pop(tid, None) is not None:
                self.transition["first_jobs"].add(job.seq)
        self.ready.append(job)
        self.result.released[tid] += 1
        self._trace("release", tid, job.seq, f"demand={demand}")
        self._push(job.deadline, DEADLINE, job)

    def _on_deadline(self, job: Job) -> None:
        if job.done:
            return
        r = self.result
        job.missed = True
        r.missed[job.task] += 1
        r.last_activity = self.now
        self._register_miss(self.now)
        if self.config.run_to_completion:
            self._trace("miss", job.task, job.seq, "late")
            return
        job.discarded = True
        self.ready.remove(job)
        r.discarded[job.task] += 1
        self.window.add(self.now, -job.remaining / job.mt.D, job.task)
        self._trace("miss", job.task, job.seq, f"discarded remaining={job.remaining}")
        self._after_job_left(job)

    # -- plain mode changes --------------------------------------------------

    def _tag_key(self, index: int):
        rec = self.result.transitions[index]
        return (rec.old, rec.new)

    def _on_request(self) -> None:
        gap = max(1, int(round(self.rng["mcr"].exponential(self.config.mcr_mean))))
        self._push(self.now + gap, CONTROL, ("mcr",))
        self._trace("mcr")
        if self.transition is not None:
            self.queued_requests += 1
            return
        self._start_transition(self.now)

    def _start_transition(self, requested: int) -> None:
        names = [m.name for m in self.config.modes]
        old = self.modes[self.mode]
        new = self.modes[names[(names.index(self.mode) + 1) % len(names)]]
        plan = classify_transition(old, new)
        index = len(self.result.transitions)
        self.result.transitions.append(TransitionRecord(old.name, new.name, requested,
                                                        self.now))
        self.transition = {"index": index, "plan": plan, "new": new.name,
                           "pending": set(), "awaiting_first": {}, "first_jobs": set()}
        tr = self.transition
        new_tasks = self.resolved[new.name]

        for tid, cls in plan.classes.items():
            live = [j for j in self.ready if j.task == tid]
            if cls in (TransitionClass.COMPLETED, TransitionClass.CHANGED,
                       TransitionClass.ABORTED):
                self._stop_stream(tid)
                for j in live:
                    j.side = "old"
                    if cls is TransitionClass.ABORTED:
                        self._abort(j)
            if cls is TransitionClass.UNCHANGED:
                for j in live:
                    j.side = "new"
                    j.mt = new_tasks[tid]
                end_of_period = self.streams[tid][3]
                self._start_stream(new_tasks[tid], end_of_period + plan.offsets[tid], "new")
            if cls in (TransitionClass.CHANGED, TransitionClass.WHOLLY_NEW):
                self._start_stream(new_tasks[tid], self.now + plan.offsets[tid], "new")
                tr["awaiting_first"][tid] = True
            for j in live:
                if not j.done:
                    j.tag = index
                    tr["pending"].add(j.seq)
        self.mode = new.name
        self._reprioritize()
        self._trace("transition", detail=f"{old.name}->{new.name}")
        self._maybe_finish_transition()

    def _discharge(self, job: Job) -> None:
        tr = self.transition
        tr["pending"].discard(job.seq)
        tr["first_jobs"].discard(job.seq)
        self._maybe_finish_transition()

    def _maybe_finish_transition(self) -> None:
        tr = self.transition
        if tr["pending"] or tr["awaiting_first"] or tr["first_jobs"]:
            return
        rec = self.result.transitions[tr["index"]]
        rec.complete_time = self.now
        self.transition = None
        self._reprioritize()
        self._trace("transition-complete", detail=f"latency={rec.latency}")
        if self.queued_requests:
            self.queued_requests -= 1
            self._start_transition(self.now)

    # -- criticality changes -------------------------------------------------

    def _abort(self, job: Job) -> None:
        r = self.result
        job.aborted = True
        job.missed = True
        self.ready.remove(job)
        r.aborted[job.task] += 1
        r.missed[job.task] += 1
        r.last_activity = self.now
        if job.start is not None:
            r.aborted_started[job.task] += 1
        self._register_miss(self.now)
        self._trace("abort", job.task, job.seq,
                    "started" if job.start is not None else "waiting")

    def _lo_in_flight(self) -> bool:
        return any(j.level is Criticality.LO for j in self.ready)

    def _check_drained(self) -> None:
        m = self.manager
        if m.gate is GateState.DRAINING and not self._lo_in_flight():
            m.on_drained(self.now)
            self._trace("gate", detail="closed")
        if m.ready_to_commit():
            self._commit()
        elif m.reopen_if_pending(self.now):
            self._false_alarm()

    def _schedule_fault(self) -> None:
        if not self.config.fault.active or self.manager is None:
            return
        if self._fault_gaps is None:
            self._fault_gaps = fault_gaps(self.config.fault, self.rng["faults"], self.tick)
            start = max(self.now, self.config.fault.warmup)
        else:
            start = self.now
        self._fault_gen += 1
        self._push(start + next(self._fault_gaps), FAULT, self._fault_gen)

    def _on_fault(self, gen: int) -> None:
        m = self.manager
        if gen != self._fault_gen or not m.faults_enabled:
            return
        self.last_fault = self.now
        self.result.faults.append(self.now)
        self._trace("fault")
        self._schedule_fault()
        action = m.on_fault(self.now, self.window.sample(self.now).worst_laxity)
        if action == "abort":
            self._current_change = ModeChangeRecord(m.trigger.value, self.now, self.now, None)
            for j in [j for j in self.ready if j.level is Criticality.LO]:
                self._abort(j)
                self._current_change.aborted += 1
                if j.start is not None:
                    self._current_change.aborted_started += 1
            self._commit()
        elif action == "request":
            self._current_change.request_time = self.now
            self._trace("request")
            if m.ready_to_commit():
                self._commit()

    def _commit(self) -> None:
        m = self.manager
        m.commit(self.now)
        rec = self._current_change
        rec.commit_time = self.now
        self.result.mode_changes.append(rec)
        self._current_change = None
        self.mode = self.config.criticality_mode(Criticality.HI).name
        self._swap_streams()
        self._fault_gen += 1  # cancels the pending fault
        self._hi_entered = self.now
        self._push(self.now + m.recovery, CONTROL, ("recover",))
        self._trace("commit", detail=f"latency={rec.latency}")

    def _swap_streams(self) -> None:
        tasks = self.resolved[self.mode]
        for tid, stream in self.streams.items():
            if tid in tasks:
                stream[1] = tasks[tid]
        for j in self.ready:
            if j.task in tasks:
                j.mt = tasks[j.task]
        self._reprioritize()

    def _recover(self) -> None:
        self.manager.recover(self.now)
        self.result.hi_time += self.now - self._hi_entered
        self._hi_entered = None
        self.mode = self.config.criticality_mode(Criticality.LO).name
        self._swap_streams()
        self._schedule_fault()
        self._trace("recover")

    def _false_alarm(self) -> None:
        rec = self._current_change
        rec.kind = "false-alarm"
        self.result.mode_changes.append(rec)
        self._current_change = None
        self._trace("gate", detail="reopened")

    def _on_expiry(self, trigger_time: int) -> None:
        m = self.manager
        if m.trigger_time != trigger_time:
            return
        if m.on_expiry(self.now):
            self._false_alarm()

    # -- monitoring ------------------------------------------------------------

    def _register_miss(self, when: int) -> None:
        for variant, pending in self._pending_triggers.items():
            while pending and pending[0] < when - self.window_width:
                pending.popleft()
            while pending and pending[0] < when:
                t0 = pending.popleft()
                self.result.anticipation[variant].append(when - t0)

    def _variants(self) -> list[str]:
        if self.scenario == "mono":
            return [Trigger.FUZZY.value, Trigger.PREDICTOR.value]
        if self.scenario in (Trigger.FUZZY.value, Trigger.PREDICTOR.value):
            return [self.scenario]
        return []

    def _on_tick(self) -> None:
        r = self.result
        sample = self.window.sample(self.now)
        acc = tick_slope(self.prev_sample, sample, self.tick) if self.prev_sample else 0.0
        self.prev_sample = sample
        r.laxity.append((self.now, sample.worst_laxity, acc, sample.task))
        if self.predictor is not None:
            self.predictor.observe(sample.worst_laxity)

        fz = self.config.fuzzy
        for variant in self._variants():
            if variant == Trigger.PREDICTOR.value:
                predicted = min(self.predictor.forecast(n)
                                for n in self.config.predictor.decision_horizons)
            else:
                predicted = sample.worst_laxity
            decision = infer(acc, predicted, fz) > fz.threshold
            if decision and not self._last_decision[variant]:
                r.triggers[variant] += 1
                self._pending_triggers[variant].append(self.now)
            self._last_decision[variant] = decision
            if variant == self.scenario and decision:
                self._proactive(variant)
        self._push(self.now + self.tick, TICK)

    def _proactive(self, variant: str) -> None:
        m = self.manager
        if m.on_decision(True, self.now):
            self._current_change = ModeChangeRecord(variant, self.now, None, None)
            self._trace("gate", detail="draining")
            self._push(self.now + m.confirmation, CONTROL, ("expire", self.now))
            self._check_drained()

    # -- driver ----------------------------------------------------------------

    def _setup(self) -> None:
        for mt in self.resolved[self.mode].values():
            self._start_stream(mt, 0, "new")
        if self.scenario == "mode-change":
            gap = max(1, int(round(self.rng["mcr"].exponential(self.config.mcr_mean))))
            self._push(gap, CONTROL, ("mcr",))
        if self.mixed:
            trig = Trigger(self.scenario)
            self.manager = CriticalityManager(
                trig,
                confirmation=self.config.confirmation_windows * self.window_width,
                recovery=self.config.recovery_hyperperiods * self.stats.hyperperiod,
            )
            # HI-only tasks never run in LO; their streams start with the HI mode
            if trig in (Trigger.MONO, Trigger.PREDICTOR):
                p = self.config.predictor
                self.predictor = Predictor(p.q, p.r, tuple(p.horizons))
                self.result.predictor_ran = True
            for v in self._variants():
                self.result.anticipation[v] = []
                self.result.triggers[v] = 0
                self._pending_triggers[v] = deque()
                self._last_decision[v] = False
            self._schedule_fault()
            self._push(self.tick, TICK)

    def run(self) -> RunResult:
        self._setup()
        heap = self._heap
        while heap and heap[0][0] <= self.horizon:
            time, kind, _, payload = heapq.heappop(heap)
            self._advance(time)
            if kind == RELEASE:
                self._on_release(payload)
            elif kind == DEADLINE:
                self._on_deadline(payload)
            elif kind == TICK:
                self._on_tick()
            elif kind == FAULT:
                self._on_fault(payload)
            elif payload[0] == "mcr":
                self._on_request()
            elif payload[0] == "recover":
                self._recover()
            elif payload[0] == "expire":
                self._on_expiry(payload[1])
        self._advance(self.horizon)
        return self._finish()

    def _finish(self) -> RunResult:
        r = self.result
        for j in self.ready:
            r.in_flight[j.task] += 1
        if self._hi_entered is not None:
            r.hi_time += self.horizon - self._hi_entered
        if self.predictor is not None:
            r.forecasts = self.predictor.records
        if self.manager is not None:
            r.gate_log = list(self.manager.gate_log)
        return r


def run(config: SystemConfig, seed: Optional[int] = None, scenario: Optional[str] = None,
        horizon: Optional[int] = None, trace: bool = False,
        mode: Optional[str] = None) -> RunResult:
    """Simulate one run; identical arguments give identical results."""
    return Simulator(config, seed, scenario, horizon, trace, mode).run()
