"""Mode manager and fault generator.

Handles transition classification, release offsets, the low-criticality
release gate used by proactive switching, and the fault arrival process.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .core import Criticality, FaultModel, ModeSpec, TransitionClass
from .rta import classify as _classify_by_timing


class Trigger(str, enum.Enum):
    MONO = "mono"
    REACTIVE = "reactive"
    FUZZY = "fuzzy"
    PREDICTOR = "fuzzy+predictor"

    @property
    def proactive(self) -> bool:
        return self in (Trigger.FUZZY, Trigger.PREDICTOR)


class GateState(str, enum.Enum):
    OPEN = "open"
    DRAINING = "draining"
    CLOSED = "closed"


_NEXT_GATE = {GateState.OPEN: GateState.DRAINING, GateState.DRAINING: GateState.CLOSED,
              GateState.CLOSED: GateState.OPEN}


@dataclass
class TransitionPlan:
    classes: dict  # task id -> TransitionClass
    offsets: dict = field(default_factory=dict)  # task id -> offset (W/C/U tasks)
    gate: GateState = GateState.OPEN
    trigger: Optional[Trigger] = None

    def advance_gate(self, target: GateState) -> None:
        if _NEXT_GATE[self.gate] is not target:
            raise RuntimeError(f"gate cannot go from {self.gate.value} to {target.value}")
        self.gate = target


def classify_transition(old: ModeSpec, new: ModeSpec, abort: bool = False,
                        trigger: Optional[Trigger] = None) -> TransitionPlan:
    """Class of every task across ``old -> new``.

    Between criticality modes every continuing task switches to the other
    level's budget and priority, so it is *changed*; between plain modes the
    timing parameters decide.
    """
    if old.criticality is not None and new.criticality is not None:
        o, n = set(old.ids), set(new.ids)
        classes = {}
        for tid in sorted(o | n):
            if tid in o and tid in n:
                classes[tid] = (TransitionClass.UNCHANGED if old.criticality is new.criticality
                                else TransitionClass.CHANGED)
            elif tid in o:
                classes[tid] = TransitionClass.ABORTED if abort else TransitionClass.COMPLETED
            else:
                classes[tid] = TransitionClass.WHOLLY_NEW
    else:
        classes = _classify_by_timing(old, new, abort)
    offsets = {t.id: t.offset for t in new.resolved() if classes[t.id].in_new}
    return TransitionPlan(classes, offsets, trigger=trigger)


def next_multiple_offset(t_mcr: int, T: int) -> int:
    """Delay from ``t_mcr`` to the next multiple of ``T`` (0 on a multiple)."""
    if T <= 0:
        raise ValueError("period must be positive")
    return -(-t_mcr // T) * T - t_mcr


# -- faults ------------------------------------------------------------------

def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent PCG64 streams per purpose, derived from one seed."""
    faults, mcr, spare = np.random.SeedSequence(seed).spawn(3)
    return {"faults": np.random.Generator(np.random.PCG64(faults)),
            "mcr": np.random.Generator(np.random.PCG64(mcr)),
            "spare": np.random.Generator(np.random.PCG64(spare))}


def fault_gaps(model: FaultModel, rng: np.random.Generator, tick: int = 1) -> Iterator[int]:
    """Endless integer inter-arrival gaps (>= 1 time unit).

    Normal draws that are not positive are drawn again.
    """
    scale = tick if model.in_ticks else 1
    while True:
        if model.distribution == "exponential":
            x = rng.exponential(model.mean)
        elif model.distribution == "normal":
            x = rng.normal(model.mean, model.stddev)
            while x <= 0:
                x = rng.normal(model.mean, model.stddev)
        else:
            raise ValueError(f"unknown fault distribution {model.distribution!r}")
        yield max(1, int(round(x * scale)))


def fault_schedule(model: FaultModel, seed: int, horizon: int, tick: int = 1) -> list[int]:
    """Fault instants in ``[warmup, horizon]`` for an uninterrupted low-criticality run."""
    if not model.active:
        return []
    gaps = fault_gaps(model, rng_streams(seed)["faults"], tick)
    out, t = [], model.warmup
    while True:
        t += next(gaps)
        if t > horizon:
            return out
        out.append(t)


@dataclass
class CriticalityManager:
    """Mode-manager state machine for LO/HI switching.

    ``hi`` tells whether the high-criticality mode is in force. The gate
    governs low-criticality releases: OPEN lets them through, DRAINING blocks
    new ones while in-flight jobs finish, CLOSED means none are left.
    """

    trigger: Trigger
    confirmation: int  # time a proactive gate waits for a fault
    recovery: int  # HI dwell before returning to LO
    gate: GateState = GateState.OPEN
    hi: bool = False
    request_time: Optional[int] = None  # fault that confirmed the change
    trigger_time: Optional[int] = None
    expires: Optional[int] = None
    reopen_pending: bool = False
    hi_since: Optional[int] = None
    gate_log: list = field(default_factory=list)

    def _set_gate(self, target: GateState, now: int) -> None:
        if _NEXT_GATE[self.gate] is not target:
            raise RuntimeError(f"gate cannot go from {self.gate.value} to {target.value}")
        self.gate = target
        self.gate_log.append((now, target))

    @property
    def lo_releases_allowed(self) -> bool:
        return not self.hi and self.gate is GateState.OPEN

    @property
    def faults_enabled(self) -> bool:
        return not self.hi

    def on_decision(self, trigger: bool, now: int) -> bool:
        """Proactive prediction outcome; returns True when the gate starts draining."""
        if not self.trigger.proactive or self.hi or not trigger:
            return False
        if self.gate is not GateState.OPEN:
            return False
        self._set_gate(GateState.DRAINING, now)
        self.trigger_time, self.expires = now, now + self.confirmation
        self.request_time, self.reopen_pending = None, False
        return True

    def on_fault(self, now: int, worst_laxity: float) -> str:
        """React to a fault; returns ``"abort"``, ``"request"`` or ``""``."""
        if self.hi:
            return ""
        if self.trigger is Trigger.REACTIVE:
            if worst_laxity <= 0.0:
                self.request_time = self.trigger_time = now
                return "abort"
            return ""
        if self.trigger.proactive and self.gate is not GateState.OPEN:
            if self.request_time is None and not self.reopen_pending:
                self.request_time = now
                return "request"
        return ""

    def on_drained(self, now: int) -> None:
        if self.gate is GateState.DRAINING:
            self._set_gate(GateState.CLOSED, now)

    def ready_to_commit(self) -> bool:
        if self.hi or self.request_time is None:
            return False
        if self.trigger is Trigger.REACTIVE:
            return True
        return self.gate is GateState.CLOSED

    def commit(self, now: int) -> None:
        if self.trigger is Trigger.REACTIVE:
            # the abort empties the LO side at once
            self._set_gate(GateState.DRAINING, now)
            self._set_gate(GateState.CLOSED, now)
        self.hi, self.hi_since, self.expires = True, now, None

    def on_expiry(self, now: int) -> bool:
        """Confirmation window over without a fault; True when the gate reopens now."""
        if self.hi or self.request_time is not None or self.expires is None:
            return False
        if now < self.expires:
            return False
        self.expires = None
        if self.gate is GateState.CLOSED:
            self._set_gate(GateState.OPEN, now)
            return True
        self.reopen_pending = True
        return False

    def reopen_if_pending(self, now: int) -> bool:
        if self.reopen_pending and self.gate is GateState.CLOSED:
            self.reopen_pending = False
            self._set_gate(GateState.OPEN, now)
            return True
        return False

    def recover(self, now: int) -> None:
        """Return from HI to LO."""
        self.hi, self.hi_since = False, None
        self.request_time = self.trigger_time = None
        self._set_gate(GateState.OPEN, now)
