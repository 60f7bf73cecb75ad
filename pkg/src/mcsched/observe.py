"""Laxity bookkeeping: per-job laxity, windowed worst case and its slope."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

EMPTY_WINDOW_LAXITY = 1.0


def laxity(D: int, R: float) -> float:
    """Fractional slack ``(D - R) / D``; negative once the deadline is overrun."""
    if D <= 0:
        raise ValueError(f"deadline must be positive, got {D}")
    return (D - R) / D


@dataclass(frozen=True)
class LaxitySample:
    time: int
    worst_laxity: float
    task: Optional[int] = None


def window_worst_laxity(completions: Iterable[tuple], now: int, width: int) -> LaxitySample:
    """Minimum laxity over ``(time, laxity, task)`` entries with ``now - width < time <= now``."""
    if width <= 0:
        raise ValueError("window width must be positive")
    best = LaxitySample(now, EMPTY_WINDOW_LAXITY, None)
    for time, lax, task in completions:
        if now - width < time <= now and (best.task is None or lax < best.worst_laxity):
            best = LaxitySample(now, lax, task)
    return best


class LaxityWindow:
    """Sliding version of :func:`window_worst_laxity` fed in time order."""

    def __init__(self, width: int):
        if width <= 0:
            raise ValueError("window width must be positive")
        self.width = width
        self._items: deque = deque()

    def add(self, time: int, lax: float, task: int) -> None:
        self._items.append((time, lax, task))

    def sample(self, now: int) -> LaxitySample:
        items = self._items
        while items and items[0][0] <= now - self.width:
            items.popleft()
        return window_worst_laxity(items, now, self.width)


def slope(previous: LaxitySample, current: LaxitySample) -> float:
    """Change of worst laxity per time unit between two samples."""
    dt = current.time - previous.time
    if dt <= 0:
        raise ValueError("samples must be strictly increasing in time")
    return (current.worst_laxity - previous.worst_laxity) / dt


def tick_slope(previous: LaxitySample, current: LaxitySample, tick: int) -> float:
    """Slope per prediction tick, clamped to the fuzzy universe [-1, 1]."""
    return min(1.0, max(-1.0, slope(previous, current) * tick))
