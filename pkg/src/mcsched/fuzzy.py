"""Mamdani inference of deadline-miss risk.

Two inputs feed the rule base: the *acceleration* (slope of the worst-case
laxity per prediction tick, on [-1, 1]) and the *predicted laxity* (on
[-1, 1]). The output is a crisp risk in [0, 1] obtained with min for AND,
max for aggregation and centroid defuzzification.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACCELERATION_LABELS = ("Fast", "Medium", "Slow", "Negative")
PREDICTION_LABELS = ("Ultra", "Short", "Normal")
OUTPUT_LABELS = ("Low", "High")


@dataclass(frozen=True)
class MembershipFunction:
    """Trapezoid ``(a, b, c, d)``; a triangle is stored with ``b == c``.

    Equal consecutive breakpoints give a vertical edge, so
    ``trapezoid(-1, -1, -0.6, -0.4)`` is 1 at -1.
    """

    label: str
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c <= self.d):
            raise ValueError(
                f"membership {self.label!r}: breakpoints must be ordered, "
                f"got {(self.a, self.b, self.c, self.d)}")

    @classmethod
    def trapezoid(cls, label, a, b, c, d):
        return cls(label, float(a), float(b), float(c), float(d))

    @classmethod
    def triangle(cls, label, a, b, c):
        return cls(label, float(a), float(b), float(b), float(c))

    @property
    def shape(self) -> str:
        return "triangle" if self.b == self.c else "trapezoid"

    @property
    def params(self) -> list[float]:
        if self.shape == "triangle":
            return [self.a, self.b, self.d]
        return [self.a, self.b, self.c, self.d]

    def degree(self, x):
        """Membership degree of ``x`` (scalar or array)."""
        a, b, c, d = self.a, self.b, self.c, self.d
        if isinstance(x, (int, float)):
            if b <= x <= c:
                return 1.0
            if a < x < b:
                return (x - a) / (b - a)
            if c < x < d:
                return (d - x) / (d - c)
            return 0.0
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            rise = np.where(b > a, (x - a) / (b - a if b > a else 1.0), 1.0)
            fall = np.where(d > c, (d - x) / (d - c if d > c else 1.0), 1.0)
        out = np.where((x >= b) & (x <= c), 1.0,
                       np.where((x > a) & (x < b), rise,
                                np.where((x > c) & (x < d), fall, 0.0)))
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


def _default_acceleration():
    return (
        MembershipFunction.trapezoid("Fast", -1, -1, -0.6, -0.4),
        MembershipFunction.triangle("Medium", -0.7, -0.4, -0.1),
        MembershipFunction.triangle("Slow", -0.4, -0.1, 0.2),
        MembershipFunction.trapezoid("Negative", -0.1, 0.1, 1, 1),
    )


def _default_prediction():
    return (
        MembershipFunction.trapezoid("Ultra", -1, -1, 0, 0.2),
        MembershipFunction.triangle("Short", 0, 0.2, 0.4),
        MembershipFunction.trapezoid("Normal", 0.2, 0.4, 1, 1),
    )


def _default_output():
    return (
        MembershipFunction.trapezoid("Low", 0, 0, 0.4, 0.6),
        MembershipFunction.trapezoid("High", 0.4, 0.6, 1, 1),
    )


# (acceleration, prediction) -> output
DEFAULT_RULES = {
    ("Fast", "Ultra"): "High", ("Fast", "Short"): "High", ("Fast", "Normal"): "Low",
    ("Medium", "Ultra"): "High", ("Medium", "Short"): "Low", ("Medium", "Normal"): "Low",
    ("Slow", "Ultra"): "High", ("Slow", "Short"): "Low", ("Slow", "Normal"): "Low",
    ("Negative", "Ultra"): "High", ("Negative", "Short"): "Low",
    ("Negative", "Normal"): "Low",
}


@dataclass(frozen=True)
class FuzzyConfig:
    acceleration: tuple[MembershipFunction, ...] = field(
        default_factory=_default_acceleration)
    prediction: tuple[MembershipFunction, ...] = field(default_factory=_default_prediction)
    output: tuple[MembershipFunction, ...] = field(default_factory=_default_output)
    rules: dict = field(default_factory=lambda: dict(DEFAULT_RULES))
    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("risk threshold must lie in (0, 1)")
        acc = {m.label for m in self.acceleration}
        pred = {m.label for m in self.prediction}
        out = {m.label for m in self.output}
        missing = [(a, p) for a in acc for p in pred if (a, p) not in self.rules]
        if missing:
            raise ValueError(f"rule base is not total, missing {sorted(missing)}")
        bad = {v for v in self.rules.values() if v not in out}
        if bad:
            raise ValueError(f"rules reference unknown output labels {sorted(bad)}")
        acc_ix = {m.label: i for i, m in enumerate(self.acceleration)}
        pred_ix = {m.label: i for i, m in enumerate(self.prediction)}
        out_ix = {m.label: i for i, m in enumerate(self.output)}
        # exact-input memo for infer(); monitored laxities take few distinct values
        object.__setattr__(self, "_memo", {})
        object.__setattr__(self, "_universe", (min(m.a for m in self.output),
                                                max(m.d for m in self.output)))
        object.__setattr__(self, "_rule_ix", [(acc_ix[a], pred_ix[p], out_ix[o])
                                              for (a, p), o in self.rules.items()])

    def centroid(self, strengths) -> float:
        """Centroid of the clipped-and-merged output sets.

        The aggregate is piecewise linear, so it is integrated exactly between
        its breakpoints (set corners, clip points and crossings).
        """
        active = [(m.a, m.b, m.c, m.d, s) for m, s in zip(self.output, strengths) if s > 0.0]
        if not active:
            return 0.0
        lo, hi = self._universe
        cuts = {lo, hi}
        for a, b, c, d, s in active:
            cuts.update((a, b, c, d, a + s * (b - a), d - s * (d - c)))
        cuts = sorted(x for x in cuts if lo <= x <= hi)

        area = moment = 0.0
        for y0, y1 in zip(cuts, cuts[1:]):
            h = y1 - y0
            if h <= 0.0:
                continue
            # one-sided limits at both ends, so vertical edges do not leak in
            e = 1e-12 * h
            lines = [(_clip_degree(y0 + e, t), _clip_degree(y1 - e, t)) for t in active]
            ts = [0.0, 1.0]
            for i in range(len(lines)):
                for j in range(i + 1, len(lines)):
                    g0 = lines[i][0] - lines[j][0]
                    g1 = lines[i][1] - lines[j][1]
                    if g0 * g1 < 0.0:
                        ts.append(g0 / (g0 - g1))
            ts.sort()
            for ta, tb in zip(ts, ts[1:]):
                fa = max(v0 + (v1 - v0) * ta for v0, v1 in lines)
                fb = max(v0 + (v1 - v0) * tb for v0, v1 in lines)
                ya, yb = y0 + h * ta, y0 + h * tb
                area += (yb - ya) * (fa + fb) / 2.0
                moment += (yb - ya) * (fa * (2 * ya + yb) + fb * (ya + 2 * yb)) / 6.0
        return moment / area if area > 0.0 else 0.0


def _clip_degree(x, t):
    a, b, c, d, s = t
    if b <= x <= c:
        v = 1.0
    elif a < x < b:
        v = (x - a) / (b - a)
    elif c < x < d:
        v = (d - x) / (d - c)
    else:
        return 0.0
    return v if v < s else s


_MEMO_LIMIT = 200_000
_DEFAULT = FuzzyConfig()


@dataclass
class Inference:
    acceleration: dict
    prediction: dict
    firing: dict  # (acc, pred) -> strength
    output_strength: dict
    risk: float


def fuzzify(value: float, sets) -> dict:
    return {m.label: m.degree(value) for m in sets}


def explain(acceleration: float, predicted: float,
            config: FuzzyConfig | None = None) -> Inference:
    """Run the full inference and keep every intermediate quantity."""
    config = config or FuzzyConfig()
    acceleration = min(1.0, max(-1.0, float(acceleration)))
    predicted = min(1.0, max(-1.0, float(predicted)))
    acc = fuzzify(acceleration, config.acceleration)
    pred = fuzzify(predicted, config.prediction)

    firing = {}
    strength = {m.label: 0.0 for m in config.output}
    for (a, p), out in config.rules.items():
        s = min(acc[a], pred[p])
        firing[(a, p)] = s
        strength[out] = max(strength[out], s)

    risk = config.centroid(tuple(strength[m.label] for m in config.output))
    return Inference(acc, pred, firing, strength, risk)


def infer(acceleration: float, predicted: float, config: FuzzyConfig | None = None) -> float:
    """Risk in [0, 1]; same value as ``explain(...).risk`` without the bookkeeping."""
    config = config or _DEFAULT
    acceleration = min(1.0, max(-1.0, float(acceleration)))
    predicted = min(1.0, max(-1.0, float(predicted)))
    memo = config._memo
    key = (acceleration, predicted)
    risk = memo.get(key)
    if risk is None:
        acc = [m.degree(acceleration) for m in config.acceleration]
        pred = [m.degree(predicted) for m in config.prediction]
        strength = [0.0] * len(config.output)
        for a, p, o in config._rule_ix:
            v = min(acc[a], pred[p])
            if v > strength[o]:
                strength[o] = v
        risk = config.centroid(strength)
        if len(memo) >= _MEMO_LIMIT:
            memo.clear()
        memo[key] = risk
    return risk


def decide(risk: float, threshold: float = 0.5) -> bool:
    """True when the risk calls for a proactive mode-change request."""
    return risk > threshold
