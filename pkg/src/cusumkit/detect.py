"""Change-point detection on data streams.

Builds log-likelihood-ratio increments from a hypothesis pair (default
density f against disturbed density g), runs the offline CUSUM scan for
abrupt and transient changes, and offers a streaming monitor with
threshold alarms and multi-change resets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import UnsupportedValue
from .models import DiscreteTable, IncrementModel, NormalLLR

__all__ = [
    "NormalPair",
    "DiscretePair",
    "CusumState",
    "DetectionReport",
    "llr_increments",
    "scan_offline",
    "monitor_step",
]


@dataclass(frozen=True)
class NormalPair:
    """Normal mean-shift hypotheses: f = N(theta0, sigma), g = N(theta1, sigma)."""

    theta0: float
    theta1: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        if self.theta0 == self.theta1:
            raise ValueError("hypotheses must differ")

    @property
    def delta(self) -> float:
        """Standardized detectable difference |theta1 - theta0| / sigma."""
        return abs(self.theta1 - self.theta0) / self.sigma

    def increment_model(self) -> IncrementModel:
        """Law of the log-likelihood ratio under the default distribution."""
        return NormalLLR(delta=self.delta)

    def llr(self, data: np.ndarray) -> np.ndarray:
        shift = (self.theta1 - self.theta0) / self.sigma**2
        mid = 0.5 * (self.theta0 + self.theta1)
        return shift * (np.asarray(data, dtype=float) - mid)


@dataclass(frozen=True)
class DiscretePair:
    """Hypotheses over a shared finite support with pmfs f and g."""

    support: tuple[float, ...]
    f: tuple[float, ...]
    g: tuple[float, ...]

    def __post_init__(self):
        if not len(self.support) == len(self.f) == len(self.g):
            raise ValueError("support and both pmfs must have equal length")
        for name, pmf in (("f", self.f), ("g", self.g)):
            if any(p < 0.0 for p in pmf) or abs(sum(pmf) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a pmf summing to 1")
        if any(fp == 0.0 and gp > 0.0 for fp, gp in zip(self.f, self.g)):
            raise ValueError("g must vanish wherever f does")

    def increment_model(self) -> IncrementModel:
        # Distinct support points can share one log-ratio value; merge
        # their f-probabilities so the table stays a valid distribution.
        acc: dict[float, float] = {}
        for x, fp, gp in zip(self.support, self.f, self.g):
            if fp == 0.0:
                continue
            y = math.log(gp / fp) if gp > 0.0 else -math.inf
            if y == -math.inf:
                raise ValueError(
                    f"support point {x:g} has g = 0; its log-ratio is -inf"
                )
            acc[y] = acc.get(y, 0.0) + fp
        values = tuple(sorted(acc))
        return DiscreteTable(
            values=values, weights=tuple(acc[v] for v in values), llr=True
        )

    def llr(self, data: np.ndarray) -> np.ndarray:
        lookup = {round(x * 1e9): math.log(gp / fp)
                  for x, fp, gp in zip(self.support, self.f, self.g) if fp > 0.0}
        out = np.empty(len(data))
        for i, x in enumerate(np.asarray(data, dtype=float)):
            key = round(x * 1e9)
            if key not in lookup:
                raise UnsupportedValue(
                    f"datum {x:g} has zero density under the default pmf"
                )
            out[i] = lookup[key]
        return out


def llr_increments(pair, data) -> np.ndarray:
    """Y_i = log g(x_i) - log f(x_i) for each datum."""
    return pair.llr(np.asarray(data, dtype=float))


@dataclass(frozen=True)
class DetectionReport:
    """Outcome of an offline scan over n increments."""

    n: int
    threshold: float
    statistic_final: float  # W_n, the abrupt-change statistic
    statistic_max: float  # max over [0, n] of W_b, the transient statistic
    detected: bool
    change_interval: tuple[int, int] | None  # (a_hat, b_hat], when detected
    path: np.ndarray | None = field(default=None, repr=False)


def scan_offline(increments, h: float, keep_path: bool = True) -> DetectionReport:
    """Full CUSUM scan of a batch of increments against threshold h.

    Reports both W_n and the running maximum.  When the maximum reaches h,
    the estimated change interval (a_hat, b_hat] is the argmax pair of
    S_b - S_a, ties broken by smallest b then largest a (the shortest,
    latest maximizing interval).
    """
    if h <= 0.0:
        raise ValueError("threshold must be positive")
    y = np.asarray(increments, dtype=float)
    n = y.shape[0]
    s = np.concatenate(([0.0], np.cumsum(y)))
    prefix_min = np.minimum.accumulate(s)
    # the path uses the reflected recursion itself, so folding
    # monitor_step over the same increments matches it bit for bit
    w = np.empty(n + 1)
    w[0] = 0.0
    acc = 0.0
    for i in range(n):
        acc = max(acc + y[i], 0.0)
        w[i + 1] = acc
    stat_max = float(np.max(w))
    detected = stat_max >= h
    interval = None
    if detected and n > 0:
        b_hat = int(np.argmax(w))  # first index attaining the max
        lo = prefix_min[b_hat]
        candidates = np.nonzero(s[:b_hat] == lo)[0]
        a_hat = int(candidates[-1])  # largest minimizing start
        interval = (a_hat, b_hat)
    return DetectionReport(
        n=n,
        threshold=h,
        statistic_final=float(w[-1]),
        statistic_max=stat_max,
        detected=detected,
        change_interval=interval,
        path=w if keep_path else None,
    )


@dataclass(frozen=True)
class CusumState:
    """Streaming monitor state; immutable, JSON round-trippable."""

    w: float = 0.0
    t: int = 0
    running_max: float = 0.0
    alarms: tuple[tuple[int, float], ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                "w": self.w,
                "t": self.t,
                "running_max": self.running_max,
                "alarms": [[t, v] for t, v in self.alarms],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CusumState":
        raw = json.loads(text)
        return cls(
            w=float(raw["w"]),
            t=int(raw["t"]),
            running_max=float(raw["running_max"]),
            alarms=tuple((int(t), float(v)) for t, v in raw["alarms"]),
        )


def monitor_step(
    state: CusumState, y: float, h: float = math.inf
) -> tuple[CusumState, tuple[int, float] | None]:
    """One step of the streaming monitor.

    Applies the reflected recursion; when the updated value reaches h an
    alarm (time, value) is recorded and the statistic resets to zero so
    later changes are detected under the same familywise threshold.
    """
    w = max(state.w + y, 0.0)
    t = state.t + 1
    running_max = max(state.running_max, w)
    alarm = None
    if w >= h:
        alarm = (t, w)
        new = CusumState(
            w=0.0, t=t, running_max=running_max, alarms=state.alarms + (alarm,)
        )
    else:
        new = replace(state, w=w, t=t, running_max=running_max)
    return new, alarm
