"""Continuous-time jump process selecting the active data block.

The active block index is piecewise constant and jumps at random times.
Holding times are governed by a learning-rate schedule ``eta(t)``: the
survival probability of a jump started at ``t0`` is
``exp(-int_0^s 1/eta(u + t0) du)``, so small learning rates mean fast
switching.  At a jump the new index is drawn uniformly over the other
blocks.  Waiting times are sampled exactly by inverting the cumulative
rate in closed form against a unit exponential draw.

Two modes exist: ``single`` keeps one shared index for the whole ensemble,
``batch`` runs one independent index per particle (all fed from a single
random stream, in event order, so runs are reproducible bit for bit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "ConstantRate",
    "ExponentialRate",
    "ReciprocalRate",
    "PiecewiseRate",
    "JumpEvent",
    "IndexProcessState",
    "start_process",
    "sample_waiting_time",
    "next_index",
    "advance",
    "save_jump_log",
    "load_jump_log",
]


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not value > 0.0:
        raise ValueError(f"{name} must be positive")
    return value


@dataclass(frozen=True)
class ConstantRate:
    """eta(t) = c.  Waiting times are Exponential with mean ``c``."""

    c: float

    def __post_init__(self):
        object.__setattr__(self, "c", _positive("c", self.c))

    def value(self, t: float) -> float:
        return self.c

    def invert_wait(self, t0: float, s: float) -> float:
        # cumulative rate int_0^w du/c = s  =>  w = c s
        return self.c * s


@dataclass(frozen=True)
class ExponentialRate:
    """eta(t) = a * exp(-b t); switching accelerates exponentially."""

    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _positive("a", self.a))
        object.__setattr__(self, "b", _positive("b", self.b))

    def value(self, t: float) -> float:
        return self.a * np.exp(-self.b * t)

    def invert_wait(self, t0: float, s: float) -> float:
        # int_0^w exp(b(u+t0))/a du = s  =>  w = log(1 + a b s e^{-b t0}) / b
        return np.log1p(self.a * self.b * s * np.exp(-self.b * t0)) / self.b


@dataclass(frozen=True)
class ReciprocalRate:
    """eta(t) = 1 / (a t + b); switching decelerates like 1/t."""

    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _positive("a", self.a))
        object.__setattr__(self, "b", _positive("b", self.b))

    def value(self, t: float) -> float:
        return 1.0 / (self.a * t + self.b)

    def invert_wait(self, t0: float, s: float) -> float:
        # int_0^w (a(u+t0)+b) du = a w^2/2 + (a t0 + b) w = s
        p = self.a * t0 + self.b
        return (np.sqrt(p * p + 2.0 * self.a * s) - p) / self.a


@dataclass(frozen=True)
class PiecewiseRate:
    """A decaying schedule up to ``t_switch``, then fixed equidistant jumps.

    Before ``t_switch`` waiting times follow the decaying schedule; a wait
    that would cross ``t_switch`` is replaced by the first equidistant jump
    at ``t_switch + step``.  From ``t_switch`` on, jumps are deterministic
    every ``step`` time units.
    """

    decaying: ExponentialRate | ReciprocalRate | ConstantRate
    t_switch: float
    step: float

    def __post_init__(self):
        object.__setattr__(self, "t_switch", _positive("t_switch", self.t_switch))
        object.__setattr__(self, "step", _positive("step", self.step))

    def value(self, t: float) -> float:
        return self.decaying.value(t) if t < self.t_switch else self.step

    def invert_wait(self, t0: float, s: float) -> float:
        if t0 >= self.t_switch:
            return self.step
        w = self.decaying.invert_wait(t0, s)
        if t0 + w > self.t_switch:
            return self.t_switch + self.step - t0
        return w


Schedule = ConstantRate | ExponentialRate | ReciprocalRate | PiecewiseRate


def sample_waiting_time(schedule, t0: float, rng: np.random.Generator) -> float:
    """Draw the next holding time for a jump clock restarted at ``t0``.

    Inverts the cumulative switching rate against a unit exponential draw,
    so the sample follows ``P(wait >= s) = exp(-int_0^s 1/eta(u+t0) du)``
    exactly.  Deterministic segments of a piecewise schedule consume no
    randomness.
    """
    if isinstance(schedule, PiecewiseRate) and t0 >= schedule.t_switch:
        return schedule.step
    return float(schedule.invert_wait(t0, rng.standard_exponential()))


def next_index(current: int, n_sub: int, rng: np.random.Generator) -> int:
    """Uniform draw over the ``n_sub - 1`` blocks other than ``current``."""
    if n_sub < 2:
        raise ValueError("n_sub must be at least 2")
    r = int(rng.integers(n_sub - 1))
    return r + (r >= current)


class JumpEvent(NamedTuple):
    """One index switch: at ``time``, coordinate ``coordinate`` moved to ``new_index``."""

    time: float
    coordinate: int
    new_index: int


@dataclass
class IndexProcessState:
    """Mutable state of the block-selection process.

    ``current`` and ``next_jump`` are scalars in ``single`` mode and arrays
    of length ``n_coords`` in ``batch`` mode (one clock per particle).  All
    draws come from the single ``rng`` stream in event order.
    """

    mode: str
    n_sub: int
    schedule: Schedule
    current: np.ndarray
    next_jump: np.ndarray
    t_now: float
    rng: np.random.Generator = field(repr=False)

    @property
    def n_coords(self) -> int:
        return self.current.shape[0]

    def earliest(self) -> float:
        return float(self.next_jump.min())

    def indices_for(self, n_ens: int) -> np.ndarray:
        """Active block per particle: broadcast in single mode, per-clock in batch."""
        if self.mode == "single":
            return np.full(n_ens, self.current[0], dtype=np.intp)
        if self.n_coords != n_ens:
            raise ValueError("batch process has a different number of coordinates")
        return self.current


def start_process(schedule, n_sub: int, mode: str, rng: np.random.Generator,
                  t0: float = 0.0, n_coords: int | None = None) -> IndexProcessState:
    """Initialize the jump process at time ``t0``.

    Initial indices are uniform over all blocks; first waiting times are
    then drawn per coordinate, in coordinate order.
    """
    if mode not in ("single", "batch"):
        raise ValueError(f"unknown mode {mode!r}")
    if n_sub < 2:
        raise ValueError("n_sub must be at least 2")
    m = 1 if mode == "single" else int(n_coords if n_coords is not None else 0)
    if m < 1:
        raise ValueError("batch mode needs n_coords >= 1")
    current = np.array([int(rng.integers(n_sub)) for _ in range(m)], dtype=np.intp)
    next_jump = np.array(
        [t0 + sample_waiting_time(schedule, t0, rng) for _ in range(m)], dtype=float
    )
    return IndexProcessState(mode, int(n_sub), schedule, current, next_jump, float(t0), rng)


def apply_next_jump(state: IndexProcessState) -> JumpEvent:
    """Execute the earliest pending jump and schedule the coordinate's next one."""
    k = int(state.next_jump.argmin())
    t = float(state.next_jump[k])
    new = next_index(int(state.current[k]), state.n_sub, state.rng)
    state.current[k] = new
    state.next_jump[k] = t + sample_waiting_time(state.schedule, t, state.rng)
    state.t_now = t
    return JumpEvent(t, k, new)


def advance(state: IndexProcessState, t_target: float) -> tuple[IndexProcessState, list[JumpEvent]]:
    """Play the process forward to ``t_target``, collecting jumps in ``(t_now, t_target]``.

    The state is updated in place and returned together with the
    chronological jump log.  ``t_target`` must not lie in the past.
    """
    if t_target < state.t_now:
        raise ValueError("cannot advance the index process backwards")
    events: list[JumpEvent] = []
    while state.earliest() <= t_target:
        events.append(apply_next_jump(state))
    state.t_now = float(t_target)
    return state, events


def save_jump_log(path, events: list[JumpEvent]) -> None:
    """Write a jump log as CSV with columns time, coordinate, new_index."""
    with open(path, "w") as fh:
        fh.write("time,coordinate,new_index\n")
        for ev in events:
            fh.write(f"{ev.time:.17g},{ev.coordinate},{ev.new_index}\n")


def load_jump_log(path) -> list[JumpEvent]:
    events = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "time,coordinate,new_index":
            raise ValueError(f"unexpected jump-log header: {header!r}")
        for line in fh:
            t, c, n = line.strip().split(",")
            events.append(JumpEvent(float(t), int(c), int(n)))
    return events
