"""Reference behaviour of every block over spike trains.

These functions never build circuits. They are direct truth tables or small
per-tick state machines, used as ground truth for the simulated blocks.
Outputs that would land at or beyond the horizon are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import SpikeTrain

__all__ = [
    "StimulusSet",
    "oracle_and",
    "oracle_css",
    "oracle_flank",
    "oracle_latch",
    "oracle_not",
    "oracle_or",
    "oracle_oscillator",
    "oracle_switch",
    "oracle_xor",
]


@dataclass(frozen=True)
class StimulusSet:
    """One spike-tick sequence per input terminal, all below ``horizon``."""

    trains: tuple[tuple[int, ...], ...]
    horizon: int

    def __post_init__(self):
        trains = tuple(tuple(int(t) for t in tr) for tr in self.trains)
        for k, tr in enumerate(trains):
            SpikeTrain(f"in{k}", tr)
            if tr and tr[-1] >= self.horizon:
                raise ValueError(f"in{k}: spike at {tr[-1]} is not below horizon {self.horizon}")
        object.__setattr__(self, "trains", trains)

    @classmethod
    def of(cls, trains: Sequence[Sequence[int]], horizon: int) -> StimulusSet:
        return cls(tuple(tuple(t) for t in trains), horizon)

    def counts(self) -> list[int]:
        """Number of terminals spiking at each tick."""
        per_tick = [0] * self.horizon
        for tr in self.trains:
            for t in tr:
                per_tick[t] += 1
        return per_tick


def _train(name: str, ticks, horizon: int) -> SpikeTrain:
    return SpikeTrain(name, tuple(sorted(t for t in set(ticks) if 0 <= t < horizon)))


def _bits(ticks: Sequence[int], horizon: int) -> list[bool]:
    bits = [False] * horizon
    for t in ticks:
        if 0 <= t < horizon:
            bits[t] = True
    return bits


def oracle_or(stims: StimulusSet, latency: int = 1) -> SpikeTrain:
    counts = stims.counts()
    return _train("or", (t + latency for t, c in enumerate(counts) if c >= 1), stims.horizon)


def oracle_and(stims: StimulusSet, n: int, latency: int) -> SpikeTrain:
    if len(stims.trains) != n:
        raise ValueError(f"expected {n} terminals, got {len(stims.trains)}")
    if latency not in (1, 2):
        raise ValueError("AND latency is 1 (fast) or 2 (classic)")
    counts = stims.counts()
    return _train("and", (t + latency for t, c in enumerate(counts) if c == n), stims.horizon)


def oracle_xor(stims: StimulusSet, n: int) -> SpikeTrain:
    if len(stims.trains) != n or n < 2:
        raise ValueError(f"expected {n} >= 2 terminals, got {len(stims.trains)}")
    counts = stims.counts()
    return _train("xor", (t + 2 for t, c in enumerate(counts) if c == 1), stims.horizon)


def oracle_not(stim: Sequence[int], css_first: int, horizon: int) -> SpikeTrain:
    """Spike at t iff the constant source is already running and the input was silent at t-1."""
    high = _bits(stim, horizon)
    return _train("not", (t for t in range(css_first + 1, horizon) if not high[t - 1]), horizon)


def oracle_latch(set_train: Sequence[int], reset_train: Sequence[int], horizon: int) -> SpikeTrain:
    """Holding state machine: set starts a hold one tick later, reset ends it.

    Set and reset are weighed against each other and the held spike, one
    unit each: the latch fires at t when set + held - reset >= 1 at t-1.
    """
    s = _bits(set_train, horizon)
    r = _bits(reset_train, horizon)
    fires = []
    held = False
    for t in range(1, horizon):
        held = (s[t - 1] + held - r[t - 1]) >= 1
        if held:
            fires.append(t)
    return _train("latch", fires, horizon)


def oracle_switch(input_train: Sequence[int], horizon: int) -> tuple[SpikeTrain, SpikeTrain]:
    """Input neuron U and cycle neuron C of the toggle switch.

    U(t) = in(t-1) - C(t-1) - U(t-1) >= 1
    C(t) = U(t-1) + C(t-1) - in(t-1) >= 1
    """
    x = _bits(input_train, horizon)
    u_ticks, c_ticks = [], []
    u = c = False
    for t in range(1, horizon):
        u, c = (x[t - 1] - c - u) >= 1, (u + c - x[t - 1]) >= 1
        if u:
            u_ticks.append(t)
        if c:
            c_ticks.append(t)
    return _train("u", u_ticks, horizon), _train("c", c_ticks, horizon)


def oracle_css(first_spike: int, horizon: int) -> SpikeTrain:
    if not 0 <= first_spike < horizon:
        raise ValueError(f"first_spike {first_spike} must lie in [0, {horizon})")
    return SpikeTrain("css", tuple(range(first_spike, horizon)))


def oracle_oscillator(half_period: int, first_spike: int, horizon: int) -> SpikeTrain:
    """High for ``half_period`` ticks starting at first_spike + 1, then low as long, repeating."""
    k = half_period
    if k < 1:
        raise ValueError("half_period must be >= 1")
    start = first_spike + 1
    return _train("osc", (t for t in range(start, horizon) if ((t - start) // k) % 2 == 0), horizon)


def oracle_flank(input_train: Sequence[int], horizon: int) -> tuple[SpikeTrain, SpikeTrain]:
    """Rise output at r+2 for each silence->spike step at r; fall output at f+3 for spike->silence at f.

    Ticks before 0 count as silent.
    """
    x = _bits(input_train, horizon + 1)
    rises = [r + 2 for r in range(horizon) if x[r] and (r == 0 or not x[r - 1])]
    falls = [f + 3 for f in range(1, horizon) if x[f - 1] and not x[f]]
    return _train("rise", rises, horizon), _train("fall", falls, horizon)
