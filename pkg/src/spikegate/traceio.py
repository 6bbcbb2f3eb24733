"""Trace rendering, export and comparison.

ASCII trace format, one line per row, LF terminated::

    t(ms) |0|1|2|3|
    A     |.|1|.|.|
    out   |.|.|.|1|

The label column is padded to the longest of ``t(ms)`` and the signal names.
Each signal cell is one character, ``1`` for a spike and ``.`` for none. The
header row carries the tick numbers themselves, so for ticks above 9 it is
wider than the signal rows.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import SpikeTrain, Trace

__all__ = [
    "Mismatch",
    "diff",
    "export_csv",
    "export_json",
    "export_membrane_csv",
    "import_json",
    "render_ascii",
]

HEADER_LABEL = "t(ms)"


def render_ascii(trace: Trace, signals: Sequence[str] | None = None, t0: int = 0, t1: int | None = None) -> str:
    if t1 is None:
        t1 = trace.horizon
    if not 0 <= t0 < t1 <= trace.horizon:
        raise ValueError(f"window [{t0}, {t1}) must satisfy 0 <= t0 < t1 <= {trace.horizon}")
    signals = list(trace.spikes) if signals is None else list(signals)
    for s in signals:
        if s not in trace.spikes:
            raise KeyError(f"unknown signal {s!r}")
    width = max([len(HEADER_LABEL)] + [len(s) for s in signals])
    ticks = range(t0, t1)
    rows = [HEADER_LABEL.ljust(width) + " |" + "".join(f"{t}|" for t in ticks)]
    for s in signals:
        fired = set(trace.spikes[s].ticks)
        rows.append(s.ljust(width) + " |" + "".join(("1" if t in fired else ".") + "|" for t in ticks))
    return "\n".join(rows) + "\n"


def export_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["signal", "tick"])
    for name in sorted(trace.spikes):
        for t in trace.spikes[name].ticks:
            w.writerow([name, t])
    return buf.getvalue()


def export_json(trace: Trace) -> str:
    doc = {name: list(train.ticks) for name, train in trace.spikes.items()}
    return json.dumps(doc, sort_keys=True) + "\n"


def import_json(text: str, horizon: int) -> Trace:
    doc = json.loads(text)
    return Trace({name: SpikeTrain(name, tuple(ticks)) for name, ticks in doc.items()}, horizon)


def export_membrane_csv(trace: Trace) -> str:
    if trace.membrane is None:
        raise ValueError("trace has no membrane samples; run with record_membrane=True on the lif backend")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["neuron", "tick", "v_mV"])
    for name in sorted(trace.membrane):
        for t, v in enumerate(trace.membrane[name]):
            w.writerow([name, t, f"{v:.6f}"])
    return buf.getvalue()


@dataclass(frozen=True)
class Mismatch:
    signal: str
    tick: int
    side: str  # "a" if only trace A spikes at tick, "b" if only shifted B does

    def __str__(self):
        return f"{self.signal}@{self.tick}: only in {self.side.upper()}"


def diff(
    a: Trace,
    b: Trace,
    latency_shift: int = 0,
    rename: Mapping[str, str] | None = None,
) -> list[Mismatch]:
    """Differences between ``a`` and ``b`` with every B spike moved by ``latency_shift`` ticks.

    ``rename`` maps B signal names to A signal names. Shifted spikes falling
    outside A's horizon are ignored.
    """
    rename = dict(rename or {})
    shifted: dict[str, set[int]] = {}
    for name, train in b.spikes.items():
        ticks = {t + latency_shift for t in train.ticks}
        shifted[rename.get(name, name)] = {t for t in ticks if 0 <= t < a.horizon}
    out = []
    for name in sorted(set(a.spikes) | set(shifted)):
        mine = set(a.spikes[name].ticks) if name in a.spikes else set()
        theirs = shifted.get(name, set())
        out += [Mismatch(name, t, "a") for t in sorted(mine - theirs)]
        out += [Mismatch(name, t, "b") for t in sorted(theirs - mine)]
    return sorted(out, key=lambda m: (m.signal, m.tick, m.side))
