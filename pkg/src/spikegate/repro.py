"""Built-in experiments: each elaborates a shipped netlist, runs both backends
and checks the result against the oracles and fixed timing checkpoints."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

from . import oracle, traceio
from .core import SimConfig, Trace, run
from .netlist import Elaboration, elaborate, parse

__all__ = ["EXPERIMENTS", "Outcome", "load_netlist", "repro"]

EXPERIMENTS = ("and4", "xor4", "switch", "flank", "css", "latch", "oscillator")
BACKENDS = ("abstract", "lif")


def load_netlist(name: str) -> str:
    return resources.files("spikegate.netlists").joinpath(f"{name}.snl").read_text(encoding="utf-8")


@dataclass
class Outcome:
    experiment: str
    traces: dict[str, Trace]
    signals: list[str]
    checks: list[tuple[str, bool]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def check(self, label: str, ok: bool) -> None:
        self.checks.append((label, bool(ok)))

    def render(self) -> str:
        lines = [f"== {self.experiment} =="]
        lines.append(traceio.render_ascii(self.traces["abstract"], self.signals).rstrip("\n"))
        for label, ok in self.checks:
            lines.append(f"[{'ok' if ok else 'FAIL'}] {label}")
        if not self.passed and "lif" in self.traces:
            for m in traceio.diff(self.traces["abstract"], self.traces["lif"]):
                lines.append(f"  abstract vs lif: {m}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def _simulate(elab: Elaboration) -> dict[str, Trace]:
    horizon = elab.horizon
    signals = elab.signals()
    return {
        backend: run(elab.circuit, SimConfig(backend=backend, horizon=horizon)).select(signals)
        for backend in BACKENDS
    }


def _ticks(trace: Trace, signal: str) -> tuple[int, ...]:
    return trace.spikes[signal].ticks


def repro(experiment: str) -> Outcome:
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    elab = elaborate(parse(load_netlist(experiment)))
    traces = _simulate(elab)
    out = Outcome(experiment, traces, list(elab.signals()))
    out.check("lif and abstract spike traces identical", not traceio.diff(traces["abstract"], traces["lif"]))
    globals()[f"_check_{experiment}"](out, elab, traces["abstract"])
    return out


def _check_and4(out: Outcome, elab: Elaboration, tr: Trace) -> None:
    h = elab.horizon
    stims = oracle.StimulusSet.of([elab.circuit.sources[elab.sources[f"a{k}"]] for k in range(4)], h)
    classic, fast = _ticks(tr, "classic.out"), _ticks(tr, "fast.out")
    out.check("classic output matches oracle (latency 2)", classic == oracle.oracle_and(stims, 4, 2).ticks)
    out.check("fast output matches oracle (latency 1)", fast == oracle.oracle_and(stims, 4, 1).ticks)
    out.check("all inputs at 3 -> classic 5, fast 4", 5 in classic and 4 in fast)
    only_out = Trace({"out": tr["classic.out"]}, h)
    fast_out = Trace({"out": tr["fast.out"]}, h)
    out.check("fast leads classic by exactly 1 tick", not traceio.diff(only_out, fast_out, latency_shift=1))
    out.check("OR neuron fires 1 tick after any input", _ticks(tr, "classic.or") == oracle.oracle_or(stims).ticks)


def _check_xor4(out: Outcome, elab: Elaboration, tr: Trace) -> None:
    h = elab.horizon
    trains = [elab.circuit.sources[elab.sources[f"x{k}"]] for k in range(4)]
    expect = oracle.oracle_xor(oracle.StimulusSet.of(trains, h), 4).ticks
    got = _ticks(tr, "x.out")
    out.check("output matches oracle", got == expect)
    lone0 = [t + 2 for t in trains[0] if not any(t in tr_k for tr_k in trains[1:]) and t + 2 < h]
    out.check("outputs exactly where input 0 fires alone, 2 ticks later", list(got) == lone0)


def _check_switch(out: Outcome, elab: Elaboration, tr: Trace) -> None:
    u, c = _ticks(tr, "sw.u"), _ticks(tr, "sw.c")
    ou, oc = oracle.oracle_switch(elab.circuit.sources[elab.sources["s"]], elab.horizon)
    out.check("U and C match oracle", (u, c) == (ou.ticks, oc.ticks))
    out.check("U fires at 2", 2 in u)
    out.check("C fires 3..6", all(t in c for t in range(3, 7)))
    out.check("C silent from 7", not any(t >= 7 for t in c))
    out.check("U fires at 8", 8 in u)
    out.check("C does not resume at 9", 9 not in c)


def _check_flank(out: Outcome, elab: Elaboration, tr: Trace) -> None:
    h = elab.horizon
    clock = _ticks(tr, "clk")
    rise, fall = oracle.oracle_flank(clock, h)
    out.check("clock high on 6..9", [t for t in clock if t < 12] == [6, 7, 8, 9])
    out.check("rise matches oracle", _ticks(tr, "fd.rise") == rise.ticks)
    out.check("fall matches oracle", _ticks(tr, "fd.fall") == fall.ticks)
    out.check("first rise at 8", _ticks(tr, "fd.rise")[:1] == (8,))
    out.check("first fall at 13", _ticks(tr, "fd.fall")[:1] == (13,))
    out.check("NOT starts at 2 and is silent at 7", _ticks(tr, "fd.not")[:1] == (2,) and 7 not in _ticks(tr, "fd.not"))


def _check_css(out: Outcome, elab: Elaboration, tr: Trace) -> None:
    got = _ticks(tr, "c.out")
    out.check("one spike every tick from 1", got == oracle.oracle_css(1, elab.horizon).ticks)


def _check_latch(out: Outcome, elab: Elaboration, tr: Trace) -> None:
    got = _ticks(tr, "l.out")
    out.check("matches oracle", got == oracle.oracle_latch([4], [9], elab.horizon).ticks)
    out.check("holds 5..9 and releases", got == tuple(range(5, 10)))


def _check_oscillator(out: Outcome, elab: Elaboration, tr: Trace) -> None:
    got = _ticks(tr, "clk.out")
    out.check("matches oracle", got == oracle.oracle_oscillator(4, 1, elab.horizon).ticks)
    out.check("high 2..5, low 6..9, high 10..13", [t for t in got if t < 14] == [2, 3, 4, 5, 10, 11, 12, 13])
