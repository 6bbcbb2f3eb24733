"""Randomised block-versus-oracle equivalence trials."""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import blocks, oracle
from .core import CircuitGraph, SimConfig, run

__all__ = ["ARITY", "Trial", "GateReport", "arity_ok", "gate_test", "random_trial", "run_trial"]

# Minimum input count for the variadic kinds; other kinds have fixed ports.
ARITY = {"or": 1, "and_classic": 2, "and_fast": 2, "xor": 2}

CSS_FIRST = 1
# First tick random stimuli may use: the constant spike source has to be
# running for NOT, fast AND and the flank detector to be defined.
STIM_START = CSS_FIRST + 1


def arity_ok(kind: str, n: int) -> bool:
    if kind not in blocks.BLOCK_KINDS:
        return False
    return n >= ARITY[kind] if kind in ARITY else True


@dataclass(frozen=True)
class Trial:
    kind: str
    n: int
    horizon: int
    trains: tuple[tuple[int, ...], ...] = ()
    first: int = CSS_FIRST
    half_period: int = 1


def _random_train(rng: random.Random, horizon: int, p: float) -> tuple[int, ...]:
    return tuple(t for t in range(STIM_START, horizon) if rng.random() < p)


def random_trial(kind: str, n: int, rng: random.Random, horizon: int) -> Trial:
    if kind == "css":
        return Trial(kind, 0, horizon, first=rng.randrange(0, horizon))
    if kind == "oscillator":
        return Trial(kind, 0, horizon, first=rng.randrange(0, horizon // 2), half_period=rng.randint(1, 12))
    terminals = {"latch": 2, "switch": 1, "not": 1, "flank": 1}.get(kind, n)
    if kind == "switch":
        # Sparse input so that held states have time to show.
        p = rng.uniform(0.02, 0.3)
    elif kind == "latch":
        p = rng.uniform(0.02, 0.2)
    else:
        p = rng.uniform(0.2, 0.9)
    trains = tuple(_random_train(rng, horizon, p) for _ in range(terminals))
    return Trial(kind, n, horizon, trains)


def _build(trial: Trial) -> tuple[CircuitGraph, dict[str, tuple[int, ...]]]:
    c = CircuitGraph()
    kind = trial.kind
    if kind == "css":
        h = blocks.build_css(c, trial.first, name="dut")
        return c, {"out": h.outputs["out"]}
    if kind == "oscillator":
        h = blocks.build_sync_oscillator(c, trial.half_period, trial.first, name="dut")
        return c, {"out": h.outputs["out"]}
    css = blocks.build_css(c, CSS_FIRST, name="css") if kind in ("not", "and_fast", "flank") else None
    if kind == "or":
        h = blocks.build_or(c, trial.n, name="dut")
    elif kind == "and_classic":
        h = blocks.build_and_classic(c, trial.n, name="dut")
    elif kind == "and_fast":
        h = blocks.build_and_fast(c, trial.n, css, name="dut")
    elif kind == "xor":
        h = blocks.build_xor(c, trial.n, name="dut")
    elif kind == "not":
        h = blocks.build_not(c, css, name="dut")
    elif kind == "latch":
        h = blocks.build_sr_latch(c, name="dut")
    elif kind == "switch":
        h = blocks.build_switch(c, name="dut")
    elif kind == "flank":
        h = blocks.build_flank_detector(c, css, name="dut")
    else:
        raise ValueError(f"unknown block kind {kind!r}")
    for terminal, train in zip(h.input_terminals, trial.trains):
        src = c.add_source(f"stim.{terminal.port}", train)
        blocks.connect(c, src, terminal)
    if kind == "switch":
        return c, {"u": (h.neurons["u"],), "c": (h.neurons["c"],)}
    return c, dict(h.outputs)


def simulate_trial(trial: Trial, backend: str) -> dict[str, tuple[int, ...]]:
    circuit, ports = _build(trial)
    trace = run(circuit, SimConfig(backend=backend, horizon=trial.horizon))
    out = {}
    for port, endpoints in ports.items():
        ticks: set[int] = set()
        for e in endpoints:
            ticks.update(trace.ticks(circuit.names[e]))
        out[port] = tuple(sorted(ticks))
    return out


def expected_trial(trial: Trial) -> dict[str, tuple[int, ...]]:
    kind, h = trial.kind, trial.horizon
    stims = oracle.StimulusSet(trial.trains, h)
    if kind == "or":
        return {"out": oracle.oracle_or(stims).ticks}
    if kind == "and_classic":
        return {"out": oracle.oracle_and(stims, trial.n, 2).ticks}
    if kind == "and_fast":
        return {"out": oracle.oracle_and(stims, trial.n, 1).ticks}
    if kind == "xor":
        return {"out": oracle.oracle_xor(stims, trial.n).ticks}
    if kind == "not":
        return {"out": oracle.oracle_not(trial.trains[0], CSS_FIRST, h).ticks}
    if kind == "latch":
        return {"out": oracle.oracle_latch(trial.trains[0], trial.trains[1], h).ticks}
    if kind == "switch":
        u, c = oracle.oracle_switch(trial.trains[0], h)
        return {"u": u.ticks, "c": c.ticks}
    if kind == "css":
        return {"out": oracle.oracle_css(trial.first, h).ticks}
    if kind == "oscillator":
        return {"out": oracle.oracle_oscillator(trial.half_period, trial.first, h).ticks}
    if kind == "flank":
        rise, fall = oracle.oracle_flank(trial.trains[0], h)
        return {"rise": rise.ticks, "fall": fall.ticks}
    raise ValueError(f"unknown block kind {kind!r}")


def run_trial(trial: Trial, backends=("abstract", "lif")) -> list[str]:
    """Mismatch descriptions for one trial; empty when every backend agrees with the oracle."""
    want = expected_trial(trial)
    problems = []
    for backend in backends:
        got = simulate_trial(trial, backend)
        for port in want:
            if got[port] != want[port]:
                extra = sorted(set(got[port]) - set(want[port]))
                missing = sorted(set(want[port]) - set(got[port]))
                problems.append(f"{backend} {port}: unexpected {extra} missing {missing}")
    return problems


@dataclass
class GateReport:
    kind: str
    n: int
    trials: int
    seed: int
    horizon: int
    backends: tuple[str, ...]
    failures: list[tuple[int, list[str]]]

    @property
    def mismatches(self) -> int:
        return len(self.failures)

    def render(self) -> str:
        lines = [
            f"gate-test {self.kind} n={self.n} trials={self.trials} seed={self.seed} "
            f"horizon={self.horizon} backends={','.join(self.backends)}"
        ]
        for index, problems in self.failures:
            for p in problems:
                lines.append(f"  trial {index}: {p}")
        lines.append(f"mismatches: {self.mismatches}")
        return "\n".join(lines) + "\n"


def gate_test(
    kind: str,
    n: int = 2,
    trials: int = 100,
    seed: int = 0,
    horizon: int = 200,
    backends: tuple[str, ...] = ("abstract", "lif"),
) -> GateReport:
    if not arity_ok(kind, n):
        raise ValueError(f"{kind} does not accept {n} inputs")
    rng = random.Random(f"{kind}/{n}/{seed}")
    failures = []
    for index in range(trials):
        problems = run_trial(random_trial(kind, n, rng, horizon), backends)
        if problems:
            failures.append((index, problems))
    return GateReport(kind, n, trials, seed, horizon, tuple(backends), failures)
