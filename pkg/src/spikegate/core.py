"""Circuit data model and the tick-by-tick simulator.

Time is discrete: one tick is one millisecond. Two backends share the same
event scheduling and differ only in how a neuron turns the input arriving on
a tick into a spike:

* ``abstract``: fire iff the signed sum of unit weights arriving this tick is
  at least 1. Nothing carries over between ticks.
* ``lif``: current-based leaky integrate-and-fire, integrated with an
  exponential-Euler step per tick. Unit weights are scaled to nA by
  :func:`calibrate_unit_current`.

Per tick ``t`` the simulator (1) emits source spikes scheduled at ``t``,
(2) delivers synaptic events due at ``t``, (3) evaluates every neuron,
(4) schedules downstream events at ``t + delay`` for everything that spiked,
and (5) records probes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

__all__ = [
    "DEFAULT_PARAMS",
    "CircuitError",
    "CircuitGraph",
    "NeuronParams",
    "NeuronState",
    "SimConfig",
    "SpikeTrain",
    "Synapse",
    "Trace",
    "abstract_tick",
    "calibrate_unit_current",
    "lif_tick",
    "run",
    "validate",
]

TICK_MS = 1.0

# Currents below this (nA) are flushed to zero so idle neurons can be skipped.
_CURRENT_FLUSH = 1e-24


class CircuitError(ValueError):
    """Raised for malformed circuits or rejected construction steps."""


@dataclass(frozen=True)
class NeuronParams:
    """LIF constants. Units: nF, ms, mV."""

    c_m: float = 0.1
    tau_m: float = 0.1
    tau_refrac: float = 1.0
    tau_syn_E: float = 0.1
    tau_syn_I: float = 0.1
    v_rest: float = -65.0
    v_reset: float = -65.0
    v_thresh: float = -64.91

    def problems(self) -> list[str]:
        out = []
        for name in ("tau_m", "tau_syn_E", "tau_syn_I", "c_m"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0 (got {getattr(self, name)})")
        if not self.tau_refrac >= 0:
            out.append(f"tau_refrac must be >= 0 (got {self.tau_refrac})")
        if not self.v_reset <= self.v_rest < self.v_thresh:
            out.append(
                "potentials must satisfy v_reset <= v_rest < v_thresh "
                f"(got {self.v_reset}, {self.v_rest}, {self.v_thresh})"
            )
        return out


DEFAULT_PARAMS = NeuronParams()


@dataclass(frozen=True)
class Synapse:
    pre: int
    post: int
    weight: int
    delay: int
    connection: int
    owner: str | None = None


@dataclass
class NeuronState:
    v: float
    i_E: float = 0.0
    i_I: float = 0.0
    last_spike_tick: int | None = None

    @classmethod
    def at_rest(cls, params: NeuronParams) -> NeuronState:
        return cls(v=params.v_rest)


@dataclass(frozen=True)
class SpikeTrain:
    """Spike ticks of one signal, strictly increasing and non-negative."""

    signal: str
    ticks: tuple[int, ...] = ()

    def __post_init__(self):
        ticks = tuple(int(t) for t in self.ticks)
        if any(t < 0 for t in ticks):
            raise ValueError(f"{self.signal}: negative spike tick")
        if any(b <= a for a, b in zip(ticks, ticks[1:])):
            raise ValueError(f"{self.signal}: spike ticks must be strictly increasing")
        object.__setattr__(self, "ticks", ticks)

    def __len__(self):
        return len(self.ticks)

    def __iter__(self):
        return iter(self.ticks)

    def __contains__(self, tick):
        return tick in self.ticks

    @classmethod
    def union(cls, signal: str, trains: Iterable[Iterable[int]]) -> SpikeTrain:
        merged: set[int] = set()
        for train in trains:
            merged.update(train)
        return cls(signal, tuple(sorted(merged)))


@dataclass(frozen=True)
class SimConfig:
    backend: str = "abstract"
    horizon: int = 100
    unit_current: float | None = None  # nA per unit weight; None calibrates per parameter set
    record_membrane: bool = False

    def __post_init__(self):
        if self.backend not in ("lif", "abstract"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.unit_current is not None and not self.unit_current > 0:
            raise ValueError("unit_current must be > 0")
        if self.record_membrane and self.backend != "lif":
            raise ValueError("membrane recording needs the lif backend")


@dataclass(frozen=True)
class Trace:
    """Result of a run: spike trains per signal, optional membrane samples (mV)."""

    spikes: Mapping[str, SpikeTrain]
    horizon: int
    membrane: Mapping[str, tuple[float, ...]] | None = None

    def __post_init__(self):
        for name, train in self.spikes.items():
            if train.ticks and train.ticks[-1] >= self.horizon:
                raise ValueError(f"{name}: spike at or beyond horizon {self.horizon}")

    def __getitem__(self, signal: str) -> SpikeTrain:
        return self.spikes[signal]

    def ticks(self, signal: str) -> tuple[int, ...]:
        return self.spikes[signal].ticks

    def select(self, signals: Mapping[str, Sequence[str]]) -> Trace:
        """New trace whose signals are unions of existing ones.

        ``signals`` maps a new signal name to the names it merges.
        """
        spikes = {
            label: SpikeTrain.union(label, (self.spikes[s].ticks for s in members))
            for label, members in signals.items()
        }
        return Trace(spikes=spikes, horizon=self.horizon, membrane=self.membrane)


@dataclass
class CircuitGraph:
    """Neurons, spike sources and synapses sharing one endpoint id space."""

    names: list[str] = field(default_factory=list)
    params: dict[int, NeuronParams] = field(default_factory=dict)
    sources: dict[int, tuple[int, ...]] = field(default_factory=dict)
    owners: dict[int, str | None] = field(default_factory=dict)
    synapses: list[Synapse] = field(default_factory=list)
    probes: set[int] = field(default_factory=set)
    n_connections: int = 0

    def __post_init__(self):
        self._index = {name: i for i, name in enumerate(self.names)}

    # -- construction -------------------------------------------------

    def _register(self, name: str, owner: str | None) -> int:
        if name in self._index:
            raise CircuitError(f"duplicate endpoint name {name!r}")
        ident = len(self.names)
        self.names.append(name)
        self._index[name] = ident
        self.owners[ident] = owner
        return ident

    def add_neuron(self, name: str, params: NeuronParams = DEFAULT_PARAMS, owner: str | None = None) -> int:
        bad = params.problems()
        if bad:
            raise CircuitError(f"{name}: " + "; ".join(bad))
        ident = self._register(name, owner)
        self.params[ident] = params
        return ident

    def add_source(self, name: str, spike_ticks: Iterable[int] = (), owner: str | None = None) -> int:
        ticks = tuple(spike_ticks)
        if any(t < 0 for t in ticks) or any(b <= a for a, b in zip(ticks, ticks[1:])):
            raise CircuitError(f"{name}: spike ticks must be strictly increasing and >= 0, got {list(ticks)}")
        ident = self._register(name, owner)
        self.sources[ident] = ticks
        return ident

    def add_connection(
        self,
        pres: Sequence[int],
        post: int,
        weight: int,
        delay: int,
        owner: str | None = None,
    ) -> list[int]:
        """Add one logical connection fanning in from every endpoint in ``pres``.

        Each pre endpoint gets its own synapse; all share a connection index,
        which is what resource accounting counts.
        """
        if isinstance(delay, bool) or int(delay) != delay or delay < 1:
            raise CircuitError(f"delay must be an integer >= 1 tick, got {delay}")
        if int(weight) != weight or weight == 0:
            raise CircuitError(f"weight must be a non-zero integer, got {weight}")
        if post not in self.params:
            raise CircuitError(f"synapse target {self._label(post)} is not a neuron")
        for pre in pres:
            if not self.exists(pre):
                raise CircuitError(f"synapse source {self._label(pre)} does not exist")
        conn = self.n_connections
        self.n_connections += 1
        ids = []
        for pre in pres:
            ids.append(len(self.synapses))
            self.synapses.append(Synapse(pre, post, int(weight), int(delay), conn, owner))
        return ids

    def add_synapse(self, pre: int, post: int, weight: int, delay: int, owner: str | None = None) -> int:
        return self.add_connection([pre], post, weight, delay, owner)[0]

    def probe(self, *endpoints: int) -> None:
        for e in endpoints:
            if not self.exists(e):
                raise CircuitError(f"cannot probe missing endpoint {e}")
            self.probes.add(e)

    # -- queries ------------------------------------------------------

    def exists(self, ident: int) -> bool:
        return ident in self.params or ident in self.sources

    def is_neuron(self, ident: int) -> bool:
        return ident in self.params

    def is_source(self, ident: int) -> bool:
        return ident in self.sources

    def id_of(self, name: str) -> int:
        return self._index[name]

    def _label(self, ident: int) -> str:
        if 0 <= ident < len(self.names):
            return repr(self.names[ident])
        return f"#{ident}"

    def owned_by(self, block: str) -> tuple[list[int], set[int]]:
        """Endpoints and connection indices belonging to ``block`` or its sub-blocks."""

        def mine(owner):
            return owner is not None and (owner == block or owner.startswith(block + "."))

        endpoints = [i for i in range(len(self.names)) if mine(self.owners.get(i))]
        connections = {s.connection for s in self.synapses if mine(s.owner)}
        return endpoints, connections

    def dump(self) -> str:
        """Canonical JSON text of the whole structure, for determinism checks."""
        doc = {
            "endpoints": [
                {
                    "id": i,
                    "name": name,
                    "owner": self.owners.get(i),
                    "kind": "neuron" if i in self.params else "source",
                    **({"params": vars(self.params[i])} if i in self.params else {}),
                    **({"spikes": list(self.sources[i])} if i in self.sources else {}),
                }
                for i, name in enumerate(self.names)
            ],
            "synapses": [vars(s) for s in self.synapses],
            "probes": sorted(self.probes),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def validate(circuit: CircuitGraph) -> list[str]:
    """One diagnostic string per broken invariant; empty when the circuit is sound."""
    out = []
    for ident, params in sorted(circuit.params.items()):
        for p in params.problems():
            out.append(f"neuron {circuit._label(ident)}: {p}")
    for ident, ticks in sorted(circuit.sources.items()):
        if any(t < 0 for t in ticks) or any(b <= a for a, b in zip(ticks, ticks[1:])):
            out.append(f"source {circuit._label(ident)}: spike ticks must be strictly increasing and >= 0")
    for k, syn in enumerate(circuit.synapses):
        where = f"synapse {k} ({circuit._label(syn.pre)} -> {circuit._label(syn.post)})"
        if not circuit.exists(syn.pre):
            out.append(f"{where}: source endpoint {circuit._label(syn.pre)} does not exist")
        if not circuit.is_neuron(syn.post):
            out.append(f"{where}: target endpoint {circuit._label(syn.post)} is not an existing neuron")
        if syn.delay < 1:
            out.append(f"{where}: delay {syn.delay} violates the minimum delay of 1 tick")
        if syn.weight == 0:
            out.append(f"{where}: weight must be non-zero")
    for p in sorted(circuit.probes):
        if not circuit.exists(p):
            out.append(f"probe {circuit._label(p)} does not exist")
    return out


# -- neuron updates ---------------------------------------------------


def _refractory(state: NeuronState, t: int, tau_refrac: float) -> bool:
    last = state.last_spike_tick
    return last is not None and 0 < (t - last) * TICK_MS < tau_refrac


def abstract_tick(state: NeuronState, net: int, t: int, tau_refrac: float = DEFAULT_PARAMS.tau_refrac) -> bool:
    """Threshold-gate update: fire iff ``net >= 1`` and not refractory."""
    if net >= 1 and not _refractory(state, t, tau_refrac):
        state.last_spike_tick = t
        return True
    return False


@lru_cache(maxsize=None)
def _lif_factors(params: NeuronParams) -> tuple[float, float, float, float]:
    return (
        math.exp(-TICK_MS / params.tau_syn_E),
        math.exp(-TICK_MS / params.tau_syn_I),
        math.exp(-TICK_MS / params.tau_m),
        params.tau_m / params.c_m,  # membrane resistance, MOhm
    )


def lif_tick(
    state: NeuronState,
    params: NeuronParams,
    exc_in: float,
    inh_in: float,
    unit_current: float,
    t: int,
) -> bool:
    """Advance one neuron by one tick under the LIF model.

    ``exc_in`` and ``inh_in`` are non-negative magnitudes in units. Currents
    carried from the previous tick decay first, arriving events are added,
    then the membrane relaxes toward ``v_rest + I * R`` over the tick with
    the current held constant. The threshold is checked at the tick boundary.
    """
    dec_e, dec_i, dec_m, r_m = _lif_factors(params)
    i_e = state.i_E * dec_e + exc_in * unit_current
    i_i = state.i_I * dec_i + inh_in * unit_current
    state.i_E = i_e if i_e > _CURRENT_FLUSH else 0.0
    state.i_I = i_i if i_i > _CURRENT_FLUSH else 0.0
    if _refractory(state, t, params.tau_refrac):
        state.v = params.v_reset
        return False
    v_inf = params.v_rest + (i_e - i_i) * r_m
    state.v = v_inf + (state.v - v_inf) * dec_m
    if state.v >= params.v_thresh:
        state.last_spike_tick = t
        return True
    return False


# Calibrated units sit this far above the exact one-unit threshold so that
# 1.0 unit fires and 0.99 does not, each with a 0.5% margin.
_CALIBRATION_CENTRE = 0.995


def _fires_from_rest(params: NeuronParams, current: float) -> bool:
    state = NeuronState.at_rest(params)
    return lif_tick(state, params, 1.0, 0.0, current, 0)


@lru_cache(maxsize=None)
def calibrate_unit_current(params: NeuronParams = DEFAULT_PARAMS, rel_tol: float = 1e-6) -> float:
    """nA per unit weight for ``params``.

    Bisects the smallest current that makes a single event fire a resting
    neuron on its delivery tick, then places the unit so that threshold is
    crossed at 0.995 units.
    """
    bad = params.problems()
    if bad:
        raise CircuitError("; ".join(bad))
    lo, hi = 0.0, 1e-3
    while not _fires_from_rest(params, hi):
        lo, hi = hi, hi * 2.0
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _fires_from_rest(params, mid):
            hi = mid
        else:
            lo = mid
    return hi / _CALIBRATION_CENTRE


# -- simulation -------------------------------------------------------


def run(circuit: CircuitGraph, config: SimConfig) -> Trace:
    """Simulate ``circuit`` over ticks ``[0, config.horizon)``.

    Spikes are recorded for every endpoint, keyed by name. With
    ``record_membrane`` the potential of each probed neuron is sampled once
    per tick (before reset on a firing tick).
    """
    problems = validate(circuit)
    if problems:
        raise CircuitError("circuit failed validation: " + "; ".join(problems))
    horizon = config.horizon
    lif = config.backend == "lif"

    outgoing: dict[int, list[tuple[int, int, int]]] = {}
    max_delay = 1
    for syn in circuit.synapses:
        outgoing.setdefault(syn.pre, []).append((syn.post, syn.weight, syn.delay))
        max_delay = max(max_delay, syn.delay)
    ring = [dict() for _ in range(max_delay + 1)]

    emit_at: dict[int, list[int]] = {}
    for src, ticks in sorted(circuit.sources.items()):
        for t in ticks:
            if t < horizon:
                emit_at.setdefault(t, []).append(src)

    neurons = sorted(circuit.params)
    params = circuit.params
    states = {n: NeuronState.at_rest(params[n]) for n in neurons}
    units = {}
    if lif:
        for n in neurons:
            p = params[n]
            units[n] = config.unit_current if config.unit_current is not None else calibrate_unit_current(p)

    recorded = sorted(n for n in circuit.probes if n in params) if config.record_membrane else []
    membrane = {n: [] for n in recorded}
    spikes: dict[int, list[int]] = {i: [] for i in range(len(circuit.names))}

    for t in range(horizon):
        fired = list(emit_at.get(t, ()))
        slot = t % len(ring)
        inbox = ring[slot]
        ring[slot] = {}
        peak = {}
        if lif:
            for n in neurons:
                st = states[n]
                p = params[n]
                got = inbox.get(n)
                if got is None and st.i_E == 0.0 and st.i_I == 0.0 and st.v == p.v_rest:
                    continue
                exc, inh = got if got is not None else (0, 0)
                if lif_tick(st, p, exc, inh, units[n], t):
                    fired.append(n)
                    peak[n] = st.v
                    st.v = p.v_reset
        else:
            for n in sorted(inbox):
                exc, inh = inbox[n]
                if abstract_tick(states[n], exc - inh, t, params[n].tau_refrac):
                    fired.append(n)
        for e in fired:
            spikes[e].append(t)
            for post, weight, delay in outgoing.get(e, ()):
                bucket = ring[(t + delay) % len(ring)]
                acc = bucket.get(post)
                if acc is None:
                    acc = bucket[post] = [0, 0]
                if weight > 0:
                    acc[0] += weight
                else:
                    acc[1] -= weight
        for n in recorded:
            membrane[n].append(peak.get(n, states[n].v))

    return Trace(
        spikes={circuit.names[i]: SpikeTrain(circuit.names[i], tuple(ts)) for i, ts in spikes.items()},
        horizon=horizon,
        membrane={circuit.names[n]: tuple(vs) for n, vs in membrane.items()} if config.record_membrane else None,
    )
