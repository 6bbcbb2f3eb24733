"""Spike-based logic blocks built inside a :class:`~spikegate.core.CircuitGraph`.

Every block exposes named input terminals and output ports. A terminal is not
a neuron: it is the list of taps (target neuron, weight, delay) that any
driver connected to it is wired to. Delays on taps are relative to the spike
time of the driver, so an OR gate driven by a source spiking at ``t`` fires
at ``t + 1``.

Resource counts are measured from the circuit. Neurons are all endpoints
owned by the block (spike sources included). Connections are the logical
connections the block owns plus the taps on its terminals; a connection from
a multi-endpoint port such as the constant spike source counts once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

from .core import DEFAULT_PARAMS, CircuitError, CircuitGraph, NeuronParams

__all__ = [
    "BLOCK_KINDS",
    "BlockHandle",
    "OutputPort",
    "SharedCss",
    "Tap",
    "Terminal",
    "build_and_classic",
    "build_and_fast",
    "build_css",
    "build_flank_detector",
    "build_not",
    "build_or",
    "build_sr_latch",
    "build_switch",
    "build_sync_oscillator",
    "build_xor",
    "connect",
    "resource_report",
]

BLOCK_KINDS = (
    "or",
    "and_classic",
    "and_fast",
    "latch",
    "switch",
    "xor",
    "css",
    "not",
    "oscillator",
    "flank",
)


@dataclass(frozen=True)
class Tap:
    target: int
    weight: int
    delay: int


@dataclass(frozen=True)
class Terminal:
    block: str
    port: str
    taps: tuple[Tap, ...]

    def delayed(self, extra: int, port: str | None = None, block: str | None = None) -> Terminal:
        return Terminal(
            block or self.block,
            port or self.port,
            tuple(Tap(t.target, t.weight, t.delay + extra) for t in self.taps),
        )


@dataclass(frozen=True)
class OutputPort:
    block: str
    port: str
    endpoints: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class BlockHandle:
    name: str
    kind: str
    inputs: dict[str, Terminal]
    outputs: dict[str, tuple[int, ...]]
    neurons: dict[str, int]
    latency: int | tuple[int, int]
    resources: tuple[int, int] = (0, 0)
    n: int | None = None
    css: SharedCss | None = None
    first_valid_tick: int = 0
    parts: dict[str, BlockHandle] = field(default_factory=dict)
    circuit: CircuitGraph | None = field(default=None, repr=False)

    @property
    def input_terminals(self) -> list[Terminal]:
        return list(self.inputs.values())

    @property
    def output_neurons(self) -> list[int]:
        seen: list[int] = []
        for endpoints in self.outputs.values():
            seen.extend(e for e in endpoints if e not in seen)
        return seen

    def terminal(self, port: str) -> Terminal:
        if port == "in" and "in0" in self.inputs:
            port = "in0"
        try:
            return self.inputs[port]
        except KeyError:
            raise CircuitError(
                f"block {self.name!r} ({self.kind}) has no input port {port!r}; "
                f"ports: {', '.join(self.inputs) or 'none'}"
            ) from None

    def port(self, name: str = "out") -> OutputPort:
        try:
            return OutputPort(self.name, name, self.outputs[name])
        except KeyError:
            raise CircuitError(
                f"block {self.name!r} ({self.kind}) has no output port {name!r}; "
                f"ports: {', '.join(self.outputs)}"
            ) from None


@dataclass(frozen=True, eq=False)
class SharedCss(BlockHandle):
    """Constant spike source: a one-shot source that sets a self-exciting latch."""

    @property
    def source(self) -> int:
        return self.neurons["src"]

    @property
    def latch(self) -> int:
        return self.neurons["latch"]

    @property
    def first_spike(self) -> int:
        return self.first_valid_tick


Driver = Union[BlockHandle, OutputPort, int, Sequence[int]]


def _endpoints(src: Driver) -> tuple[int, ...]:
    if isinstance(src, OutputPort):
        return src.endpoints
    if isinstance(src, BlockHandle):
        return src.port("out").endpoints
    if isinstance(src, int):
        return (src,)
    return tuple(src)


def connect(
    circuit: CircuitGraph,
    src: Driver,
    terminal: Terminal,
    extra_delay: int = 0,
    owner: str | None = None,
) -> list[int]:
    """Wire every endpoint of ``src`` to ``terminal``; returns the new synapse ids.

    Each tap becomes one connection, its delay raised by ``extra_delay``.
    """
    if not isinstance(terminal, Terminal):
        raise CircuitError(f"connection target must be an input terminal, got {terminal!r}")
    if extra_delay < 0:
        raise CircuitError(f"extra_delay must be >= 0, got {extra_delay}")
    pres = _endpoints(src)
    if not pres:
        raise CircuitError("connection source has no endpoints")
    ids: list[int] = []
    for tap in terminal.taps:
        ids += circuit.add_connection(pres, tap.target, tap.weight, tap.delay + extra_delay, owner)
    return ids


def _count(circuit: CircuitGraph, name: str, inputs: dict[str, Terminal]) -> tuple[int, int]:
    endpoints, connections = circuit.owned_by(name)
    return len(endpoints), len(connections) + sum(len(t.taps) for t in inputs.values())


def resource_report(handle: BlockHandle, include_css: bool = True) -> tuple[int, int, int | tuple[int, int]]:
    """(neurons, connections, latency), counted from the circuit the block lives in.

    Blocks that consume a constant spike source include its two neurons and
    two connections unless ``include_css`` is false.
    """
    circuit = handle.circuit
    neurons, connections = _count(circuit, handle.name, handle.inputs)
    if include_css and handle.css is not None:
        css_n, css_c = _count(circuit, handle.css.name, handle.css.inputs)
        neurons += css_n
        connections += css_c
    return neurons, connections, handle.latency


def _auto_name(circuit: CircuitGraph, kind: str) -> str:
    taken = {o for o in circuit.owners.values() if o}
    k = 0
    while any(o == f"{kind}{k}" or o.startswith(f"{kind}{k}.") for o in taken):
        k += 1
    return f"{kind}{k}"


def _finish(circuit: CircuitGraph, cls=BlockHandle, **kw) -> BlockHandle:
    handle = cls(circuit=circuit, **kw)
    object.__setattr__(handle, "resources", resource_report(handle)[:2])
    return handle


def _need_css(css) -> SharedCss:
    if not isinstance(css, SharedCss):
        raise CircuitError("this block needs a constant spike source built with build_css")
    return css


def build_or(circuit: CircuitGraph, n: int, name: str | None = None, params: NeuronParams = DEFAULT_PARAMS) -> BlockHandle:
    if n < 1:
        raise CircuitError(f"OR needs at least 1 input, got {n}")
    name = name or _auto_name(circuit, "or")
    out = circuit.add_neuron(f"{name}.out", params, owner=name)
    inputs = {f"in{k}": Terminal(name, f"in{k}", (Tap(out, 1, 1),)) for k in range(n)}
    return _finish(
        circuit, name=name, kind="or", inputs=inputs, outputs={"out": (out,)},
        neurons={"out": out}, latency=1, n=n,
    )


def build_and_classic(
    circuit: CircuitGraph, n: int, name: str | None = None, params: NeuronParams = DEFAULT_PARAMS
) -> BlockHandle:
    """OR neuron inhibits the output by n-1 while the inputs reach it 1 tick later."""
    if n < 2:
        raise CircuitError(f"AND needs at least 2 inputs, got {n}")
    name = name or _auto_name(circuit, "and_classic")
    gate = circuit.add_neuron(f"{name}.or", params, owner=name)
    out = circuit.add_neuron(f"{name}.out", params, owner=name)
    circuit.add_synapse(gate, out, -(n - 1), 1, owner=name)
    inputs = {
        f"in{k}": Terminal(name, f"in{k}", (Tap(gate, 1, 1), Tap(out, 1, 2)))
        for k in range(n)
    }
    return _finish(
        circuit, name=name, kind="and_classic", inputs=inputs, outputs={"out": (out,)},
        neurons={"or": gate, "out": out}, latency=2, n=n,
    )


def build_and_fast(
    circuit: CircuitGraph,
    n: int,
    css: SharedCss,
    name: str | None = None,
    params: NeuronParams = DEFAULT_PARAMS,
) -> BlockHandle:
    """Output neuron held down by n-1 units from the constant spike source.

    Outputs are only meaningful for inputs at or after the source's first spike;
    the first valid output tick is recorded on the handle.
    """
    css = _need_css(css)
    if n < 2:
        raise CircuitError(f"AND needs at least 2 inputs, got {n}")
    name = name or _auto_name(circuit, "and_fast")
    out = circuit.add_neuron(f"{name}.out", params, owner=name)
    circuit.add_connection(css.outputs["out"], out, -(n - 1), 1, owner=name)
    inputs = {f"in{k}": Terminal(name, f"in{k}", (Tap(out, 1, 1),)) for k in range(n)}
    return _finish(
        circuit, name=name, kind="and_fast", inputs=inputs, outputs={"out": (out,)},
        neurons={"out": out}, latency=1, n=n, css=css, first_valid_tick=css.first_spike + 1,
    )


def build_sr_latch(
    circuit: CircuitGraph,
    with_set: bool = True,
    with_reset: bool = True,
    name: str | None = None,
    params: NeuronParams = DEFAULT_PARAMS,
) -> BlockHandle:
    if not (with_set or with_reset):
        raise CircuitError("SR latch needs a set port, a reset port, or both")
    name = name or _auto_name(circuit, "latch")
    cell = circuit.add_neuron(f"{name}.out", params, owner=name)
    circuit.add_synapse(cell, cell, 1, 1, owner=name)
    inputs = {}
    if with_set:
        inputs["set"] = Terminal(name, "set", (Tap(cell, 1, 1),))
    if with_reset:
        inputs["reset"] = Terminal(name, "reset", (Tap(cell, -1, 1),))
    return _finish(
        circuit, name=name, kind="latch", inputs=inputs, outputs={"out": (cell,)},
        neurons={"out": cell}, latency=1,
    )


def build_switch(circuit: CircuitGraph, name: str | None = None, params: NeuronParams = DEFAULT_PARAMS) -> BlockHandle:
    """Toggle: input neuron U sets the self-holding cycle neuron C, the next input releases it.

    Both U and C are outputs so the first spike of the ON state is not lost.
    """
    name = name or _auto_name(circuit, "switch")
    u = circuit.add_neuron(f"{name}.u", params, owner=name)
    c = circuit.add_neuron(f"{name}.c", params, owner=name)
    circuit.add_synapse(u, c, 1, 1, owner=name)
    circuit.add_synapse(c, c, 1, 1, owner=name)
    circuit.add_synapse(c, u, -1, 1, owner=name)
    circuit.add_synapse(u, u, -1, 1, owner=name)
    inputs = {"in0": Terminal(name, "in0", (Tap(u, 1, 1), Tap(c, -1, 1)))}
    return _finish(
        circuit, name=name, kind="switch", inputs=inputs, outputs={"out": (u, c)},
        neurons={"u": u, "c": c}, latency=1,
    )


def build_xor(circuit: CircuitGraph, n: int, name: str | None = None, params: NeuronParams = DEFAULT_PARAMS) -> BlockHandle:
    if n < 2:
        raise CircuitError(f"XOR needs at least 2 inputs, got {n}")
    name = name or _auto_name(circuit, "xor")
    ins = [circuit.add_neuron(f"{name}.in{k}", params, owner=name) for k in range(n)]
    outs = [circuit.add_neuron(f"{name}.out{k}", params, owner=name) for k in range(n)]
    for k, i in enumerate(ins):
        for j, o in enumerate(outs):
            circuit.add_synapse(i, o, 1 if j == k else -1, 1, owner=name)
    inputs = {f"in{k}": Terminal(name, f"in{k}", (Tap(i, 1, 1),)) for k, i in enumerate(ins)}
    neurons = {f"in{k}": i for k, i in enumerate(ins)}
    neurons.update({f"out{k}": o for k, o in enumerate(outs)})
    return _finish(
        circuit, name=name, kind="xor", inputs=inputs, outputs={"out": tuple(outs)},
        neurons=neurons, latency=2, n=n,
    )


def build_css(
    circuit: CircuitGraph, first_spike: int = 1, name: str | None = None, params: NeuronParams = DEFAULT_PARAMS
) -> SharedCss:
    """One spike at ``first_spike`` from the source, then one per tick from the latch."""
    if first_spike < 0:
        raise CircuitError(f"first_spike must be >= 0, got {first_spike}")
    name = name or _auto_name(circuit, "css")
    src = circuit.add_source(f"{name}.src", [first_spike], owner=name)
    latch = circuit.add_neuron(f"{name}.latch", params, owner=name)
    circuit.add_synapse(src, latch, 1, 1, owner=name)
    circuit.add_synapse(latch, latch, 1, 1, owner=name)
    return _finish(
        circuit, SharedCss, name=name, kind="css", inputs={}, outputs={"out": (src, latch)},
        neurons={"src": src, "latch": latch}, latency=1, first_valid_tick=first_spike,
    )


def build_not(
    circuit: CircuitGraph, css: SharedCss, name: str | None = None, params: NeuronParams = DEFAULT_PARAMS
) -> BlockHandle:
    css = _need_css(css)
    name = name or _auto_name(circuit, "not")
    out = circuit.add_neuron(f"{name}.out", params, owner=name)
    circuit.add_connection(css.outputs["out"], out, 1, 1, owner=name)
    inputs = {"in0": Terminal(name, "in0", (Tap(out, -1, 1),))}
    return _finish(
        circuit, name=name, kind="not", inputs=inputs, outputs={"out": (out,)},
        neurons={"out": out}, latency=1, css=css, first_valid_tick=css.first_spike + 1,
    )


def build_sync_oscillator(
    circuit: CircuitGraph,
    half_period: int,
    first_spike: int = 1,
    name: str | None = None,
    params: NeuronParams = DEFAULT_PARAMS,
) -> BlockHandle:
    """Clock with ``half_period`` ticks high then low, output neuron A first high at first_spike + 1.

    A burst of ``half_period`` source spikes enters A; A and B pass it back and
    forth over two connections of delay ``half_period``.
    """
    k = half_period
    if k < 1:
        raise CircuitError(f"half_period must be >= 1, got {k}")
    if first_spike < 0:
        raise CircuitError(f"first_spike must be >= 0, got {first_spike}")
    name = name or _auto_name(circuit, "oscillator")
    src = circuit.add_source(f"{name}.src", range(first_spike, first_spike + k), owner=name)
    a = circuit.add_neuron(f"{name}.a", params, owner=name)
    b = circuit.add_neuron(f"{name}.b", params, owner=name)
    circuit.add_synapse(src, a, 1, 1, owner=name)
    circuit.add_synapse(a, b, 1, k, owner=name)
    circuit.add_synapse(b, a, 1, k, owner=name)
    return _finish(
        circuit, name=name, kind="oscillator", inputs={}, outputs={"out": (a,)},
        neurons={"src": src, "a": a, "b": b}, latency=1, n=k, first_valid_tick=first_spike + 1,
    )


def build_flank_detector(
    circuit: CircuitGraph, css: SharedCss, name: str | None = None, params: NeuronParams = DEFAULT_PARAMS
) -> BlockHandle:
    """Rising edges on port ``rise`` 2 ticks late, falling edges on ``fall`` 3 ticks late.

    A NOT of the input feeds two 2-input classic ANDs. The rising AND pairs
    the current input with the inverted previous value; the falling AND pairs
    the previous input, delayed 2 extra ticks, with the inverted current value.
    """
    css = _need_css(css)
    name = name or _auto_name(circuit, "flank")
    inv = build_not(circuit, css, name=f"{name}.not", params=params)
    rise = build_and_classic(circuit, 2, name=f"{name}.rise", params=params)
    fall = build_and_classic(circuit, 2, name=f"{name}.fall", params=params)
    connect(circuit, inv, rise.terminal("in1"), owner=name)
    connect(circuit, inv, fall.terminal("in1"), owner=name)
    taps = inv.terminal("in0").taps + rise.terminal("in0").taps + fall.terminal("in0").delayed(2).taps
    inputs = {"in0": Terminal(name, "in0", taps)}
    neurons = {
        "not": inv.neurons["out"],
        "rise_or": rise.neurons["or"],
        "rise_out": rise.neurons["out"],
        "fall_or": fall.neurons["or"],
        "fall_out": fall.neurons["out"],
    }
    return _finish(
        circuit, name=name, kind="flank", inputs=inputs,
        outputs={"rise": rise.outputs["out"], "fall": fall.outputs["out"]},
        neurons=neurons, latency=(2, 3), css=css, first_valid_tick=css.first_spike + 1,
        parts={"not": inv, "rise": rise, "fall": fall},
    )
