"""The ``.snl`` circuit description language.

One statement per line::

    source ID spikes=[T, ...]
    block KIND ID [inputs=N] [half_period=K] [first=T]
    connect EP -> EP [delay=+D]
    probe EP
    run T

``EP`` is ``ID`` or ``ID.port``. ``#`` starts a comment that runs to the end of
the line. Times and delays are integer ticks (1 tick = 1 ms).

:func:`format_netlist` emits one canonical line per statement and drops
comments and blank lines, so ``parse(format_netlist(ast)) == ast``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from . import blocks
from .core import CircuitError, CircuitGraph

__all__ = [
    "BlockStmt",
    "ConnectStmt",
    "Diagnostic",
    "Elaboration",
    "Endpoint",
    "NetlistAst",
    "NetlistError",
    "ProbeStmt",
    "RunStmt",
    "SourceStmt",
    "elaborate",
    "format_netlist",
    "parse",
]

BLOCK_PARAMS = ("inputs", "half_period", "first")


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    line: int
    column: int
    message: str
    lexeme: str = ""

    def __str__(self):
        near = f" (at {self.lexeme!r})" if self.lexeme else ""
        return f"{self.line}:{self.column}: {self.severity}: {self.message}{near}"


class NetlistError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class Endpoint:
    name: str
    port: str | None = None

    def __str__(self):
        return self.name if self.port is None else f"{self.name}.{self.port}"


@dataclass(frozen=True)
class SourceStmt:
    name: str
    ticks: tuple[int, ...]
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BlockStmt:
    kind: str
    name: str
    inputs: int | None = None
    half_period: int | None = None
    first: int | None = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ConnectStmt:
    src: Endpoint
    dst: Endpoint
    delay: int = 0
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ProbeStmt:
    endpoint: Endpoint
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RunStmt:
    horizon: int
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


Statement = Union[SourceStmt, BlockStmt, ConnectStmt, ProbeStmt, RunStmt]


@dataclass(frozen=True)
class NetlistAst:
    statements: tuple[Statement, ...]

    @property
    def horizon(self) -> int | None:
        for s in self.statements:
            if isinstance(s, RunStmt):
                return s.horizon
        return None


# -- lexing -----------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\f\v]+)"
    r"|(?P<arrow>->)"
    r"|(?P<int>[+-]?\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[\[\],=.])"
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, arrow, punct, end
    text: str
    column: int


class _Syntax(Exception):
    def __init__(self, message: str, token: Token):
        self.message = message
        self.token = token


def _tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise _Syntax(f"unexpected character {text[pos]!r}", Token("bad", text[pos], pos + 1))
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    tokens.append(Token("end", "", len(text) + 1))
    return tokens


class _Line:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "end":
            self.i += 1
        return tok

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            wanted = what or (repr(text) if text else kind)
            found = "end of line" if tok.kind == "end" else repr(tok.text)
            raise _Syntax(f"expected {wanted}, found {found}", tok)
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.next()
        return None

    def integer(self, what: str, signed: bool = False) -> int:
        tok = self.expect("int", what=what)
        if not signed and tok.text[0] in "+-":
            raise _Syntax(f"{what} must be an unsigned integer", tok)
        return int(tok.text)

    def endpoint(self) -> Endpoint:
        name = self.expect("ident", what="endpoint name").text
        if self.accept("punct", "."):
            return Endpoint(name, self.expect("ident", what="port name").text)
        return Endpoint(name)

    def done(self):
        tok = self.peek()
        if tok.kind != "end":
            raise _Syntax(f"unexpected {tok.text!r} after statement", tok)


def _parse_line(line: _Line, lineno: int) -> Statement:
    head = line.expect("ident", what="statement keyword")
    col = head.column
    word = head.text
    if word == "source":
        name = line.expect("ident", what="source name").text
        line.expect("ident", "spikes")
        line.expect("punct", "=")
        line.expect("punct", "[")
        ticks: list[int] = []
        if not line.accept("punct", "]"):
            while True:
                tok = line.peek()
                t = line.integer("spike tick")
                if ticks and t <= ticks[-1]:
                    raise _Syntax("spike ticks must be strictly increasing", tok)
                ticks.append(t)
                if line.accept("punct", "]"):
                    break
                line.expect("punct", ",", what="',' or ']'")
        line.done()
        return SourceStmt(name, tuple(ticks), lineno, col)
    if word == "block":
        kind_tok = line.expect("ident", what="block kind")
        if kind_tok.text not in blocks.BLOCK_KINDS:
            raise _Syntax(f"unknown block kind; expected one of {', '.join(blocks.BLOCK_KINDS)}", kind_tok)
        name = line.expect("ident", what="block name").text
        params: dict[str, int] = {}
        while line.peek().kind != "end":
            key = line.expect("ident", what="parameter name")
            if key.text not in BLOCK_PARAMS:
                raise _Syntax(f"unknown parameter; expected one of {', '.join(BLOCK_PARAMS)}", key)
            if key.text in params:
                raise _Syntax("duplicate parameter", key)
            line.expect("punct", "=")
            params[key.text] = line.integer(f"value of {key.text}")
        return BlockStmt(kind_tok.text, name, line=lineno, column=col, **params)
    if word == "connect":
        src = line.endpoint()
        line.expect("arrow", what="'->'")
        dst = line.endpoint()
        delay = 0
        if line.accept("ident", "delay"):
            line.expect("punct", "=")
            tok = line.peek()
            delay = line.integer("delay", signed=True)
            if delay < 0:
                raise _Syntax("extra delay must be >= 0", tok)
        line.done()
        return ConnectStmt(src, dst, delay, lineno, col)
    if word == "probe":
        ep = line.endpoint()
        line.done()
        return ProbeStmt(ep, lineno, col)
    if word == "run":
        tok = line.peek()
        horizon = line.integer("horizon")
        if horizon < 1:
            raise _Syntax("horizon must be >= 1", tok)
        line.done()
        return RunStmt(horizon, lineno, col)
    raise _Syntax("expected one of source, block, connect, probe, run", head)


def parse(text: str) -> NetlistAst:
    """Parse ``.snl`` text. Raises :class:`NetlistError` carrying every diagnostic found.

    Parsing resumes at the next line after an error, so independent mistakes
    are all reported.
    """
    diagnostics: list[Diagnostic] = []
    statements: list[Statement] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        try:
            statements.append(_parse_line(_Line(_tokenize(body)), lineno))
        except _Syntax as err:
            diagnostics.append(Diagnostic("error", lineno, err.token.column, err.message, err.token.text))
    diagnostics += _check_ast(statements)
    if diagnostics:
        raise NetlistError(sorted(diagnostics, key=lambda d: (d.line, d.column)))
    return NetlistAst(tuple(statements))


def _check_ast(statements: list[Statement]) -> list[Diagnostic]:
    out = []
    names: dict[str, int] = {}
    seen_run = False
    for s in statements:
        if isinstance(s, (SourceStmt, BlockStmt)):
            if s.name in names:
                out.append(Diagnostic("error", s.line, s.column, f"name {s.name!r} already defined on line {names[s.name]}", s.name))
            else:
                names[s.name] = s.line
        elif isinstance(s, RunStmt):
            if seen_run:
                out.append(Diagnostic("error", s.line, s.column, "more than one run statement", "run"))
            seen_run = True
    return out


# -- formatting -------------------------------------------------------


def _format_stmt(s: Statement) -> str:
    if isinstance(s, SourceStmt):
        return f"source {s.name} spikes=[{','.join(str(t) for t in s.ticks)}]"
    if isinstance(s, BlockStmt):
        parts = [f"block {s.kind} {s.name}"]
        parts += [f"{k}={getattr(s, k)}" for k in BLOCK_PARAMS if getattr(s, k) is not None]
        return " ".join(parts)
    if isinstance(s, ConnectStmt):
        text = f"connect {s.src} -> {s.dst}"
        return text + (f" delay=+{s.delay}" if s.delay else "")
    if isinstance(s, ProbeStmt):
        return f"probe {s.endpoint}"
    if isinstance(s, RunStmt):
        return f"run {s.horizon}"
    raise TypeError(f"not a statement: {s!r}")


def format_netlist(ast: NetlistAst) -> str:
    return "".join(_format_stmt(s) + "\n" for s in ast.statements)


# -- elaboration ------------------------------------------------------


@dataclass
class Elaboration:
    circuit: CircuitGraph
    handles: dict[str, blocks.BlockHandle]
    sources: dict[str, int]
    horizon: int | None
    probes: list[tuple[str, tuple[int, ...]]]
    css: blocks.SharedCss | None = None

    def signals(self) -> dict[str, list[str]]:
        """Probe label -> names of the endpoints whose spikes it merges."""
        names = self.circuit.names
        return {label: [names[e] for e in eps] for label, eps in self.probes}


_VARIADIC = {"or": 1, "and_classic": 2, "and_fast": 2, "xor": 2}
_ALLOWED_PARAMS = {"oscillator": {"half_period", "first"}, "css": {"first"}}


def _err(stmt, message: str, lexeme: str = "") -> Diagnostic:
    return Diagnostic("error", stmt.line, stmt.column, message, lexeme)


def _block_problems(s: BlockStmt) -> list[Diagnostic]:
    out = []
    allowed = {"inputs"} if s.kind in _VARIADIC else _ALLOWED_PARAMS.get(s.kind, set())
    for key in BLOCK_PARAMS:
        if getattr(s, key) is not None and key not in allowed:
            out.append(_err(s, f"block kind {s.kind} takes no {key} parameter", key))
    if s.kind in _VARIADIC:
        minimum = _VARIADIC[s.kind]
        if s.inputs is None:
            out.append(_err(s, f"block kind {s.kind} needs inputs=N", s.name))
        elif s.inputs < minimum:
            out.append(_err(s, f"block kind {s.kind} needs at least {minimum} inputs, got {s.inputs}", str(s.inputs)))
    if s.kind == "oscillator":
        if s.half_period is None:
            out.append(_err(s, "oscillator needs half_period=K", s.name))
        elif s.half_period < 1:
            out.append(_err(s, "half_period must be >= 1", str(s.half_period)))
    return out


def elaborate(ast: NetlistAst) -> Elaboration:
    """Build the circuit described by ``ast``.

    Blocks that need a constant spike source share one: the first ``css``
    block declared in the file, or else an implicit one named ``css`` that
    fires first at tick 1. A latch gets only the ports some ``connect``
    statement uses (both when none are used).
    """
    diags: list[Diagnostic] = []
    stmts = ast.statements
    decl: dict[str, Statement] = {s.name: s for s in stmts if isinstance(s, (SourceStmt, BlockStmt))}

    for s in stmts:
        if isinstance(s, BlockStmt):
            diags += _block_problems(s)
    if diags:
        raise NetlistError(diags)

    latch_ports: dict[str, set[str]] = {}
    for s in stmts:
        if isinstance(s, ConnectStmt) and isinstance(decl.get(s.dst.name), BlockStmt):
            if decl[s.dst.name].kind == "latch" and s.dst.port in ("set", "reset"):
                latch_ports.setdefault(s.dst.name, set()).add(s.dst.port)

    circuit = CircuitGraph()
    handles: dict[str, blocks.BlockHandle] = {}
    sources: dict[str, int] = {}
    css = None
    explicit_css = [s for s in stmts if isinstance(s, BlockStmt) and s.kind == "css"]
    needs_css = any(isinstance(s, BlockStmt) and s.kind in ("not", "and_fast", "flank") for s in stmts)
    if explicit_css:
        first = explicit_css[0]
        css = blocks.build_css(circuit, first.first if first.first is not None else 1, name=first.name)
        handles[first.name] = css
    elif needs_css:
        if "css" in decl:
            raise NetlistError([_err(decl["css"], "name 'css' is reserved for the implicit constant spike source", "css")])
        css = blocks.build_css(circuit, 1, name="css")

    try:
        for s in stmts:
            if isinstance(s, SourceStmt):
                sources[s.name] = circuit.add_source(s.name, s.ticks)
            elif isinstance(s, BlockStmt) and s.name not in handles:
                handles[s.name] = _build_block(circuit, s, css, latch_ports.get(s.name))
    except CircuitError as e:
        raise NetlistError([_err(s, str(e), s.name)]) from None

    probes: list[tuple[str, tuple[int, ...]]] = []
    drivers: dict[tuple[str, str], list[int]] = {}
    for s in stmts:
        if isinstance(s, ConnectStmt):
            try:
                src = _resolve_output(s.src, sources, handles)
                dst = _resolve_input(s.dst, handles)
                blocks.connect(circuit, src, dst, s.delay)
                drivers.setdefault((dst.block, dst.port), []).extend(src)
            except CircuitError as e:
                diags.append(_err(s, str(e), str(s.dst)))
    for s in stmts:
        if isinstance(s, ProbeStmt):
            try:
                eps = _resolve_probe(s.endpoint, sources, handles, drivers)
                probes.append((str(s.endpoint), eps))
                circuit.probe(*eps)
            except CircuitError as e:
                diags.append(_err(s, str(e), str(s.endpoint)))
    if diags:
        raise NetlistError(diags)
    if not any(isinstance(s, ProbeStmt) for s in stmts):
        probes = [(name, (e,)) for name, e in sources.items()]
        for name, h in handles.items():
            for port, eps in h.outputs.items():
                probes.append((f"{name}.{port}", eps))
    return Elaboration(circuit, handles, sources, ast.horizon, probes, css)


def _build_block(circuit, s: BlockStmt, css, latch_ports) -> blocks.BlockHandle:
    kind, name = s.kind, s.name
    if kind == "or":
        return blocks.build_or(circuit, s.inputs, name=name)
    if kind == "and_classic":
        return blocks.build_and_classic(circuit, s.inputs, name=name)
    if kind == "and_fast":
        return blocks.build_and_fast(circuit, s.inputs, css, name=name)
    if kind == "xor":
        return blocks.build_xor(circuit, s.inputs, name=name)
    if kind == "not":
        return blocks.build_not(circuit, css, name=name)
    if kind == "latch":
        ports = latch_ports or {"set", "reset"}
        return blocks.build_sr_latch(circuit, "set" in ports, "reset" in ports, name=name)
    if kind == "switch":
        return blocks.build_switch(circuit, name=name)
    if kind == "oscillator":
        return blocks.build_sync_oscillator(circuit, s.half_period, s.first if s.first is not None else 1, name=name)
    if kind == "flank":
        return blocks.build_flank_detector(circuit, css, name=name)
    if kind == "css":
        return blocks.build_css(circuit, s.first if s.first is not None else 1, name=name)
    raise CircuitError(f"unknown block kind {kind!r}")


def _port_range_error(h: blocks.BlockHandle, port: str) -> CircuitError:
    if re.fullmatch(r"in\d+", port) and h.kind in _VARIADIC:
        return CircuitError(f"port out of range: {h.name} has inputs in0..in{h.n - 1}")
    return CircuitError(f"block {h.name!r} ({h.kind}) has no port {port!r}")


def _resolve_output(ep: Endpoint, sources, handles) -> tuple[int, ...]:
    if ep.name in sources:
        if ep.port not in (None, "out"):
            raise CircuitError(f"source {ep.name!r} has only the port 'out'")
        return (sources[ep.name],)
    h = handles.get(ep.name)
    if h is None:
        raise CircuitError(f"undefined name {ep.name!r}")
    port = ep.port or "out"
    if port not in h.outputs:
        if port in h.inputs:
            raise CircuitError(f"{ep} is an input port and cannot drive a connection")
        raise _port_range_error(h, port)
    return h.outputs[port]


def _resolve_input(ep: Endpoint, handles) -> blocks.Terminal:
    h = handles.get(ep.name)
    if h is None:
        raise CircuitError(f"undefined block {ep.name!r}")
    if ep.port is None:
        if len(h.inputs) != 1:
            raise CircuitError(f"block {ep.name!r} has {len(h.inputs)} inputs; name the port")
        return next(iter(h.inputs.values()))
    port = "in0" if ep.port == "in" else ep.port
    if port not in h.inputs:
        raise _port_range_error(h, ep.port)
    return h.inputs[port]


def _resolve_probe(ep: Endpoint, sources, handles, drivers) -> tuple[int, ...]:
    """Outputs, internal neuron roles, or an input port (its drivers)."""
    if ep.name in sources:
        return _resolve_output(ep, sources, handles)
    h = handles.get(ep.name)
    if h is None:
        raise CircuitError(f"undefined name {ep.name!r}")
    port = ep.port or "out"
    if port in h.outputs:
        return h.outputs[port]
    if port in h.neurons:
        return (h.neurons[port],)
    if port in h.inputs or port == "in":
        key = (ep.name, "in0" if port == "in" else port)
        return tuple(dict.fromkeys(drivers.get(key, ())))
    raise _port_range_error(h, port)
