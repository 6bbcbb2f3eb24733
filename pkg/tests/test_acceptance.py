"""Acceptance suite: one test per criterion, summarised as PASS/FAIL lines at the end of the run."""

import os
import random
import subprocess
import sys
import time

import pytest

from spikegate import bench, blocks, traceio
from spikegate.core import (
    DEFAULT_PARAMS,
    CircuitGraph,
    NeuronState,
    SimConfig,
    Trace,
    calibrate_unit_current,
    lif_tick,
    run,
)
from spikegate.netlist import (
    BlockStmt,
    ConnectStmt,
    Endpoint,
    NetlistAst,
    NetlistError,
    ProbeStmt,
    RunStmt,
    SourceStmt,
    elaborate,
    format_netlist,
    parse,
)
from spikegate.repro import EXPERIMENTS, load_netlist, repro

BACKENDS = ("abstract", "lif")
V_REST = DEFAULT_PARAMS.v_rest


def _sources(c, handle, trains):
    for term, ticks in zip(handle.input_terminals, trains):
        blocks.connect(c, c.add_source(f"stim.{term.port}", ticks), term)


@pytest.mark.acceptance(1, "oracle equivalence, every block kind, both backends, < 30 s")
def test_oracle_equivalence():
    plan = []
    for kind in blocks.BLOCK_KINDS:
        arities = [n for n in (2, 3, 4) if bench.arity_ok(kind, n)] if kind in bench.ARITY else [0]
        plan += [(kind, n) for n in arities]
    started = time.perf_counter()
    reports = [bench.gate_test(kind, n, trials=100, seed=0, horizon=200, backends=BACKENDS) for kind, n in plan]
    elapsed = time.perf_counter() - started
    for r in reports:
        print(f"{r.kind} n={r.n}: {r.mismatches} mismatching trials")
    print(f"{len(reports) * 100} trials in {elapsed:.1f} s")
    assert sum(r.mismatches for r in reports) == 0, "".join(r.render() for r in reports if r.mismatches)
    assert elapsed < 30.0


@pytest.mark.acceptance(2, "backend equivalence on every repro circuit, horizon 1000")
def test_backend_equivalence():
    for name in EXPERIMENTS:
        elab = elaborate(parse(load_netlist(name)))
        a = run(elab.circuit, SimConfig("abstract", 1000))
        b = run(elab.circuit, SimConfig("lif", 1000))
        assert a.spikes == b.spikes, f"{name}: {traceio.diff(a, b)[:5]}"
        assert any(tr.ticks for tr in a.spikes.values())


@pytest.mark.acceptance(3, "resource table reproduction")
def test_resource_table():
    c = CircuitGraph()
    css = blocks.build_css(c)
    for n in (2, 3, 4):
        assert blocks.resource_report(blocks.build_or(c, n)) == (1, n, 1)
        assert blocks.resource_report(blocks.build_and_classic(c, n)) == (2, 2 * n + 1, 2)
        assert blocks.resource_report(blocks.build_xor(c, n)) == (2 * n, n * n + n, 2)
        assert blocks.resource_report(blocks.build_and_fast(c, n, css)) == (3, n + 3, 1)
    assert blocks.resource_report(blocks.build_sr_latch(c, with_reset=False)) == (1, 2, 1)
    assert blocks.resource_report(blocks.build_sr_latch(c)) == (1, 3, 1)
    assert blocks.resource_report(blocks.build_switch(c)) == (2, 6, 1)
    assert blocks.resource_report(css) == (2, 2, 1)
    assert blocks.resource_report(blocks.build_not(c, css)) == (3, 4, 1)
    assert blocks.resource_report(blocks.build_sync_oscillator(c, 4)) == (3, 3, 1)
    fd = blocks.build_flank_detector(c, css)
    neurons, connections, latency = blocks.resource_report(fd)
    assert (connections, latency) == (14, (2, 3))
    # documented deviation: 7 with the shared constant source, 5 without it
    assert neurons == 7
    assert blocks.resource_report(fd, include_css=False)[0] == 5


def _and_pair(n, trains, backend, membrane=False):
    c = CircuitGraph()
    css = blocks.build_css(c, 1)
    classic = blocks.build_and_classic(c, n, name="classic")
    fast = blocks.build_and_fast(c, n, css, name="fast")
    _sources(c, classic, trains)
    for term, ticks in zip(fast.input_terminals, trains):
        blocks.connect(c, c.id_of(f"stim.{term.port}"), term)
    c.probe(classic.neurons["out"], fast.neurons["out"])
    return run(c, SimConfig(backend, 20, record_membrane=membrane))


@pytest.mark.acceptance(4, "AND timing: classic +2, fast +1, n-1 inputs stay silent at rest")
def test_and_timing():
    for n in (2, 3, 4):
        all_in = [[5, 11]] * n
        for backend in BACKENDS:
            tr = _and_pair(n, all_in, backend)
            assert tr.ticks("classic.out") == (7, 13)
            assert tr.ticks("fast.out") == (6, 12)
            classic = Trace({"out": tr.spikes["classic.out"]}, 20)
            fast = Trace({"out": tr.spikes["fast.out"]}, 20)
            assert traceio.diff(classic, fast, latency_shift=1) == []

        missing_one = [[5]] * (n - 1) + [[]]
        assert not _and_pair(n, missing_one, "abstract").ticks("classic.out")
        tr = _and_pair(n, missing_one, "lif", membrane=True)
        assert tr.ticks("classic.out") == () and tr.ticks("fast.out") == ()
        # decision tick: classic output at 7, fast output at 6
        v_classic = tr.membrane["classic.out"][7]
        assert abs(v_classic - V_REST) < 1e-6
        v_fast = tr.membrane["fast.out"][6]
        print(f"n={n}: classic |v-v_rest| = {abs(v_classic - V_REST):.2e} mV, "
              f"fast |v-v_rest| = {abs(v_fast - V_REST):.2e} mV")

        # The fast output is held below rest by the constant source before the
        # decision tick, so what is exact there is cancellation against that
        # trajectory: n-1 inputs vs. no inputs and no hold at the same tick.
        u = calibrate_unit_current()
        held = NeuronState.at_rest(DEFAULT_PARAMS)
        for t in range(2, 6):
            lif_tick(held, DEFAULT_PARAMS, 0, n - 1, u, t)
        cancelled = NeuronState(held.v, held.i_E, held.i_I, held.last_spike_tick)
        lif_tick(cancelled, DEFAULT_PARAMS, n - 1, n - 1, u, 6)
        lif_tick(held, DEFAULT_PARAMS, 0, 0, u, 6)
        assert cancelled.v == pytest.approx(v_fast, abs=1e-9)
        assert abs(cancelled.v - held.v) < 1e-6
        assert v_fast <= V_REST


@pytest.mark.acceptance(5, "flank detector: clock high 6..9 gives rise at 8 and fall at 13")
def test_flank_timing():
    for clock_from_oscillator in (True, False):
        c = CircuitGraph()
        css = blocks.build_css(c, 1)
        fd = blocks.build_flank_detector(c, css, name="fd")
        if clock_from_oscillator:
            clk = blocks.build_sync_oscillator(c, 4, first_spike=5, name="clk")
            blocks.connect(c, clk, fd.terminal("in0"))
            clk_name = "clk.a"
        else:
            blocks.connect(c, c.add_source("clk", [6, 7, 8, 9]), fd.terminal("in0"))
            clk_name = "clk"
        for backend in BACKENDS:
            tr = run(c, SimConfig(backend, 15))
            assert [t for t in tr.ticks(clk_name) if t < 12] == [6, 7, 8, 9]
            assert tr.ticks("fd.rise.out") == (8,)
            assert tr.ticks("fd.fall.out") == (13,)


@pytest.mark.acceptance(6, "switch checkpoints for input 1,6,7,8")
def test_switch_checkpoints():
    c = CircuitGraph()
    sw = blocks.build_switch(c, name="sw")
    blocks.connect(c, c.add_source("in", [1, 6, 7, 8]), sw.terminal("in0"))
    for backend in BACKENDS:
        tr = run(c, SimConfig(backend, 12))
        u, cyc = tr.ticks("sw.u"), tr.ticks("sw.c")
        assert 2 in u
        assert min(cyc) == 3 and all(t in cyc for t in range(3, 7))
        assert not [t for t in cyc if t >= 7]
        assert 8 in u
        assert 9 not in cyc
    assert repro("switch").passed


@pytest.mark.acceptance(7, "calibration: 1.0 unit fires, 0.99 does not, k-vs-k cancellation")
def test_calibration():
    u = calibrate_unit_current(DEFAULT_PARAMS)
    s = NeuronState.at_rest(DEFAULT_PARAMS)
    assert lif_tick(s, DEFAULT_PARAMS, 1.0, 0.0, u, 0)
    s = NeuronState.at_rest(DEFAULT_PARAMS)
    assert not lif_tick(s, DEFAULT_PARAMS, 0.99, 0.0, u, 0)
    for k in range(1, 6):
        s = NeuronState.at_rest(DEFAULT_PARAMS)
        assert not lif_tick(s, DEFAULT_PARAMS, k, k, u, 0)
        assert abs(s.v - V_REST) < 1e-6


# -- criterion 8 ---------------------------------------------------------

_KEYWORDS = ("source", "block", "connect", "probe", "run", "spikes", "delay", "inputs")


def _ident(rng):
    first = rng.choice("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
    rest = "".join(rng.choice("abcxyz0123456789_") for _ in range(rng.randrange(0, 6)))
    name = first + rest
    return rng.choice(_KEYWORDS) if rng.random() < 0.05 else name


def _endpoint(rng):
    return Endpoint(_ident(rng), rng.choice([None, "out", "in0", "in3", "set", "rise", _ident(rng)]))


def _param(rng):
    return rng.choice([None, None, rng.randrange(0, 12)])


def random_ast(rng):
    names = list(dict.fromkeys(_ident(rng) for _ in range(rng.randrange(0, 8))))
    stmts = []
    for name in names:
        if rng.random() < 0.4:
            stmts.append(SourceStmt(name, tuple(sorted(rng.sample(range(300), rng.randrange(0, 6))))))
        else:
            stmts.append(BlockStmt(rng.choice(blocks.BLOCK_KINDS), name, _param(rng), _param(rng), _param(rng)))
    for _ in range(rng.randrange(0, 6)):
        stmts.append(ConnectStmt(_endpoint(rng), _endpoint(rng), rng.choice([0, 0, rng.randrange(1, 20)])))
    for _ in range(rng.randrange(0, 4)):
        stmts.append(ProbeStmt(_endpoint(rng)))
    if rng.random() < 0.7:
        stmts.append(RunStmt(rng.randrange(1, 5000)))
    rng.shuffle(stmts)
    return NetlistAst(tuple(stmts))


def _corrupt(line, rng):
    op = rng.randrange(3)
    if op == 0:
        pos = rng.randrange(len(line) + 1)
        return line[:pos] + rng.choice("@$%!?;") + line[pos:]
    if op == 1:
        head, _, tail = line.strip().partition(" ")
        return f"{head}x {tail}"
    return line + " ] ["


@pytest.mark.acceptance(8, "netlist round trip, error recovery, deterministic elaboration")
def test_parser():
    rng = random.Random(8)
    for _ in range(1000):
        ast = random_ast(rng)
        text = format_netlist(ast)
        assert parse(text) == ast, text

    corpus = [load_netlist(name) for name in EXPERIMENTS]
    for trial in range(200):
        lines = rng.choice(corpus).splitlines()
        code = [i for i, ln in enumerate(lines) if ln.split("#", 1)[0].strip()]
        k = rng.randint(1, min(10, len(code)))
        for i in rng.sample(code, k):
            lines[i] = _corrupt(lines[i].split("#", 1)[0], rng)
        with pytest.raises(NetlistError) as err:
            parse("\n".join(lines) + "\n")
        assert len(err.value.diagnostics) >= k, (trial, k, err.value)

    script = (
        "import sys\n"
        "from spikegate.netlist import elaborate, parse\n"
        "from spikegate.repro import load_netlist\n"
        "sys.stdout.write(elaborate(parse(load_netlist(sys.argv[1]))).circuit.dump())\n"
    )
    for name in EXPERIMENTS:
        here = elaborate(parse(load_netlist(name))).circuit.dump()
        assert elaborate(parse(load_netlist(name))).circuit.dump() == here
        for hash_seed in ("1", "2"):
            env = dict(os.environ, PYTHONHASHSEED=hash_seed)
            out = subprocess.run([sys.executable, "-c", script, name], capture_output=True, env=env, check=True)
            assert out.stdout.decode() == here
