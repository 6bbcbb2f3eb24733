"""Spike-based logic building blocks on a discrete-time LIF simulator."""

from .blocks import (
    BlockHandle,
    SharedCss,
    build_and_classic,
    build_and_fast,
    build_css,
    build_flank_detector,
    build_not,
    build_or,
    build_sr_latch,
    build_switch,
    build_sync_oscillator,
    build_xor,
    connect,
    resource_report,
)
from .core import (
    DEFAULT_PARAMS,
    CircuitError,
    CircuitGraph,
    NeuronParams,
    SimConfig,
    SpikeTrain,
    Trace,
    calibrate_unit_current,
    run,
    validate,
)

__version__ = "0.1.0"
