"""Memristor circuit simulation: device model, netlists, MNA transient engine,
oscillator design math and spectral analysis."""

from .device_models import MemristorParams
from .engine import SimConfig, Waveform, transient_run
from .netlist import Netlist, parse, serialize

__all__ = ["MemristorParams", "Netlist", "SimConfig", "Waveform", "parse", "serialize", "transient_run"]
