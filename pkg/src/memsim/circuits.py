"""Netlist builders for the phase-shift oscillator, integrator and differentiator.

Node names used by the builders:

* oscillator: ``amp`` (amplifier output), ``in`` (ladder input, ``amp`` plus
  the startup kick), ``n1..n3`` (ladder nodes; ``n3`` drives the amplifier).
* integrator and differentiator: ``in``, ``sum`` (virtual ground), ``out``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import device_models as dm
from .analysis.oscillator import OscillatorDesign, critical_gain
from .device_models import MemristorParams
from .netlist import (
    PULSE, VCVS, Capacitor, Memristor, Netlist, OpAmp, Probe, Resistor, SourceSpec, Tran, VoltageSource,
)

__all__ = [
    "PhaseShiftSpec", "IntegratorSpec", "DifferentiatorSpec",
    "build_phase_shift_oscillator", "build_integrator", "build_differentiator",
    "square_wave", "effective_memristance", "Edge", "edge_areas",
]

#: headroom over the critical gain so oscillation builds up
GAIN_MARGIN = 1.1


def square_wave(amplitude: float = 1.0, freq: float = 1e3, edge: float = 1e-6) -> PULSE:
    """Zero-mean square wave between -amplitude and +amplitude, rising at t = 0."""
    period = 1.0 / freq
    return PULSE(-amplitude, amplitude, 0.0, edge, edge, period / 2 - edge, period)


def effective_memristance(params: MemristorParams) -> float:
    return dm.memristance(params, params.x0)


@dataclass(frozen=True)
class PhaseShiftSpec:
    """Three memristor-capacitor high-pass arms closed by an inverting gain stage.

    ``k=None`` picks ``GAIN_MARGIN`` times the ladder's critical gain. ``vmax``
    is the soft-clip knee of the gain stage (``None`` for a linear stage).
    ``startup_kick`` is a step of that height with a 1 us rise in series with
    the ladder input. ``r3``/``c4`` add a parallel RC load on the amplifier
    output; ``r4`` is the amplifier-side resistance.
    """

    arms: tuple[MemristorParams, MemristorParams, MemristorParams] = (
        MemristorParams(), MemristorParams(), MemristorParams())
    c: float = 10e-9
    k: float | None = None
    r4: float = 1e3
    r3: float | None = None
    c4: float | None = None
    vmax: float | None = 5.0
    startup_kick: float = 1.0
    t_step: float = 1e-6
    t_stop: float = 50e-3

    def __post_init__(self):
        if len(self.arms) != 3:
            raise ValueError("need exactly three arms")
        for name in ("c", "r4", "t_step", "t_stop"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("k", "r3", "c4", "vmax"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")

    def design(self, k: float = 0.0) -> OscillatorDesign:
        m1, m2, m3 = (effective_memristance(p) for p in self.arms)
        return OscillatorDesign(m1, m2, m3, self.c, k if self.k is None else self.k, self.r4)

    @property
    def gain(self) -> float:
        if self.k is not None:
            return self.k
        return GAIN_MARGIN * critical_gain(self.design(), model="ladder")


@dataclass(frozen=True)
class IntegratorSpec:
    params: MemristorParams = field(default_factory=MemristorParams)
    c: float = 10e-9
    source: SourceSpec = field(default_factory=square_wave)
    periods: int = 10
    samples_per_period: int = 1024

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")


@dataclass(frozen=True)
class DifferentiatorSpec:
    """``r1_placement="series"`` puts R1 in series with the input capacitor;
    ``"parallel"`` puts it across the feedback memristor."""

    params: MemristorParams = field(default_factory=MemristorParams)
    c: float = 10e-9
    r1: float = 10.0
    r1_placement: str = "series"
    source: SourceSpec = field(default_factory=square_wave)
    periods: int = 10
    samples_per_period: int = 1024

    def __post_init__(self):
        if not (self.c > 0 and self.r1 > 0):
            raise ValueError("c and r1 must be positive")
        if self.r1_placement not in ("series", "parallel"):
            raise ValueError(f"r1_placement must be 'series' or 'parallel', got {self.r1_placement!r}")


def build_phase_shift_oscillator(spec: PhaseShiftSpec = PhaseShiftSpec()) -> Netlist:
    k = spec.gain
    kick = PULSE(0.0, spec.startup_kick, 0.0, 1e-6, 1e-6, 1e3, 2e3)
    parts = [
        VCVS("E1", ("amp", "0", "n3", "0"), gain=-k, vmax=spec.vmax),
        Resistor("R4", ("amp", "0"), spec.r4),
        VoltageSource("VKICK", ("in", "amp"), kick),
    ]
    prev = "in"
    for j, params in enumerate(spec.arms, start=1):
        node = f"n{j}"
        parts.append(Capacitor(f"C{j}", (prev, node), spec.c))
        parts.append(Memristor(f"M{j}", (node, "0"), params))
        prev = node
    if spec.r3 is not None:
        parts.append(Resistor("R3", ("amp", "load"), spec.r3))
        parts.append(Capacitor("C4", ("load", "0"), spec.c4 if spec.c4 is not None else spec.c))
    elif spec.c4 is not None:
        parts.append(Capacitor("C4", ("amp", "0"), spec.c4))
    probes = ["V(amp)", "V(in,n1)", "V(n1,n2)", "V(n2,n3)", "V(in)", "V(n1)", "V(n2)", "V(n3)"]
    for j in (1, 2, 3):
        probes += [f"I(M{j})", f"X(M{j})"]
    return Netlist(
        "memristor phase-shift oscillator",
        parts,
        [Tran(spec.t_step, spec.t_stop), Probe(tuple(probes))],
    ).validate()


def _period(source: SourceSpec) -> float:
    return source.period if isinstance(source, PULSE) else 1.0 / getattr(source, "freq", 1e3)


def _tran(spec) -> Tran:
    period = _period(spec.source)
    return Tran(period / spec.samples_per_period, spec.periods * period)


def build_integrator(spec: IntegratorSpec = IntegratorSpec()) -> Netlist:
    """Inverting integrator: memristor into the virtual ground, C in feedback."""
    parts = [
        VoltageSource("V1", ("in", "0"), spec.source),
        Memristor("M1", ("in", "sum"), spec.params),
        Capacitor("C1", ("sum", "out"), spec.c),
        OpAmp("O1", ("out", "0", "sum")),
    ]
    probes = ("V(in)", "V(out)", "I(M1)", "X(M1)")
    return Netlist("memristor integrator", parts, [_tran(spec), Probe(probes)]).validate()


def build_differentiator(spec: DifferentiatorSpec = DifferentiatorSpec()) -> Netlist:
    """Inverting differentiator: C into the virtual ground, memristor in feedback."""
    parts = [VoltageSource("V1", ("in", "0"), spec.source)]
    if spec.r1_placement == "series":
        parts += [
            Capacitor("C1", ("in", "a"), spec.c),
            Resistor("R1", ("a", "sum"), spec.r1),
        ]
    else:
        parts += [
            Capacitor("C1", ("in", "sum"), spec.c),
            Resistor("R1", ("sum", "out"), spec.r1),
        ]
    parts += [
        Memristor("M1", ("sum", "out"), spec.params),
        OpAmp("O1", ("out", "0", "sum")),
    ]
    probes = ("V(in)", "V(out)", "I(M1)", "X(M1)")
    return Netlist("memristor differentiator", parts, [_tran(spec), Probe(probes)]).validate()


@dataclass(frozen=True)
class Edge:
    t: float
    step: float  # input change across the edge, volts
    area: float  # integral of the response over the surrounding half period


def edge_areas(t: np.ndarray, v: np.ndarray, source: PULSE) -> list[Edge]:
    """Integrate ``v`` over a half-period window centred on each complete edge
    of ``source`` inside the record (trapezoid rule)."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    quarter = source.period / 4
    edges = []
    k = 0
    while True:
        base = source.delay + k * source.period
        for start, step in ((base, source.v2 - source.v1),
                            (base + source.rise + source.width, source.v1 - source.v2)):
            lo, hi = start - quarter, start + quarter
            if lo < t[0] or hi > t[-1]:
                continue
            sel = (t >= lo) & (t <= hi)
            edges.append(Edge(start, step, float(np.trapezoid(v[sel], t[sel]))))
        if base > t[-1]:
            return edges
        k += 1
