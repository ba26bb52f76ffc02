"""Integrator and differentiator under a 1 V, 1 kHz square wave.

    python scripts/reproduce_integrator_differentiator.py --out results/opamp
"""

import argparse
from pathlib import Path

from memsim.analysis.spectral import fft, harmonic_ratio
from memsim.circuits import (
    DifferentiatorSpec, IntegratorSpec, build_differentiator, build_integrator, edge_areas, effective_memristance,
)
from memsim.device_models import MemristorParams, x0_for_memristance
from memsim.engine import transient_run
from memsim.netlist import serialize

TAIL = 8192  # eight whole periods at 1024 samples per period


def _save(out, stem, netlist, w):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.cir").write_text(serialize(netlist))
    w.to_csv(out / f"{stem}.csv")
    fft(w["V(out)"][-TAIL:], w.dt).to_csv(out / f"{stem}_spectrum.csv")


def integrator(out):
    params = MemristorParams(x0=x0_for_memristance(MemristorParams(), 1e4))
    spec = IntegratorSpec(params=params)
    netlist = build_integrator(spec)
    w = transient_run(netlist)
    _save(out, "integrator", netlist, w)
    mc = effective_memristance(params) * spec.c
    last = w["V(out)"][-spec.samples_per_period:]
    print(f"integrator (MC = {mc:.3g} s)")
    print(f"  Vpp {last.max() - last.min():.4f} V, expected {1.0 * 1e-3 / (2 * mc):.4f} V")
    for n in (3, 5, 7):
        ro = harmonic_ratio(w["V(out)"][-TAIL:], w.dt, 1e3, n)
        ri = harmonic_ratio(w["V(in)"][-TAIL:], w.dt, 1e3, n)
        print(f"  H{n}/H1 output {ro:.5f} (1/n^2 = {1 / n**2:.5f}), input {ri:.5f} (1/n = {1 / n:.5f})")


def differentiator(out, placement):
    spec = DifferentiatorSpec(r1_placement=placement)
    netlist = build_differentiator(spec)
    w = transient_run(netlist)
    _save(out, f"differentiator_{placement}", netlist, w)
    mc = effective_memristance(spec.params) * spec.c
    edges = edge_areas(w.t, w["V(out)"], spec.source)
    print(f"differentiator, R1 = {spec.r1:g} ohm in {placement} (MC = {mc:.3g} s)")
    for e in edges[:4]:
        print(f"  edge at {1e3 * e.t:.3f} ms: area {e.area:+.4e} V*s, -MC*dV = {-mc * e.step:+.4e} V*s")
    ro = harmonic_ratio(w["V(out)"][-TAIL:], w.dt, 1e3)
    ri = harmonic_ratio(w["V(in)"][-TAIL:], w.dt, 1e3)
    print(f"  H3/H1 output {ro:.4f}, input {ri:.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, help="directory for netlists, waveforms and spectra")
    args = ap.parse_args()
    integrator(args.out)
    differentiator(args.out, "series")
    differentiator(args.out, "parallel")


if __name__ == "__main__":
    main()
