"""Phase-shift oscillator: waveform, frequency, per-arm phase, loading and v-i phase.

    python scripts/reproduce_oscillator.py --out results/oscillator
"""

import argparse
from pathlib import Path

from memsim.analysis.oscillator import osc_frequency
from memsim.analysis.spectral import fft, phase_shift, sustained_oscillation
from memsim.circuits import PhaseShiftSpec, build_phase_shift_oscillator
from memsim.engine import transient_run
from memsim.netlist import serialize


def measure(spec: PhaseShiftSpec, out: Path | None = None) -> dict:
    netlist = build_phase_shift_oscillator(spec)
    w = transient_run(netlist)
    res = sustained_oscillation(w["V(amp)"], w.dt)
    f0 = res.frequency
    arms = [phase_shift(w[a], w[b], f0, w.dt) for a, b in (("V(in)", "V(n1)"), ("V(n1)", "V(n2)"), ("V(n2)", "V(n3)"))]
    half = len(w.t) // 2
    amps = [fft(w[f"V(n{k})"][half:], w.dt, "hann").at(f0) for k in (1, 2, 3)]
    vi = [phase_shift(w[f"V(n{k})"], w[f"I(M{k})"], f0, w.dt) for k in (1, 2, 3)]
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "oscillator.cir").write_text(serialize(netlist))
        w.to_csv(out / "oscillator.csv")
        fft(w["V(amp)"][half:], w.dt, "hann").to_csv(out / "oscillator_spectrum.csv")
    return dict(kind=res.kind, ratio=res.rms_ratio, f=f0, predicted=osc_frequency(spec.design()),
                arms=arms, amps=amps, vi=vi, gain=spec.gain)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, help="directory for netlist, waveform and spectrum CSVs")
    ap.add_argument("--sweep", action="store_true", help="also sweep the gain margin")
    args = ap.parse_args()

    r = measure(PhaseShiftSpec(), args.out)
    print(f"gain k = {r['gain']:.4g}")
    print(f"classification: {r['kind']} (rms ratio {r['ratio']:.4f})")
    print(f"frequency: {r['f']:.2f} Hz, predicted {r['predicted']:.2f} Hz ({100 * (r['f'] / r['predicted'] - 1):+.2f}%)")
    print("arm phase (deg): " + ", ".join(f"{p:.2f}" for p in r["arms"]) + f"; total {sum(r['arms']):.2f}")
    print("amplitude across M1..M3 (V): " + ", ".join(f"{a:.4g}" for a in r["amps"]))
    print("memristor v-i phase (deg): " + ", ".join(f"{p:.2e}" for p in r["vi"]))

    if args.sweep:
        base = PhaseShiftSpec()
        crit = base.gain / 1.1
        print("\nmargin  kind       rms ratio  f (Hz)")
        for margin in (0.5, 0.9, 1.05, 1.1, 1.3):
            w = transient_run(build_phase_shift_oscillator(PhaseShiftSpec(k=margin * crit)), probes=["V(amp)"])
            s = sustained_oscillation(w["V(amp)"], w.dt)
            print(f"{margin:5.2f}   {s.kind:9s}  {s.rms_ratio:8.4f}  {s.frequency:.2f}")


if __name__ == "__main__":
    main()
