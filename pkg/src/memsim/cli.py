"""Command-line front end.

Exit codes: 0 success, 1 bad input (netlist parse error, missing column,
non-positive design values, no spectral peak), 2 simulation failure, 3 I/O.
Command-line ``--tstep``/``--tstop`` override the netlist's ``.tran``.
Numeric flags accept engineering suffixes (``10k``, ``10n``).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import circuits
from .analysis import oscillator as osc
from .analysis import spectral
from .engine import SimConfig, SimulationError, SingularMatrix, Waveform, transient_run
from .netlist import NetlistError, parse, parse_number, serialize

EXIT_INPUT, EXIT_SIM, EXIT_IO = 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _err(msg: str) -> None:
    print(f"memsim: {msg}", file=sys.stderr)


def _check_out(path: Path) -> Path:
    if not path.parent.is_dir():
        raise CliError(EXIT_IO, f"output directory {str(path.parent)!r} does not exist")
    return path


def _read_text(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {str(path)!r}: {exc.strerror}") from exc


def _write(path: Path, writer) -> None:
    try:
        writer(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {str(path)!r}: {exc.strerror}") from exc


def _run(netlist, **overrides) -> Waveform:
    try:
        cfg = SimConfig.from_netlist(netlist, **overrides)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    try:
        return transient_run(netlist, cfg)
    except (SimulationError, SingularMatrix) as exc:
        raise CliError(EXIT_SIM, f"simulation failed: {exc}") from exc


def cmd_simulate(args) -> int:
    out = _check_out(Path(args.out))
    text = _read_text(Path(args.netlist))
    try:
        netlist = parse(text)
    except NetlistError as exc:
        raise CliError(EXIT_INPUT, f"{args.netlist}: {exc}") from exc
    wave = _run(netlist, dt=args.tstep, t_stop=args.tstop, method=args.method)
    _write(out, wave.to_csv)
    print(f"wrote {len(wave.t)} samples x {len(wave.names)} channels to {out}")
    return 0


def _load_wave(path: Path) -> Waveform:
    if not path.is_file():
        raise CliError(EXIT_IO, f"cannot read {str(path)!r}")
    try:
        return Waveform.from_csv(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {str(path)!r}: {exc.strerror}") from exc
    except (ValueError, IndexError) as exc:
        raise CliError(EXIT_INPUT, f"{path}: not a waveform CSV ({exc})") from exc


def cmd_fft(args) -> int:
    out = _check_out(Path(args.out))
    wave = _load_wave(Path(args.csv))
    if args.column not in wave.channels:
        raise CliError(EXIT_INPUT, f"no column {args.column!r}; have {', '.join(wave.names)}")
    try:
        spec = spectral.fft(wave[args.column], wave.dt, args.window)
    except spectral.EmptyChannel as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    _write(out, spec.to_csv)
    try:
        f = spectral.dominant_frequency(spec, ignore_dc=True)
    except spectral.NoPeak as exc:
        raise CliError(EXIT_INPUT, f"no dominant frequency: {exc}") from exc
    print(f"dominant_frequency_hz: {f:.9g}")
    return 0


def cmd_analyze(args) -> int:
    vals = {"m1": args.m1, "m2": args.m2, "m3": args.m3, "c": args.c, "r4": args.r4}
    bad = [k for k, v in vals.items() if not v > 0]
    if args.k is not None and not args.k > 0:
        bad.append("k")
    if bad:
        raise CliError(EXIT_INPUT, "values must be positive: " + ", ".join(bad))
    k = args.k if args.k is not None else osc.gain_alpha(args.m1, args.m2, args.m3)
    report = osc.design_report(osc.OscillatorDesign(k=k, **vals))
    print("\n".join(report.lines()))
    return 0


def _demo_phase_shift(wave: Waveform, spec: circuits.PhaseShiftSpec) -> list[str]:
    res = spectral.sustained_oscillation(wave["V(amp)"], wave.dt)
    predicted = osc.osc_frequency(spec.design())
    arms = [spectral.phase_shift(wave[a], wave[b], res.frequency, wave.dt)
            for a, b in (("V(in)", "V(n1)"), ("V(n1)", "V(n2)"), ("V(n2)", "V(n3)"))]
    return [
        f"classification: {res.kind} (rms ratio {res.rms_ratio:.4f})",
        f"frequency_hz: {res.frequency:.6g} predicted {predicted:.6g} "
        f"({100 * (res.frequency / predicted - 1):+.2f}%)",
        "arm_phase_deg: " + " ".join(f"{p:.2f}" for p in arms) + f" total {sum(arms):.2f}",
    ]


def _demo_integrator(wave: Waveform, spec: circuits.IntegratorSpec) -> list[str]:
    period = spec.source.period
    tail = wave["V(out)"][-spec.samples_per_period:]
    m = circuits.effective_memristance(spec.params)
    amp = (spec.source.v2 - spec.source.v1) / 2
    expected = amp * period / (2 * m * spec.c)
    vpp = float(tail.max() - tail.min())
    return [f"vpp: {vpp:.6g} V expected {expected:.6g} V ({100 * (vpp / expected - 1):+.2f}%)"]


def _demo_differentiator(wave: Waveform, spec: circuits.DifferentiatorSpec) -> list[str]:
    edges = circuits.edge_areas(wave.t, wave["V(out)"], spec.source)
    m = circuits.effective_memristance(spec.params)
    lines = []
    for e in edges[:2]:
        expected = -m * spec.c * e.step
        lines.append(f"spike_area at t={e.t:.6g}s: {e.area:.6g} V*s expected {expected:.6g} V*s "
                     f"({100 * (e.area / expected - 1):+.2f}%)")
    return lines


DEMOS = {
    "phase-shift": (circuits.PhaseShiftSpec, circuits.build_phase_shift_oscillator, "V(amp)", _demo_phase_shift),
    "integrator": (circuits.IntegratorSpec, circuits.build_integrator, "V(out)", _demo_integrator),
    "differentiator": (circuits.DifferentiatorSpec, circuits.build_differentiator, "V(out)", _demo_differentiator),
}


def cmd_demo(args) -> int:
    outdir = Path(args.out)
    if not outdir.is_dir():
        raise CliError(EXIT_IO, f"output directory {str(outdir)!r} does not exist")
    make_spec, build, column, headline = DEMOS[args.name]
    spec = make_spec()
    netlist = build(spec)
    stem = args.name.replace("-", "_")
    _write(outdir / f"{stem}.cir", lambda p: p.write_text(serialize(netlist)))
    wave = _run(netlist)
    _write(outdir / f"{stem}.csv", wave.to_csv)
    window = "hann" if args.name == "phase-shift" else "none"
    samples = wave[column][len(wave.t) // 2:] if args.name == "phase-shift" else wave[column]
    _write(outdir / f"{stem}_spectrum.csv", spectral.fft(samples, wave.dt, window).to_csv)
    print("\n".join(headline(wave, spec)))
    return 0


def _number(text: str) -> float:
    try:
        return parse_number(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


class _Parser(argparse.ArgumentParser):
    # usage errors are bad input, not a simulation failure (argparse uses 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="memsim", description="Memristor circuit simulator")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a transient analysis on a netlist")
    p.add_argument("netlist")
    p.add_argument("--tstep", type=_number, help="time step in s (overrides .tran)")
    p.add_argument("--tstop", type=_number, help="stop time in s (overrides .tran)")
    p.add_argument("--method", choices=("trap", "be"), default="trap")
    p.add_argument("--out", required=True, help="waveform CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fft", help="amplitude spectrum of one waveform column")
    p.add_argument("csv")
    p.add_argument("--column", required=True)
    p.add_argument("--window", choices=spectral.WINDOWS, default="hann")
    p.add_argument("--out", required=True, help="spectrum CSV path")
    p.set_defaults(func=cmd_fft)

    p = sub.add_parser("oscillator-analyze", help="phase-shift oscillator design report")
    for name in ("m1", "m2", "m3"):
        p.add_argument(f"--{name}", type=_number, required=True, help="ohms")
    p.add_argument("--c", type=_number, required=True, help="farads")
    p.add_argument("--k", type=_number, help="amplifier gain (default: alpha)")
    p.add_argument("--r4", type=_number, default=1e3, help="ohms")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("demo", help="build, simulate and analyse a reference circuit")
    p.add_argument("name", choices=sorted(DEMOS))
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _err(str(exc))
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
