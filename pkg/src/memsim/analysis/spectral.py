"""Spectra and steady-state measurements on sampled channels.

All functions take a 1-D sample array plus its uniform step ``dt``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import windows

__all__ = [
    "EmptyChannel", "NoPeak", "WeakSignal", "TooShort",
    "Spectrum", "Oscillation", "fft_radix2", "fft", "dominant_frequency",
    "phase_shift", "sustained_oscillation", "harmonic_ratio",
]

WINDOWS = ("none", "hann")
#: amplitude correction for the window's coherent gain
WINDOW_GAIN = {"none": 1.0, "hann": 2.0}


class EmptyChannel(ValueError):
    pass


class NoPeak(ValueError):
    pass


class WeakSignal(ValueError):
    pass


class TooShort(ValueError):
    pass


def fft_radix2(x) -> np.ndarray:
    """Unnormalized DFT ``X[k] = sum x[n] exp(-2j pi k n / N)`` by iterative
    decimation in time. ``len(x)`` must be a power of two."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    if n == 0:
        raise EmptyChannel("empty input")
    if n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    out = x[rev]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(-1, size)
        even = blocks[:, :half].copy()
        odd = blocks[:, half:] * tw
        blocks[:, :half] = even + odd
        blocks[:, half:] = even - odd
        out = blocks.reshape(n)
        size *= 2
    return out


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectrum: a sine of amplitude A centered on a bin
    reads A at that bin; DC reads the mean."""

    freq: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray
    window: str
    n: int
    dt: float

    @property
    def df(self) -> float:
        return 1.0 / (self.n * self.dt)

    def bin_of(self, f: float) -> int:
        return int(min(len(self.freq) - 1, max(0, round(f / self.df))))

    def at(self, f: float) -> float:
        return float(self.magnitude[self.bin_of(f)])

    def to_csv(self, dest) -> None:
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="") as fh:
                self._write(fh)
        else:
            self._write(dest)

    def _write(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["freq_hz", "magnitude", "phase_rad"])
        for row in zip(self.freq, self.magnitude, self.phase):
            w.writerow([format(v, ".17g") for v in row])


def _pow2_tail(x: np.ndarray) -> np.ndarray:
    n = 1 << (len(x).bit_length() - 1)
    return x[len(x) - n:]


def fft(x, dt: float, window: str = "none", pad: bool = False) -> Spectrum:
    """Amplitude spectrum of ``x``.

    Lengths that are not a power of two keep the trailing ``2**k`` samples, or
    are zero-padded up to the next power when ``pad`` is set.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise EmptyChannel("channel has no samples")
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}, got {window!r}")
    if x.size & (x.size - 1):
        if pad:
            x = np.concatenate([x, np.zeros((1 << x.size.bit_length()) - x.size)])
        else:
            x = _pow2_tail(x)
    n = x.size
    if window == "hann":
        x = x * windows.hann(n, sym=False)
    spec = fft_radix2(x)[: n // 2 + 1]
    mag = np.abs(spec) * (2.0 / n)
    mag[0] /= 2.0
    if n > 1:
        mag[-1] /= 2.0 if n % 2 == 0 else 1.0
    mag *= WINDOW_GAIN[window]
    phase = np.angle(spec)
    phase[phase <= -np.pi] = np.pi
    freq = np.arange(n // 2 + 1) / (n * dt)
    return Spectrum(freq, mag, phase, window, n, dt)


def dominant_frequency(spectrum: Spectrum, ignore_dc: bool = True) -> float:
    """Peak frequency refined by a parabola through the log magnitudes of the
    peak bin and its neighbours (plain magnitudes if a neighbour is zero)."""
    mag = spectrum.magnitude
    if mag.size == 0:
        raise EmptyChannel("empty spectrum")
    # with Hann, bin 1 is inside the DC main lobe
    lo = (2 if spectrum.window == "hann" else 1) if ignore_dc else 0
    # content at rounding level relative to the whole spectrum counts as none
    if mag.size <= lo or not np.max(mag[lo:], initial=0.0) > 1e-12 * np.max(mag):
        raise NoPeak("no spectral content" + (" besides DC" if ignore_dc else ""))
    k = lo + int(np.argmax(mag[lo:]))
    delta = 0.0
    if 0 < k < mag.size - 1:
        y = mag[k - 1: k + 2]
        if max(y[0], y[2]) < 1e-9 * y[1]:
            # neighbours hold only rounding noise: the tone sits on the bin
            return k * spectrum.df
        if np.all(y > 0):
            y = np.log(y)
        den = y[0] - 2 * y[1] + y[2]
        if den != 0:
            delta = 0.5 * (y[0] - y[2]) / den
    return (k + delta) * spectrum.df


def _tail(x, fraction: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[int(len(x) * (1.0 - fraction)):]


def harmonic_ratio(x, dt: float, f0: float, n: int = 3, window: str = "none") -> float:
    """``|H_n| / |H_1|`` read at the bins nearest ``n f0`` and ``f0``."""
    s = fft(x, dt, window)
    return s.at(n * f0) / s.at(f0)


def phase_shift(a, b, f0: float, dt: float, tail: float = 0.5) -> float:
    """Phase of ``b`` minus phase of ``a`` at ``f0`` in degrees, wrapped to
    (-180, 180], measured on the trailing ``tail`` fraction with a Hann window."""
    sa = fft(_tail(a, tail), dt, "hann")
    sb = fft(_tail(b, tail), dt, "hann")
    k = sa.bin_of(f0)
    for name, s in (("first", sa), ("second", sb)):
        peak = s.magnitude[1:].max() if s.magnitude.size > 1 else 0.0
        if not s.magnitude[k] >= 1e-6 * peak or peak == 0.0:
            raise WeakSignal(f"{name} channel has no content at {f0:g} Hz")
    d = math.degrees(sb.phase[k] - sa.phase[k])
    d = math.fmod(d, 360.0)
    if d <= -180.0:
        d += 360.0
    elif d > 180.0:
        d -= 360.0
    return d


@dataclass(frozen=True)
class Oscillation:
    kind: str  # "growing", "decaying" or "sustained"
    amplitude: float
    frequency: float
    rms_ratio: float


def sustained_oscillation(x, dt: float, band: float = 0.05, min_cycles: int = 20) -> Oscillation:
    """Compare RMS over two consecutive whole-cycle windows at the end of ``x``.

    The windows split the later half of the record (at least 16 cycles);
    ``amplitude`` is the peak value implied by the later window's RMS.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 4:
        raise TooShort("need at least a few samples")
    try:
        f = dominant_frequency(fft(_tail(x, 0.5), dt, "hann"))
        flat = False
    except NoPeak:
        # a flat tail after an oscillating start has died out
        f = dominant_frequency(fft(x, dt, "hann"))
        flat = True
    period = 1.0 / (f * dt)
    cycles = x.size / period
    if cycles < min_cycles:
        raise TooShort(f"record holds {cycles:.1f} cycles, need {min_cycles}")
    tail = x[-max(x.size // 2, int(math.ceil(16 * period))):]
    half = tail.size // 2
    whole = int(math.floor(half / period) * period)
    w1 = tail[half - whole: half]
    w2 = tail[tail.size - whole:]
    r1 = float(np.sqrt(np.mean((w1 - w1.mean()) ** 2)))
    r2 = float(np.sqrt(np.mean((w2 - w2.mean()) ** 2)))
    ratio = r2 / r1 if r1 > 0 else (0.0 if flat else math.inf)
    if flat:
        kind = "decaying"
    elif ratio - 1.0 > band:
        kind = "growing"
    elif ratio - 1.0 < -band:
        kind = "decaying"
    else:
        kind = "sustained"
    return Oscillation(kind, math.sqrt(2.0) * r2, f, ratio)
