"""Design math for the three-arm memristor-capacitor phase-shift oscillator.

Memristors are treated as fixed resistances ``M1..M3`` at the operating point.
Two characteristic cubics are available: the closed-form coefficients in the
textbook form (:func:`char_poly_coeffs`) and the one obtained by analysing the
ladder the builders actually emit (:func:`ladder_char_poly_coeffs`). They
differ in the ``s`` coefficient, which moves the critical gain; both are kept
so the difference can be reported rather than hidden.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "OscillatorDesign", "CubicCoeffs", "DegenerateLeadingCoefficient", "DesignReport",
    "char_poly_coeffs", "ladder_char_poly_coeffs", "cubic_roots", "osc_frequency",
    "gain_alpha", "state_matrix", "ladder_state_matrix", "eigenvalues_3x3",
    "critical_gain", "design_report",
]


class DegenerateLeadingCoefficient(ZeroDivisionError):
    """The cubic term vanished, so the system is not third order."""


@dataclass(frozen=True)
class OscillatorDesign:
    """Ladder values. ``c1..c3`` default to the common ``c``."""

    m1: float
    m2: float
    m3: float
    c: float
    k: float = 29.0
    r4: float = 1e3
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None

    def __post_init__(self):
        for name in ("m1", "m2", "m3", "c", "r4"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("c1", "c2", "c3"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if not math.isfinite(self.k):
            raise ValueError("gain must be finite")

    @classmethod
    def equal(cls, m: float, c: float, **kw) -> "OscillatorDesign":
        return cls(m, m, m, c, **kw)

    @property
    def m(self) -> float:
        """Normalized memristance ``r4 / m1``."""
        return self.r4 / self.m1

    @property
    def caps(self) -> tuple[float, float, float]:
        return tuple(self.c if v is None else v for v in (self.c1, self.c2, self.c3))

    def with_gain(self, k: float) -> "OscillatorDesign":
        return OscillatorDesign(self.m1, self.m2, self.m3, self.c, k, self.r4, self.c1, self.c2, self.c3)


@dataclass(frozen=True)
class CubicCoeffs:
    """``a s^3 + b s^2 + c s + d``."""

    a: float
    b: float
    c: float
    d: float

    def __iter__(self):
        return iter((self.a, self.b, self.c, self.d))

    def __call__(self, s):
        return ((self.a * s + self.b) * s + self.c) * s + self.d

    @property
    def scale(self) -> float:
        return max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))


def char_poly_coeffs(design: OscillatorDesign) -> CubicCoeffs:
    """Textbook closed-form coefficients, with equal capacitors ``c``."""
    m1, m2, m3, c, k = design.m1, design.m2, design.m3, design.c, design.k
    return CubicCoeffs(
        a=m1 * m2 * m3 * c**3 * (1.0 + k),
        b=3 * m1 * m2 * c**2 + 2 * m1 * m3 * c**2 + m2 * m3 * c**2,
        c=2 * m1 * c + 2 * m2 * c + 2 * m3 * c,
        d=1.0,
    )


def ladder_char_poly_coeffs(design: OscillatorDesign) -> CubicCoeffs:
    """Coefficients of the built ladder (series C, shunt M, M1 at the amplifier
    side) closed by gain ``-k``, with equal capacitors ``c``.

    Same as :func:`char_poly_coeffs` except for the ``s`` term, where M3
    enters once rather than twice.
    """
    cc = char_poly_coeffs(design)
    return CubicCoeffs(cc.a, cc.b, design.c * (2 * design.m1 + 2 * design.m2 + design.m3), 1.0)


def _cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def _polish(coeffs: CubicCoeffs, r: complex, iters: int = 4) -> complex:
    """A few Newton steps, each kept only if it shrinks the residual."""
    a, b, c, _ = coeffs
    f = abs(coeffs(r))
    for _ in range(iters):
        if f == 0.0:
            break
        df = (3 * a * r + 2 * b) * r + c
        if df == 0:
            break
        cand = r - coeffs(r) / df
        fc = abs(coeffs(cand))
        if not fc < f:
            break
        r, f = cand, fc
    return r


def cubic_roots(coeffs: CubicCoeffs) -> tuple[complex, complex, complex]:
    """Roots by the closed form on the depressed cubic, Newton-polished.

    With one real root the order is (real, +imag, -imag); with three real
    roots they are ascending.
    """
    a, b, c, d = (float(v) for v in coeffs)
    if a == 0.0:
        raise DegenerateLeadingCoefficient("leading coefficient is zero")
    B, C, D = b / a, c / a, d / a
    # s = lam * y keeps the monic coefficients O(1) so nothing below underflows
    lam = max(abs(B), math.sqrt(abs(C)), _cbrt(abs(D)))
    if lam == 0.0:
        return (0j, 0j, 0j)
    Bn, Cn, Dn = B / lam, C / lam / lam, D / lam / lam / lam
    shift = -Bn / 3.0
    p = Cn - Bn * Bn / 3.0
    q = 2.0 * Bn**3 / 27.0 - Bn * Cn / 3.0 + Dn
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    norm = CubicCoeffs(1.0, B, C, D)

    if disc > 0.0:
        big = -math.copysign(1.0, q) * _cbrt(abs(q) / 2.0 + math.sqrt(disc))
        small = -p / (3.0 * big) if big != 0.0 else 0.0
        real = (big + small + shift) * lam
        pair = complex(-(big + small) / 2.0 + shift, math.sqrt(3.0) / 2.0 * abs(big - small)) * lam
        real = _polish(norm, complex(real)).real
        pair = _polish(norm, pair)
        if pair.imag < 0:
            pair = pair.conjugate()
        return complex(real), pair, pair.conjugate()

    if -p < 1e-150:
        t = [0.0, 0.0, 0.0]
    else:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * r)
        phi = math.acos(max(-1.0, min(1.0, arg)))
        t = [r * math.cos((phi - 2.0 * math.pi * k) / 3.0) for k in range(3)]
    roots = sorted(_polish(norm, complex((v + shift) * lam)).real for v in t)
    return tuple(complex(v) for v in roots)


def osc_frequency(design: OscillatorDesign) -> float:
    """Oscillation frequency in Hz for the common capacitance ``c``."""
    m1, m2, m3 = design.m1, design.m2, design.m3
    return 1.0 / (2.0 * math.pi * design.c * math.sqrt(3 * m1 * m2 + 2 * m1 * m3 + m2 * m3))


def gain_alpha(m1: float, m2: float, m3: float) -> float:
    """Amplifier gain needed to sustain oscillation; depends only on ratios."""
    if not (m1 > 0 and m2 > 0 and m3 > 0):
        raise ValueError("memristances must be positive")
    return 8 + 6 * m2 / m3 + 6 * m1 / m3 + 4 * m1 / m2 + 2 * m2 / m1 + 2 * m3 / m2 + m3 / m1


def state_matrix(design: OscillatorDesign) -> np.ndarray:
    """Closed-form state matrix for (V_C1, V_C2, V_C3) with the transistor
    stage folded into the normalized memristance ``m``.

    The third row carries three identical entries and the m factors enter
    asymmetrically; this is the closed form, not the built ladder.
    """
    g1, g2, g3 = 1.0 / design.m1, 1.0 / design.m2, 1.0 / design.m3
    c1, c2, c3 = design.caps
    m = design.m
    a = np.array([
        [(g1 + g2 + g3) / c1, (g1 + g2 - m * g3) / c1, (g1 - m * g2 - m * g3) / c1],
        [(g1 + g2) / c2, (g1 + g2) / c2, (g1 - m * g2) / c2],
        [g1 / c3, g1 / c3, g1 / c3],
    ])
    return -a / (m + 1.0)


def ladder_state_matrix(design: OscillatorDesign) -> np.ndarray:
    """State matrix of the built ladder for capacitor voltages (V_C1, V_C2, V_C3).

    ``V_Ck`` is measured from the amplifier side of the ladder; the amplifier
    drives ``-k`` times the last node.
    """
    cs = design.caps
    ms = (design.m1, design.m2, design.m3)
    a = np.zeros((3, 3))
    for col in range(3):
        vc = np.zeros(3)
        vc[col] = 1.0
        v3 = -vc.sum() / (1.0 + design.k)
        vamp = -design.k * v3
        nodes = vamp - np.cumsum(vc)
        i_c = np.zeros(3)
        i_c[2] = nodes[2] / ms[2]
        i_c[1] = i_c[2] + nodes[1] / ms[1]
        i_c[0] = i_c[1] + nodes[0] / ms[0]
        a[:, col] = i_c / np.array(cs)
    return a


def eigenvalues_3x3(matrix) -> tuple[complex, complex, complex]:
    """Eigenvalues from the characteristic cubic of a 3x3 real matrix."""
    a = np.asarray(matrix, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"need a 3x3 matrix, got shape {a.shape}")
    tr = a[0, 0] + a[1, 1] + a[2, 2]
    minors = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
              + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
              + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
    det = (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
           - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
           + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))
    return cubic_roots(CubicCoeffs(1.0, -tr, minors, -det))


def _max_real(roots) -> float:
    return max(r.real for r in roots)


MODELS: dict[str, Callable[[OscillatorDesign], tuple]] = {
    "closed-form": lambda d: cubic_roots(char_poly_coeffs(d)),
    "ladder": lambda d: eigenvalues_3x3(ladder_state_matrix(d)),
}


def critical_gain(design: OscillatorDesign, model: str = "closed-form", k_hi: float = 100.0,
                  rtol: float = 1e-13) -> float:
    """Gain at which the dominant roots cross the imaginary axis, by bisection.

    ``model`` picks the root source: ``"closed-form"`` uses
    :func:`char_poly_coeffs`, ``"ladder"`` the built circuit's state matrix.
    """
    roots_of = MODELS[model]
    lo, hi = 0.0, k_hi
    if _max_real(roots_of(design.with_gain(lo))) >= 0:
        raise ValueError("design is already unstable at zero gain")
    while _max_real(roots_of(design.with_gain(hi))) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise ValueError("no instability found for any finite gain")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _max_real(roots_of(design.with_gain(mid))) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class DesignReport:
    design: OscillatorDesign
    alpha: float
    frequency: float
    coeffs: CubicCoeffs
    roots: tuple
    critical_k: float
    ladder_critical_k: float
    matrix: np.ndarray
    eigenvalues: tuple
    notes: list[str] = field(default_factory=list)

    @property
    def diverges(self) -> bool:
        return abs(self.critical_k - self.alpha) > 1e-6 * self.alpha

    def lines(self) -> list[str]:
        fmt_c = lambda z: f"{z.real:.10g}{z.imag:+.10g}j"
        d = self.design
        out = [
            f"design: m1={d.m1:g} m2={d.m2:g} m3={d.m3:g} c={d.c:g} k={d.k:g} r4={d.r4:g} (m={d.m:.6g})",
            f"alpha: {self.alpha:.12g}",
            f"frequency_hz: {self.frequency:.12g}",
            "cubic: a={:.10g} b={:.10g} c={:.10g} d={:.10g}".format(*self.coeffs),
            "roots: " + ", ".join(fmt_c(r) for r in self.roots),
            f"critical_k: {self.critical_k:.12g} (1+K = {1 + self.critical_k:.12g})",
            f"ladder_critical_k: {self.ladder_critical_k:.12g}",
            "state_matrix:",
            *("  " + " ".join(f"{v: .10g}" for v in row) for row in self.matrix),
            "eigenvalues: " + ", ".join(fmt_c(r) for r in self.eigenvalues),
        ]
        out += [f"note: {n}" for n in self.notes]
        return out


def design_report(design: OscillatorDesign) -> DesignReport:
    alpha = gain_alpha(design.m1, design.m2, design.m3)
    coeffs = char_poly_coeffs(design)
    matrix = state_matrix(design)
    rep = DesignReport(
        design=design,
        alpha=alpha,
        frequency=osc_frequency(design),
        coeffs=coeffs,
        roots=cubic_roots(coeffs),
        critical_k=critical_gain(design, "closed-form"),
        ladder_critical_k=critical_gain(design, "ladder"),
        matrix=matrix,
        eigenvalues=eigenvalues_3x3(matrix),
    )
    if rep.diverges:
        rep.notes.append(
            f"critical K from the cubic ({rep.critical_k:.6g}) differs from alpha ({alpha:.6g}); "
            f"the built ladder goes unstable at K = {rep.ladder_critical_k:.6g}"
        )
    return rep
