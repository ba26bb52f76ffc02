"""Memristor constitutive model: HP dopant-drift device with a Biolek window.

The state variable is the normalized width of the doped region, ``x = w / D``,
so the drift rate written for ``w`` (factor ``mu_v * r_on / D``) picks up one
more ``1 / D`` here::

    dx/dt = eta * (mu_v * r_on / D**2) * i * f(x, i)

Memristance follows the linear mixing relation ``M(x) = r_on * x + r_off * (1 - x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from numba import njit

__all__ = [
    "WINDOWS",
    "MemristorParams",
    "MemristorState",
    "LinearDriftState",
    "biolek_window",
    "memristance",
    "mixed_resistance",
    "state_derivative",
    "linear_drift_state_of_charge",
    "x0_for_memristance",
]

#: ``biolek`` vanishes at the boundary the current pushes towards.
#: ``reversed`` uses stp(-i) = 1 for i >= 0, which vanishes at the opposite
#: boundary; kept for comparison only.
#: ``none`` disables the window (f == 1, linear drift).
WINDOWS = ("biolek", "reversed", "none")
WINDOW_CODES = {name: k for k, name in enumerate(WINDOWS)}


@dataclass(frozen=True)
class MemristorParams:
    """Device constants. Defaults are the usual HP TiO2 values."""

    r_on: float = 100.0
    r_off: float = 16e3
    d: float = 10e-9
    mu_v: float = 1e-14
    eta: int = 1
    p: int = 1
    x0: float = 0.5
    window: str = "biolek"

    def __post_init__(self):
        if not (0 < self.r_on < self.r_off):
            # r_on == r_off is allowed: it degenerates to a plain resistor
            if not (0 < self.r_on and self.r_on == self.r_off):
                raise ValueError(f"need 0 < r_on <= r_off, got {self.r_on}, {self.r_off}")
        if not (self.d > 0 and self.mu_v > 0):
            raise ValueError("d and mu_v must be positive")
        if self.eta not in (1, -1):
            raise ValueError(f"eta must be +1 or -1, got {self.eta}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p}")
        if not (0.0 <= self.x0 <= 1.0):
            raise ValueError(f"x0 must lie in [0, 1], got {self.x0}")
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window {self.window!r}")

    @property
    def drift_coefficient(self) -> float:
        """``mu_v * r_on / D**2`` in 1/C: state change per coulomb of charge."""
        return self.mu_v * self.r_on / self.d**2

    def with_(self, **changes) -> "MemristorParams":
        return replace(self, **changes)


@dataclass
class MemristorState:
    x: float

    def clamp(self) -> None:
        self.x = min(1.0, max(0.0, self.x))


class LinearDriftState(NamedTuple):
    x: float | np.ndarray
    saturated: bool | np.ndarray


@njit(cache=True)
def window_kernel(x, i, p, mode):
    """Scalar window; ``mode`` is the index of the window name in WINDOWS."""
    if mode == 2:
        return 1.0
    if mode == 1:
        step = 1.0 if i >= 0 else 0.0
    else:
        step = 1.0 if i <= 0 else 0.0
    return 1.0 - (x - step) ** (2 * p)


def biolek_window(x, i, p, window="biolek"):
    """Biolek window ``f(x, i) = 1 - (x - stp(-i))**(2p)``.

    ``p`` and ``window`` may be arrays broadcasting against ``x`` and ``i``;
    scalar input gives a Python float.
    """
    if np.ndim(x) == 0 and np.ndim(i) == 0 and np.ndim(p) == 0 and isinstance(window, str):
        return window_kernel(float(x), float(i), int(p), WINDOW_CODES[window])
    x = np.asarray(x, dtype=float)
    i = np.asarray(i, dtype=float)
    kind = np.asarray(window)
    step = np.where(kind == "reversed", i >= 0, i <= 0).astype(float)
    f = 1.0 - (x - step) ** (2 * np.asarray(p))
    return np.where(kind == "none", 1.0, f)


def mixed_resistance(r_on, r_off, x):
    """``r_on * x + r_off * (1 - x)``, elementwise."""
    return r_on * x + r_off * (1.0 - x)


def memristance(params: MemristorParams, x):
    if np.ndim(x) == 0:
        return mixed_resistance(params.r_on, params.r_off, float(x))
    return mixed_resistance(params.r_on, params.r_off, np.asarray(x, dtype=float))


def state_derivative(params: MemristorParams, x, i):
    """Normalized drift rate dx/dt in 1/s for current ``i`` (A) flowing + to -."""
    f = biolek_window(x, i, params.p, params.window)
    if np.ndim(f) == 0:
        return params.eta * params.drift_coefficient * float(i) * f
    return params.eta * params.drift_coefficient * np.asarray(i, dtype=float) * f


def linear_drift_state_of_charge(params: MemristorParams, q) -> LinearDriftState:
    """Exact state for the windowless model after net charge ``q`` has passed.

    Values outside [0, 1] are clamped and reported through ``saturated``.
    """
    raw = params.x0 + params.eta * params.drift_coefficient * np.asarray(q, dtype=float)
    x = np.clip(raw, 0.0, 1.0)
    sat = (raw < 0.0) | (raw > 1.0)
    if np.ndim(x) == 0:
        return LinearDriftState(float(x), bool(sat))
    return LinearDriftState(x, sat)


def x0_for_memristance(params: MemristorParams, target: float) -> float:
    """State at which the device shows memristance ``target``."""
    if not (params.r_on <= target <= params.r_off) or params.r_on == params.r_off:
        raise ValueError(f"{target} ohm is not reachable in [{params.r_on}, {params.r_off}]")
    return (params.r_off - target) / (params.r_off - params.r_on)
