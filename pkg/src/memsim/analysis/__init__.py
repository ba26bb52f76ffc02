"""Oscillator design math and spectral measurements."""

from .oscillator import *  # noqa: F401,F403
from .oscillator import __all__ as _osc_all
from .spectral import *  # noqa: F401,F403
from .spectral import __all__ as _spec_all

__all__ = [*_osc_all, *_spec_all]
