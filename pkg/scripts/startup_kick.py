"""How large the startup kick must be to reach the clipped steady state in 50 ms.

Prints the growth rate of the linear loop at the default gain and the final
amplitude reached from kicks of several sizes.

    python scripts/startup_kick.py
"""

import math

from memsim.analysis.oscillator import eigenvalues_3x3, ladder_state_matrix
from memsim.analysis.spectral import sustained_oscillation
from memsim.circuits import PhaseShiftSpec, build_phase_shift_oscillator
from memsim.engine import transient_run


def main():
    base = PhaseShiftSpec()
    roots = eigenvalues_3x3(ladder_state_matrix(base.design(base.gain)))
    sigma = max(r.real for r in roots)
    print(f"gain {base.gain:.4g}: growth rate {sigma:.1f} 1/s, e-folds in {1e3 * base.t_stop:.0f} ms: "
          f"{sigma * base.t_stop:.2f} (x{math.exp(sigma * base.t_stop):.1f})")
    print(f"{'kick (V)':>9}  {'kind':9s}  {'amplitude at V(amp) (V)':>24}")
    for kick in (1e-6, 1e-3, 0.1, 1.0):
        w = transient_run(build_phase_shift_oscillator(PhaseShiftSpec(startup_kick=kick)), probes=["V(amp)"])
        res = sustained_oscillation(w["V(amp)"], w.dt)
        print(f"{kick:9.0e}  {res.kind:9s}  {res.amplitude:24.4g}")


if __name__ == "__main__":
    main()
