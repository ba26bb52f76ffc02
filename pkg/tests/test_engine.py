import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from memsim.analysis.spectral import phase_shift
from memsim.device_models import MemristorParams, linear_drift_state_of_charge
from memsim.engine import (
    NonConvergence, SimConfig, SingularMatrix, Waveform, assemble, transient_run,
)
from memsim.linalg import solve_linear
from memsim.netlist import (
    DC, SIN, VCVS, Capacitor, Memristor, Netlist, OpAmp, Resistor, VoltageSource, parse,
)

RC = "V1 in 0 DC 1\nR1 in out 1k\nC1 out 0 1u\n"
TAU = 1e-3


def rc_error(dt: float, method: str) -> float:
    w = transient_run(parse(RC), SimConfig(dt=dt, t_stop=5 * TAU, method=method), probes=["V(out)"])
    return float(np.max(np.abs(w["V(out)"] - (1 - np.exp(-w.t / TAU)))))


# -- linear algebra


def test_solve_identity():
    b = np.array([3.0, -1.0, 7.5])
    np.testing.assert_array_equal(solve_linear(np.eye(3), b), b)


def test_solve_2x2():
    np.testing.assert_allclose(solve_linear([[2.0, 1.0], [1.0, 3.0]], [3.0, 5.0]), [0.8, 1.4], rtol=1e-15)


def test_solve_hilbert_against_rationals():
    n = 4
    h = [[Fraction(1, i + j + 1) for j in range(n)] for i in range(n)]
    b = [Fraction(1)] * n
    # exact solution by Gauss-Jordan over the rationals
    m = [row[:] + [b[i]] for i, row in enumerate(h)]
    for c in range(n):
        piv = m[c][c]
        m[c] = [v / piv for v in m[c]]
        for r in range(n):
            if r != c:
                f = m[r][c]
                m[r] = [a - f * p for a, p in zip(m[r], m[c])]
    exact = np.array([float(m[i][n]) for i in range(n)])
    got = solve_linear(np.array(h, dtype=float), np.ones(n))
    np.testing.assert_allclose(got, exact, rtol=0, atol=1e-8 * np.max(np.abs(exact)))


@settings(max_examples=200)
@given(arrays(float, (5, 5), elements=st.floats(-1, 1)), arrays(float, 5, elements=st.floats(-10, 10)))
def test_solve_residual(a, b):
    a = a + 6 * np.eye(5)  # diagonally dominant, well conditioned
    x = solve_linear(a, b)
    assert np.max(np.abs(a @ x - b)) <= 1e-10 * max(np.max(np.abs(b)), 1e-300) + 1e-300


def test_singular_matrix():
    with pytest.raises(SingularMatrix):
        solve_linear([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


# -- assembly


def test_divider():
    sys = assemble(parse("V1 a 0 1\nR1 a b 1k\nR2 b 0 1k"))
    assert sys.voltage(sys.solve(), "b") == pytest.approx(0.5, rel=1e-15)


def test_source_branch_current():
    # branch current enters the source's first node: a source delivering
    # 5/R into the load reads -5/R
    sys = assemble(parse("V1 a 0 5\nR1 a 0 2k"))
    x = sys.solve()
    assert x[sys.branch_index["V1"]] == pytest.approx(-5 / 2e3, rel=1e-15)


def test_floating_node_is_singular():
    n = Netlist("", (VoltageSource("V1", ("a", "0"), DC(1.0)), Resistor("R1", ("b", "c"), 1.0)))
    with pytest.raises(SingularMatrix):
        assemble(n)


def test_contradictory_sources_are_singular():
    n = Netlist("", (VoltageSource("V1", ("a", "0"), DC(1.0)), VoltageSource("V2", ("a", "0"), DC(2.0))))
    with pytest.raises(SingularMatrix):
        assemble(n)


def test_assemble_uses_memristor_state():
    n = parse("V1 a 0 1\nM1 a 0")
    sys = assemble(n, states={"M1": 1.0})
    assert sys.solve()[sys.branch_index["V1"]] == pytest.approx(-1 / 100.0)


def test_assemble_companion_history():
    # trapezoidal companion: 2C/dt conductance, history 2C/dt v + i
    n = parse("V1 a 0 0\nC1 a 0 1u")
    dt = 1e-6
    sys = assemble(n, prev=(np.array([0.5, 0.0]), np.array([1e-3])), dt=dt, t=dt)
    g = 2e-6 / dt
    assert sys.matrix[0, 0] == pytest.approx(g)
    assert sys.rhs[0] == pytest.approx(g * 0.5 + 1e-3)


# -- transient


def test_rc_step():
    w = transient_run(parse(RC + ".tran 1u 2m"))
    k = int(round(1e-3 / w.dt))
    assert w["V(out)"][k] == pytest.approx(1 - math.exp(-1), abs=1e-3)
    assert w.t[k] == pytest.approx(1e-3)


def test_waveform_uniform():
    w = transient_run(parse(RC + ".tran 1u 2m"))
    assert np.all(np.abs(np.diff(w.t) - w.dt) < 1e-12 * w.dt)
    assert len(w.t) == 2001


@pytest.mark.parametrize("method, lo, hi", [("trapezoidal", 3.0, 5.0), ("backward-euler", 1.7, 2.5)])
def test_method_order(method, lo, hi):
    errs = [rc_error(dt, method) for dt in (TAU / 50, TAU / 100, TAU / 200)]
    for coarse, fine in zip(errs, errs[1:]):
        assert lo <= coarse / fine <= hi


def test_kcl_every_step():
    text = """V1 in 0 SIN(0 1 1k)
M1 in a
C1 a b 47n
R1 b 0 2k
E1 c 0 b 0 -3 VMAX=2
R2 c a 10k
O1 d 0 e
R3 a e 1k
C2 e d 10n
"""
    net = parse(text)
    w = transient_run(net, SimConfig(dt=2e-6, t_stop=3e-3), probes="all")
    residual = {n: np.zeros(len(w.t)) for n in net.node_names}
    for comp in net.components:
        i = w[f"I({comp.name})"]
        ends = [(comp.nodes[0], 1.0), (comp.nodes[1], -1.0)]
        if isinstance(comp, OpAmp):
            ends = [(comp.nodes[0], 1.0)]
        for node, sign in ends:
            if node != "0":
                residual[node] += sign * i
    assert max(np.max(np.abs(r)) for r in residual.values()) <= 1e-9


def test_pinched_hysteresis():
    w = transient_run(parse("V1 a 0 SIN(0 1 1k)\nM1 a 0\n.tran 1u 5m\n.probe V(a) I(M1)"))
    near_zero = np.abs(w["V(a)"]) < 1e-3
    assert near_zero.sum() > 10
    assert np.all(np.abs(w["I(M1)"][near_zero]) < 10e-6)


def test_linear_drift_oracle():
    p = MemristorParams(mu_v=1e-11, window="none")
    net = Netlist("", (VoltageSource("V1", ("a", "0"), SIN(0.0, 0.5, 1e3)),
                       Memristor("M1", ("a", "0"), p)))
    w = transient_run(net, SimConfig(dt=1e-6, t_stop=3e-3), probes=["I(M1)", "X(M1)"])
    i = w["I(M1)"]
    q = np.concatenate([[0.0], np.cumsum(0.5 * (i[1:] + i[:-1]) * w.dt)])
    oracle = linear_drift_state_of_charge(p, q)
    assert not oracle.saturated.any()
    assert w["X(M1)"].max() - w["X(M1)"].min() > 0.05
    assert np.sqrt(np.mean((w["X(M1)"] - oracle.x) ** 2)) <= 1e-6


def test_degenerate_memristor_equals_resistor():
    base = "V1 in 0 SIN(0 1 1k)\nC1 in a 100n\n{} a 0 {}\n.tran 1u 2m\n.probe V(a)"
    w_m = transient_run(parse(base.format("M1", "RON=2k ROFF=2k")))
    w_r = transient_run(parse(base.format("R1", "2k")))
    np.testing.assert_allclose(w_m["V(a)"], w_r["V(a)"], rtol=1e-12, atol=1e-12 * np.max(np.abs(w_r["V(a)"])))


def test_deterministic():
    text = "V1 a 0 SIN(0 1 1k)\nM1 a b\nC1 b 0 10n\n.tran 1u 2m"
    w1, w2 = transient_run(parse(text), probes="all"), transient_run(parse(text), probes="all")
    assert w1.to_csv_text() == w2.to_csv_text()


def test_memristor_resistive_at_high_frequency():
    w = transient_run(parse("V1 a 0 SIN(0 1 1k)\nM1 a 0\n.tran 1u 20m\n.probe V(a) I(M1)"))
    assert abs(phase_shift(w["V(a)"], w["I(M1)"], 1e3, w.dt)) <= 2.0


def test_window_keeps_state_in_bounds():
    # strong drive pushes the state into the boundary; it must stay in [0, 1]
    w = transient_run(parse("V1 a 0 DC 5\nM1 a 0 MU=1e-12\n.tran 1u 2m\n.probe X(M1)"))
    x = w["X(M1)"]
    assert x.min() >= 0.0 and x.max() <= 1.0
    assert x[-1] > 0.99


def test_vcvs_soft_clip():
    w = transient_run(parse("V1 a 0 SIN(0 1 1k)\nE1 b 0 a 0 10 VMAX=2\nR1 b 0 1k\n.tran 1u 1m"),
                      probes=["V(a)", "V(b)"])
    np.testing.assert_allclose(w["V(b)"], 2 * np.tanh(10 * w["V(a)"] / 2), atol=1e-9)


def test_integrator_ramp_and_rail():
    text = "V1 in 0 DC 1\nM1 in sum RON=10k ROFF=10k\nC1 sum out 10n\nO1 out 0 sum\n.tran 1u 1m"
    w = transient_run(parse(text), probes=["V(out)"])
    np.testing.assert_allclose(w["V(out)"], -w.t / 1e-4, atol=1e-9)
    w = transient_run(parse(text), SimConfig(dt=1e-6, t_stop=1e-3, opamp_rail=2.0), probes=["V(out)"])
    assert w["V(out)"].min() >= -2.0 - 1e-12
    assert w["V(out)"][-1] == pytest.approx(-2.0)


def test_capacitor_across_source_starts():
    w = transient_run(parse("V1 a 0 1\nC1 a 0 1u\nR1 a 0 1k\n.tran 1u 10u"), probes=["V(a)", "I(R1)"])
    np.testing.assert_allclose(w["V(a)"], 1.0)


def test_non_convergence_reports_step():
    net = parse("V1 a 0 SIN(0 1 1k)\nM1 a 0\n.tran 1u 1m")
    with pytest.raises(NonConvergence) as info:
        transient_run(net, SimConfig(dt=1e-6, t_stop=1e-3, max_inner_iters=1))
    assert info.value.step == 1


def test_stiff_drift_is_reported():
    # drift coefficient 1e8 per coulomb: the fixed-point coupling cannot settle
    with pytest.raises(NonConvergence):
        transient_run(parse("V1 a 0 DC 5\nM1 a 0 MU=1e-10\n.tran 1u 1m"))


def test_config_validation_and_overrides():
    with pytest.raises(ValueError):
        SimConfig(dt=0, t_stop=1)
    with pytest.raises(ValueError):
        SimConfig(dt=1, t_stop=0.5)
    with pytest.raises(ValueError):
        SimConfig(dt=1e-6, t_stop=1, method="rk4")
    assert SimConfig(1e-6, 1e-3, method="be").method == "backward-euler"
    cfg = SimConfig.from_netlist(parse(RC + ".tran 1u 2m"), t_stop=5e-3)
    assert (cfg.dt, cfg.t_stop) == (1e-6, 5e-3)
    with pytest.raises(ValueError):
        SimConfig.from_netlist(parse(RC))


def test_waveform_csv_round_trip():
    w = transient_run(parse(RC + ".tran 1u 100u"), probes="all")
    buf = io.StringIO(w.to_csv_text())
    back = Waveform.from_csv(buf)
    assert back.names == w.names
    for name in w.names:
        np.testing.assert_array_equal(back[name], w[name])
    np.testing.assert_array_equal(back.t, w.t)


def test_probe_kinds():
    net = Netlist("", (
        VoltageSource("V1", ("a", "0"), DC(2.0)),
        Resistor("R1", ("a", "b"), 1e3),
        Capacitor("C1", ("b", "0"), 1e-9),
        VCVS("E1", ("c", "0", "b", "0"), 2.0),
        Resistor("R2", ("c", "0"), 1e3),
    ))
    w = transient_run(net, SimConfig(1e-6, 1e-4), probes=["V(a,b)", "I(R1)", "I(E1)", "V(c)"])
    np.testing.assert_allclose(w["I(R1)"], w["V(a,b)"] / 1e3)
    np.testing.assert_allclose(w["I(E1)"], -w["V(c)"] / 1e3, atol=1e-15)
