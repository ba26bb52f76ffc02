import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from memsim.analysis.oscillator import (
    CubicCoeffs, DegenerateLeadingCoefficient, OscillatorDesign, char_poly_coeffs, critical_gain, cubic_roots,
    design_report, eigenvalues_3x3, gain_alpha, ladder_char_poly_coeffs, ladder_state_matrix, osc_frequency,
    state_matrix,
)
from oracles import eigen_residual, vieta_errors

ohms = st.floats(1.0, 1e7)
farads = st.floats(1e-12, 1e-3)


def test_char_poly_equal_m():
    m, c = 8050.0, 1e-8
    cc = char_poly_coeffs(OscillatorDesign.equal(m, c, k=29))
    assert cc.a == pytest.approx(m**3 * c**3 * 30)
    assert cc.b == pytest.approx(6 * m**2 * c**2)
    assert cc.c == pytest.approx(6 * m * c)
    assert cc.d == 1.0


def test_char_poly_hand_values():
    cc = char_poly_coeffs(OscillatorDesign(1e3, 2e3, 3e3, 1e-6, k=1))
    assert cc.b == pytest.approx(1.8e-5, rel=1e-14)
    assert cc.c == pytest.approx(2e-6 * 6e3 * 1e3 / 1e3 * 1e-3 * 1e3, rel=1e-14)


def test_unity_negative_gain_is_degenerate():
    cc = char_poly_coeffs(OscillatorDesign.equal(1e3, 1e-6, k=-1))
    assert cc.a == 0.0
    with pytest.raises(DegenerateLeadingCoefficient):
        cubic_roots(cc)


def test_ladder_coefficients_match_state_matrix():
    d = OscillatorDesign(3e3, 5e3, 7e3, 2e-8, k=12.0)
    cc = ladder_char_poly_coeffs(d)
    a = ladder_state_matrix(d)
    # det(sI - A) normalised to unit constant term
    p = np.poly(a)
    scale = cc.d / p[3]
    np.testing.assert_allclose(np.array(p) * scale, list(cc), rtol=1e-10)


def test_cube_roots_of_unity():
    r = cubic_roots(CubicCoeffs(1, 0, 0, -1))
    assert r[0] == pytest.approx(1.0, abs=1e-15)
    assert r[1] == pytest.approx(complex(-0.5, math.sqrt(3) / 2), abs=1e-15)
    assert r[2] == r[1].conjugate()


def test_triple_root():
    assert cubic_roots(CubicCoeffs(1, 3, 3, 1)) == (-1, -1, -1)


def test_three_real_roots_ascending():
    r = cubic_roots(CubicCoeffs(2, -12, 22, -12))  # 2(s-1)(s-2)(s-3)
    np.testing.assert_allclose([z.real for z in r], [1, 2, 3], rtol=1e-14)
    assert all(z.imag == 0 for z in r)


@settings(max_examples=500)
@given(st.tuples(*[st.floats(-1e3, 1e3) for _ in range(4)]))
def test_vieta_and_residual(coeffs):
    assume(abs(coeffs[0]) > 1e-3)
    cc = CubicCoeffs(*coeffs)
    roots = cubic_roots(cc)
    assert max(vieta_errors(cc, roots)) <= 1e-8
    lam = max(abs(r) for r in roots)
    for r in roots:
        assert abs(cc(r)) <= 1e-9 * max(abs(cc.a) * lam**3, abs(cc.b) * lam**2, abs(cc.c) * lam, abs(cc.d), 1e-300)


def test_osc_frequency_examples():
    f = osc_frequency(OscillatorDesign.equal(1e4, 1e-8))
    assert f == pytest.approx(1 / (2 * math.pi * 1e4 * 1e-8 * math.sqrt(6)), rel=1e-14)
    assert f == pytest.approx(649.747334361, rel=1e-10)


@given(ohms, ohms, ohms, farads, st.floats(0.01, 100))
def test_osc_frequency_scale_invariant(m1, m2, m3, c, s):
    f1 = osc_frequency(OscillatorDesign(m1, m2, m3, c))
    f2 = osc_frequency(OscillatorDesign(s * m1, s * m2, s * m3, c / s))
    assert f2 == pytest.approx(f1, rel=1e-12)


def test_gain_alpha_examples():
    assert gain_alpha(5e3, 5e3, 5e3) == 29
    assert gain_alpha(1, 2, 4) == pytest.approx(26.5, rel=1e-15)


@given(ohms, ohms, ohms, st.sampled_from([0.5, 2.0, 4.0, 1024.0]))
def test_gain_alpha_scale_invariant(m1, m2, m3, lam):
    # powers of two keep every ratio bit-identical
    assert gain_alpha(lam * m1, lam * m2, lam * m3) == gain_alpha(m1, m2, m3)


def test_state_matrix_closed_form_rows():
    d = OscillatorDesign(1e3, 2e3, 4e3, 1e-6, r4=1e3)
    a = state_matrix(d)
    assert np.all(np.isfinite(a))
    assert a[2, 0] == a[2, 1] == a[2, 2] == pytest.approx(-1 / (1e3 * 1e-6) / 2)


def test_state_matrix_prefactor():
    # with m = 0 entries carrying m vanish; compare to m = 1 through the same entries
    d0 = OscillatorDesign(1e3, 1e3, 1e3, 1e-6, r4=1e-300)
    d1 = OscillatorDesign(1e3, 1e3, 1e3, 1e-6, r4=1e3)
    a0, a1 = state_matrix(d0), state_matrix(d1)
    for i, j in [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2)]:
        assert a1[i, j] == pytest.approx(a0[i, j] / 2, rel=1e-12)


def test_eigen_examples():
    assert eigenvalues_3x3(np.eye(3)) == (1, 1, 1)
    np.testing.assert_allclose([z.real for z in eigenvalues_3x3(np.diag([1.0, 2.0, 3.0]))], [1, 2, 3], rtol=1e-14)
    r = eigenvalues_3x3([[0, -1, 0], [1, 0, 0], [0, 0, 2]])
    assert r[0] == pytest.approx(2)
    assert r[1] == pytest.approx(1j, abs=1e-15)
    assert r[2] == pytest.approx(-1j, abs=1e-15)


@settings(max_examples=300)
@given(st.lists(st.floats(-10, 10), min_size=9, max_size=9))
def test_eigen_residual(vals):
    a = np.array(vals).reshape(3, 3)
    for lam in eigenvalues_3x3(a):
        assert eigen_residual(a, lam) <= 1e-8


def test_critical_gain_closed_form_vs_ladder():
    d = OscillatorDesign.equal(8050, 1e-8)
    k_cubic = critical_gain(d, "closed-form")
    k_ladder = critical_gain(d, "ladder")
    assert 1 + k_cubic == pytest.approx(36, abs=1e-6)
    assert k_ladder == pytest.approx(29, abs=1e-6)
    # at the ladder's critical gain the pair sits on the axis at 1/(MC sqrt 6)
    lam = eigenvalues_3x3(ladder_state_matrix(d.with_gain(k_ladder)))
    assert abs(lam[1].real) <= 1e-6 * abs(lam[1].imag)
    assert abs(lam[1].imag) == pytest.approx(1 / (8050 * 1e-8 * math.sqrt(6)), rel=1e-9)


def test_critical_gain_unequal_ladder_matches_alpha():
    d = OscillatorDesign(2e3, 5e3, 9e3, 1e-8)
    assert critical_gain(d, "ladder") == pytest.approx(gain_alpha(2e3, 5e3, 9e3), rel=1e-9)


def test_cubic_on_axis_at_critical_gain():
    d = OscillatorDesign.equal(1e4, 1e-8)
    k = critical_gain(d)
    _, pair, _ = cubic_roots(char_poly_coeffs(d.with_gain(k)))
    assert abs(pair.real) <= 1e-6 * abs(pair.imag)
    assert abs(pair.imag) == pytest.approx(1 / (1e4 * 1e-8 * math.sqrt(6)), rel=1e-9)


def test_report_flags_divergence():
    rep = design_report(OscillatorDesign.equal(1e4, 1e-8, k=29))
    text = "\n".join(rep.lines())
    assert rep.diverges
    assert "alpha: 29" in text
    assert "frequency_hz: 649.747" in text
    assert any(line.startswith("note: critical K") for line in rep.lines())


def test_design_validation():
    with pytest.raises(ValueError):
        OscillatorDesign(0, 1, 1, 1)
    with pytest.raises(ValueError):
        OscillatorDesign(1, 1, 1, 1, c2=-1)
    assert OscillatorDesign(1e3, 1, 1, 1, r4=2e3).m == 2.0
