import math

import numpy as np
import pytest

from bloch_green.halfline import (halfline_state, m_functions, reflect_halfline,
                                  s_functions)
from bloch_green.transfer import BandClass, classify_band


def band_sample(pot, lo=0.02, hi=7.0, n=400, keep=40, margin=0.98):
    """Real k values spread over the low bands, away from the edges."""
    ks = np.linspace(lo, hi, n)
    from bloch_green.transfer import evolve
    out = []
    for k in ks:
        x0 = pot.offset + pot.period
        U = evolve(pot, x0, x0 - pot.period, k)
        y = 0.5 * (U.alpha_plus + U.alpha_minus).real
        if abs(y) < margin:
            out.append(float(k))
    step = max(1, len(out) // keep)
    return out[::step]


def test_free_halfline_trivial(pot_free):
    Rr, Rl = reflect_halfline(pot_free, 0.3, 0.5)
    assert abs(Rr) < 1e-12 and abs(Rl) < 1e-12
    Sr, Sl, S = s_functions(pot_free, 0.3, 0.5)
    assert abs(S) < 1e-9
    mp_, mm = m_functions(pot_free, 0.3, 0.5)
    assert mp_ == pytest.approx(0.5j, abs=1e-9)
    assert mm == pytest.approx(0.5j, abs=1e-9)


def test_reflection_low_k_limit(pot_square, cc_square):
    # R_r(x, -inf; k) tends to -tanh((V(x) - V0)/2) as k -> 0
    for x in (0.3, 0.8):
        Rr, _ = reflect_halfline(pot_square, x, 1e-4j)
        want = -math.tanh(0.5 * (pot_square.V(x) - cc_square.V0))
        assert Rr == pytest.approx(want, abs=2e-4)


def test_reflection_in_band_is_finite(pot_square):
    Rr, Rl = reflect_halfline(pot_square, 0.4, 0.5)
    assert np.isfinite(Rr.real) and np.isfinite(Rr.imag)
    assert abs(Rr) < 1.0 + 1e-12  # reflection off a half line cannot exceed unity in a band
    assert abs(Rl) < 1.0 + 1e-12


def test_reflection_finite_across_spectrum(pot_square):
    ks = np.linspace(0.03, 7.0, 200)
    for k in ks:
        Rr, Rl = reflect_halfline(pot_square, 0.4, float(k))
        assert np.isfinite(abs(Rr)) and np.isfinite(abs(Rl))


def test_s_routes_agree(pot_square, pot_cosine):
    # Mobius route through the half-line reflection coefficients vs the
    # closed one-period forms
    for pot, x in ((pot_square, 0.4), (pot_cosine, 0.7)):
        for k in (0.5, 1.3, 0.8 + 0.4j):
            Rr, Rl = reflect_halfline(pot, x, k)
            Sr, Sl, S = s_functions(pot, x, k)
            assert Rr / (1 + Rr) == pytest.approx(Sr, abs=1e-10)
            assert Rl / (1 + Rl) == pytest.approx(Sl, abs=1e-10)
            assert Sr + Sl == pytest.approx(S, abs=1e-10)


def test_s_reflection_symmetry(pot_square):
    for k in band_sample(pot_square, keep=12):
        Sr_p, Sl_p, _ = s_functions(pot_square, 0.3, k)
        Sr_m, Sl_m, _ = s_functions(pot_square, 0.3, -k)
        assert Sl_p == pytest.approx(Sr_m, abs=1e-10)
        assert Sr_p == pytest.approx(Sl_m, abs=1e-10)


def test_s_low_k_leading_coefficient(pot_square, cc_square):
    # S - 1 tends to -e^{V(x) - V0}
    for x in (0.3, 0.75):
        _, _, S = s_functions(pot_square, x, 1e-3)
        s0 = -math.exp(pot_square.V(x) - cc_square.V0)
        assert (S - 1).real == pytest.approx(s0, abs=5e-5)
        assert abs((S - 1).imag) < 5e-3


def test_s_deviation_purely_imaginary_in_gaps(pot_square):
    # in a gap Z is imaginary while the denominator is imaginary too, so
    # S - 1 is purely imaginary; that is what makes the Green function real
    for k in (2.5, 3.0, 6.3):
        assert classify_band(pot_square, k) is BandClass.GAP
        _, _, S = s_functions(pot_square, 0.4, k)
        assert abs(S.real - 1.0) < 1e-9
        assert abs(S.imag) > 1e-3


def test_m_function_consistency(pot_square):
    for k in band_sample(pot_square, keep=20):
        mp_, mm = m_functions(pot_square, 0.3, k)
        _, _, S = s_functions(pot_square, 0.3, k)
        assert (1j / (2 * k)) * (mp_ + mm) + 1.0 == pytest.approx(S, abs=1e-10)


def test_m_minus_is_herglotz(pot_square, pot_cosine):
    # Im m grows into the upper half plane
    for pot, x in ((pot_square, 0.3), (pot_cosine, 0.5)):
        for k in (0.5, 1.2, 2.8):
            _, mm = m_functions(pot, x, k + 1e-3j)
            assert mm.imag > 0.0


def test_m_functions_refuse_jump_points(pot_square):
    with pytest.raises(ValueError, match="jump"):
        m_functions(pot_square, 0.6, 0.5)


def test_state_bundle(pot_square):
    st = halfline_state(pot_square, 0.3, 0.5)
    assert st.S == pytest.approx(st.Sr + st.Sl, abs=1e-12)
    assert st.m_plus is not None and not st.edge
    st_jump = halfline_state(pot_square, 0.6, 0.5)
    assert st_jump.m_plus is None and st_jump.m_minus is None
    st_edge = halfline_state(pot_square, 0.3, 2.2060048074714694)
    assert st_edge.edge
