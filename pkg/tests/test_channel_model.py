import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate
from scipy.constants import speed_of_light

from thzrelay.channel_model import (FadingParams, LinkBudget, PointingParams, db_to_linear,
                                    dbm_to_watt, linear_to_db, noise_power, path_gain,
                                    pointing_from_geometry, snr_anchor, watt_to_dbm)
from thzrelay.errors import ParameterError


def budget(**kw):
    base = dict(f=275e9, d=10.0, gt=10 ** 4.5, gr=10 ** 4.5, k_abs=0.0, ptx=0.1,
                n0=10 ** -20.4, bw=10e9)
    base.update(kw)
    return LinkBudget(**base)


class TestConversions:
    def test_known_points(self):
        assert db_to_linear(0.0) == 1.0
        assert dbm_to_watt(30.0) == pytest.approx(1.0, rel=1e-15)
        assert dbm_to_watt(-174.0) == pytest.approx(10 ** -20.4, rel=1e-12)

    @given(st.floats(-200, 200))
    def test_round_trip(self, x):
        assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-12)
        assert watt_to_dbm(dbm_to_watt(x)) == pytest.approx(x, abs=1e-12)


class TestPathGain:
    def test_unit_gain_distance(self):
        f = 275e9
        lb = budget(f=f, d=speed_of_light / (4 * math.pi * f), gt=1.0, gr=1.0)
        assert path_gain(lb) == pytest.approx(1.0, rel=1e-14)

    def test_reference_arithmetic(self):
        # c · 10^4.5 / (4π · 275e9 · 10), evaluated by hand
        assert path_gain(budget()) == pytest.approx(0.2743330582910459, rel=1e-12)

    def test_doubling_distance_halves_gain(self):
        assert path_gain(budget(d=20.0)) == pytest.approx(path_gain(budget()) / 2, rel=1e-14)

    @given(st.floats(1.0, 500.0), st.floats(1.01, 3.0))
    def test_monotone_decreasing(self, d, factor):
        assert path_gain(budget(d=d * factor)) < path_gain(budget(d=d))
        assert path_gain(budget(f=275e9 * factor)) < path_gain(budget())
        assert path_gain(budget(k_abs=0.01 * factor)) < path_gain(budget(k_abs=0.01))

    def test_invariants(self):
        for bad in (dict(f=0.0), dict(d=-1.0), dict(ptx=0.0), dict(n0=0.0), dict(bw=0.0),
                    dict(k_abs=-0.1), dict(gt=-1.0)):
            with pytest.raises(ParameterError):
                budget(**bad)


class TestSnrAnchor:
    def test_linear_in_power(self):
        assert snr_anchor(budget(ptx=1.0)) == pytest.approx(10 * snr_anchor(budget(ptx=0.1)), rel=1e-14)

    def test_unit_case(self):
        f = 275e9
        lb = LinkBudget(f=f, d=speed_of_light / (4 * math.pi * f), gt=1, gr=1, k_abs=0,
                        ptx=2e-10, n0=2e-20, bw=1e10)
        assert snr_anchor(lb) == pytest.approx(1.0, rel=1e-13)

    def test_reference_scenario(self):
        lb = LinkBudget.from_db(f_ghz=275, d_m=10, gain_dbi=45, k_abs_per_m=0.0033,
                                ptx_dbm=20, n0_dbm_hz=-174, bw_ghz=10)
        # independent chain: 0.1 W · (h e^{-kd/2})² / (10^-20.4 · 1e10)
        assert snr_anchor(lb) == pytest.approx(182904576.52015254, rel=1e-11)

    @given(st.floats(-10, 40), st.floats(2.0, 200.0))
    def test_decibel_budget_identity(self, ptx_dbm, d):
        lb = LinkBudget.from_db(d_m=d, ptx_dbm=ptx_dbm)
        lhs = linear_to_db(snr_anchor(lb))
        rhs = watt_to_dbm(lb.ptx) - 30 + 20 * math.log10(path_gain(lb)) - linear_to_db(noise_power(lb))
        assert lhs == pytest.approx(rhs, abs=1e-9)


class TestParams:
    def test_fading_invariants(self):
        with pytest.raises(ParameterError, match="FadingParams.alpha"):
            FadingParams(0.0, 1.0)
        with pytest.raises(ParameterError):
            FadingParams(1.0, -1.0)
        assert FadingParams(2.0, 1.0).omega == 1.0

    def test_pointing_invariants(self):
        with pytest.raises(ParameterError):
            PointingParams(0.0, 0.5)
        with pytest.raises(ParameterError):
            PointingParams(1.0, 1.5)
        with pytest.raises(ParameterError):
            PointingParams(1.0, 0.0)


def _square_fraction(a, w, dx=0.0):
    """Fraction of a Gaussian beam (waist w, offset dx) on the square of side √π·a."""
    half = math.sqrt(math.pi) * a / 2

    def px(lo, hi, mu):
        g = lambda x: math.sqrt(2 / math.pi) / w * math.exp(-2 * (x - mu) ** 2 / w ** 2)  # noqa: E731
        return integrate.quad(g, lo, hi, epsabs=0, epsrel=1e-13)[0]

    return px(-half, half, dx) * px(-half, half, 0.0)


class TestPointingGeometry:
    def test_against_defining_integrals(self):
        a, w, sigma = 0.05, 0.20, 0.06
        p = pointing_from_geometry(a, w, sigma)
        s0 = _square_fraction(a, w)
        assert p.s0 == pytest.approx(s0, rel=1e-10)
        # curvature of ln h(r) at r = 0 gives -4 / w_eq²
        e = 1e-3
        curv = (math.log(_square_fraction(a, w, e)) - 2 * math.log(s0)
                + math.log(_square_fraction(a, w, -e))) / e ** 2
        w_eq2 = -4.0 / curv
        assert p.phi == pytest.approx(w_eq2 / (4 * sigma ** 2), rel=1e-5)

    def test_phi_matches_jitter_distribution(self):
        # h = S₀ exp(-2 r²/w_eq²) with Rayleigh r has P(h ≤ y) = (y/S₀)^φ
        a, w, sigma = 0.05, 0.20, 0.06
        p = pointing_from_geometry(a, w, sigma)
        v = math.sqrt(math.pi) * a / (math.sqrt(2) * w)
        from scipy.special import erf
        w_eq2 = w ** 2 * math.sqrt(math.pi) * erf(v) / (2 * v * math.exp(-v * v))
        rng = np.random.default_rng(1)
        r2 = rng.normal(0, sigma, 200_000) ** 2 + rng.normal(0, sigma, 200_000) ** 2
        h = p.s0 * np.exp(-2 * r2 / w_eq2)
        phi_hat = h.size / np.sum(np.log(p.s0 / h))
        assert phi_hat == pytest.approx(p.phi, rel=4 / math.sqrt(h.size))

    def test_large_aperture_limit(self):
        assert pointing_from_geometry(0.9, 0.2, 0.05).s0 == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ParameterError, match="overflows"):
            pointing_from_geometry(10.0, 0.2, 0.05)

    def test_infinite_jitter_rejected(self):
        with pytest.raises(ParameterError):
            pointing_from_geometry(0.05, 0.2, math.inf)

    @given(st.floats(1e-3, 1.0), st.floats(1e-3, 1.0), st.floats(1e-3, 1.0))
    def test_outputs_satisfy_invariants(self, a, w, s):
        # far beyond a/w ≈ 20 the pointing loss is negligible and φ overflows
        assume(a / w < 15)
        p = pointing_from_geometry(a, w, s)
        assert p.phi > 0 and 0 < p.s0 <= 1

    def test_non_positive_inputs(self):
        with pytest.raises(ParameterError):
            pointing_from_geometry(0.0, 0.2, 0.05)
