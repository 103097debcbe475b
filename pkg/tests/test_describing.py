import math

import numpy as np
import pytest
from scipy.special import gamma

from smchatter.describing import (ControllerSpec, GainWarning, OscillationPoint,
                                  Variant, alpha1, compare_with_oracle,
                                  describing_function, df_lsv_lcsmc, df_numeric,
                                  df_stc, df_tsv_lcsmc, neg_reciprocal_locus,
                                  signed_power, sine_power_integral)
from smchatter.errors import DomainError
from smchatter.harmonic_balance import solve_lsv_closed_form, solve_stc_closed_form
from smchatter.lti import eval_response, loop_tf

from conftest import B, K, K1, K2


def _sine_power_exact(p):
    # Wallis-type integral via the Beta function
    return math.sqrt(math.pi) * gamma((p + 1) / 2) / gamma(p / 2 + 1)


@pytest.mark.parametrize("x,p,expected", [(-4.0, 0.5, -2.0), (3.0, 2.0, 9.0),
                                          (0.0, 0.0, 0.0), (0.0, 0.5, 0.0),
                                          (-2.0, 0.0, -1.0), (5.0, 1.0, 5.0)])
def test_signed_power(x, p, expected):
    assert signed_power(x, p) == expected


def test_signed_power_arrays():
    out = signed_power(np.array([-4.0, 0.0, 9.0]), 0.5)
    np.testing.assert_array_equal(out, [-2.0, 0.0, 3.0])


def test_alpha1():
    assert alpha1() == pytest.approx(1.748, abs=1e-3)
    assert alpha1() == pytest.approx(_sine_power_exact(1.5), abs=1e-12)
    assert sine_power_integral(1.0) == pytest.approx(2.0, abs=1e-12)
    assert sine_power_integral(2.0) == pytest.approx(math.pi / 2, abs=1e-12)


class TestClosedForms:
    def test_lsv_b_zero_reduces_to_relay(self):
        spec = ControllerSpec.lsv(1.0, 1e-300)
        assert df_lsv_lcsmc(spec, 1.0, 2.0) == pytest.approx(2 / math.pi)

    def test_lsv_unit_point(self):
        spec = ControllerSpec.lsv(1.0, 1.0)
        v = 4 / (math.pi * math.sqrt(2))
        assert df_lsv_lcsmc(spec, 1.0, 1.0) == pytest.approx(complex(v, -v), rel=1e-14)
        assert v == pytest.approx(0.90032, abs=1e-5)

    def test_tsv_b_zero_matches_lsv(self):
        lsv = ControllerSpec.lsv(1.0, 1e-300)
        tsv = ControllerSpec.tsv(1.0, 1e-300)
        for A, w in [(1.0, 2.0), (0.3, 7.0), (4.0, 0.2)]:
            assert df_tsv_lcsmc(tsv, A, w) == pytest.approx(df_lsv_lcsmc(lsv, A, w), rel=1e-12)
        assert df_tsv_lcsmc(tsv, 1.0, 2.0) == pytest.approx(2 / math.pi)

    def test_tsv_unit_point(self):
        spec = ControllerSpec.tsv(1.0, 1.0)
        r5 = math.sqrt(5) - 1
        expected = complex(2 / math.pi * r5, -2 / math.pi * math.sqrt(2 * r5))
        assert df_tsv_lcsmc(spec, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.78685 - 1.00091j, abs=1e-4)

    def test_stc_parts(self):
        assert df_stc(ControllerSpec.stc(1.0, 1e-300), 1.0, 1.0) == pytest.approx(
            2 * alpha1() / math.pi)
        assert 2 * alpha1() / math.pi == pytest.approx(1.11276, abs=1e-4)
        # k1 -> 0: only the relay through the integrator remains
        n = df_stc(ControllerSpec.stc(1e-300, 1.0), 1.0, 1.0)
        assert n == pytest.approx(-4j / math.pi, abs=1e-12)

    def test_wrong_variant_rejected(self, lsv, stc):
        with pytest.raises(DomainError):
            df_stc(lsv, 1.0, 1.0)
        with pytest.raises(DomainError):
            df_lsv_lcsmc(stc, 1.0, 1.0)

    @pytest.mark.parametrize("A,w", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
    def test_zero_amplitude_or_frequency(self, lsv, tsv, stc, A, w):
        for spec in (lsv, tsv, stc):
            with pytest.raises(DomainError):
                describing_function(spec, A, w)

    def test_hb_balance_at_reference_points(self, lsv, stc):
        p = solve_lsv_closed_form(K, B, 0.05)
        assert p.amplitude == pytest.approx(0.0147116, rel=1e-4)
        assert p.omega == pytest.approx(16.7332, rel=1e-5)
        W = eval_response(loop_tf(0.05), p.omega)
        assert abs(df_lsv_lcsmc(lsv, p.amplitude, p.omega) * W + 1) < 1e-9
        q = solve_stc_closed_form(K1, K2, 0.05)
        assert q.amplitude == pytest.approx(0.070296, rel=1e-4)
        assert q.omega == pytest.approx(13.6993, rel=2e-4)
        W = eval_response(loop_tf(0.05), q.omega)
        assert abs(df_stc(stc, q.amplitude, q.omega) * W + 1) < 1e-6


class TestProperties:
    @pytest.mark.parametrize("seed", range(3))
    def test_sign_structure(self, seed):
        rng = np.random.default_rng(seed)
        for k, b, A, w in rng.uniform(0.05, 20, size=(200, 4)):
            for spec in (ControllerSpec.lsv(k, b), ControllerSpec.tsv(k, b),
                         ControllerSpec.stc(k, b)):
                n = describing_function(spec, A, w)
                assert n.real > 0
                assert n.imag <= 0

    def test_scaling_in_amplitude(self, lsv, stc):
        for A, w in [(0.1, 3.0), (2.0, 20.0)]:
            assert df_lsv_lcsmc(lsv, 2 * A, w) == pytest.approx(df_lsv_lcsmc(lsv, A, w) / 2)
            n1, n2 = df_stc(stc, A, w), df_stc(stc, 2 * A, w)
            assert n2.real == pytest.approx(n1.real / math.sqrt(2))
            assert n2.imag == pytest.approx(n1.imag / 2)


class TestOracle:
    @pytest.mark.parametrize("variant,expected", [
        ("lsv", 0.9003163161571061 - 0.9003163161571061j),
        ("tsv", 0.7869053144667727 - 1.0009590223087825j),
    ])
    def test_unit_points(self, variant, expected):
        spec = ControllerSpec(variant, k=1.0, b=1.0)
        assert df_numeric(spec, 1.0, 1.0) == pytest.approx(expected, rel=1e-6)

    def test_stc_unit_point(self):
        spec = ControllerSpec.stc(1.0, 1e-300)
        assert df_numeric(spec, 1.0, 1.0) == pytest.approx(1.112835788898764, rel=1e-6, abs=1e-9)

    def test_accuracy_at_one_million_samples(self):
        for spec in (ControllerSpec.lsv(2.0, 0.7), ControllerSpec.tsv(2.0, 0.7),
                     ControllerSpec.stc(2.0, 0.7)):
            closed = describing_function(spec, 0.8, 3.3)
            assert abs(df_numeric(spec, 0.8, 3.3, 10 ** 6) - closed) <= 1e-6 * abs(closed)

    def test_multiple_switchings_handled(self):
        # b >> A w^2 puts both switchings close to the zeros of sin; a coarse
        # grid still converges at second order once jumps are integrated exactly
        spec = ControllerSpec.tsv(3.0, 50.0)
        closed = describing_function(spec, 0.01, 2.0)
        assert df_numeric(spec, 0.01, 2.0, 4096) == pytest.approx(closed, rel=1e-6)

    def test_disagreement_is_logged(self, caplog):
        spec = ControllerSpec.lsv(1.0, 1.0)
        _, _, rel = compare_with_oracle(spec, 1.0, 1.0, samples=64, threshold=0.0)
        assert "disagrees" in caplog.text
        assert rel < 1e-2


def test_controller_spec_validation():
    with pytest.raises(DomainError):
        ControllerSpec.lsv(0.0, 1.0)
    with pytest.raises(DomainError):
        ControllerSpec.tsv(1.0, -1.0)
    with pytest.raises(DomainError):
        ControllerSpec.stc(1.0, 0.0)
    with pytest.raises(DomainError):
        ControllerSpec.lsv(1.0, 1.0, delta=-1.0)
    assert ControllerSpec("tsv", k=1, b=1).variant is Variant.TSV_LCSMC


def test_gain_warnings_are_advisory():
    with pytest.warns(GainWarning, match="k1"):
        spec = ControllerSpec.stc(K1, K2, 5.0)
    assert spec.k1 == K1
    with pytest.warns(GainWarning):
        ControllerSpec.lsv(4.0, 3.0, delta=5.0)


def test_oscillation_point_validation():
    OscillationPoint(0.1, 2.0)
    with pytest.raises(DomainError):
        OscillationPoint(0.0, 2.0)


class TestLocus:
    def test_lsv_b_zero(self):
        pts = neg_reciprocal_locus(ControllerSpec.lsv(1.0, 1e-300), [1.0], 2.0)
        assert pts[0].value == pytest.approx(-math.pi / 2)

    def test_stc_pure_relay(self):
        pts = neg_reciprocal_locus(ControllerSpec.stc(1e-300, 1.0), 1.0, [1.0])
        assert pts[0].value == pytest.approx(-0.785398j, abs=1e-6)

    def test_lsv_intersects_nyquist_at_hb_point(self, lsv):
        p = solve_lsv_closed_form(K, B, 0.05)
        pts = neg_reciprocal_locus(lsv, p.amplitude, p.omega)
        assert pts[0].value == pytest.approx(eval_response(loop_tf(0.05), p.omega), rel=1e-12)

    def test_paired_grids_carry_both_coordinates(self, tsv):
        pts = neg_reciprocal_locus(tsv, [0.01, 0.02], [10.0, 12.0])
        assert [(p.amplitude, p.omega) for p in pts] == [(0.01, 10.0), (0.02, 12.0)]

    def test_vanishing_df_reported_not_raised(self, lsv):
        # A * sqrt(w^2 + b^2) overflows, so N underflows to zero
        pts = neg_reciprocal_locus(lsv, [1e-2, 1e308], 1e300)
        assert pts[0].value is not None
        assert pts[1].value is None and pts[1].error

    def test_bad_grids(self, lsv):
        with pytest.raises(DomainError):
            neg_reciprocal_locus(lsv, [], 1.0)
        with pytest.raises(DomainError):
            neg_reciprocal_locus(lsv, [1.0, -1.0], 1.0)
        with pytest.raises(DomainError):
            neg_reciprocal_locus(lsv, [1.0, 2.0], [1.0, 2.0, 3.0])
