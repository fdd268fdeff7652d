from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from limitentry.distributions import (
    Exponential,
    PiecewiseExponentialHazard,
    classify,
    epsk,
    hazard,
    make_distribution,
    virtual_value,
    virtual_value_inverse_zero,
)
from limitentry.errors import InvalidParameter, InvalidSpec, UndefinedHazard, UndefinedVirtualValue


class TestParsing:
    def test_exponential_cdf(self):
        d = make_distribution("exp(rate=1)")
        x = np.linspace(0, 5, 11)
        np.testing.assert_allclose(d.cdf(x), 1 - np.exp(-x), rtol=0, atol=1e-15)

    def test_epsk_equal_masses(self):
        d = make_distribution("epsk(eps=0.1,k=2)")
        assert d.mass1 == pytest.approx(0.5)
        assert d.threshold == pytest.approx(math.log(2) / 0.1)
        assert d.cdf(d.threshold) == pytest.approx(0.5, abs=1e-14)
        assert hazard(d, 1.0) == pytest.approx(0.1)
        assert hazard(d, 10.0) == pytest.approx(1.0)

    def test_epsk_mass_convention(self):
        d = make_distribution("epsk(eps=0.02,k=1.3333333333)")
        assert d.mass1 == pytest.approx(0.75, rel=1e-9)
        assert d.threshold == pytest.approx(math.log(4) / 0.02, rel=1e-8)

    @pytest.mark.parametrize("spec", [" exp( rate = 2 ) ", "uniform(hi=3,lo=1)", "halfnormal(sigma=0.5)",
                                      "pwexp(h1=0.5,h2=2,mass1=0.3)"])
    def test_accepts_whitespace_and_order(self, spec):
        d = make_distribution(spec)
        assert make_distribution(d.spec) == d

    @pytest.mark.parametrize("spec", ["", "exp", "exp(rate=)", "exp(rate=1", "gamma(a=1)", "exp(rate=1,x=2)",
                                      "uniform(lo=0)", "exp(rate=abc)"])
    def test_malformed(self, spec):
        with pytest.raises(InvalidSpec):
            make_distribution(spec)

    @pytest.mark.parametrize("spec", ["exp(rate=0)", "exp(rate=-1)", "uniform(lo=1,hi=1)", "halfnormal(sigma=0)",
                                      "epsk(eps=0,k=2)", "epsk(eps=1.5,k=2)", "epsk(eps=0.1,k=1)",
                                      "pwexp(h1=1,h2=1,mass1=1)"])
    def test_out_of_range(self, spec):
        with pytest.raises(InvalidParameter):
            make_distribution(spec)


class TestPointwise:
    @pytest.mark.parametrize("rate,x", [(1.0, 0.0), (1.0, 3.0), (2.5, 0.7)])
    def test_exponential_hazard_constant(self, rate, x):
        assert hazard(Exponential(rate), x) == pytest.approx(rate)

    def test_uniform_hazard(self):
        assert hazard(make_distribution("uniform(lo=0,hi=1)"), 0.5) == pytest.approx(2.0)

    def test_hazard_undefined_at_top(self):
        with pytest.raises(UndefinedHazard):
            hazard(make_distribution("uniform(lo=0,hi=1)"), 1.0)

    @pytest.mark.parametrize("spec,v,expected", [
        ("exp(rate=1)", 1.0, 0.0),
        ("uniform(lo=0,hi=1)", 0.25, -0.5),
        ("uniform(lo=0,hi=1)", 0.5, 0.0),
    ])
    def test_virtual_value(self, spec, v, expected):
        assert virtual_value(make_distribution(spec), v) == pytest.approx(expected, abs=1e-12)

    def test_virtual_value_outside_support(self):
        with pytest.raises(UndefinedVirtualValue):
            virtual_value(make_distribution("uniform(lo=0,hi=1)"), 2.0)

    def test_virtual_zero_matches_grid_maximizer(self, cfg):
        u = make_distribution("uniform(lo=0,hi=1)")
        grid = np.linspace(0, 1, 100001)
        assert virtual_value_inverse_zero(u, cfg) == pytest.approx(grid[np.argmax(grid * (1 - grid))], abs=1e-5)

    @pytest.mark.parametrize("spec,expected", [("uniform(lo=0,hi=1)", 0.5), ("exp(rate=1)", 1.0)])
    def test_virtual_zero(self, spec, expected, cfg):
        assert virtual_value_inverse_zero(make_distribution(spec), cfg) == pytest.approx(expected, abs=1e-8)

    def test_virtual_zero_epsk_against_brute_force(self, cfg):
        d = epsk(0.1, 2)
        x = np.linspace(0, 40, 400001)
        brute = x[np.argmax(x * d.sf(x))]
        assert virtual_value_inverse_zero(d, cfg) == pytest.approx(brute, abs=1e-3)

    @pytest.mark.parametrize("spec", ["exp(rate=1)", "exp(rate=3)", "uniform(lo=0,hi=1)", "uniform(lo=0,hi=2)",
                                      "halfnormal(sigma=1)", "epsk(eps=0.1,k=2)"])
    def test_virtual_zero_routes_agree(self, spec, cfg):
        d = make_distribution(spec)
        a = virtual_value_inverse_zero(d, cfg, method="bisection")
        b = virtual_value_inverse_zero(d, cfg, method="grid")
        assert a == pytest.approx(b, rel=1e-6, abs=1e-6)

    def test_equal_hazards_reduce_to_exponential(self):
        pw = PiecewiseExponentialHazard(1.7, 1.7, 0.4)
        ex = Exponential(1.7)
        x = np.linspace(0, 10, 501)
        np.testing.assert_allclose(pw.cdf(x), ex.cdf(x), atol=1e-12)
        np.testing.assert_allclose(pw.pdf(x), ex.pdf(x), atol=1e-12)


class TestDensityJumps:
    def test_epsk_density_jumps_up(self):
        d = epsk(0.02, 4 / 3)
        t = d.threshold
        assert d.pdf_left(t) == pytest.approx(0.02 * 0.25)
        assert d.pdf(t) == pytest.approx(1.0 * 0.25)

    def test_pdf_prime_matches_finite_difference(self):
        d = make_distribution("halfnormal(sigma=1.3)")
        for x in (0.2, 1.0, 2.5):
            fd = (d.pdf(x + 1e-6) - d.pdf(x - 1e-6)) / 2e-6
            assert d.pdf_prime(x) == pytest.approx(fd, rel=1e-6)


class TestClassify:
    @pytest.mark.parametrize("spec", ["exp(rate=1)", "exp(rate=3)", "uniform(lo=0,hi=1)", "uniform(lo=0,hi=2)"])
    def test_mhr_plus_families(self, spec, cfg):
        c = classify(make_distribution(spec), cfg)
        assert c.regular.passed and c.mhr.passed and c.mhr_plus.passed and c.decreasing_density.passed

    def test_exponential_constant(self, cfg):
        assert classify(Exponential(1.0), cfg).mhr_plus_constant == pytest.approx(1.0)

    def test_halfnormal_is_mhr_not_mhr_plus(self, cfg):
        # f(0) f(x) >= x f(x) fails once x > f(0) = sqrt(2/pi)
        c = classify(make_distribution("halfnormal(sigma=1)"), cfg)
        assert c.mhr.passed and c.decreasing_density.passed
        assert not c.mhr_plus.passed
        assert c.mhr_plus.witness >= math.sqrt(2 / math.pi) - 1e-3

    def test_epsk_witnesses(self, cfg):
        d = epsk(0.02, 4 / 3)
        c = classify(d, cfg)
        assert c.mhr.passed and c.regular.passed
        assert not c.mhr_plus.passed
        assert not c.decreasing_density.passed
        assert c.decreasing_density.witness == pytest.approx(d.threshold)

    @settings(max_examples=100, deadline=None)
    @given(eps=st.floats(0.01, 1.0), k=st.floats(1.05, 20.0))
    def test_epsk_always_mhr(self, eps, k):
        assert classify(epsk(eps, k)).mhr.passed

    @settings(max_examples=100, deadline=None)
    @given(
        family=st.sampled_from(["exp", "uniform", "halfnormal", "pwexp"]),
        a=st.floats(0.05, 5.0), b=st.floats(0.05, 5.0), m=st.floats(0.05, 0.95),
    )
    def test_class_nesting(self, family, a, b, m):
        spec = {
            "exp": f"exp(rate={a})",
            "uniform": f"uniform(lo={a},hi={a + b})",
            "halfnormal": f"halfnormal(sigma={a})",
            "pwexp": f"pwexp(h1={a},h2={b},mass1={m})",
        }[family]
        c = classify(make_distribution(spec))
        assert not c.mhr_plus.passed or c.mhr.passed
        assert not c.mhr.passed or c.regular.passed

    def test_decreasing_hazard_fails_mhr(self, cfg):
        c = classify(PiecewiseExponentialHazard(2.0, 0.5, 0.5), cfg)
        assert not c.mhr.passed

    def test_classification_serializes(self, cfg):
        out = classify(epsk(0.1, 2), cfg).to_dict()
        assert set(out) == {"regular", "mhr", "mhr_plus", "decreasing_density"}


@settings(max_examples=50, deadline=None)
@given(u=st.lists(st.floats(1e-9, 1 - 1e-9), min_size=1, max_size=20),
       spec=st.sampled_from(["exp(rate=2)", "uniform(lo=1,hi=4)", "halfnormal(sigma=2)", "epsk(eps=0.05,k=3)"]))
def test_quantile_roundtrip(u, spec):
    d = make_distribution(spec)
    u = np.array(u)
    np.testing.assert_allclose(d.cdf(d.quantile(u)), u, atol=1e-8)


def test_quantile_roundtrip_thousand_points(builtin):
    u = np.random.default_rng(3).uniform(size=1000)
    np.testing.assert_allclose(builtin.cdf(builtin.quantile(u)), u, atol=1e-8)


def test_regular_virtual_value_nondecreasing(builtin, cfg):
    if not classify(builtin, cfg).regular.passed:
        pytest.skip("not regular")
    x = builtin.quantile(np.linspace(0.0, 0.999, 2000))
    phi = x - builtin.inverse_hazard(x)
    assert np.all(np.diff(phi) >= -1e-10)
