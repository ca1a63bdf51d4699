from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from lfortho.exceptions import InvalidSpec
from lfortho.precision import PrecisionContext, sum_certified
from lfortho.weights import (FamilySpec, as_fraction, make_pearson, moment_table, pearson_residual, support_size,
                             weight, weight_direct, weight_sequence)

from conftest import FAMILIES, reference_spec


def test_pearson_pair_f12_unit_parameters():
    with PrecisionContext(128):
        pp = make_pearson(FamilySpec("F12", (1,), (0, 0), 1))
        for z in (0, 1, 2, mpmath.mpf("0.5")):
            assert pp.sigma(z) == z + 1
            assert pp.theta(z) == z ** 3


def test_pearson_pair_f32_arithmetic():
    with PrecisionContext(128):
        pp = make_pearson(FamilySpec("F32", (1, 2, 3), (1, 1), Fraction(1, 2)))
        assert pp.sigma(2) == 30
        assert pp.theta(2) == 18
        assert pp.degrees == (3, 3)


@pytest.mark.parametrize("family", FAMILIES)
def test_theta_vanishes_at_zero(family):
    with PrecisionContext(128):
        assert make_pearson(reference_spec(family)).theta(0) == 0


def test_power_basis_coefficients_match_roots():
    with PrecisionContext(128):
        pp = make_pearson(FamilySpec("F22", (1, 2), (1, 3), 2))
        # sigma = 2 (z+1)(z+2) = 2z^2 + 6z + 4; theta = z(z+1)(z+3) = z^3 + 4z^2 + 3z
        assert pp.sigma_coeffs() == [4, 6, 2]
        assert pp.theta_coeffs() == [0, 3, 4, 1]


@pytest.mark.parametrize("family", FAMILIES)
def test_weight_at_zero_is_one(family):
    assert weight(reference_spec(family), 0, PrecisionContext(128)) == 1


def test_weight_inverse_factorial_squares():
    ctx = PrecisionContext(128)
    with ctx:
        assert weight(FamilySpec("F12", (1,), (0, 0), 1), 2, ctx) == mpmath.mpf(1) / 4


def test_recurrence_and_pochhammer_weights_agree():
    ctx = PrecisionContext(256)
    spec = reference_spec("F32")
    w = weight_sequence(spec, 40, ctx)
    with ctx:
        for k in (0, 1, 7, 39):
            assert abs(w[k] - weight_direct(spec, k, ctx)) / w[k] < ctx.eps_verify


@pytest.mark.parametrize("family", FAMILIES)
def test_pearson_residual_reference(family):
    ctx = PrecisionContext(256)
    assert pearson_residual(reference_spec(family), 200, ctx) < ctx.eps_verify


_ratio = st.fractions(min_value=Fraction(1, 10), max_value=Fraction(5), max_denominator=40)


@settings(max_examples=15, deadline=None)
@given(family=st.sampled_from(FAMILIES), a=st.lists(_ratio, min_size=3, max_size=3),
       b=st.lists(_ratio, min_size=2, max_size=2), eta=st.fractions(min_value=Fraction(1, 20), max_value=Fraction(19, 20), max_denominator=30))
def test_pearson_residual_random_specs(family, a, b, eta):
    M = {"F12": 1, "F22": 2, "F32": 3}[family]
    ctx = PrecisionContext(192)
    spec = FamilySpec(family, a[:M], b, eta)
    assert pearson_residual(spec, 200, ctx) < ctx.eps_verify


def test_rho0_inverse_factorial_squares():
    ctx = PrecisionContext(256)
    t = moment_table(FamilySpec("F12", (1,), (0, 0), 1), 1, ctx)
    assert mpmath.nstr(t[0], 8) == "2.2795853"


def test_rho0_parameter_cancellation():
    # a_1 = b_1 + 1 cancels one Pochhammer pair, leaving eta^k / ((b_2+1)_k k!)
    ctx = PrecisionContext(256)
    spec = FamilySpec("F12", ("3/2",), ("1/2", "1/4"), 2)
    rho0 = moment_table(spec, 1, ctx)[0]
    with ctx:
        b2, eta = mpmath.mpf(1) / 4, mpmath.mpf(2)
        oracle, _ = sum_certified(lambda k: eta ** k / (mpmath.rf(b2 + 1, k) * mpmath.factorial(k)), ctx)
        assert abs(rho0 - oracle) / oracle < ctx.eps_verify


@pytest.mark.parametrize("family", FAMILIES)
def test_moments_positive_and_log_convex(family):
    ctx = PrecisionContext(192)
    rho = moment_table(reference_spec(family), 24, ctx).rho
    with ctx:
        assert all(r > 0 for r in rho)
        for n in range(1, 23):
            assert rho[n - 1] * rho[n + 1] >= rho[n] ** 2


def test_moment_shift_by_central_difference():
    # eta d/deta rho_n = rho_{n+1}; plain central difference in log eta has O(h^2) error
    ctx = PrecisionContext(192)
    spec = reference_spec("F22")
    with ctx:
        rho2 = moment_table(spec, 3, ctx)[2]
        errs = []
        for h in (mpmath.ldexp(1, -8), mpmath.ldexp(1, -9)):
            at = lambda e: moment_table(spec.with_eta(as_fraction(2 * mpmath.exp(e))), 2, ctx)[1]
            errs.append(abs((at(h) - at(-h)) / (2 * h) - rho2))
        assert 3.5 < errs[0] / errs[1] < 4.5


def test_terminating_support():
    spec = FamilySpec("F32", (-3, "1/2", "3/4"), (1, 2), "7/2", positive=False)
    assert spec.terminating and support_size(spec) == 4
    ctx = PrecisionContext(128)
    with ctx:
        assert weight(spec, 4, ctx) == 0
        exact = sum(weight_direct(spec, k, ctx) for k in range(4))
        assert abs(moment_table(spec, 1, ctx)[0] - exact) < ctx.eps_verify


@pytest.mark.parametrize("family,a,b,eta,msg", [
    ("F13", (1,), (1, 1), 1, "unknown family"),
    ("F12", (1, 2), (1, 1), 1, "needs 1"),
    ("F12", (1,), (-2, 1), 1, "Pochhammer"),
    ("F12", (1,), (1, 1), 0, "positive"),
    ("F12", (-1,), (1, 1), 1, "sign"),
    ("F22", ("-1/2", 1), (1, 1), 1, "a_i > 0"),
    ("F32", (1, 2, 3), (1, 1), 1, "eta < 1"),
    ("F32", (1, 2, 3), (1, 1), "3/2", "eta < 1"),
])
def test_spec_validation(family, a, b, eta, msg):
    with pytest.raises(InvalidSpec, match=msg):
        FamilySpec(family, a, b, eta)


def test_exact_rational_round_trip():
    assert as_fraction("0.25") == Fraction(1, 4)
    assert as_fraction("5/4") == Fraction(5, 4)
    with PrecisionContext(128):
        x = mpmath.mpf(1) / 3
        assert mpmath.mpf(as_fraction(x).numerator) / as_fraction(x).denominator == x
