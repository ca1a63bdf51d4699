import mpmath
import pytest

from lfortho.hankel import eval_polynomials
from lfortho.precision import PrecisionContext
from lfortho.toda import (EtaFamily, budget, convergence_order, gauge_residual, moment_shift_residual,
                          sato_wilson_residual, theta2_eta, theta_eta, toda_residuals)

from conftest import FAMILIES, reference_spec


@pytest.fixture(scope="module")
def families(ctx):
    cache = {}

    def get(family):
        if family not in cache:
            cache[family] = EtaFamily(reference_spec(family), 16, ctx)
        return cache[family]

    return get


def test_derivative_of_constant(ctx):
    est = theta_eta(lambda e: mpmath.mpf(7), 2, ctx)
    assert abs(est.value) <= est.error_estimate + ctx.eps_verify
    assert est.error_estimate >= 0


def test_derivative_of_identity(ctx):
    with ctx:
        est = theta_eta(lambda e: e, mpmath.mpf(3), ctx)
        assert abs(est.value - 3) < mpmath.mpf(2) ** -200
        assert est.step_used == mpmath.ldexp(1, -128)


def test_second_derivative_of_power(ctx):
    with ctx:
        # (eta d/deta)^2 eta^3 = 9 eta^3
        est = theta2_eta(lambda e: e ** 3, mpmath.mpf(2), ctx)
        assert abs(est.value - 72) < 10 * est.error_estimate + ctx.eps_verify * 72


def test_moment_shift_oracle(families, ctx):
    fam = families("F12")
    with ctx:
        est = fam.theta(lambda f, e: f.data_at(e).table[0])
        assert abs(est.value - fam.data.table[1]) <= 10 * est.error_estimate + ctx.eps_verify * est.value
    for n in range(7):
        assert moment_shift_residual(fam, n).passed


@pytest.mark.parametrize("family", FAMILIES)
def test_toda_relations(families, family):
    fam = families(family)
    for n in range(1, 7):
        recs = toda_residuals(fam, n)
        assert {r.identity for r in recs} == {"toda.beta", "toda.log_gamma", "toda.log_H", "toda.p1",
                                              "toda.second_order", "toda.second_order_gamma"}
        assert all(r.passed for r in recs), [(r.identity, r.residual, r.budget) for r in recs if not r.passed]


def test_toda_precondition(families):
    with pytest.raises(ValueError):
        toda_residuals(families("F12"), 0)
    with pytest.raises(ValueError):
        toda_residuals(families("F12"), 14)


def test_sato_wilson_first_index_is_toda_at_zero(families, ctx):
    fam = families("F22")
    with ctx:
        z = mpmath.mpf(5)
        est = fam.theta(lambda f, e: eval_polynomials(f.data_at(e), z, 1)[1])
        beta0 = fam.theta(lambda f, e: f.data_at(e).beta[0])
        assert abs(est.value + beta0.value) < ctx.eps_verify * 100
        assert abs(beta0.value - fam.data.gamma[1]) < 10 * beta0.error_estimate + ctx.eps_verify
    assert sato_wilson_residual(fam, z, 1).passed


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_sato_wilson_reference_f22(families, n):
    assert sato_wilson_residual(families("F22"), "1/2", n).passed


@pytest.mark.parametrize("family", FAMILIES)
def test_gauge_equivalence(families, family):
    assert gauge_residual(families(family)).passed


def test_convergence_order_window(families, ctx):
    fam = families("F12")
    with ctx:
        d = fam.data
        for n in (1, 2, 3):
            ratio = convergence_order(lambda e: fam.data_at(e).beta[n], fam.eta, ctx, d.gamma[n + 1] - d.gamma[n])
            assert 3.5 <= ratio <= 4.5


def test_budget_has_floor(ctx):
    assert budget(0, 1, ctx) == ctx.eps_verify
    assert budget(mpmath.mpf(1), 0, ctx) == 10 + ctx.eps_verify


def test_family_caches_pipelines(ctx):
    fam = EtaFamily(reference_spec("F12"), 12, PrecisionContext(192))
    a = fam.data_at(fam.eta)
    assert fam.data_at(fam.eta) is a and fam.data is a
    assert fam.data_at(mpmath.mpf(3)).spec.eta == 3
