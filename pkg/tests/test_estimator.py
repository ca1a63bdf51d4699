import mpmath
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from lfortho import HypergeometricOPS
from lfortho.exceptions import InvalidSpec


@pytest.fixture(scope="module")
def fitted():
    return HypergeometricOPS("F12", order=8, bits=192).fit()


def test_params_round_trip():
    est = HypergeometricOPS("F22", a="3/2,5/4", order=10)
    assert est.get_params()["a"] == "3/2,5/4"
    c = clone(est.set_params(order=6))
    assert c.order == 6 and c.family == "F22"


def test_not_fitted():
    with pytest.raises(NotFittedError):
        HypergeometricOPS().transform([1])


def test_transform_shape_and_low_order(fitted):
    out = fitted.transform(["1/3", 2, 0.5])
    assert out.shape == (3, 8) and out.dtype == object
    with fitted.ctx_:
        z = mpmath.mpf(1) / 3
        assert out[0, 0] == 1
        assert abs(out[0, 1] - (z - fitted.beta_[0])) < mpmath.mpf(2) ** -180
        P2 = (z - fitted.beta_[1]) * out[0, 1] - fitted.gamma_[1]
        assert abs(out[0, 2] - P2) < mpmath.mpf(2) ** -180


def test_column_vector_input(fitted):
    a = fitted.transform(np.array([[0.25], [1.5]], dtype=object))
    b = fitted.transform([0.25, 1.5])
    assert (a == b).all()


def test_orthogonality_against_weight(fitted):
    # discrete inner product of P_2 and P_3 over the support vanishes relative to the norms
    from lfortho.weights import weight_direct
    with fitted.ctx_:
        s = mpmath.mpf(0)
        for k in range(400):
            p = fitted.transform([k])[0]
            s += weight_direct(fitted.spec_, k, fitted.ctx_) * p[2] * p[3]
        assert abs(s) / mpmath.sqrt(fitted.H_[2] * fitted.H_[3]) < mpmath.mpf(2) ** -96


def test_as_float(fitted):
    est = clone(fitted).set_params(as_float=True).fit()
    out = est.transform([0.5])
    assert out.dtype == np.float64
    np.testing.assert_allclose(out[0], np.array(fitted.transform([0.5])[0], dtype=float))


def test_feature_names_and_norms(fitted):
    assert list(fitted.get_feature_names_out()) == [f"P_{n}" for n in range(8)]
    assert fitted.norms(10)[0] == mpmath.nstr(fitted.moments_[0], 10)
    beta, gamma = fitted.recurrence()
    assert len(beta) == len(gamma) == 8 and gamma[0] == 0


@pytest.mark.parametrize("kw", [dict(family="F42"), dict(order=0), dict(bits=64), dict(eta="x"),
                                dict(family="F32", eta="3/2"), dict(order=True)])
def test_invalid_configuration(kw):
    with pytest.raises(InvalidSpec):
        HypergeometricOPS(**kw).fit()


@pytest.mark.parametrize("bad", [[float("nan")], [[1, 2]], "abc"])
def test_invalid_points(fitted, bad):
    with pytest.raises(ValueError):
        fitted.transform(bad)


def test_inside_pipeline():
    pipe = make_pipeline(FunctionTransformer(lambda x: x), HypergeometricOPS("F22", order=4, bits=128, as_float=True))
    out = pipe.fit_transform(np.array([[0.0], [1.0]]))
    assert out.shape == (2, 4)
    np.testing.assert_allclose(out[:, 0], 1.0)
