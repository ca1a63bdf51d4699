"""scikit-learn style front end: fit the recurrence, transform points into polynomial values."""
from __future__ import annotations

import mpmath
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .hankel import BUFFER, eval_polynomials, spectral_pipeline
from .precision import DEFAULT_BITS, PrecisionContext
from .validation import check_bits, check_order, check_points, make_spec


class HypergeometricOPS(TransformerMixin, BaseEstimator):
    """Monic orthogonal polynomials of a hypergeometric discrete weight.

    ``fit`` computes moments, factors the Hankel matrix and stores the recurrence
    coefficients; ``transform(z)`` returns ``P_0(z) .. P_{order-1}(z)`` for every
    point as an object array of mpf values (``as_float=True`` gives float64).

    Parameters left as ``None`` take the family's reference values.
    """

    def __init__(self, family="F12", a=None, b=None, eta=None, order=16, bits=DEFAULT_BITS, as_float=False):
        self.family = family
        self.a = a
        self.b = b
        self.eta = eta
        self.order = order
        self.bits = bits
        self.as_float = as_float

    def fit(self, X=None, y=None):
        """Build the spectral data; ``X`` and ``y`` are ignored."""
        self.spec_ = make_spec(self.family, self.a, self.b, self.eta)
        self.order_ = check_order(self.order)
        self.ctx_ = PrecisionContext(check_bits(self.bits))
        self.data_ = spectral_pipeline(self.spec_, self.order_, self.ctx_, BUFFER)
        K = self.order_
        self.beta_ = list(self.data_.beta[:K])
        self.gamma_ = list(self.data_.gamma[:K])
        self.H_ = list(self.data_.H[:K])
        self.p1_ = list(self.data_.p1[:K])
        self.moments_ = list(self.data_.table.rho[: 2 * K])
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        """Values of ``P_0 .. P_{order-1}`` at each point, shape ``(n_points, order)``."""
        check_is_fitted(self, "data_")
        with self.ctx_:
            pts = check_points(X)
            rows = [eval_polynomials(self.data_, z, self.order_ - 1) for z in pts]
        out = np.empty((len(rows), self.order_), dtype=object)
        for i, r in enumerate(rows):
            out[i, :] = r
        return out.astype(float) if self.as_float else out

    def recurrence(self):
        """``(beta, gamma)`` up to the fitted order (``gamma[0]`` is 0 by convention)."""
        check_is_fitted(self, "data_")
        return self.beta_, self.gamma_

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "data_")
        return np.array([f"P_{n}" for n in range(self.order_)], dtype=object)

    def norms(self, digits=None):
        """Squared norms ``H_n`` as strings with ``digits`` significant digits."""
        check_is_fitted(self, "data_")
        digits = digits or self.ctx_.digits
        with self.ctx_:
            return [mpmath.nstr(h, digits) for h in self.H_]
