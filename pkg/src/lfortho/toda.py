"""Derivatives in log(eta) by finite differences, and the Toda-type flow identities."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath

from .hankel import BUFFER, SpectralData, eval_polynomials, spectral_pipeline
from .operators import BandedOperator, dressed_pascal, psi_h_inverse, structure_matrix
from .precision import PrecisionContext
from .weights import FamilySpec, as_fraction, as_mpf


@dataclass(frozen=True)
class EtaDerivativeEstimate:
    value: mpmath.mpf
    error_estimate: mpmath.mpf
    step_used: mpmath.mpf


@dataclass(frozen=True)
class FlowResidual:
    """A flow identity checked against a finite-difference budget."""

    identity: str
    n: int
    residual: mpmath.mpf
    budget: mpmath.mpf

    @property
    def passed(self):
        return self.residual <= self.budget


def first_step(ctx: PrecisionContext):
    return mpmath.ldexp(1, -(ctx.bits // 3))


def second_step(ctx: PrecisionContext):
    return mpmath.ldexp(1, -(ctx.bits // 6))


def budget(err, scale, ctx: PrecisionContext):
    """``10 * error_estimate + eps_verify * scale``."""
    return 10 * err + ctx.eps_verify * max(abs(scale), 1)


def _combine(samples, h, order):
    """Richardson-extrapolated central difference from samples at ``{-2,-1,0,1,2} h``."""
    fm2, fm1, f0, f1, f2 = samples
    if order == 1:
        d1 = (f1 - fm1) / (2 * h)
        d2 = (f2 - fm2) / (4 * h)
    else:
        d1 = (f1 - 2 * f0 + fm1) / h ** 2
        d2 = (f2 - 2 * f0 + fm2) / (4 * h ** 2)
    return (4 * d1 - d2) / 3, d1


def _ladder(fn, eta, h, ctx, order=1, vector=False):
    with ctx:
        eta = mpmath.mpf(eta)
        x0 = mpmath.log(eta)
        pts = [mpmath.exp(x0 + k * h) if k else eta for k in (-2, -1, 0, 1, 2)]
        vals = [fn(e) if (k or order == 2) else None for k, e in zip((-2, -1, 0, 1, 2), pts)]
        if not vector:
            ext, raw = _combine(vals, h, order)
            return EtaDerivativeEstimate(ext, abs(ext - raw), h)
        out = []
        for comp in zip(*[v if v is not None else [None] * len(vals[0]) for v in vals]):
            ext, raw = _combine(comp, h, order)
            out.append(EtaDerivativeEstimate(ext, abs(ext - raw), h))
        return out


def theta_eta(fn, eta, ctx: PrecisionContext, h=None) -> EtaDerivativeEstimate:
    """``eta d/d eta`` of ``fn`` at ``eta``: central difference in ``log eta`` with one Richardson step.

    ``fn`` is called at ``eta e^{+-h}`` and ``eta e^{+-2h}``; the default ``h`` is ``2^(-bits/3)``.
    """
    return _ladder(fn, eta, first_step(ctx) if h is None else h, ctx)


def theta_eta_many(fn, eta, ctx: PrecisionContext, h=None):
    """Componentwise :func:`theta_eta` for a function returning a sequence."""
    return _ladder(fn, eta, first_step(ctx) if h is None else h, ctx, vector=True)


def theta2_eta(fn, eta, ctx: PrecisionContext, h=None) -> EtaDerivativeEstimate:
    """Second ``theta_eta`` derivative from a Richardson-extrapolated second difference."""
    return _ladder(fn, eta, second_step(ctx) if h is None else h, ctx, order=2)


def central_difference(fn, eta, h, ctx):
    """Plain (unextrapolated) central difference in ``log eta``; used for order checks."""
    with ctx:
        x0 = mpmath.log(mpmath.mpf(eta))
        return (fn(mpmath.exp(x0 + h)) - fn(mpmath.exp(x0 - h))) / (2 * h)


class EtaFamily:
    """One spec with its pipeline rebuilt at perturbed values of ``eta``.

    Perturbed ``eta`` values are converted to exact rationals, so each rebuilt
    spec is the same family evaluated at exactly that point. Results are cached
    per ``eta``.
    """

    def __init__(self, spec: FamilySpec, K: int, ctx: PrecisionContext, buffer: int = BUFFER,
                 data: SpectralData | None = None):
        self.spec = spec
        self.K = K
        self.ctx = ctx
        self.buffer = buffer
        self._data = {}
        self._extra = {}
        with ctx:
            self.eta = spec.mp_params()[2]
        # the unperturbed point is the spec itself even when eta is not dyadic
        self._base = as_fraction(self.eta)
        if data is not None:
            self._data[self._base] = data

    def data_at(self, eta) -> SpectralData:
        key = as_fraction(eta)
        if key not in self._data:
            spec = self.spec if key == self._base else self.spec.with_eta(key)
            self._data[key] = spectral_pipeline(spec, self.K, self.ctx, self.buffer)
        return self._data[key]

    def cached(self, name, eta, build):
        """Memoize ``build(data)`` per (name, eta), e.g. dressed Pascal matrices."""
        key = (name, as_fraction(eta))
        if key not in self._extra:
            self._extra[key] = build(self.data_at(eta))
        return self._extra[key]

    def pascal_at(self, eta, sign):
        return self.cached(("Pi", sign), eta, lambda d: dressed_pascal(d, sign))

    def psi_at(self, eta):
        def build(d):
            return structure_matrix(d.spec, d, "sigmaJ_H_PiT", Pi=self.pascal_at(eta, 1),
                                    PiInv=self.pascal_at(eta, -1))
        return self.cached("Psi", eta, build)

    @property
    def data(self):
        return self.data_at(self.eta)

    def theta(self, quantity, h=None) -> EtaDerivativeEstimate:
        """``theta_eta`` of ``quantity(family, eta)``."""
        return theta_eta(lambda e: quantity(self, e), self.eta, self.ctx, h)

    def theta2(self, quantity, h=None) -> EtaDerivativeEstimate:
        return theta2_eta(lambda e: quantity(self, e), self.eta, self.ctx, h)


def _family(spec_or_family, K, ctx):
    if isinstance(spec_or_family, EtaFamily):
        return spec_or_family
    return EtaFamily(spec_or_family, K, ctx)


def toda_residuals(spec_or_family, n, K=16, ctx: PrecisionContext | None = None):
    """First-order Toda relations and the second-order Toda equation at index ``n``.

    Returns :class:`FlowResidual` records for
    ``theta beta_n = gamma_{n+1} - gamma_n``, ``theta log gamma_n = beta_n - beta_{n-1}``,
    ``theta log H_n = beta_n``, ``theta p^1_n = -gamma_n``,
    ``theta^2 log H_n = gamma_{n+1} - gamma_n`` and
    ``theta^2 log gamma_n + 2 gamma_n = gamma_{n+1} + gamma_{n-1}``.
    """
    fam = _family(spec_or_family, K, ctx or PrecisionContext())
    if not 1 <= n <= fam.K - 3:
        raise ValueError(f"n={n} outside [1, {fam.K - 3}]")
    c = fam.ctx
    d = fam.data
    out = []
    with c:
        B, G, H = d.beta, d.gamma, d.H

        def check(name, est, target):
            scale = max(abs(est.value), abs(target), 1)
            out.append(FlowResidual(name, n, abs(est.value - target) / scale,
                                    budget(est.error_estimate / scale, 1, c)))

        check("toda.beta", fam.theta(lambda f, e: f.data_at(e).beta[n]), G[n + 1] - G[n])
        check("toda.log_gamma", fam.theta(lambda f, e: mpmath.log(f.data_at(e).gamma[n])), B[n] - B[n - 1])
        check("toda.log_H", fam.theta(lambda f, e: mpmath.log(f.data_at(e).H[n])), B[n])
        check("toda.p1", fam.theta(lambda f, e: f.data_at(e).p1[n]), -G[n])
        check("toda.second_order", fam.theta2(lambda f, e: mpmath.log(f.data_at(e).H[n])), G[n + 1] - G[n])
        check("toda.second_order_gamma",
              fam.theta2(lambda f, e: mpmath.log(f.data_at(e).gamma[n])), G[n + 1] + G[n - 1] - 2 * G[n])
    return out


def moment_shift_residual(spec_or_family, n, K=16, ctx: PrecisionContext | None = None) -> FlowResidual:
    """``theta rho_n = rho_{n+1}`` for the moment table."""
    fam = _family(spec_or_family, K, ctx or PrecisionContext())
    with fam.ctx:
        est = fam.theta(lambda f, e: f.data_at(e).table[n])
        target = fam.data.table[n + 1]
        scale = max(abs(est.value), abs(target))
        return FlowResidual("toda.moment_shift", n, abs(est.value - target) / scale,
                            budget(est.error_estimate / scale, 1, fam.ctx))


def sato_wilson_residual(spec_or_family, z, n, K=16, ctx: PrecisionContext | None = None) -> FlowResidual:
    """``|theta P_n(z) + gamma_n P_{n-1}(z)|`` normalized by ``max(|gamma_n P_{n-1}(z)|, 1)``."""
    fam = _family(spec_or_family, K, ctx or PrecisionContext())
    if not 1 <= n <= fam.K - 3:
        raise ValueError(f"n={n} outside [1, {fam.K - 3}]")
    with fam.ctx:
        z = as_mpf(z)
        est = fam.theta(lambda f, e: eval_polynomials(f.data_at(e), z, n)[n])
        d = fam.data
        rhs = d.gamma[n] * eval_polynomials(d, z, n)[n - 1]
        scale = max(abs(rhs), 1)
        return FlowResidual("toda.sato_wilson", n, abs(est.value + rhs) / scale,
                            budget(est.error_estimate / scale, 1, fam.ctx))


def gauge_residual(spec_or_family, K=16, ctx: PrecisionContext | None = None, rows=None) -> FlowResidual:
    """``theta(Psi H^{-1}) - [Phi, Psi H^{-1}]`` with ``Phi = -J_-``, entrywise max on valid rows.

    The residual and budget are relative to ``max|Psi H^{-1}|`` on the checked block.
    """
    fam = _family(spec_or_family, K, ctx or PrecisionContext())
    c = fam.ctx
    with c:
        d = fam.data
        X0 = psi_h_inverse(d, fam.psi_at(fam.eta))
        size = min(X0.valid - 1, fam.K - 2) if rows is None else rows
        lo, hi = X0.band
        cells = [(i, j) for i in range(size) for j in range(max(0, i + lo), min(size, i + hi + 1))]

        def entries(f, e):
            X = psi_h_inverse(f.data_at(e), f.psi_at(e))
            return [X[i, j] for i, j in cells]

        ests = theta_eta_many(lambda e: entries(fam, e), fam.eta, c)
        g = d.gamma
        # [X, J_-]_{ij} = X_{i,j+1} gamma_{j+1} - gamma_i X_{i-1,j}
        scale = X0.max_abs(size)
        worst = err = mpmath.mpf(0)
        for (i, j), est in zip(cells, ests):
            comm = X0[i, j + 1] * g[j + 1] - (g[i] * X0[i - 1, j] if i else 0)
            worst = max(worst, abs(est.value - comm))
            err = max(err, est.error_estimate)
        return FlowResidual("toda.gauge", size, worst / scale, budget(err / scale, 1, c))


def convergence_order(fn, eta, ctx: PrecisionContext, exact, h=None):
    """Ratio of unextrapolated central-difference errors at ``h`` and ``h/2`` (about 4)."""
    h = mpmath.ldexp(1, -6) if h is None else h
    with ctx:
        e1 = abs(central_difference(fn, eta, h, ctx) - exact)
        e2 = abs(central_difference(fn, eta, h / 2, ctx) - exact)
        return e1 / e2
