"""Hypergeometric weight families, their Pearson pair and certified moments."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath

from .exceptions import InvalidSpec
from .precision import PrecisionContext, sum_certified

FAMILY_SHAPES = {"F12": (1, 2), "F22": (2, 2), "F32": (3, 2)}


def as_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, float or decimal/``p/q`` string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    return Fraction(str(x).strip()) if isinstance(x, str) else Fraction(x)


def to_mpf(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


def as_mpf(x):
    """``x`` as an mpf at the current precision; rationals and ``p/q`` strings are rounded once."""
    if isinstance(x, mpmath.mpf):
        return x
    if isinstance(x, (Fraction, str)):
        return to_mpf(as_fraction(x))
    return mpmath.mpf(x)


def _is_nonpositive_integer(q: Fraction) -> bool:
    return q <= 0 and q.denominator == 1


@dataclass(frozen=True)
class FamilySpec:
    """Family tag with numerator parameters ``a``, denominator shifts ``b`` and ``eta``.

    Parameters are stored as exact rationals and rounded to ``mpf`` only at the
    working precision, so one spec can be evaluated at several precisions.
    """

    family: str
    a: tuple
    b: tuple
    eta: object
    positive: bool = True

    def __post_init__(self):
        fam = str(self.family).upper()
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "a", tuple(as_fraction(x) for x in self.a))
        object.__setattr__(self, "b", tuple(as_fraction(x) for x in self.b))
        object.__setattr__(self, "eta", as_fraction(self.eta))
        validate_spec(self)

    @property
    def M(self) -> int:
        return len(self.a)

    @property
    def N(self) -> int:
        return len(self.b)

    @property
    def terminating(self) -> bool:
        return any(_is_nonpositive_integer(x) for x in self.a)

    def with_eta(self, eta) -> "FamilySpec":
        return FamilySpec(self.family, self.a, self.b, eta, self.positive)

    def with_params(self, a: Sequence, b: Sequence) -> "FamilySpec":
        return FamilySpec(self.family, tuple(a), tuple(b), self.eta, self.positive)

    def mp_params(self):
        """``(a, b, eta)`` as mpf values at the current working precision."""
        return [to_mpf(x) for x in self.a], [to_mpf(x) for x in self.b], to_mpf(self.eta)


def _prod(xs):
    out = Fraction(1)
    for x in xs:
        out *= x
    return out


def support_size(spec: FamilySpec):
    """Number of lattice points carrying weight (``None`` for infinite support)."""
    stops = [-x for x in spec.a if _is_nonpositive_integer(x)]
    return int(min(stops)) + 1 if stops else None


def validate_spec(spec: FamilySpec) -> None:
    """Raise :class:`InvalidSpec` unless ``spec`` satisfies the family invariants."""
    if spec.family not in FAMILY_SHAPES:
        raise InvalidSpec(f"unknown family {spec.family!r}; expected one of {sorted(FAMILY_SHAPES)}")
    m, n = FAMILY_SHAPES[spec.family]
    if len(spec.a) != m or len(spec.b) != n:
        raise InvalidSpec(f"{spec.family} needs {m} a-parameter(s) and {n} b-parameters, "
                          f"got {len(spec.a)} and {len(spec.b)}")
    a, b, eta = spec.a, spec.b, spec.eta
    for bj in b:
        if _is_nonpositive_integer(bj + 1):
            raise InvalidSpec(f"b + 1 = {bj + 1} is a non-positive integer (Pochhammer pole)")
    if not eta > 0:
        raise InvalidSpec("eta must be a positive real")
    if spec.positive:
        if not all(x + 1 > 0 for x in b):
            raise InvalidSpec("positivity mode requires every b_j + 1 > 0")
        if spec.terminating:
            # weights stay positive iff sigma(k) > 0 on the finite support
            for k in range(support_size(spec) - 1):
                if not eta * _prod(k + x for x in a) > 0:
                    raise InvalidSpec(f"weight changes sign at k={k + 1}; disable positivity mode")
        elif not all(x > 0 for x in a):
            raise InvalidSpec("positivity mode requires every a_i > 0")
    if spec.family == "F32" and not spec.terminating and not eta < 1:
        raise InvalidSpec("non-terminating 3F2 moments need eta < 1 for convergence")


@dataclass(frozen=True)
class PearsonPair:
    """``sigma(z) = eta * prod(z + a_i)`` and ``theta(z) = z * prod(z + b_j)``."""

    sigma_roots: tuple
    theta_roots: tuple
    scale: mpmath.mpf

    @property
    def degrees(self):
        return len(self.sigma_roots), len(self.theta_roots)

    def sigma(self, z):
        out = self.scale
        for r in self.sigma_roots:
            out = out * (z - r)
        return out

    def theta(self, z):
        out = mpmath.mpf(1)
        for r in self.theta_roots:
            out = out * (z - r)
        return out

    def sigma_coeffs(self):
        """Power-basis coefficients of sigma, lowest degree first."""
        return _coeffs_from_roots(self.sigma_roots, self.scale)

    def theta_coeffs(self):
        return _coeffs_from_roots(self.theta_roots, mpmath.mpf(1))


def _coeffs_from_roots(roots, scale):
    c = [scale]
    for r in roots:
        nxt = [mpmath.mpf(0)] * (len(c) + 1)
        for i, ci in enumerate(c):
            nxt[i + 1] += ci
            nxt[i] -= r * ci
        c = nxt
    return c


def make_pearson(spec: FamilySpec) -> PearsonPair:
    """Pearson pair of ``spec`` evaluated at the current working precision."""
    a, b, eta = spec.mp_params()
    return PearsonPair(
        sigma_roots=tuple(-x for x in a),
        theta_roots=(mpmath.mpf(0),) + tuple(-x for x in b),
        scale=eta,
    )


def weight_sequence(spec: FamilySpec, count: int, ctx: PrecisionContext):
    """``w(0), ..., w(count-1)`` via ``w(k+1) = w(k) sigma(k) / theta(k+1)``."""
    with ctx:
        pp = make_pearson(spec)
        w = [mpmath.mpf(1)]
        for k in range(count - 1):
            w.append(w[-1] * pp.sigma(k) / pp.theta(k + 1))
        return w


def weight(spec: FamilySpec, k: int, ctx: PrecisionContext):
    if k < 0:
        raise ValueError("weight index must be non-negative")
    return weight_sequence(spec, k + 1, ctx)[k]


def weight_direct(spec: FamilySpec, k: int, ctx: PrecisionContext):
    """``w(k)`` as a ratio of Pochhammer products, independent of the recurrence."""
    if k < 0:
        raise ValueError("weight index must be non-negative")
    with ctx:
        a, b, eta = spec.mp_params()
        num = eta ** k
        for x in a:
            num *= mpmath.rf(x, k)
        den = mpmath.factorial(k)
        for x in b:
            den *= mpmath.rf(x + 1, k)
        return num / den


def pearson_residual(spec: FamilySpec, k_max: int, ctx: PrecisionContext):
    """``max_k |theta(k+1) w(k+1) - sigma(k) w(k)| / max(1, |sigma(k) w(k)|)`` for ``k <= k_max``.

    Weights come from :func:`weight_direct`, so the recurrence used for the
    moments is not what is being checked.
    """
    with ctx:
        pp = make_pearson(spec)
        worst = mpmath.mpf(0)
        w_next = weight_direct(spec, 0, ctx)
        for k in range(k_max + 1):
            w, w_next = w_next, weight_direct(spec, k + 1, ctx)
            rhs = pp.sigma(k) * w
            worst = max(worst, abs(pp.theta(k + 1) * w_next - rhs) / max(1, abs(rhs)))
        return worst


class _WeightCache:
    """Lazily extended weight sequence shared by all moment sums of one table."""

    def __init__(self, spec, ctx):
        self.pp = make_pearson(spec)
        self.w = [mpmath.mpf(1)]
        self.spec = spec

    def __call__(self, k):
        while len(self.w) <= k:
            j = len(self.w) - 1
            self.w.append(self.w[-1] * self.pp.sigma(j) / self.pp.theta(j + 1))
        return self.w[k]


@dataclass(frozen=True)
class MomentTable:
    """Certified moments ``rho[0..count-1]`` with provenance."""

    rho: tuple
    spec: FamilySpec
    ctx: PrecisionContext
    n_trunc: tuple = ()

    def __len__(self):
        return len(self.rho)

    def __getitem__(self, n):
        return self.rho[n]


def moment_table(spec: FamilySpec, count: int, ctx: PrecisionContext) -> MomentTable:
    """Moments ``rho_n = sum_k k^n w(k)`` for ``n < count``, each certified."""
    if count < 1:
        raise ValueError("count must be at least 1")
    with ctx:
        w = _WeightCache(spec, ctx)
        rho, trunc = [], []
        for n in range(count):
            if n == 0:
                term = w
            else:
                term = lambda k, n=n: mpmath.mpf(k) ** n * w(k) if k else mpmath.mpf(0)
            value, nt = sum_certified(term, ctx)
            rho.append(value)
            trunc.append(nt)
    return MomentTable(tuple(rho), spec, ctx, tuple(trunc))
