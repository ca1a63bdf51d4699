"""Shared plumbing for closed-form identity checks: records, reports, errata classification."""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath

from ..exceptions import DenominatorUnderflow
from ..hankel import BUFFER, SpectralData
from ..operators import dressed_pascal, structure_matrix
from ..precision import PrecisionContext
from ..weights import FamilySpec

PRINTED = "printed"


@dataclass(frozen=True)
class Params:
    """Family parameters as mpf values, plus ``n(n-1)/2``-style helpers."""

    eta: mpmath.mpf
    a: tuple
    b: tuple

    @classmethod
    def of(cls, spec: FamilySpec, ctx: PrecisionContext) -> "Params":
        with ctx:
            a, b, eta = spec.mp_params()
        return cls(eta, tuple(a), tuple(b))

    @property
    def e1(self):
        return sum(self.a[1:], self.a[0])

    @property
    def e2(self):
        a = self.a
        terms = [a[i] * a[j] for i in range(len(a)) for j in range(i + 1, len(a))]
        return sum(terms[1:], terms[0])

    def tracked(self) -> "Params":
        return Params(Tracked(self.eta), tuple(map(Tracked, self.a)), tuple(map(Tracked, self.b)))

    @property
    def bsum(self):
        return self.b[0] + self.b[1]

    @property
    def bprod(self):
        return self.b[0] * self.b[1]


def half(x):
    return mpmath.mpf(x) / 2


class Tracked:
    """A value carried together with a bound on the magnitudes that were combined into it.

    Sums accumulate ``|a| + |b|`` and products multiply bounds, so ``m`` is the
    scale of the largest term in an expanded expression. Residuals divided by it
    stay meaningful when both sides cancel down to rounding noise.
    """

    __slots__ = ("v", "m")

    def __init__(self, v, m=None):
        self.v = v
        self.m = abs(v) if m is None else m

    @staticmethod
    def lift(x):
        return x if isinstance(x, Tracked) else Tracked(x)

    def __add__(self, o):
        o = Tracked.lift(o)
        return Tracked(self.v + o.v, self.m + o.m)

    __radd__ = __add__

    def __sub__(self, o):
        o = Tracked.lift(o)
        return Tracked(self.v - o.v, self.m + o.m)

    def __rsub__(self, o):
        return Tracked.lift(o) - self

    def __neg__(self):
        return Tracked(-self.v, self.m)

    def __mul__(self, o):
        o = Tracked.lift(o)
        return Tracked(self.v * o.v, self.m * o.m)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = Tracked.lift(o)
        return Tracked(self.v / o.v, self.m / abs(o.v))

    def __rtruediv__(self, o):
        return Tracked.lift(o) / self

    def __pow__(self, k):
        return Tracked(self.v ** k, self.m ** k)

    def __abs__(self):
        return abs(self.v)

    def __lt__(self, o):
        return self.v < value(o)

    def __gt__(self, o):
        return self.v > value(o)

    def __repr__(self):
        return f"Tracked({self.v}, m={self.m})"


def value(x):
    return x.v if isinstance(x, Tracked) else x


def rel(lhs, rhs):
    """``|lhs - rhs|`` over the largest term magnitude (tracked) or the larger side; 0 when both vanish."""
    scale = max(getattr(lhs, "m", abs(lhs)), getattr(rhs, "m", abs(rhs)))
    if scale == 0:
        return mpmath.mpf(0)
    return abs(value(lhs) - value(rhs)) / scale


def guard(name, value, scale, ctx: PrecisionContext, n=None):
    """Raise :class:`DenominatorUnderflow` when ``value`` lost all but ``eps_pivot`` of ``scale``."""
    if abs(value) <= ctx.eps_pivot * max(abs(scale), 1):
        raise DenominatorUnderflow(name, value, n)
    return value


class Seq:
    """Index-checked view over ``beta``/``gamma`` lists; ``gamma_0`` reads as 0."""

    def __init__(self, values, name, first=0):
        self.values = values
        self.name = name
        self.first = first

    def __call__(self, n):
        if n < self.first:
            return mpmath.mpf(0)
        if n >= len(self.values):
            raise IndexError(f"{self.name}_{n} outside the available window (size {len(self.values)})")
        return self.values[n]


@dataclass(frozen=True)
class IdentityRecord:
    """Relative residual of one identity at one index; ``residual`` is None when skipped."""

    identity: str
    n: int
    residual: mpmath.mpf | None
    variant: str = PRINTED
    note: str = ""


def attempt(out, identity, n, thunk, variant=PRINTED):
    """Append the record for ``thunk()``; a denominator underflow becomes a skipped record."""
    try:
        value = thunk()
    except DenominatorUnderflow as exc:
        out.append(IdentityRecord(identity, n, None, variant, f"skipped: {exc.name} below pivot threshold"))
    else:
        out.append(IdentityRecord(identity, n, value, variant))


@dataclass(frozen=True)
class ForwardRow:
    n: int
    beta_lf: mpmath.mpf
    beta_chol: mpmath.mpf
    gamma_lf: mpmath.mpf
    gamma_chol: mpmath.mpf

    @property
    def d_beta(self):
        return abs(self.beta_lf - self.beta_chol)

    @property
    def d_gamma(self):
        return abs(self.gamma_lf - self.gamma_chol)

    @property
    def rel_beta(self):
        return rel(self.beta_lf, self.beta_chol)

    @property
    def rel_gamma(self):
        return rel(self.gamma_lf, self.gamma_chol)


@dataclass(frozen=True)
class ErrataFlag:
    identity: str
    systematic: bool
    validating_variant: str | None
    detail: str


@dataclass
class LFReport:
    family: str
    records: list = field(default_factory=list)
    forward: list = field(default_factory=list)
    errata: list = field(default_factory=list)
    stopped: str | None = None

    def residuals(self, identity, variant=PRINTED):
        return [r for r in self.records
                if r.identity == identity and r.variant == variant and r.residual is not None]

    def skipped(self):
        return [r for r in self.records if r.residual is None]

    def worst(self, identity, variant=PRINTED):
        rs = self.residuals(identity, variant)
        return max(r.residual for r in rs) if rs else None

    def variants(self, identity):
        return sorted({r.variant for r in self.records if r.identity == identity})

    def identities(self):
        return sorted({r.identity for r in self.records})

    def accepted_variant(self, identity, tol):
        """The variant that validates at every tested ``n`` (printed preferred), else None."""
        vs = [v for v in self.variants(identity) if self.residuals(identity, v)]
        ordered = ([PRINTED] if PRINTED in vs else []) + [v for v in vs if v != PRINTED]
        for v in ordered:
            if all(r.residual <= tol for r in self.residuals(identity, v)):
                return v
        return None


def classify_errata(report: LFReport, tol) -> list:
    """Flag identities whose printed form fails; note which variant (if any) validates."""
    flags = []
    for ident in report.identities():
        printed = report.residuals(ident, PRINTED)
        if not printed:
            skipped = [r for r in report.skipped() if r.identity == ident and r.variant == PRINTED]
            ok = report.accepted_variant(ident, tol)
            if skipped:
                flags.append(ErrataFlag(ident, False, ok, f"printed form undefined at {len(skipped)} indices "
                                        f"({skipped[0].note}); variant '{ok}' validates"))
            continue
        fails = [r for r in printed if r.residual > tol]
        if not fails:
            continue
        systematic = len(fails) == len(printed)
        ok = report.accepted_variant(ident, tol)
        ns = sorted(r.n for r in printed)
        if ok is not None:
            detail = (f"printed form fails at {len(fails)}/{len(printed)} indices n={ns[0]}..{ns[-1]} "
                      f"(worst {mpmath.nstr(max(r.residual for r in fails), 3)}); variant '{ok}' validates")
        else:
            detail = f"printed form fails at {len(fails)}/{len(printed)} indices; no variant validates"
        flags.append(ErrataFlag(ident, systematic, ok, detail))
    report.errata = flags
    return flags


class Ground:
    """Cholesky-side ground truth for one spec: coefficients, dressed Pascal diagonals, Psi."""

    def __init__(self, spec: FamilySpec, data: SpectralData):
        self.spec = spec
        self.data = data
        self.ctx = data.ctx
        self.prm = Params.of(spec, data.ctx)
        self.B = Seq(data.beta, "beta")
        self.G = Seq(data.gamma, "gamma", first=1)
        self._Pi = None
        self._PiInv = None
        self._Psi = None

    def H(self, n):
        return self.data.H[n]

    def tracked(self):
        """``(params, beta, gamma, H)`` whose arithmetic records term magnitudes."""
        B, G = self.B, self.G
        return (self.prm.tracked(), lambda k: Tracked(B(k)), lambda k: Tracked(G(k)),
                lambda k: Tracked(self.H(k)))

    def p1(self, n):
        return self.data.p1[n] if n >= 1 else mpmath.mpf(0)

    def p2(self, n):
        return self.data.p2[n] if n >= 2 else mpmath.mpf(0)

    @property
    def Pi(self):
        if self._Pi is None:
            self._Pi = dressed_pascal(self.data, 1)
        return self._Pi

    @property
    def PiInv(self):
        if self._PiInv is None:
            self._PiInv = dressed_pascal(self.data, -1)
        return self._PiInv

    @property
    def Psi(self):
        if self._Psi is None:
            self._Psi = structure_matrix(self.spec, self.data, "sigmaJ_H_PiT", Pi=self.Pi, PiInv=self.PiInv)
        return self._Psi

    def pi(self, k, m):
        """``pi^{[k]}_m``: entry ``(m + |k|, m)`` of ``Pi`` (k > 0) or ``Pi^{-1}`` (k < 0)."""
        return (self.Pi if k > 0 else self.PiInv)[m + abs(k), m]

    def psi(self, k, n):
        """``psi^{(k)}_n``: ``Psi[n, n+k]`` above the diagonal, ``Psi[n-k, n]`` below."""
        return self.Psi[n, n + k] if k >= 0 else self.Psi[n - k, n]

    def check_range(self, n, lo, hi_offset, K=None):
        K = self.data.K - BUFFER if K is None else K
        if not lo <= n <= K - hi_offset:
            raise ValueError(f"n={n} outside the valid interval [{lo}, {K - hi_offset}]")
