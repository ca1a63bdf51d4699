"""Working-precision context and certified summation of positive-decay series."""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
from mpmath import mp

from .exceptions import InvalidSpec, NonConvergent

DEFAULT_BITS = 384
MAX_TERMS = 100_000


@dataclass(frozen=True)
class PrecisionContext:
    """Binary working precision plus the tolerances derived from it.

    Entering the context (``with ctx:``) sets mpmath's working precision to
    ``bits``; every public routine of the package does this itself.
    """

    bits: int = DEFAULT_BITS
    eps_verify: mpmath.mpf | None = None
    eps_pivot: mpmath.mpf | None = None
    eps_sum: mpmath.mpf | None = None
    guard_terms: int = 5
    max_terms: int = MAX_TERMS
    _stack: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 128:
            raise InvalidSpec(f"bits must be an integer >= 128, got {self.bits}")
        if self.eps_verify is None:
            object.__setattr__(self, "eps_verify", mpmath.ldexp(1, -(self.bits // 2)))
        if self.eps_pivot is None:
            object.__setattr__(self, "eps_pivot", mpmath.ldexp(1, -(self.bits // 4)))
        if self.eps_sum is None:
            object.__setattr__(self, "eps_sum", mpmath.ldexp(1, -(self.bits + 8)))
        object.__setattr__(self, "eps_sum", mpmath.mpf(self.eps_sum))
        ev = mpmath.mpf(self.eps_verify)
        ep = mpmath.mpf(self.eps_pivot)
        object.__setattr__(self, "eps_verify", ev)
        object.__setattr__(self, "eps_pivot", ep)
        if not (0 < self.eps_sum <= ev < ep < 1):
            raise InvalidSpec("need 0 < eps_sum <= eps_verify < eps_pivot < 1")
        if self.guard_terms < 1:
            raise InvalidSpec("guard_terms must be positive")

    def __enter__(self):
        cm = mp.workprec(self.bits)
        cm.__enter__()
        self._stack.append(cm)
        return self

    def __exit__(self, *exc):
        return self._stack.pop().__exit__(*exc)

    def with_bits(self, bits: int) -> "PrecisionContext":
        """Same policy at a different precision (tolerances re-derived)."""
        return PrecisionContext(bits=bits, guard_terms=self.guard_terms, max_terms=self.max_terms)

    @property
    def digits(self) -> int:
        """Decimal digits used when rendering numbers."""
        return int(self.bits / 3.33)


def sum_certified(term_at, ctx: PrecisionContext):
    """Sum ``term_at(0) + term_at(1) + ...`` until the tail is certifiably negligible.

    Stops at the first ``n_trunc`` such that the ``guard_terms`` terms after it are
    all below ``eps_sum * |S|`` and the geometric tail bound built from the largest
    ratio observed among them is below the same threshold. ``eps_sum`` defaults to
    unit roundoff, so the result is a full-precision value, not merely
    ``eps_verify``-accurate. Returns ``(value, n_trunc)``; ``value`` is the partial
    sum through index ``n_trunc``.
    """
    g = ctx.guard_terms
    with ctx:
        total = mpmath.mpf(0)
        window = []
        k = 0
        while k < ctx.max_terms:
            window.append(mpmath.mpf(term_at(k)))
            k += 1
            if len(window) <= g:
                continue
            head = window.pop(0)
            total += head
            n_trunc = k - 1 - g
            if all(x == 0 for x in window):
                # exact termination: every later term is zero as well
                if _terminated(term_at, k, g):
                    return total, n_trunc
                continue
            thresh = ctx.eps_sum * abs(total)
            if any(abs(x) >= thresh for x in window):
                continue
            mags = [abs(head)] + [abs(x) for x in window]
            ratios = [mags[i + 1] / mags[i] for i in range(g) if mags[i] != 0]
            r = max(ratios)
            if r >= 1:
                continue
            tail = sum(mags[1:]) + mags[-1] * r / (1 - r)
            if tail < thresh:
                return total, n_trunc
        raise NonConvergent(f"no certified decay within {ctx.max_terms} terms", k)


def _terminated(term_at, k, g):
    # a run of g zeros is only accepted as termination if the next g are zero too
    return all(term_at(j) == 0 for j in range(k, k + g))
