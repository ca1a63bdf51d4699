"""Exception hierarchy shared by the whole package."""


class LFOrthoError(Exception):
    """Base class for all errors raised by lfortho."""


class InvalidSpec(LFOrthoError, ValueError):
    """A family specification or precision context violates its invariants."""


class NonConvergent(LFOrthoError):
    """A series did not show certified decay within the allowed number of terms."""

    def __init__(self, message, n_terms=None):
        super().__init__(message)
        self.n_terms = n_terms


class InsufficientMoments(LFOrthoError, ValueError):
    pass


class SingularMinor(LFOrthoError):
    """A leading Hankel minor vanished (numerically) during factorization."""

    def __init__(self, k, pivot=None):
        super().__init__(f"singular leading minor at index {k} (pivot={pivot})")
        self.k = k
        self.pivot = pivot


class BufferExhausted(LFOrthoError):
    """Operator products consumed the whole truncation buffer."""


class DenominatorUnderflow(LFOrthoError, ZeroDivisionError):
    """A denominator in a closed-form expression is too close to zero."""

    def __init__(self, name, value=None, n=None):
        super().__init__(f"denominator {name} too small at n={n}: {value}")
        self.name = name
        self.value = value
        self.n = n
