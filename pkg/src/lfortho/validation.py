"""Input checks shared by the estimator and the command line."""
from __future__ import annotations

import os
from fractions import Fraction

import numpy as np

from .exceptions import InvalidSpec
from .precision import DEFAULT_BITS
from .weights import FAMILY_SHAPES, FamilySpec, as_fraction, as_mpf

BITS_ENV = "LFORTHO_BITS"

# parameters fixed for each family when none are given
REFERENCE_SPECS = {
    "F12": (("3/2",), ("1/2", "1/4"), "2"),
    "F22": (("3/2", "5/4"), ("1/2", "1/4"), "2"),
    "F32": (("3/2", "5/4", "7/4"), ("1/2", "1/4"), "1/2"),
}


def check_family(family) -> str:
    fam = str(family).strip().upper()
    if fam not in FAMILY_SHAPES:
        raise InvalidSpec(f"unknown family {family!r}; expected one of f12, f22, f32")
    return fam


def parse_rational(x, name="value") -> Fraction:
    """Exact rational from a number, decimal string or ``p/q`` string."""
    try:
        return as_fraction(x)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise InvalidSpec(f"{name}: cannot read {x!r} as a real number") from exc


def parse_params(values, name="parameters") -> tuple:
    """Comma-separated string or sequence of numbers -> tuple of rationals."""
    if values is None:
        return None
    if isinstance(values, str):
        parts = [p for p in values.replace(" ", "").split(",") if p]
    else:
        parts = list(np.atleast_1d(np.asarray(values, dtype=object)))
    if not parts:
        raise InvalidSpec(f"{name}: empty list")
    return tuple(parse_rational(p, name) for p in parts)


def check_order(order, minimum=1) -> int:
    try:
        if isinstance(order, bool):
            raise TypeError
        K = int(str(order).strip())
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"order must be an integer, got {order!r}") from exc
    if K < minimum:
        raise InvalidSpec(f"order must be >= {minimum}, got {K}")
    return K


def check_bits(bits=None) -> int:
    """Precision in bits; ``None`` falls back to ``$LFORTHO_BITS`` and then the default."""
    if bits is None:
        bits = os.environ.get(BITS_ENV) or DEFAULT_BITS
    try:
        b = int(str(bits).strip())
    except ValueError as exc:
        raise InvalidSpec(f"bits must be an integer, got {bits!r}") from exc
    if b < 128:
        raise InvalidSpec(f"bits must be >= 128, got {b}")
    return b


def make_spec(family, a=None, b=None, eta=None) -> FamilySpec:
    """Validated :class:`FamilySpec`; missing parameters come from the family's reference spec."""
    fam = check_family(family)
    ra, rb, reta = REFERENCE_SPECS[fam]
    a = parse_params(a, "a") if a is not None else parse_params(ra)
    b = parse_params(b, "b") if b is not None else parse_params(rb)
    eta = parse_rational(eta, "eta") if eta is not None else parse_rational(reta)
    return FamilySpec(fam, a, b, eta)


def check_points(z):
    """Evaluation points as a flat list of mpf at the current precision.

    Accepts a scalar, a 1-d sequence or an ``(n, 1)`` array; strings such as
    ``"1/3"`` are read exactly before rounding.
    """
    arr = np.asarray(z, dtype=object)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single column of points, got shape {arr.shape}")
        arr = arr[:, 0]
    elif arr.ndim > 2:
        raise ValueError(f"expected at most 2 dimensions, got {arr.ndim}")
    out = []
    for x in np.atleast_1d(arr):
        try:
            v = as_mpf(x)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"cannot evaluate at {x!r}") from exc
        if not v == v or abs(v) == float("inf"):
            raise ValueError(f"non-finite evaluation point {x!r}")
        out.append(v)
    return out
