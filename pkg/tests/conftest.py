import pytest

from lfortho.hankel import spectral_pipeline
from lfortho.precision import PrecisionContext
from lfortho.validation import REFERENCE_SPECS
from lfortho.weights import FamilySpec

FAMILIES = ("F12", "F22", "F32")
# same shapes with b moved off the a_i = b_i + 1 coincidence
GENERIC_B = ("1/3", "2/7")


def reference_spec(family):
    a, b, eta = REFERENCE_SPECS[family]
    return FamilySpec(family, a, b, eta)


def generic_spec(family):
    a, _, eta = REFERENCE_SPECS[family]
    return FamilySpec(family, a, GENERIC_B, eta)


@pytest.fixture(scope="session")
def ctx():
    return PrecisionContext(384)


@pytest.fixture(scope="session")
def ctx_low():
    return PrecisionContext(192)


@pytest.fixture(scope="session")
def ref_data(ctx):
    cache = {}

    def get(family, generic=False):
        key = (family, generic)
        if key not in cache:
            spec = generic_spec(family) if generic else reference_spec(family)
            cache[key] = spectral_pipeline(spec, 16, ctx)
        return cache[key]

    return get
