import pytest

from bakerskew.core import BaseMap, FatouMap, Perturbation, SkewProduct
from bakerskew.nonbulging import run_construction
from bakerskew.runge import CompactSet, CompactSetUnion, TargetSpec


@pytest.fixture(scope="session")
def cubic_F() -> SkewProduct:
    """F(z, w) = (z + 1 + e^(-z) + w z^3, w/2), the escape-side example."""
    return SkewProduct(
        f=FatouMap(a=1.0),
        g=BaseMap("linear", lam=0.5, delta_g=1.0),
        h=Perturbation("poly_z", coeffs=(0, 0, 0, 1)),
    )


@pytest.fixture(scope="session")
def drift_F() -> SkewProduct:
    """Unperturbed product: the z-coordinate is the pure drift map."""
    return SkewProduct(
        f=FatouMap(a=1.0),
        g=BaseMap("linear", lam=0.5, delta_g=1.0),
        h=Perturbation("zero"),
    )


@pytest.fixture(scope="session")
def two_disk() -> CompactSetUnion:
    """The benchmark target: 1 on D(0,1), 0 on D(5,1)."""
    return CompactSetUnion(
        sets=(CompactSet.disk(0j, 1.0), CompactSet.disk(5 + 0j, 1.0)),
        targets=(TargetSpec.const(1 + 0j), TargetSpec.const(0j)),
    )


@pytest.fixture(scope="session")
def construction():
    """Five-stage return-side construction, diagnostics kept on fit failure.

    Shared because the cascade is deterministic; tests asserting its frozen
    numbers and the acceptance contrast test all read from this one run.
    """
    return run_construction(K=5, delta=0.1, keep_going=True)
