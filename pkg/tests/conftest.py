"""Shared fixtures: the two reference models and their moments-stage starts."""

import numpy as np
import pytest

from map2fit import (
    CanonicalForm,
    CanonicalMap2,
    Matrix2,
    RateMatrixPair,
    canonical_to_matrices,
)

# Bursty reference model: strong positive interarrival correlation.
EXAMPLE1 = CanonicalMap2(CanonicalForm.ONE, x=-20.0, y=6.0, u=-0.5, v=0.0426)
EXAMPLE1_MOMENTS = (0.0864, 1.6802, 6.6887, 40.1276)  # (rho1, mu1, mu2, mu3)

# High-variance reference model: two widely separated time scales.
EXAMPLE3 = CanonicalMap2(CanonicalForm.ONE, x=-1.0, y=0.001, u=-0.005, v=1e-5)
EXAMPLE3_MOMENTS = (0.3963, 67.3783, 2.6686e4, 1.6011e7)

# Published moments-matching starts for the bursty model (n=500, n=1000
# samples, and the exact theoretical moments), ordered worst to best.
START_N500 = CanonicalMap2(
    CanonicalForm.ONE, x=-999.9998, y=500.5033, u=-0.4735, v=0.1315
)
START_N1000 = CanonicalMap2(
    CanonicalForm.ONE, x=-2.1562, y=0.6346, u=-0.4679, v=0.0852
)
START_THEORETICAL = CanonicalMap2(
    CanonicalForm.ONE, x=-21.9163, y=6.5879, u=-0.5001, v=0.0425
)


@pytest.fixture(scope="session")
def example1() -> RateMatrixPair:
    return canonical_to_matrices(EXAMPLE1)


@pytest.fixture(scope="session")
def example3() -> RateMatrixPair:
    return canonical_to_matrices(EXAMPLE3)


@pytest.fixture(scope="session")
def poisson1() -> RateMatrixPair:
    """Unit-rate Poisson process as a degenerate MAP2."""
    return RateMatrixPair(
        Matrix2(-1.0, 0.0, 0.0, -1.0), Matrix2(1.0, 0.0, 1.0, 0.0)
    )


def pair_to_arrays(pair: RateMatrixPair) -> tuple[np.ndarray, np.ndarray]:
    return (
        np.array([[pair.d0.a11, pair.d0.a12], [pair.d0.a21, pair.d0.a22]]),
        np.array([[pair.d1.a11, pair.d1.a12], [pair.d1.a21, pair.d1.a22]]),
    )
