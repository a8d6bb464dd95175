"""Closed-form 2x2 real linear algebra kernel.

Everything downstream (embedded chains, moments, likelihoods) reduces to
2x2 operations, so they are done exactly: cofactor inversion, quadratic
eigenvalues, and spectral-decomposition matrix exponentials.  All matrices
arising from valid arrival models have real spectra; complex spectra are
rejected rather than supported.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import (
    ComplexSpectrum,
    DegenerateChainWarning,
    ReducibleChain,
    SingularMatrix,
)

# Eigenvalues closer than this (relative) are treated as a repeated root;
# the divided difference (e^xt - e^ut)/(x - u) loses precision before then.
_DEFECTIVE_RTOL = 1e-9

# |det| below 1e-300 * max(1, ||m||_inf^2) is singular: valid generators are
# provably nonsingular, so this signals bad input rather than a numeric edge.
_SINGULAR_FLOOR = 1e-300

_COMPLEX_RTOL = 1e-12


def _check_finite(*entries: float) -> None:
    for e in entries:
        if not math.isfinite(e):
            raise ValueError(f"non-finite entry {e!r}")


@dataclass(frozen=True)
class Matrix2:
    """Dense 2x2 real matrix (row-major entries)."""

    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self) -> None:
        _check_finite(self.a11, self.a12, self.a21, self.a22)

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    def norm_inf(self) -> float:
        return max(abs(self.a11) + abs(self.a12), abs(self.a21) + abs(self.a22))

    def mul(self, other: "Matrix2") -> "Matrix2":
        return Matrix2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def scale(self, c: float) -> "Matrix2":
        return Matrix2(c * self.a11, c * self.a12, c * self.a21, c * self.a22)

    def rows(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return (self.a11, self.a12), (self.a21, self.a22)


@dataclass(frozen=True)
class Vector2:
    """Real 2-vector; rows (distributions) and columns share this type."""

    v1: float
    v2: float

    def __post_init__(self) -> None:
        _check_finite(self.v1, self.v2)

    def dot(self, other: "Vector2") -> float:
        return self.v1 * other.v1 + self.v2 * other.v2

    def matmul(self, m: Matrix2) -> "Vector2":
        """Row-vector times matrix."""
        return Vector2(
            self.v1 * m.a11 + self.v2 * m.a21,
            self.v1 * m.a12 + self.v2 * m.a22,
        )


IDENTITY = Matrix2(1.0, 0.0, 0.0, 1.0)


def invert(m: Matrix2) -> Matrix2:
    """Exact cofactor inverse; raises SingularMatrix below the det floor."""
    d = m.det
    n = m.norm_inf()
    # n * n may overflow to inf for extreme inputs; those are unusable too
    if not math.isfinite(d) or abs(d) < _SINGULAR_FLOOR * max(1.0, n * n):
        raise SingularMatrix(f"matrix {m} is numerically singular (det={d})")
    return Matrix2(m.a22 / d, -m.a12 / d, -m.a21 / d, m.a11 / d)


def eigenvalues(m: Matrix2) -> tuple[float, float]:
    """Both real eigenvalues, sorted descending.

    Raises ComplexSpectrum when the characteristic discriminant is negative
    beyond tolerance; all valid arrival-model matrices have real spectra.
    """
    tr = m.trace
    det = m.det
    disc = (m.a11 - m.a22) ** 2 + 4.0 * m.a12 * m.a21
    tol = _COMPLEX_RTOL * max(1.0, tr * tr, 4.0 * abs(det))
    if disc < -tol:
        raise ComplexSpectrum(f"discriminant {disc} < 0 for {m}")
    s = math.sqrt(max(disc, 0.0))
    return (tr + s) / 2.0, (tr - s) / 2.0


def _spectral_split(m: Matrix2):
    """Split m for closed-form exponentials.

    Returns ("distinct", l1, l2, E1, E2) with e^{mt} = e^{l1 t} E1 + e^{l2 t} E2,
    or ("repeated", l, N) with e^{mt} = e^{l t} (I + t N), N = m - l I.
    """
    l1, l2 = eigenvalues(m)
    if abs(l1 - l2) < _DEFECTIVE_RTOL * max(1.0, abs(l1)):
        lam = 0.5 * (l1 + l2)
        n = Matrix2(m.a11 - lam, m.a12, m.a21, m.a22 - lam)
        return "repeated", lam, 0.0, n, None
    den = l1 - l2
    e1 = Matrix2((m.a11 - l2) / den, m.a12 / den, m.a21 / den, (m.a22 - l2) / den)
    e2 = Matrix2((l1 - m.a11) / den, -m.a12 / den, -m.a21 / den, (l1 - m.a22) / den)
    return "distinct", l1, l2, e1, e2


def expm(m: Matrix2, t: float) -> Matrix2:
    """e^{mt} for t >= 0 via the closed-form eigendecomposition.

    Near-coincident eigenvalues switch to the Jordan limit
    e^{lt}(I + t(m - lI)) to avoid the unstable divided difference.
    """
    if t < 0.0:
        raise ValueError(f"expm requires t >= 0, got {t}")
    kind, l1, l2, p, q = _spectral_split(m)
    if kind == "repeated":
        f = math.exp(l1 * t)
        return Matrix2(
            f * (1.0 + t * p.a11),
            f * t * p.a12,
            f * t * p.a21,
            f * (1.0 + t * p.a22),
        )
    f1 = math.exp(l1 * t)
    f2 = math.exp(l2 * t)
    return Matrix2(
        f1 * p.a11 + f2 * q.a11,
        f1 * p.a12 + f2 * q.a12,
        f1 * p.a21 + f2 * q.a21,
        f1 * p.a22 + f2 * q.a22,
    )


def stationary_row(p: Matrix2) -> Vector2:
    """Stationary probability row w of a 2x2 stochastic matrix: w P = w.

    Solved exactly as w1 = p21 / (p12 + p21).  The exact identity matrix has
    no unique fixed point; it returns (0.5, 0.5) under a degeneracy warning.
    Any other chain with vanishing off-diagonal mass raises ReducibleChain.
    """
    for row in p.rows():
        if abs(row[0] + row[1] - 1.0) > 1e-9:
            raise ValueError(f"rows of {p} do not sum to 1")
        if min(row) < -1e-12:
            raise ValueError(f"negative transition probability in {p}")
    off = p.a12 + p.a21
    if off <= 1e-12:
        if p == IDENTITY:
            warnings.warn(
                "identity transition matrix: stationary vector is not unique",
                DegenerateChainWarning,
                stacklevel=2,
            )
            return Vector2(0.5, 0.5)
        raise ReducibleChain(f"no off-diagonal mass in {p}")
    w1 = min(max(p.a21 / off, 0.0), 1.0)
    return Vector2(w1, 1.0 - w1)
