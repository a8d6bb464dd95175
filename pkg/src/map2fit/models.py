"""Two-state Markovian arrival process (MAP2) representations and statistics.

A MAP2 is a hidden two-state continuous-time Markov chain whose transitions
either do (rate matrix D1) or do not (off-diagonals of D0) emit an arrival.
Three equivalent descriptions are supported:

* ``RateMatrixPair`` -- the raw (D0, D1) rate matrices.
* ``CanonicalMap2``  -- the identifiable four-parameter form (x, y, u, v),
  in two variants split by the sign of the correlation eigenvalue gamma.
* ``RedundantMap2``  -- the classical six-parameter form
  (lambda1, lambda2, p120, p111, p210, p211), which is not identifiable.

Statistics of the stationary interarrival time T follow from the embedded
chain P* = (-D0)^{-1} D1 observed at arrival epochs:

    mu_n  = n! phi (-D0)^{-n} e          (phi P* = phi)
    rho_k = gamma^k (mu2/2 - mu1^2) / (mu2 - mu1^2)

where gamma is the non-unit eigenvalue of P*.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import matrix2
from .errors import (
    DegenerateChainWarning,
    DegenerateVariance,
    EmptySample,
    InvalidModel,
    NonpositiveEntry,
    ReducibleChain,
    SingularMatrix,
)
from .matrix2 import Matrix2, Vector2

# Strict-stability floor on -x and -u: the constraint set allows x = 0,
# which would make D0 singular, so construction demands x <= -EPS_STABLE.
EPS_STABLE = 1e-12

# Entries of P* in [-NEG_CLAMP, 0) are roundoff and get clamped to zero;
# anything more negative is a real modeling error.
_NEG_CLAMP = 1e-12

_ROW_SUM_RTOL = 1e-9


class CanonicalForm(enum.Enum):
    """The two canonical variants: ONE covers gamma > 0, TWO covers gamma <= 0."""

    ONE = "one"
    TWO = "two"


@dataclass(frozen=True)
class CanonicalMap2:
    """Four-parameter canonical MAP2: rates x, u <= 0 and jumps y, v >= 0.

    Constraints: x <= -EPS_STABLE, u <= -EPS_STABLE, y >= 0, v >= 0,
    x + y <= 0 and u + v <= 0.
    """

    form: CanonicalForm
    x: float
    y: float
    u: float
    v: float

    def __post_init__(self) -> None:
        if not isinstance(self.form, CanonicalForm):
            raise InvalidModel(f"form must be a CanonicalForm, got {self.form!r}")
        for name in ("x", "y", "u", "v"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidModel(f"{name} is not finite")
        if self.x > -EPS_STABLE or self.u > -EPS_STABLE:
            raise InvalidModel(
                f"x={self.x}, u={self.u} must be <= -{EPS_STABLE} (stable diagonal)"
            )
        if self.y < 0.0 or self.v < 0.0:
            raise InvalidModel(f"y={self.y}, v={self.v} must be nonnegative")
        if self.x + self.y > 0.0 or self.u + self.v > 0.0:
            raise InvalidModel(
                f"row rates exceeded: x+y={self.x + self.y}, u+v={self.u + self.v}"
            )

    def params(self) -> tuple[float, float, float, float]:
        return self.x, self.y, self.u, self.v


@dataclass(frozen=True)
class RedundantMap2:
    """Six-parameter MAP2: exit rates lambda1, lambda2 and transition
    probabilities p120, p111, p210, p211 (last digit: 1 = with arrival)."""

    lambda1: float
    lambda2: float
    p120: float
    p111: float
    p210: float
    p211: float

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "p120", "p111", "p210", "p211"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidModel(f"{name} is not finite")
        if self.lambda1 <= 0.0 or self.lambda2 <= 0.0:
            raise InvalidModel("exit rates lambda1, lambda2 must be positive")
        for name in ("p120", "p111", "p210", "p211"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidModel(f"{name}={p} outside [0, 1]")
        if self.p120 + self.p111 > 1.0 or self.p210 + self.p211 > 1.0:
            raise InvalidModel(
                f"branch probabilities exceed 1: "
                f"p120+p111={self.p120 + self.p111}, p210+p211={self.p210 + self.p211}"
            )

    def params(self) -> tuple[float, ...]:
        return (self.lambda1, self.lambda2, self.p120, self.p111, self.p210, self.p211)


@dataclass(frozen=True)
class RateMatrixPair:
    """Validated (D0, D1) rate matrices of a MAP2.

    D0 has a strictly negative diagonal and nonnegative off-diagonals, D1 is
    entrywise nonnegative, D0 + D1 has zero row sums, and D0 is nonsingular.
    """

    d0: Matrix2
    d1: Matrix2

    def __post_init__(self) -> None:
        d0, d1 = self.d0, self.d1
        if d0.a11 >= 0.0 or d0.a22 >= 0.0:
            raise InvalidModel(f"D0 diagonal must be negative: {d0}")
        if d0.a12 < 0.0 or d0.a21 < 0.0:
            raise InvalidModel(f"D0 off-diagonals must be nonnegative: {d0}")
        if min(d1.a11, d1.a12, d1.a21, d1.a22) < 0.0:
            raise InvalidModel(f"D1 must be entrywise nonnegative: {d1}")
        scale = max(1.0, d0.norm_inf(), d1.norm_inf())
        row1 = d0.a11 + d0.a12 + d1.a11 + d1.a12
        row2 = d0.a21 + d0.a22 + d1.a21 + d1.a22
        if max(abs(row1), abs(row2)) > _ROW_SUM_RTOL * scale:
            raise InvalidModel(
                f"D0 + D1 is not a generator (row sums {row1}, {row2})"
            )
        try:
            matrix2.invert(d0)  # stability requires a nonsingular D0
        except SingularMatrix as exc:
            raise InvalidModel(f"D0 is numerically singular: {d0}") from exc

    def rescaled(self, c: float) -> "RateMatrixPair":
        return RateMatrixPair(self.d0.scale(c), self.d1.scale(c))


@dataclass(frozen=True)
class MomentSummary:
    """First three raw moments and lag-1 autocorrelation of interarrivals."""

    mu1: float
    mu2: float
    mu3: float
    rho1: float

    def __post_init__(self) -> None:
        if not (self.mu1 > 0.0 and self.mu3 > 0.0):
            raise InvalidModel(f"moments must be positive: {self}")
        if self.mu2 <= self.mu1**2:
            raise DegenerateVariance(
                f"mu2={self.mu2} <= mu1^2={self.mu1**2}: zero or negative variance"
            )
        if not abs(self.rho1) < 1.0:
            raise InvalidModel(f"|rho1| must be < 1, got {self.rho1}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        """(rho1, mu1, mu2, mu3), the conventional reporting order."""
        return self.rho1, self.mu1, self.mu2, self.mu3


def canonical_to_matrices(m: CanonicalMap2) -> RateMatrixPair:
    """Rate matrices of a canonical model.

    Both forms share D0 = [[x, y], [0, u]].  Form ONE puts the arrival mass
    on the diagonal path, D1 = [[-x-y, 0], [v, -u-v]]; form TWO swaps it to
    the switching path, D1 = [[0, -x-y], [-u-v, v]].
    """
    x, y, u, v = m.params()
    d0 = Matrix2(x, y, 0.0, u)
    if m.form is CanonicalForm.ONE:
        d1 = Matrix2(-x - y, 0.0, v, -u - v)
    else:
        d1 = Matrix2(0.0, -x - y, -u - v, v)
    return RateMatrixPair(d0, d1)


def redundant_to_matrices(m: RedundantMap2) -> RateMatrixPair:
    """Rate matrices of the six-parameter representation."""
    l1, l2, p120, p111, p210, p211 = m.params()
    d0 = Matrix2(-l1, l1 * p120, l2 * p210, -l2)
    d1 = Matrix2(
        l1 * p111,
        l1 * (1.0 - p120 - p111),
        l2 * p211,
        l2 * (1.0 - p210 - p211),
    )
    return RateMatrixPair(d0, d1)


def matrices_to_redundant(m: RateMatrixPair) -> RedundantMap2:
    """Recover the six-parameter representation from rate matrices."""
    l1 = -m.d0.a11
    l2 = -m.d0.a22
    return RedundantMap2(
        lambda1=l1,
        lambda2=l2,
        p120=min(m.d0.a12 / l1, 1.0),
        p111=min(m.d1.a11 / l1, 1.0),
        p210=min(m.d0.a21 / l2, 1.0),
        p211=min(m.d1.a21 / l2, 1.0),
    )


def embedded_chain(m: RateMatrixPair) -> Matrix2:
    """Transition matrix P* = (-D0)^{-1} D1 of the state seen at arrivals.

    Roundoff negatives within -1e-12 are clamped to zero and the rows
    renormalized; anything more negative raises InvalidModel.
    """
    inv = matrix2.invert(Matrix2(-m.d0.a11, -m.d0.a12, -m.d0.a21, -m.d0.a22))
    p = inv.mul(m.d1)
    entries = [p.a11, p.a12, p.a21, p.a22]
    if min(entries) < -_NEG_CLAMP:
        raise InvalidModel(f"embedded chain has negative entry beyond roundoff: {p}")
    entries = [max(e, 0.0) for e in entries]
    r1 = entries[0] + entries[1]
    r2 = entries[2] + entries[3]
    if abs(r1 - 1.0) > _ROW_SUM_RTOL or abs(r2 - 1.0) > _ROW_SUM_RTOL:
        raise InvalidModel(f"embedded chain rows do not sum to 1: {p}")
    return Matrix2(entries[0] / r1, entries[1] / r1, entries[2] / r2, entries[3] / r2)


def stationary_phi(m: RateMatrixPair) -> Vector2:
    """Stationary law of the hidden state at arrival epochs (phi P* = phi)."""
    return matrix2.stationary_row(embedded_chain(m))


def stationary_pi(m: RateMatrixPair) -> Vector2:
    """Stationary law of the continuous-time chain: pi (D0 + D1) = 0."""
    d12 = m.d0.a12 + m.d1.a12
    d21 = m.d0.a21 + m.d1.a21
    off = d12 + d21
    if off <= 1e-12 * max(1.0, m.d0.norm_inf(), m.d1.norm_inf()):
        raise ReducibleChain("generator D0 + D1 has no off-diagonal mass")
    return Vector2(d21 / off, d12 / off)


def moment(m: RateMatrixPair, n: int) -> float:
    """n-th raw moment of the stationary interarrival time,
    mu_n = n! phi (-D0)^{-n} e."""
    if n < 1:
        raise ValueError(f"moment order must be >= 1, got {n}")
    phi = stationary_phi(m)
    inv = matrix2.invert(Matrix2(-m.d0.a11, -m.d0.a12, -m.d0.a21, -m.d0.a22))
    r = Vector2(1.0, 1.0)
    fact = 1.0
    for k in range(1, n + 1):
        r = Vector2(inv.a11 * r.v1 + inv.a12 * r.v2, inv.a21 * r.v1 + inv.a22 * r.v2)
        fact *= k
    return fact * phi.dot(r)


def gamma(m: RateMatrixPair) -> float:
    """Non-unit eigenvalue of P*: the geometric decay rate of lag-k
    autocorrelation.  Equals trace(P*) - 1 since the other eigenvalue is 1."""
    g = embedded_chain(m).trace - 1.0
    if g <= -1.0 + 1e-12:
        warnings.warn(
            "embedded chain is periodic (gamma = -1): process is not ergodic",
            DegenerateChainWarning,
            stacklevel=2,
        )
    return g


def autocorrelation(m: RateMatrixPair, k: int) -> float:
    """Lag-k autocorrelation rho_k = gamma^k (mu2/2 - mu1^2)/(mu2 - mu1^2)."""
    if k < 1:
        raise ValueError(f"lag must be >= 1, got {k}")
    mu1 = moment(m, 1)
    mu2 = moment(m, 2)
    var = mu2 - mu1 * mu1
    if var <= 1e-14 * mu1 * mu1:
        raise DegenerateVariance(f"variance {var} too small for autocorrelation")
    return gamma(m) ** k * (mu2 / 2.0 - mu1 * mu1) / var


def classify_form(m: RateMatrixPair) -> CanonicalForm:
    """Canonical variant of a model: ONE iff gamma > 0, TWO iff gamma <= 0."""
    return CanonicalForm.ONE if gamma(m) > 0.0 else CanonicalForm.TWO


def theoretical_moments(m: RateMatrixPair) -> MomentSummary:
    """MomentSummary (mu1, mu2, mu3, rho1) of a model."""
    return MomentSummary(
        mu1=moment(m, 1),
        mu2=moment(m, 2),
        mu3=moment(m, 3),
        rho1=autocorrelation(m, 1),
    )


def empirical_moments(t: Sequence[float] | np.ndarray) -> MomentSummary:
    """Sample raw moments and lag-1 autocorrelation of interarrival data.

    rho1 uses the standard biased estimator over consecutive pairs,
    sum (t_i - mean)(t_{i+1} - mean) / sum (t_i - mean)^2, with the global
    sample mean in both factors.
    """
    arr = np.asarray(getattr(t, "times", t), dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise EmptySample(f"need at least 2 observations, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise NonpositiveEntry("interarrival times must be finite and positive")
    mu1 = float(arr.mean())
    mu2 = float((arr**2).mean())
    mu3 = float((arr**3).mean())
    centered = arr - mu1
    denom = float(centered @ centered)
    if denom <= 0.0:
        raise DegenerateVariance("constant sample: lag-1 autocorrelation undefined")
    rho1 = float(centered[:-1] @ centered[1:]) / denom
    return MomentSummary(mu1=mu1, mu2=mu2, mu3=mu3, rho1=rho1)


# ---------------------------------------------------------------------------
# Fast scalar kernels for optimizer inner loops.  Same math as the public
# operations, but no object construction or validation; callers guarantee
# feasibility by construction and treat None as "numerically unusable".
# ---------------------------------------------------------------------------


def canonical_entries(
    form: CanonicalForm, x: float, y: float, u: float, v: float
) -> tuple[float, ...]:
    """(d0_11, d0_12, d0_21, d0_22, d1_11, d1_12, d1_21, d1_22) unvalidated."""
    if form is CanonicalForm.ONE:
        return x, y, 0.0, u, -x - y, 0.0, v, -u - v
    return x, y, 0.0, u, 0.0, -x - y, -u - v, v


def redundant_entries(
    l1: float, l2: float, p120: float, p111: float, p210: float, p211: float
) -> tuple[float, ...]:
    return (
        -l1,
        l1 * p120,
        l2 * p210,
        -l2,
        l1 * p111,
        l1 * (1.0 - p120 - p111),
        l2 * p211,
        l2 * (1.0 - p210 - p211),
    )


def stats_kernel(entries: tuple[float, ...]):
    """(rho1, mu1, mu2, mu3, gamma) from raw matrix entries, or None when the
    embedded chain is numerically reducible.  Mirrors the public operations."""
    a11, a12, a21, a22, b11, b12, b21, b22 = entries
    det = a11 * a22 - a12 * a21
    if det == 0.0:
        return None
    # inv = (-D0)^{-1} = adj(-D0)/det(D0)
    i11 = -a22 / det
    i12 = a12 / det
    i21 = a21 / det
    i22 = -a11 / det
    p11 = i11 * b11 + i12 * b21
    p12 = i11 * b12 + i12 * b22
    p21 = i21 * b11 + i22 * b21
    p22 = i21 * b12 + i22 * b22
    off = p12 + p21
    # same reducibility threshold as matrix2.stationary_row
    if not off > 1e-12:
        return None
    phi1 = p21 / off
    phi2 = 1.0 - phi1
    r1 = i11 + i12
    r2 = i21 + i22
    mu1 = phi1 * r1 + phi2 * r2
    s1 = i11 * r1 + i12 * r2
    s2 = i21 * r1 + i22 * r2
    mu2 = 2.0 * (phi1 * s1 + phi2 * s2)
    w1 = i11 * s1 + i12 * s2
    w2 = i21 * s1 + i22 * s2
    mu3 = 6.0 * (phi1 * w1 + phi2 * w2)
    var = mu2 - mu1 * mu1
    if not var > 0.0 or not mu1 > 0.0:
        return None
    g = p11 + p22 - 1.0
    rho1 = g * (mu2 / 2.0 - mu1 * mu1) / var
    return rho1, mu1, mu2, mu3, g
