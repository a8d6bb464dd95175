"""Numerically stable MAP2 log-likelihood evaluation.

The stationary joint density of interarrivals t_1..t_n is the matrix product

    f(t | D0, D1) = phi e^{D0 t_1} D1 ... e^{D0 t_n} D1 e,

whose factors all decay to zero as t grows, so the literal product underflows
for long or high-variance samples.  Two independent remedies are provided:

* ``loglik`` keeps a forward row vector renormalized to unit 1-norm after
  every factor and accumulates the log norms (the standard scaling trick for
  hidden-Markov forward recursions).  It is finite for any valid input.
* ``loglik_scaled_pipeline`` additionally rescales the sample by its standard
  deviation c, evaluating the identity
  log f(t | D0, D1) = -n log c + log f(t/c | cD0, cD1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLikelihood, NonpositiveScale
from .matrix2 import Matrix2, _spectral_split, expm
from .models import RateMatrixPair, stationary_phi
from .simulate import InterarrivalSample

_LOG = math.log


@dataclass(frozen=True)
class LogLikelihood:
    """Natural-log joint density value; always finite, never a silent inf."""

    value: float
    n: int
    scale_used: float = 1.0
    scale_fallback: bool = False

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise DegenerateLikelihood(f"non-finite log-likelihood {self.value}")


def _step_factors(d0: Matrix2, d1: Matrix2, times: np.ndarray):
    """Per-observation factors M_i = e^{D0 t_i} D1, vectorized over times.

    Returns four Python lists (m11, m12, m21, m22); roundoff negatives are
    clamped to zero since each factor is nonnegative in exact arithmetic.
    """
    kind, l1, l2, p, q = _spectral_split(d0)
    if kind == "repeated":
        # e^{D0 t} D1 = e^{l t} (D1 + t N D1), N = D0 - l I
        n11 = p.a11 * d1.a11 + p.a12 * d1.a21
        n12 = p.a11 * d1.a12 + p.a12 * d1.a22
        n21 = p.a21 * d1.a11 + p.a22 * d1.a21
        n22 = p.a21 * d1.a12 + p.a22 * d1.a22
        f = np.exp(l1 * times)
        m11 = f * (d1.a11 + times * n11)
        m12 = f * (d1.a12 + times * n12)
        m21 = f * (d1.a21 + times * n21)
        m22 = f * (d1.a22 + times * n22)
    else:
        a = p.mul(d1)
        b = q.mul(d1)
        f1 = np.exp(l1 * times)
        f2 = np.exp(l2 * times)
        m11 = a.a11 * f1 + b.a11 * f2
        m12 = a.a12 * f1 + b.a12 * f2
        m21 = a.a21 * f1 + b.a21 * f2
        m22 = a.a22 * f1 + b.a22 * f2
    for m in (m11, m12, m21, m22):
        np.maximum(m, 0.0, out=m)
    return m11.tolist(), m12.tolist(), m21.tolist(), m22.tolist()


def _forward_log(
    phi1: float, phi2: float, d0: Matrix2, d1: Matrix2, times: np.ndarray
) -> float:
    """Renormalized forward recursion; raises DegenerateLikelihood on an
    exactly-zero step norm (sample impossible under the model)."""
    m11, m12, m21, m22 = _step_factors(d0, d1, times)
    w1, w2 = phi1, phi2
    total = 0.0
    for f11, f12, f21, f22 in zip(m11, m12, m21, m22):
        nw1 = w1 * f11 + w2 * f21
        nw2 = w1 * f12 + w2 * f22
        s = nw1 + nw2
        if not s > 0.0:
            raise DegenerateLikelihood(
                "forward vector vanished: model assigns zero density to sample"
            )
        total += _LOG(s)
        w1 = nw1 / s
        w2 = nw2 / s
    return total + _LOG(w1 + w2)


def loglik(m: RateMatrixPair, t: InterarrivalSample) -> LogLikelihood:
    """Log of phi e^{D0 t_1} D1 ... e^{D0 t_n} D1 e, renormalized per step."""
    phi = stationary_phi(m)
    times = np.asarray(t.times, dtype=float)
    value = _forward_log(phi.v1, phi.v2, m.d0, m.d1, times)
    return LogLikelihood(value=value, n=times.size)


def rescale_model(m: RateMatrixPair, c: float) -> RateMatrixPair:
    """(cD0, cD1): the same process with time measured in units of 1/c."""
    if not c > 0.0:
        raise NonpositiveScale(f"scale must be positive, got {c}")
    return m.rescaled(c)


def sample_scale(times: np.ndarray) -> tuple[float, bool]:
    """Rescaling constant: the unbiased sample standard deviation, falling
    back to the sample mean when the variance is zero.  Returns (c, fallback)."""
    arr = np.asarray(times, dtype=float)
    c = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    if c > 0.0:
        return c, False
    return float(arr.mean()), True


def loglik_scaled_pipeline(m: RateMatrixPair, t: InterarrivalSample) -> LogLikelihood:
    """Sample-rescaled evaluation: set c = std(t), evaluate the model (cD0, cD1)
    on t/c, and undo the change of units via -n log c."""
    times = np.asarray(t.times, dtype=float)
    c, fallback = sample_scale(times)
    scaled_model = rescale_model(m, c)
    phi = stationary_phi(scaled_model)
    inner = _forward_log(phi.v1, phi.v2, scaled_model.d0, scaled_model.d1, times / c)
    value = -times.size * _LOG(c) + inner
    return LogLikelihood(
        value=value, n=times.size, scale_used=c, scale_fallback=fallback
    )


def marginal_density(m: RateMatrixPair, t: float) -> float:
    """Stationary single-interarrival density phi e^{D0 t} D1 e."""
    phi = stationary_phi(m)
    f = expm(m.d0, t).mul(m.d1)
    return max(
        phi.v1 * (f.a11 + f.a12) + phi.v2 * (f.a21 + f.a22),
        0.0,
    )
