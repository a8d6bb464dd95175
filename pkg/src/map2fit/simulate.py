"""Seeded generation of interarrival samples and random MAP2 models.

The generator follows the continuous-time mechanism directly: from hidden
state i the process sits for an Exp(-D0[i,i]) sojourn, then picks the next
event among the competing transitions {hidden jump j != i at rate D0[i,j],
arrival into j at rate D1[i,j]} with probabilities proportional to their
rates.  An interarrival time is the accumulated sojourn between consecutive
arrival events.

Reproducibility: every routine consumes a NumPy PCG64 generator seeded from
the argument, with a fixed draw order, so equal inputs give bit-identical
outputs.  Sub-streams for independent purposes (multistart points, divergence
runs) are derived with ``substream(seed, purpose, index)``, which maps to
``numpy.random.SeedSequence(seed, spawn_key=(purpose, index))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InvalidModel, NoFeasibleStart, NonErgodic
from .models import (
    CanonicalForm,
    CanonicalMap2,
    EPS_STABLE,
    RateMatrixPair,
    RedundantMap2,
    redundant_entries,
    stationary_phi,
    stats_kernel,
)

SeedLike = Union[int, np.random.SeedSequence]

# spawn_key purpose tags; documented so results can be reproduced externally
STREAM_MULTISTART = 1
STREAM_KL = 2
STREAM_SCAN = 3
STREAM_COMPARE = 4

_EVENT_CAP = 10_000_000  # hidden jumps allowed per arrival before giving up


def substream(seed: SeedLike, purpose: int, index: int) -> np.random.SeedSequence:
    """Deterministic child stream for (seed, purpose, index)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=(purpose, index))
    return np.random.SeedSequence(seed, spawn_key=(purpose, index))


@dataclass(frozen=True)
class ParameterBounds:
    """Sampling/search box: rate interval for x, u and jump interval for y, v."""

    rate: tuple[float, float] = (-1000.0, -2e-16)
    jump: tuple[float, float] = (1e-5, 100.0)

    def __post_init__(self) -> None:
        if not (self.rate[0] < self.rate[1] < 0.0):
            raise ValueError(f"rate bounds must be negative and ordered: {self.rate}")
        if not (0.0 < self.jump[0] < self.jump[1]):
            raise ValueError(f"jump bounds must be positive and ordered: {self.jump}")


DEFAULT_BOUNDS = ParameterBounds()


@dataclass(frozen=True)
class SimulationStart:
    """Initial hidden-state rule: stationary-at-arrival or a fixed state."""

    mode: str
    state: Optional[int] = None

    def __post_init__(self) -> None:
        if self.mode not in ("stationary", "fixed"):
            raise ValueError(f"unknown start mode {self.mode!r}")
        if self.mode == "fixed" and self.state not in (1, 2):
            raise ValueError(f"fixed start state must be 1 or 2, got {self.state}")

    @classmethod
    def stationary(cls) -> "SimulationStart":
        return cls("stationary")

    @classmethod
    def fixed(cls, state: int) -> "SimulationStart":
        return cls("fixed", state)


STATIONARY_AT_ARRIVAL = SimulationStart.stationary()


@dataclass(frozen=True)
class InterarrivalSample:
    """Ordered positive interarrival times plus provenance metadata."""

    times: np.ndarray
    origin: str = ""
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.times, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError(f"sample must be a nonempty 1-d array, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError("interarrival times must be finite and positive")
        arr.flags.writeable = False
        object.__setattr__(self, "times", arr)

    def __len__(self) -> int:
        return int(self.times.size)

    def scaled(self, c: float) -> "InterarrivalSample":
        return InterarrivalSample(
            self.times / c, origin=f"{self.origin}/scaled(1/{c})", seed=self.seed
        )


class _DrawBuffer:
    """Blockwise RNG draws: one Exp(1) and one U(0,1) per event, in order."""

    def __init__(self, rng: np.random.Generator, block: int) -> None:
        self._rng = rng
        self._block = max(block, 256)
        self._exp = rng.standard_exponential(self._block)
        self._uni = rng.random(self._block)
        self._i = 0

    def next_pair(self) -> tuple[float, float]:
        if self._i >= self._block:
            self._exp = self._rng.standard_exponential(self._block)
            self._uni = self._rng.random(self._block)
            self._i = 0
        i = self._i
        self._i = i + 1
        return self._exp[i], self._uni[i]


def simulate(
    m: RateMatrixPair,
    n: int,
    start: SimulationStart = STATIONARY_AT_ARRIVAL,
    seed: SeedLike = 0,
    origin: str = "",
) -> InterarrivalSample:
    """Generate n interarrival times from the model.

    Deterministic in (m, n, start, seed).  The stationary start draws the
    state at the first arrival epoch from phi, the fixed-point law of the
    embedded chain, so the sample matches the stationary joint density.
    """
    if n < 1:
        raise ValueError(f"need n >= 1 arrivals, got {n}")
    d0, d1 = m.d0, m.d1
    if max(d1.a11, d1.a12, d1.a21, d1.a22) <= 0.0:
        raise NonErgodic("D1 is zero: the process never produces an arrival")

    rates = (-d0.a11, -d0.a22)
    # cumulative event probabilities per state: hidden jump, arrival->1, arrival->2
    cuts = []
    for lam, hid, arr1, arr2 in (
        (rates[0], d0.a12, d1.a11, d1.a12),
        (rates[1], d0.a21, d1.a21, d1.a22),
    ):
        c1 = hid / lam
        c2 = c1 + arr1 / lam
        cuts.append((c1, c2))

    rng = np.random.default_rng(seed)
    if start.mode == "stationary":
        phi = stationary_phi(m)
        state = 0 if rng.random() < phi.v1 else 1
    else:
        state = start.state - 1

    buf = _DrawBuffer(rng, 4 * n)
    out = np.empty(n, dtype=float)
    acc = 0.0
    for k in range(n):
        events = 0
        while True:
            e, uraw = buf.next_pair()
            acc += e / rates[state]
            c1, c2 = cuts[state]
            if uraw >= c1:
                state = 0 if uraw < c2 else 1
                break
            state = 1 - state
            events += 1
            if events > _EVENT_CAP:
                raise NonErgodic(f"no arrival after {_EVENT_CAP} hidden jumps")
        out[k] = acc
        acc = 0.0

    seed_meta = seed if isinstance(seed, int) else None
    label = origin or f"simulated(n={n}, start={start.mode}, seed={seed})"
    return InterarrivalSample(out, origin=label, seed=seed_meta)


def random_canonical(
    seed: SeedLike,
    bounds: ParameterBounds = DEFAULT_BOUNDS,
    form: Optional[CanonicalForm] = None,
    rng: Optional[np.random.Generator] = None,
) -> CanonicalMap2:
    """Random valid canonical model inside the given box.

    -x and -u are log-uniform over the rate box, y ~ U(0, -x) and
    v ~ U(0, -u); draws are rejected until the jump box and the model
    invariants all hold, so every return value is feasible.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    rate_lo, rate_hi = -bounds.rate[1], -bounds.rate[0]  # magnitudes, lo < hi
    rate_lo = max(rate_lo, EPS_STABLE, bounds.jump[0])  # y >= jump_lo needs -x >= jump_lo
    log_lo, log_hi = math.log(rate_lo), math.log(rate_hi)
    jump_lo, jump_hi = bounds.jump
    for _ in range(10_000):
        mx = math.exp(rng.uniform(log_lo, log_hi))
        mu = math.exp(rng.uniform(log_lo, log_hi))
        y = rng.uniform(0.0, mx)
        v = rng.uniform(0.0, mu)
        if not (jump_lo <= y <= jump_hi and jump_lo <= v <= jump_hi):
            continue
        f = form
        if f is None:
            f = CanonicalForm.ONE if rng.random() < 0.5 else CanonicalForm.TWO
        try:
            return CanonicalMap2(form=f, x=-mx, y=y, u=-mu, v=v)
        except InvalidModel:
            continue
    raise NoFeasibleStart(f"no feasible canonical draw within bounds {bounds}")


def random_redundant(
    seed: SeedLike,
    rate_box: tuple[float, float] = (1e-2, 1e2),
    rng: Optional[np.random.Generator] = None,
) -> RedundantMap2:
    """Random valid six-parameter model: exit rates log-uniform over rate_box,
    branch probabilities uniform subject to p120 + p111 <= 1, p210 + p211 <= 1."""
    if rng is None:
        rng = np.random.default_rng(seed)
    log_lo, log_hi = math.log(rate_box[0]), math.log(rate_box[1])
    for _ in range(10_000):
        l1 = math.exp(rng.uniform(log_lo, log_hi))
        l2 = math.exp(rng.uniform(log_lo, log_hi))
        p120 = rng.uniform(0.0, 1.0)
        p111 = rng.uniform(0.0, 1.0 - p120)
        p210 = rng.uniform(0.0, 1.0)
        p211 = rng.uniform(0.0, 1.0 - p210)
        try:
            model = RedundantMap2(l1, l2, p120, p111, p210, p211)
            if stats_kernel(redundant_entries(*model.params())) is None:
                continue  # numerically reducible; resample
            return model
        except InvalidModel:
            continue
    raise NoFeasibleStart("no feasible redundant draw")
