"""Moments-matching initialization and maximum-likelihood refinement.

The pipeline for one canonical form:

1. Moments matching: minimize the penalized mismatch delta_tau between the
   model's (rho1, mu1, mu2, mu3) and the sample's, by multistart Nelder-Mead
   over a box-constrained parameter space.  The incumbent seeds step 2.
2. Likelihood maximization: rescale the sample by its standard deviation c,
   maximize the renormalized log-likelihood of the c-scaled model over the
   sign-constrained parameter space, and divide the optimum by c.

``fit`` runs both canonical forms and keeps the one with the larger
log-likelihood.  ``ml_fit_redundant`` runs the same two stages over the
six-parameter representation as a non-identifiable baseline.

Constraint handling is by reparameterization, never rejection: rates enter
through log transforms and jump/branching parameters through interval
logistics, so every evaluated point is feasible by construction.  The
moments stage normalizes its target to unit mean, which makes the whole
pipeline exactly equivariant under rescaling of the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateLikelihood,
    DegenerateVariance,
    InvalidModel,
    NoFeasibleStart,
    OptimizerFailure,
    ReducibleChain,
)
from .likelihood import LogLikelihood, _forward_log, loglik, sample_scale
from .matrix2 import Matrix2
from .optimizer import nelder_mead
from .models import (
    CanonicalForm,
    CanonicalMap2,
    MomentSummary,
    RateMatrixPair,
    RedundantMap2,
    canonical_entries,
    canonical_to_matrices,
    empirical_moments,
    redundant_entries,
    redundant_to_matrices,
    stats_kernel,
    theoretical_moments,
)
from .simulate import (
    STREAM_MULTISTART,
    InterarrivalSample,
    ParameterBounds,
    random_canonical,
    random_redundant,
    substream,
)

_FORM_STREAM = {CanonicalForm.ONE: 1, CanonicalForm.TWO: 2}
_REDUNDANT_STREAM = 3


@dataclass(frozen=True)
class EstimationConfig:
    """Tuning knobs of the estimation pipeline.

    The defaults are the working set: penalty weight tau = 1, the reduced
    parameter box x, u in [-1000, -2e-16] and y, v in [1e-5, 100], and 100
    multistart points for the moments stage.
    """

    tau: float = 1.0
    rate_bounds: tuple[float, float] = (-1000.0, -2e-16)
    jump_bounds: tuple[float, float] = (1e-5, 100.0)
    multistart_count: int = 100
    step_tol: float = 1e-10
    objective_tol: float = 1e-12
    max_iterations: int = 5000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.multistart_count < 1:
            raise ValueError("multistart_count must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        ParameterBounds(self.rate_bounds, self.jump_bounds)  # validates ordering

    def bounds(self) -> ParameterBounds:
        return ParameterBounds(self.rate_bounds, self.jump_bounds)


@dataclass(frozen=True)
class FitResult:
    """Outcome of one estimation run, start point included."""

    model: CanonicalMap2 | RedundantMap2
    form_selected: Optional[CanonicalForm]
    loglik: LogLikelihood
    start_model: CanonicalMap2 | RedundantMap2
    start_loglik: LogLikelihood
    moments: MomentSummary
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.loglik.value < self.start_loglik.value - 1e-9:
            raise ValueError(
                f"refinement worsened the start: {self.loglik.value} < "
                f"{self.start_loglik.value}"
            )


# ---------------------------------------------------------------------------
# Reparameterizations
# ---------------------------------------------------------------------------


def _sigmoid(z: float) -> float:
    return 0.5 * (1.0 + math.tanh(0.5 * z))


def _logit(p: float) -> float:
    p = min(max(p, 1e-12), 1.0 - 1e-12)
    return math.log(p / (1.0 - p))


def _interval(z: float, lo: float, hi: float) -> float:
    """Map z in R onto [lo, hi] logistically (log-spaced; lo, hi > 0)."""
    llo, lhi = math.log(lo), math.log(hi)
    return math.exp(llo + _sigmoid(z) * (lhi - llo))


def _interval_inv(value: float, lo: float, hi: float) -> float:
    llo, lhi = math.log(lo), math.log(hi)
    if lhi <= llo:
        return 0.0
    return _logit((math.log(min(max(value, lo), hi)) - llo) / (lhi - llo))


class _CanonicalBoxSpace:
    """Moments-stage space: box-constrained (x, y, u, v), feasible by
    construction.  Rates are log-logistic over the box; jumps are
    log-logistic over [jump_lo, min(jump_hi, rate)]."""

    size = 4

    def __init__(self, bounds: ParameterBounds) -> None:
        self.rate_lo = max(-bounds.rate[1], bounds.jump[0], 1e-12)
        self.rate_hi = -bounds.rate[0]
        self.jump_lo, self.jump_hi = bounds.jump

    def decode(self, theta) -> Optional[tuple[float, float, float, float]]:
        mx = _interval(theta[0], self.rate_lo, self.rate_hi)
        y = _interval(theta[1], self.jump_lo, min(self.jump_hi, mx))
        mu = _interval(theta[2], self.rate_lo, self.rate_hi)
        v = _interval(theta[3], self.jump_lo, min(self.jump_hi, mu))
        return -mx, y, -mu, v

    def encode(self, x: float, y: float, u: float, v: float):
        mx, mu = -x, -u
        return np.array(
            [
                _interval_inv(mx, self.rate_lo, self.rate_hi),
                _interval_inv(y, self.jump_lo, min(self.jump_hi, mx)),
                _interval_inv(mu, self.rate_lo, self.rate_hi),
                _interval_inv(v, self.jump_lo, min(self.jump_hi, mu)),
            ]
        )


# Rates beyond e^300 (or below e^-300) are numerically meaningless and their
# squared norms overflow downstream; the free spaces reject them outright.
_LOG_RATE_CAP = 300.0


class _CanonicalFreeSpace:
    """Likelihood-stage space: log rates, jumps as a logistic fraction of the
    matching rate.  Enforces x, u < 0, 0 <= y <= -x, 0 <= v <= -u only."""

    size = 4

    def decode(self, theta) -> Optional[tuple[float, float, float, float]]:
        if abs(theta[0]) > _LOG_RATE_CAP or abs(theta[2]) > _LOG_RATE_CAP:
            return None
        mx = math.exp(theta[0])
        mu = math.exp(theta[2])
        return -mx, _sigmoid(theta[1]) * mx, -mu, _sigmoid(theta[3]) * mu

    def encode(self, x: float, y: float, u: float, v: float):
        return np.array(
            [math.log(-x), _logit(y / -x), math.log(-u), _logit(v / -u)]
        )


class _RedundantBoxSpace:
    """Moments-stage space for (lambda1, lambda2, p120, p111, p210, p211):
    rates log-logistic over a box, branch pairs stick-broken so that
    p120 + p111 <= 1 and p210 + p211 <= 1 hold by construction."""

    size = 6

    def __init__(self, rate_box: tuple[float, float]) -> None:
        self.lo, self.hi = rate_box

    def decode(self, theta):
        l1 = _interval(theta[0], self.lo, self.hi)
        l2 = _interval(theta[1], self.lo, self.hi)
        p120 = _sigmoid(theta[2])
        p111 = _sigmoid(theta[3]) * (1.0 - p120)
        p210 = _sigmoid(theta[4])
        p211 = _sigmoid(theta[5]) * (1.0 - p210)
        return l1, l2, p120, p111, p210, p211

    def encode(self, l1, l2, p120, p111, p210, p211):
        return np.array(
            [
                _interval_inv(l1, self.lo, self.hi),
                _interval_inv(l2, self.lo, self.hi),
                _logit(p120),
                _logit(p111 / max(1.0 - p120, 1e-12)),
                _logit(p210),
                _logit(p211 / max(1.0 - p210, 1e-12)),
            ]
        )


class _RedundantFreeSpace(_RedundantBoxSpace):
    """Likelihood-stage space: unbounded log rates, same branch construction."""

    def decode(self, theta):
        if abs(theta[0]) > _LOG_RATE_CAP or abs(theta[1]) > _LOG_RATE_CAP:
            return None
        l1 = math.exp(theta[0])
        l2 = math.exp(theta[1])
        p120 = _sigmoid(theta[2])
        p111 = _sigmoid(theta[3]) * (1.0 - p120)
        p210 = _sigmoid(theta[4])
        p211 = _sigmoid(theta[5]) * (1.0 - p210)
        return l1, l2, p120, p111, p210, p211

    def encode(self, l1, l2, p120, p111, p210, p211):
        base = super().encode(l1, l2, p120, p111, p210, p211)
        base[0] = math.log(l1)
        base[1] = math.log(l2)
        return base


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


def delta_tau(
    params: tuple[float, float, float, float],
    form: CanonicalForm,
    target: MomentSummary,
    tau: float = 1.0,
) -> float:
    """Penalized moments mismatch
    (rho1 - target)^2 + tau * sum_i ((mu_i - target_i)/target_i)^2."""
    model = CanonicalMap2(form, *params)  # raises InvalidModel when infeasible
    stats = stats_kernel(canonical_entries(model.form, *model.params()))
    if stats is None:
        raise InvalidModel(f"model {model} has a degenerate embedded chain")
    return _delta_from_stats(stats, target.as_tuple(), tau)


def _delta_from_stats(stats, target_tuple, tau: float) -> float:
    rho1, mu1, mu2, mu3, _ = stats
    t_rho, t1, t2, t3 = target_tuple
    return (rho1 - t_rho) ** 2 + tau * (
        ((mu1 - t1) / t1) ** 2 + ((mu2 - t2) / t2) ** 2 + ((mu3 - t3) / t3) ** 2
    )


def _nm_minimize(objective, theta0, config: EstimationConfig):
    return nelder_mead(
        objective,
        theta0,
        xatol=config.step_tol,
        fatol=config.objective_tol,
        maxiter=config.max_iterations,
        maxfev=2 * config.max_iterations,
    )


def _normalized_target(target: MomentSummary) -> tuple[float, ...]:
    """Target expressed in units of its own mean (exact scale equivariance)."""
    s = target.mu1
    return target.rho1, 1.0, target.mu2 / (s * s), target.mu3 / (s * s * s)


def moments_match_start(
    target: MomentSummary, form: CanonicalForm, config: EstimationConfig
) -> CanonicalMap2:
    """Best of multistart_count local minimizations of the moments mismatch.

    The target is normalized to unit mean before optimizing and the incumbent
    is scaled back, so the result commutes exactly with rescaling the data.
    """
    space = _CanonicalBoxSpace(config.bounds())
    tgt = _normalized_target(target)
    tau = config.tau

    def objective(theta) -> float:
        params = space.decode(theta)
        stats = stats_kernel(canonical_entries(form, *params))
        if stats is None:
            return math.inf
        return _delta_from_stats(stats, tgt, tau)

    rng = np.random.default_rng(
        substream(config.seed, STREAM_MULTISTART, _FORM_STREAM[form])
    )
    best_val = math.inf
    best_params = None
    for _ in range(config.multistart_count):
        draw = random_canonical(None, bounds=config.bounds(), form=form, rng=rng)
        theta0 = space.encode(*draw.params())
        res = _nm_minimize(objective, theta0, config)
        val = res.fun if math.isfinite(res.fun) else objective(theta0)
        params = space.decode(res.x if math.isfinite(res.fun) else theta0)
        if val < best_val:
            best_val = val
            best_params = params
    if best_params is None:
        raise NoFeasibleStart("every moments-matching start failed")
    scale = 1.0 / target.mu1  # back to the data's time units
    x, y, u, v = best_params
    return CanonicalMap2(form, x * scale, y * scale, u * scale, v * scale)


def _bound_activity(model: CanonicalMap2, config: EstimationConfig) -> list[str]:
    """Names of parameters sitting at (or within 0.1% of) the search box edge,
    in the normalized units the moments stage searched."""
    notes = []
    rate_lo, rate_hi = config.rate_bounds

    def near(val: float, edge: float) -> bool:
        return abs(val - edge) <= 1e-3 * abs(edge)

    for name, val in (("x", model.x), ("u", model.u)):
        if near(val, rate_lo):
            notes.append(f"{name} at lower rate bound")
    for name, val in (("y", model.y), ("v", model.v)):
        if near(val, config.jump_bounds[1]):
            notes.append(f"{name} at upper jump bound")
    return notes


# Auxiliary likelihood-stage start: two time scales around the sample mean
# with symmetric coupling.  Noisy moment targets can park every moments-stage
# minimum in a decoupled basin whose likelihood optimum is far below the
# truth; refining from this generic coupled model as well and keeping the
# better optimum makes the stage robust to that, deterministically.
_AUX_RATE_SEP = 4.0


def _aux_canonical_theta(space: _CanonicalFreeSpace, scaled_mean: float):
    root = math.sqrt(_AUX_RATE_SEP)
    x = -root / scaled_mean
    u = -1.0 / (root * scaled_mean)
    return space.encode(x, 0.5 * -x, u, 0.5 * -u)


def _aux_redundant_theta(space: "_RedundantFreeSpace", scaled_mean: float):
    root = math.sqrt(_AUX_RATE_SEP)
    return space.encode(
        root / scaled_mean, 1.0 / (root * scaled_mean), 0.0, 0.5, 0.0, 0.5
    )


def _refine_from(objective, starts, config: EstimationConfig):
    """Run the simplex search from each labeled start; best objective wins."""
    best = None
    label = None
    total_nit = 0
    total_nfev = 0
    for name, theta0 in starts:
        res = _nm_minimize(objective, theta0, config)
        total_nit += res.nit
        total_nfev += res.nfev
        if best is None or res.fun < best.fun:
            best, label = res, name
    return best, label, total_nit, total_nfev


def _scaled_ml_objective(space, entries_fn, scaled_times: np.ndarray):
    """Negative renormalized log-likelihood on the c-scaled sample."""

    def objective(theta) -> float:
        params = space.decode(theta)
        if params is None:
            return math.inf
        entries = entries_fn(params)
        det = entries[0] * entries[3] - entries[1] * entries[2]
        if not det > 0.0:
            return math.inf
        i11 = -entries[3] / det
        i12 = entries[1] / det
        i21 = entries[2] / det
        i22 = -entries[0] / det
        p12 = i11 * entries[5] + i12 * entries[7]
        p21 = i21 * entries[4] + i22 * entries[6]
        off = p12 + p21
        # same reducibility threshold as matrix2.stationary_row, so any
        # candidate the objective accepts is also evaluable by loglik()
        if not off > 1e-12:
            return math.inf
        phi1 = min(max(p21 / off, 0.0), 1.0)
        d0 = Matrix2(entries[0], entries[1], entries[2], entries[3])
        d1 = Matrix2(entries[4], entries[5], entries[6], entries[7])
        try:
            return -_forward_log(phi1, 1.0 - phi1, d0, d1, scaled_times)
        except (DegenerateLikelihood, ValueError, OverflowError):
            return math.inf

    return objective


def ml_fit_form(
    t: InterarrivalSample,
    form: CanonicalForm,
    start: CanonicalMap2,
    config: EstimationConfig,
) -> FitResult:
    """Maximize the log-likelihood in one canonical form from a given start.

    Works on the sample divided by its standard deviation c with the model
    scaled by c, then divides the optimum back.  The returned result is never
    worse than the start (the start is kept if refinement fails to beat it).
    """
    if start.form is not form:
        raise InvalidModel(f"start has form {start.form}, expected {form}")
    times = np.asarray(t.times, dtype=float)
    c, fallback = sample_scale(times)
    scaled_times = times / c

    space = _CanonicalFreeSpace()
    x, y, u, v = start.params()
    theta0 = space.encode(x * c, y * c, u * c, v * c)
    objective = _scaled_ml_objective(
        space, lambda p: canonical_entries(form, *p), scaled_times
    )
    if not math.isfinite(objective(theta0)):
        raise OptimizerFailure(
            f"moments-matching start {start} has degenerate likelihood"
        )
    starts = [
        ("moments", theta0),
        ("auxiliary", _aux_canonical_theta(space, float(scaled_times.mean()))),
    ]
    res, refined_from, nit, nfev = _refine_from(objective, starts, config)

    start_pair = canonical_to_matrices(start)
    start_ll = loglik(start_pair, t)
    fitted, final_ll = start, start_ll
    if math.isfinite(res.fun) and space.decode(res.x) is not None:
        xs, ys, us, vs = space.decode(res.x)
        try:
            candidate = CanonicalMap2(form, xs / c, ys / c, us / c, vs / c)
            candidate_ll = loglik(canonical_to_matrices(candidate), t)
            if candidate_ll.value >= start_ll.value:
                fitted, final_ll = candidate, candidate_ll
        except (InvalidModel, DegenerateLikelihood, ReducibleChain):
            pass  # unusable optimum at the original scale; keep the start

    return FitResult(
        model=fitted,
        form_selected=form,
        loglik=final_ll,
        start_model=start,
        start_loglik=start_ll,
        moments=theoretical_moments(canonical_to_matrices(fitted)),
        iterations=nit,
        converged=bool(res.success),
        diagnostics={
            "optimizer_message": str(res.message),
            "function_evaluations": nfev,
            "refined_from": refined_from,
            "scale": c,
            "scale_fallback": fallback,
            "bound_activity": _bound_activity(start, config),
        },
    )


def fit_target_moments(t: InterarrivalSample) -> tuple[MomentSummary, bool]:
    """Sample moments target, with an exponential fallback (rho1 = 0,
    mu2 = 2 mu1^2, mu3 = 6 mu1^3) for zero-variance samples.
    Returns (target, fallback_used)."""
    try:
        return empirical_moments(t.times), False
    except DegenerateVariance:
        m = float(np.asarray(t.times, dtype=float).mean())
        return MomentSummary(mu1=m, mu2=2 * m * m, mu3=6 * m**3, rho1=0.0), True


def fit_both_forms(
    t: InterarrivalSample, config: EstimationConfig = EstimationConfig()
) -> dict[CanonicalForm, FitResult]:
    """Moments start plus likelihood refinement in each canonical form."""
    target, degenerate_target = fit_target_moments(t)
    results = {}
    for form in (CanonicalForm.ONE, CanonicalForm.TWO):
        start = moments_match_start(target, form, config)
        result = ml_fit_form(t, form, start, config)
        result.diagnostics["target_fallback"] = degenerate_target
        results[form] = result
    return results


def select_form(results: dict[CanonicalForm, FitResult]) -> FitResult:
    """Larger log-likelihood wins; exact ties go to form ONE."""
    one, two = results[CanonicalForm.ONE], results[CanonicalForm.TWO]
    chosen = one if one.loglik.value >= two.loglik.value else two
    other = two if chosen is one else one
    chosen.diagnostics["rejected_form_loglik"] = other.loglik.value
    return chosen


def fit(t: InterarrivalSample, config: EstimationConfig = EstimationConfig()) -> FitResult:
    """Full canonical estimate: moments start plus likelihood refinement in
    both forms, returning the form with the larger log-likelihood
    (ties go to form ONE)."""
    return select_form(fit_both_forms(t, config))


_REDUNDANT_RATE_BOX = (1e-5, 1000.0)


def _redundant_moments_start(
    target: MomentSummary, config: EstimationConfig
) -> RedundantMap2:
    """Moments matching mirrored over the six-parameter representation."""
    space = _RedundantBoxSpace(_REDUNDANT_RATE_BOX)
    tgt = _normalized_target(target)
    tau = config.tau

    def objective(theta) -> float:
        params = space.decode(theta)
        stats = stats_kernel(redundant_entries(*params))
        if stats is None:
            return math.inf
        return _delta_from_stats(stats, tgt, tau)

    rng = np.random.default_rng(
        substream(config.seed, STREAM_MULTISTART, _REDUNDANT_STREAM)
    )
    best_val = math.inf
    best_params = None
    for _ in range(config.multistart_count):
        draw = random_redundant(None, rate_box=_REDUNDANT_RATE_BOX, rng=rng)
        theta0 = space.encode(*draw.params())
        res = _nm_minimize(objective, theta0, config)
        val = res.fun if math.isfinite(res.fun) else objective(theta0)
        params = space.decode(res.x if math.isfinite(res.fun) else theta0)
        if val < best_val:
            best_val = val
            best_params = params
    if best_params is None:
        raise NoFeasibleStart("every redundant moments-matching start failed")
    s = 1.0 / target.mu1
    l1, l2, p120, p111, p210, p211 = best_params
    return RedundantMap2(l1 * s, l2 * s, p120, p111, p210, p211)


def ml_fit_redundant(
    t: InterarrivalSample, config: EstimationConfig = EstimationConfig()
) -> FitResult:
    """Likelihood maximization in the six-parameter representation.

    Same two-stage pipeline as the canonical fit.  Non-convergence is
    reported through ``converged`` and the diagnostics, not raised;
    OptimizerFailure is raised only when no usable estimate exists at all.
    """
    target, degenerate_target = fit_target_moments(t)
    start = _redundant_moments_start(target, config)
    times = np.asarray(t.times, dtype=float)
    c, fallback = sample_scale(times)
    scaled_times = times / c

    space = _RedundantFreeSpace(_REDUNDANT_RATE_BOX)
    l1, l2, p120, p111, p210, p211 = start.params()
    theta0 = space.encode(l1 * c, l2 * c, p120, p111, p210, p211)
    objective = _scaled_ml_objective(
        space, lambda p: redundant_entries(*p), scaled_times
    )
    if not math.isfinite(objective(theta0)):
        raise OptimizerFailure(
            f"redundant moments-matching start {start} has degenerate likelihood"
        )
    starts = [
        ("moments", theta0),
        ("auxiliary", _aux_redundant_theta(space, float(scaled_times.mean()))),
    ]
    res, refined_from, nit, nfev = _refine_from(objective, starts, config)

    start_ll = loglik(redundant_to_matrices(start), t)
    fitted, final_ll = start, start_ll
    if math.isfinite(res.fun) and space.decode(res.x) is not None:
        ls1, ls2, q120, q111, q210, q211 = space.decode(res.x)
        try:
            candidate = RedundantMap2(ls1 / c, ls2 / c, q120, q111, q210, q211)
            candidate_ll = loglik(redundant_to_matrices(candidate), t)
            if candidate_ll.value >= start_ll.value:
                fitted, final_ll = candidate, candidate_ll
        except (InvalidModel, DegenerateLikelihood, ReducibleChain):
            pass  # unusable optimum at the original scale; keep the start

    return FitResult(
        model=fitted,
        form_selected=None,
        loglik=final_ll,
        start_model=start,
        start_loglik=start_ll,
        moments=theoretical_moments(redundant_to_matrices(fitted)),
        iterations=nit,
        converged=bool(res.success),
        diagnostics={
            "optimizer_message": str(res.message),
            "function_evaluations": nfev,
            "refined_from": refined_from,
            "scale": c,
            "scale_fallback": fallback,
            "target_fallback": degenerate_target,
        },
    )
