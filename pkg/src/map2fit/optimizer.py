"""Compact Nelder-Mead simplex minimizer.

The estimation pipeline runs hundreds of thousands of objective evaluations
on 4- and 6-dimensional smooth landscapes; this implementation keeps the
per-iteration overhead to a few microseconds and is deterministic given the
starting point.  Standard coefficients (reflection 1, expansion 2,
contraction 0.5, shrink 0.5); convergence when both the simplex spread in x
(max-norm) falls below ``xatol`` and the spread in f below ``fatol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence


@dataclass(frozen=True)
class SimplexResult:
    x: list[float]
    fun: float
    nit: int
    nfev: int
    success: bool
    message: str


def nelder_mead(
    objective: Callable[[Sequence[float]], float],
    x0: Sequence[float],
    xatol: float = 1e-10,
    fatol: float = 1e-12,
    maxiter: int = 5000,
    maxfev: int | None = None,
    initial_step: float = 0.05,
) -> SimplexResult:
    """Minimize objective from x0.

    The initial simplex perturbs each coordinate by ``initial_step``
    relatively (or by 0.00025 absolutely for zero coordinates).  Infinite
    objective values are allowed and treated as worst.
    """
    x0 = [float(v) for v in x0]
    n = len(x0)
    if maxfev is None:
        maxfev = 2 * maxiter

    simplex = [x0]
    for i in range(n):
        pt = list(x0)
        pt[i] = pt[i] * (1.0 + initial_step) if pt[i] != 0.0 else 0.00025
        simplex.append(pt)
    fvals = [objective(p) for p in simplex]
    nfev = n + 1

    order = sorted(range(n + 1), key=lambda i: fvals[i])
    simplex = [simplex[i] for i in order]
    fvals = [fvals[i] for i in order]

    nit = 0
    converged = False
    while nit < maxiter and nfev < maxfev:
        fspread = fvals[-1] - fvals[0]
        xspread = max(
            abs(simplex[j][i] - simplex[0][i])
            for j in range(1, n + 1)
            for i in range(n)
        )
        if fspread <= fatol and xspread <= xatol:
            converged = True
            break
        nit += 1

        centroid = [
            math.fsum(simplex[j][i] for j in range(n)) / n for i in range(n)
        ]
        worst = simplex[-1]
        reflected = [centroid[i] + (centroid[i] - worst[i]) for i in range(n)]
        f_r = objective(reflected)
        nfev += 1

        if f_r < fvals[0]:
            expanded = [centroid[i] + 2.0 * (centroid[i] - worst[i]) for i in range(n)]
            f_e = objective(expanded)
            nfev += 1
            if f_e < f_r:
                simplex[-1], fvals[-1] = expanded, f_e
            else:
                simplex[-1], fvals[-1] = reflected, f_r
        elif f_r < fvals[-2]:
            simplex[-1], fvals[-1] = reflected, f_r
        else:
            if f_r < fvals[-1]:
                contracted = [
                    centroid[i] + 0.5 * (reflected[i] - centroid[i]) for i in range(n)
                ]
            else:
                contracted = [
                    centroid[i] + 0.5 * (worst[i] - centroid[i]) for i in range(n)
                ]
            f_c = objective(contracted)
            nfev += 1
            if f_c < min(f_r, fvals[-1]):
                simplex[-1], fvals[-1] = contracted, f_c
            else:
                best = simplex[0]
                for j in range(1, n + 1):
                    simplex[j] = [
                        best[i] + 0.5 * (simplex[j][i] - best[i]) for i in range(n)
                    ]
                    fvals[j] = objective(simplex[j])
                nfev += n

        # insertion keeps the simplex sorted; n is tiny so this is cheap
        order = sorted(range(n + 1), key=lambda i: fvals[i])
        simplex = [simplex[i] for i in order]
        fvals = [fvals[i] for i in order]

    message = "converged" if converged else "iteration or evaluation budget exhausted"
    return SimplexResult(
        x=simplex[0], fun=fvals[0], nit=nit, nfev=nfev, success=converged,
        message=message,
    )
