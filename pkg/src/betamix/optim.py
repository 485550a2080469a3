"""Bound-constrained maximization of a black-box objective of 4 variables.

Projected quasi-Newton ascent: central finite-difference gradients, a BFGS
approximation of the inverse Hessian, and a backtracking line search whose
trial points are clipped into the box before every evaluation.  Only
improving steps are accepted, so the returned point never scores below the
start.  Built for objectives defined by numerical quadrature, where no
analytic gradient exists and an occasional non-finite value must be
swallowed rather than propagated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from betamix.bbeta import ALPHA_MAX, ALPHA_MIN

_MIN_STEP = 1e-12
_ARMIJO = 1e-4


def _default_lower():
    return np.full(4, ALPHA_MIN)


def _default_upper():
    return np.full(4, ALPHA_MAX)


@dataclass(frozen=True)
class Bounds4:
    """Box constraints for the four parameters."""

    lower: np.ndarray = field(default_factory=_default_lower)
    upper: np.ndarray = field(default_factory=_default_upper)

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != (4,) or hi.shape != (4,):
            raise ValueError("bounds must be 4-vectors")
        if not np.all(lo < hi):
            raise ValueError("every lower bound must be below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def clip(self, v):
        return np.clip(v, self.lower, self.upper)


@dataclass
class OptimReport:
    argmax: np.ndarray
    value: float
    iterations: int
    converged: bool


def _safe_eval(objective, v):
    val = float(objective(v))
    return val if math.isfinite(val) else -math.inf


def fd_gradient(objective, v, bounds: Bounds4, batch_objective=None):
    """Central finite-difference gradient, clamped inside the box.

    Step h_j = max(1e-6, 1e-6 * |v_j|); when a perturbed point would leave
    the box it is clipped and the difference quotient uses the actual
    displacement.  ``batch_objective``, when given, evaluates all eight
    perturbations in one call (an (8, 4) array in, 8 values out).
    """
    v = np.asarray(v, dtype=float)
    h = np.maximum(1e-6, 1e-6 * np.abs(v))
    hi = np.minimum(v + h, bounds.upper)
    lo = np.maximum(v - h, bounds.lower)
    pts = np.tile(v, (8, 1))
    for j in range(4):
        pts[2 * j, j] = hi[j]
        pts[2 * j + 1, j] = lo[j]
    if batch_objective is not None:
        vals = np.asarray(batch_objective(pts), dtype=float)
    else:
        vals = np.array([_safe_eval(objective, p) for p in pts])
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    g = np.zeros(4)
    for j in range(4):
        denom = hi[j] - lo[j]
        diff = vals[2 * j] - vals[2 * j + 1]
        if denom > 0.0 and math.isfinite(diff):
            g[j] = diff / denom
    return g


def _projected_gradient(g, x, bounds: Bounds4):
    pg = g.copy()
    pg[(x >= bounds.upper - 1e-12) & (pg > 0)] = 0.0
    pg[(x <= bounds.lower + 1e-12) & (pg < 0)] = 0.0
    return pg


def maximize(objective, start, bounds: Bounds4, max_iters: int = 100,
             tol: float = 1e-6, batch_objective=None) -> OptimReport:
    """Maximize ``objective`` over the box, never degrading the start.

    Convergence is declared when the projected-gradient infinity norm
    drops below ``tol`` or the line-search step shrinks below 1e-12;
    ``converged`` is False only when ``max_iters`` runs out first.
    Non-finite objective values are treated as -inf, which simply rejects
    the offending step.
    """
    x = bounds.clip(np.asarray(start, dtype=float))
    f = _safe_eval(objective, x)
    if not math.isfinite(f):
        raise ValueError("objective is not finite at the start point")
    g = fd_gradient(objective, x, bounds, batch_objective)
    hmat = np.eye(4)
    converged = False
    iterations = 0
    for it in range(1, max_iters + 1):
        iterations = it
        pg = _projected_gradient(g, x, bounds)
        if np.max(np.abs(pg)) < tol:
            converged = True
            break
        d = hmat @ g
        if float(d @ pg) <= 0.0:
            d = pg
        step = 1.0
        accepted = False
        xn = x
        fn = f
        while step >= _MIN_STEP:
            xn = bounds.clip(x + step * d)
            dx = xn - x
            if np.max(np.abs(dx)) == 0.0:
                step *= 0.5
                continue
            fn = _safe_eval(objective, xn)
            if fn > f and fn >= f + _ARMIJO * max(0.0, float(g @ dx)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        if step == 1.0:
            # expand while the objective keeps climbing (helps reach a
            # bound quickly when the optimum sits on it)
            for _ in range(30):
                xn2 = bounds.clip(x + 2.0 * step * d)
                if np.array_equal(xn2, xn):
                    break
                fn2 = _safe_eval(objective, xn2)
                if fn2 <= fn:
                    break
                step *= 2.0
                xn, fn = xn2, fn2
        gn = fd_gradient(objective, xn, bounds, batch_objective)
        s = xn - x
        yv = g - gn                       # gradient change of -objective
        sy = float(s @ yv)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(yv)):
            rho = 1.0 / sy
            left = np.eye(4) - rho * np.outer(s, yv)
            hmat = left @ hmat @ left.T + rho * np.outer(s, s)
        x, f, g = xn, fn, gn
    return OptimReport(argmax=x, value=f, iterations=iterations,
                       converged=converged)
