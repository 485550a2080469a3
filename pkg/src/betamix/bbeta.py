"""Flexible bivariate beta distribution on the open unit square.

The density at a point (x, y) is a one-dimensional integral of a
four-parameter Dirichlet density over the slice

    u in ( max(0, x + y - 1), min(x, y) )

that arises from the construction X = U1 + U2, Y = U1 + U3 with
(U1, U2, U3, U4) jointly Dirichlet(a1, a2, a3, a4).  Depending on the
parameters the density can concentrate anywhere in the square, hug its
boundary, and carry positive or negative correlation between the two
coordinates.

The integral has no closed form, so it is evaluated with tanh-sinh
(double-exponential) quadrature after an affine map of the slice onto
(-1, 1).  Evaluation is carried out entirely in log space: each node
contributes a log-integrand, the running node sums are combined with
log-sum-exp, and node positions are stored as stable (1 - t, 1 + t)
pairs so that integrable endpoint singularities (any a_j < 1) are
resolved instead of rounding to log(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

ALPHA_MIN = 1e-3
ALPHA_MAX = 50.0

# Saturation value for log densities whose linear value underflows double
# precision; log_pdf never returns anything below this and never -inf/NaN.
LOG_FLOOR = -745.0

# Truncation of the tanh-sinh node range in the transform variable is
# chosen per parameter row: an endpoint exponent a_j - 1 close to -1
# spreads integrable mass over ever-smaller scales, so the node range must
# grow as min(a_j) shrinks.  Each pair is (smallest a_j covered, cutoff).
_T_CUTOFFS = (
    (0.75, 4.2),
    (0.3, 4.8),
    (0.1, 5.8),
    (0.03, 7.0),
    (0.01, 8.1),
    (0.003, 9.3),
    (0.0, 10.4),
)
_T_CAP = _T_CUTOFFS[-1][1]

_LN2 = math.log(2.0)
_HALF_PI = 0.5 * math.pi


def _t_cutoff(alpha_min: float) -> float:
    for threshold, cutoff in _T_CUTOFFS:
        if alpha_min >= threshold:
            return cutoff
    return _T_CAP


class QuadratureError(RuntimeError):
    """Successive quadrature refinements failed to agree.

    ``point_indices`` holds the offending row indices of the evaluated
    point array; ``pairs`` the offending (point row, parameter row) pairs.
    """

    def __init__(self, message, point_indices=(), pairs=()):
        super().__init__(message)
        self.point_indices = tuple(int(i) for i in point_indices)
        self.pairs = tuple((int(i), int(j)) for i, j in pairs)


@dataclass(frozen=True)
class BetaParams:
    """Shape parameters (a1, a2, a3, a4) of one bivariate beta component."""

    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4"):
            v = getattr(self, name)
            if not (ALPHA_MIN <= v <= ALPHA_MAX) or not math.isfinite(v):
                raise ValueError(
                    f"{name}={v!r} outside [{ALPHA_MIN}, {ALPHA_MAX}]"
                )

    def as_array(self):
        return np.array([self.a1, self.a2, self.a3, self.a4])

    @property
    def total(self):
        """Sum of the four shape parameters."""
        return self.a1 + self.a2 + self.a3 + self.a4

    @property
    def log_norm(self):
        """log of the Dirichlet normalization constant for these shapes."""
        return log_beta_norm(self)


@dataclass(frozen=True)
class Point2:
    """A point strictly inside the unit square."""

    x: float
    y: float

    def __post_init__(self):
        if not (0.0 < self.x < 1.0 and 0.0 < self.y < 1.0):
            raise ValueError(f"point ({self.x!r}, {self.y!r}) not in (0, 1)^2")


@dataclass(frozen=True)
class QuadratureConfig:
    """Tanh-sinh refinement depth and agreement tolerances."""

    levels: int = 10
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8

    def __post_init__(self):
        if self.levels < 3:
            raise ValueError("levels must be >= 3")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")


DEFAULT_QUAD = QuadratureConfig()


def log_beta_norm(params: BetaParams) -> float:
    """log B(a) = sum_i log Gamma(a_i) - log Gamma(sum_i a_i)."""
    a = (params.a1, params.a2, params.a3, params.a4)
    return sum(math.lgamma(v) for v in a) - math.lgamma(sum(a))


def support_interval(p: Point2):
    """Integration interval (max(0, x+y-1), min(x, y)) for a point."""
    return max(0.0, p.x + p.y - 1.0), min(p.x, p.y)


@lru_cache(maxsize=None)
def _nodes(level: int):
    """Tanh-sinh nodes introduced at a refinement level.

    Level 0 is the full rule at step h=1; level L >= 1 contributes the
    odd-index nodes of step h = 2**-L.  Nodes are ordered by |k| ascending
    (+k before -k) so a row's cutoff is a prefix of the arrays.  Returns
    (kh, vp, vm, lvp, lvm, logw) where vp = 1 + t and vm = 1 - t are kept
    in stable form near the endpoints, lvp/lvm are their logs, and logw is
    the log node weight without the step factor h.
    """
    h = 0.5 ** level
    kmax = int(math.floor(_T_CAP / h))
    if level == 0:
        ks = np.arange(0, kmax + 1)
    else:
        ks = np.arange(1, kmax + 1, 2)
    kh = ks * h
    z = _HALF_PI * np.sinh(kh)
    em = np.exp(-2.0 * z)                     # underflows to 0 for large z
    l1p = np.log1p(em)
    vp = 2.0 / (1.0 + em)                     # 1 + tanh(z)
    vm = 2.0 * em / (1.0 + em)                # 1 - tanh(z)
    lvp = _LN2 - l1p
    lvm = _LN2 - 2.0 * z - l1p
    # logcosh(z) = z - ln 2 + log1p(exp(-2z)); cosh(kh) stays modest.
    logw = (
        math.log(_HALF_PI)
        + np.log(np.cosh(kh))
        - 2.0 * (z - _LN2 + l1p)
    )

    def interleave(pos, neg):
        out = np.empty(pos.size + neg.size)
        if level == 0:
            out[0] = pos[0]
            out[1::2] = pos[1:]
            out[2::2] = neg
        else:
            out[0::2] = pos
            out[1::2] = neg
        return out

    mirror = slice(1, None) if level == 0 else slice(None)
    kh_full = interleave(kh, kh[mirror])
    vp_full = interleave(vp, vm[mirror])      # t -> -t swaps vp and vm
    vm_full = interleave(vm, vp[mirror])
    lvp_full = interleave(lvp, lvm[mirror])
    lvm_full = interleave(lvm, lvp[mirror])
    logw_full = interleave(logw, logw[mirror])
    for arr in (kh_full, vp_full, vm_full, lvp_full, lvm_full, logw_full):
        arr.setflags(write=False)
    return kh_full, vp_full, vm_full, lvp_full, lvm_full, logw_full


def _level_logsum(level, c1, c2, c3, c4, half, log_half, em1, cut):
    """Log of the weighted node sum added at one level, per (point, row).

    c1..c4 are the exact non-negative offsets of the four density factors
    from the active integration endpoint; em1 is (B, 4) of a_j - 1; cut is
    the (B,) per-row node-range cutoff.  Returns an (A, B) array (no step
    factor h included).
    """
    kh, vp, vm, lvp, lvm, logw = _nodes(level)
    m = int(np.searchsorted(kh, cut.max(), side="right"))
    kh, vp, vm = kh[:m], vp[:m], vm[:m]
    lvp, lvm, logw = lvp[:m], lvm[:m], logw[:m]
    hvp = half[:, None] * vp[None, :]
    hvm = half[:, None] * vm[None, :]
    lh = log_half[:, None] + np.zeros(m)[None, :]
    with np.errstate(divide="ignore"):
        l1 = np.where(c1[:, None] == 0.0, lh + lvp[None, :],
                      np.log(c1[:, None] + hvp))
        l4 = np.where(c4[:, None] == 0.0, lh + lvp[None, :],
                      np.log(c4[:, None] + hvp))
        l2 = np.where(c2[:, None] == 0.0, lh + lvm[None, :],
                      np.log(c2[:, None] + hvm))
        l3 = np.where(c3[:, None] == 0.0, lh + lvm[None, :],
                      np.log(c3[:, None] + hvm))
    logf = np.stack([l1, l2, l3, l4], axis=-1)      # (A, M, 4)
    contrib = logf @ em1.T                          # (A, M, B)
    contrib += logw[None, :, None]
    beyond = kh[:, None] > cut[None, :]             # (M, B)
    if beyond.any():
        contrib = np.where(beyond[None, :, :], -np.inf, contrib)
    mx = contrib.max(axis=1)                        # (A, B)
    mxf = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = mxf + np.log(np.exp(contrib - mxf[:, None, :]).sum(axis=1))
    return out


def _log_integral(alphas, xs, ys, cfg):
    """Log Dirichlet-slice integral for every (point, alpha row) pair.

    alphas is (B, 4), xs/ys are (N,).  Returns an (N, B) array of
    log-integral values (the 1/B(alpha) factor is not included).  Each
    element refines independently until two successive level estimates
    agree within cfg tolerances, then freezes, so the result for a given
    (point, row) does not depend on what else shares the batch.
    """
    s1 = xs + ys - 1.0
    lo = np.maximum(s1, 0.0)
    d = xs - ys
    c2 = np.maximum(d, 0.0)
    c3 = np.maximum(-d, 0.0)
    c1 = lo
    c4 = lo - s1                                   # exact max(1-x-y, 0)
    hi = xs - c2                                   # min(x, y)
    half = 0.5 * (hi - lo)
    if np.any(half <= 0.0):
        bad = np.where(half <= 0.0)[0]
        raise ValueError(f"degenerate support at point rows {bad.tolist()}")
    log_half = np.log(half)

    em1 = alphas - 1.0
    log_b = np.array([
        sum(math.lgamma(v) for v in row) - math.lgamma(row.sum())
        for row in alphas
    ])
    cut = np.array([_t_cutoff(row.min()) for row in alphas])

    n, b = xs.shape[0], alphas.shape[0]
    log_s = np.full((n, b), -np.inf)
    done = np.zeros((n, b), dtype=bool)
    log_abs = math.log(cfg.abs_tol)

    for level in range(cfg.levels + 1):
        act = np.where(~done.all(axis=1))[0]
        if act.size == 0:
            break
        t_new = _level_logsum(level, c1[act], c2[act], c3[act], c4[act],
                              half[act], log_half[act], em1, cut)
        prev = log_s[act]
        if level == 0:
            cand = t_new
            write = ~done[act]
            log_s[act] = np.where(write, cand, prev)
            continue
        cand = np.logaddexp(prev - _LN2, t_new - level * _LN2)
        with np.errstate(invalid="ignore", divide="ignore"):
            delta = np.abs(cand - prev)
            both_ninf = np.isneginf(cand) & np.isneginf(prev)
            agree = both_ninf | (delta <= cfg.rel_tol)
            # absolute agreement of the integral itself (half * node sum)
            mx = np.maximum(cand, prev)
            logdiff = mx + np.log(-np.expm1(-delta)) + log_half[act][:, None]
            agree |= np.nan_to_num(logdiff, nan=np.inf) <= log_abs
            lp_cand = cand + log_half[act][:, None] - log_b[None, :]
            lp_prev = prev + log_half[act][:, None] - log_b[None, :]
            sat = (lp_cand < LOG_FLOOR) & (lp_prev < LOG_FLOOR)
        write = ~done[act]
        log_s[act] = np.where(write, cand, prev)
        done[act] = done[act] | (write & (agree | sat))

    if not done.all():
        bad = np.where(~done.all(axis=1))[0]
        raise QuadratureError(
            f"quadrature did not converge for {bad.size} point(s) after "
            f"{cfg.levels} refinement levels; raise levels or loosen "
            f"tolerances", bad, np.argwhere(~done))
    return log_s + log_half[:, None] - log_b[None, :]


def _as_points_array(points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (N, 2) point array, got {pts.shape}")
    if np.any(pts <= 0.0) or np.any(pts >= 1.0):
        raise ValueError("points must lie strictly inside the unit square")
    return pts


def log_pdf_batch(alphas, points, cfg: QuadratureConfig = DEFAULT_QUAD):
    """Log densities for several parameter rows over shared points.

    alphas is (B, 4) with every entry inside the parameter bounds; points
    is (N, 2).  Returns a (B, N) array, floored at LOG_FLOOR.  Large
    inputs are processed in fixed-size chunks of points.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != 2 or alphas.shape[1] != 4:
        raise ValueError(f"expected a (B, 4) parameter array, got {alphas.shape}")
    if np.any(alphas < ALPHA_MIN) or np.any(alphas > ALPHA_MAX):
        raise ValueError(f"parameters outside [{ALPHA_MIN}, {ALPHA_MAX}]")
    pts = _as_points_array(points)
    n = pts.shape[0]
    chunk = max(64, 4096 // alphas.shape[0])
    out = np.empty((alphas.shape[0], n))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        try:
            block = _log_integral(alphas, pts[start:stop, 0],
                                  pts[start:stop, 1], cfg)
        except QuadratureError as exc:
            raise QuadratureError(
                str(exc), [start + i for i in exc.point_indices],
                [(start + i, j) for i, j in exc.pairs]) from None
        out[:, start:stop] = block.T
    return np.maximum(out, LOG_FLOOR)


def log_pdf_many(params: BetaParams, points,
                 cfg: QuadratureConfig = DEFAULT_QUAD):
    """Log density of one parameter set at each row of an (N, 2) array."""
    return log_pdf_batch(params.as_array()[None, :], points, cfg)[0]


def log_pdf(params: BetaParams, p: Point2,
            cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Log density at a single point."""
    return float(log_pdf_many(params, [[p.x, p.y]], cfg)[0])


def mean(params: BetaParams):
    """(E[X], E[Y]) from the Dirichlet aggregation identities."""
    s = params.total
    return (params.a1 + params.a2) / s, (params.a1 + params.a3) / s


def covariance_xy(params: BetaParams) -> float:
    """Cov(X, Y) = (a1*a4 - a2*a3) / (s^2 (s + 1))."""
    s = params.total
    return (params.a1 * params.a4 - params.a2 * params.a3) / (s * s * (s + 1.0))


def variances(params: BetaParams):
    """(Var X, Var Y); X ~ Beta(a1+a2, a3+a4) and Y ~ Beta(a1+a3, a2+a4)."""
    s = params.total
    vx = (params.a1 + params.a2) * (params.a3 + params.a4) / (s * s * (s + 1.0))
    vy = (params.a1 + params.a3) * (params.a2 + params.a4) / (s * s * (s + 1.0))
    return vx, vy


def _log_gamma_variates(rng, shape, n):
    """n log-gamma(shape, 1) draws, safe against underflow for small shape.

    For shape < 1 uses the identity G(a) = G(a + 1) * U**(1/a) in log
    space, so draws whose linear value would round to zero keep a finite
    log.
    """
    if shape >= 1.0:
        return np.log(rng.gamma(shape, size=n))
    g = rng.gamma(shape + 1.0, size=n)
    u = rng.random(n)
    with np.errstate(divide="ignore"):
        return np.log(g) + np.log(u) / shape


_EDGE_NUDGE = 1e-12


def sample_many(params: BetaParams, n: int, rng) -> np.ndarray:
    """Draw n points as (u1+u2, u1+u3) from the Dirichlet construction.

    Coordinates that round to 0 or 1 are nudged inward by 1e-12 so the
    output always lies in the open square.  Deterministic for a given
    seeded ``numpy.random.Generator``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lg = np.column_stack([
        _log_gamma_variates(rng, a, n)
        for a in (params.a1, params.a2, params.a3, params.a4)
    ])
    mx = lg.max(axis=1, keepdims=True)
    w = np.exp(lg - mx)
    u = w / w.sum(axis=1, keepdims=True)
    xy = np.column_stack([u[:, 0] + u[:, 1], u[:, 0] + u[:, 2]])
    return np.clip(xy, _EDGE_NUDGE, 1.0 - _EDGE_NUDGE)


def sample_one(params: BetaParams, rng) -> Point2:
    """Draw a single point; see sample_many."""
    xy = sample_many(params, 1, rng)
    return Point2(float(xy[0, 0]), float(xy[0, 1]))
