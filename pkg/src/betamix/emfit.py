"""Bivariate beta mixture model: EM fitting, prediction, sampling, storage.

A model is a weight vector plus one set of four shape parameters per
cluster.  Fitting alternates a log-space E-step with an M-step that
updates the weights in closed form and improves each cluster's shape
parameters with the bound-constrained optimizer, so the data
log-likelihood never decreases (up to the inexactness of the numerical
M-step).  Initialization comes from k-means: each cluster starts at the
zero-covariance member of the beta family whose mean matches the cluster
mean.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from betamix import bbeta, optim
from betamix.baselines import kmeans_fit, kmeans_predict
from betamix.bbeta import (
    ALPHA_MAX,
    ALPHA_MIN,
    DEFAULT_QUAD,
    BetaParams,
    QuadratureConfig,
    QuadratureError,
)

log = logging.getLogger(__name__)

MODEL_FORMAT = "fbbmm-model/1"

# Rows whose best log term falls below this are treated as fully
# underflowed and get uniform responsibilities.
_DEGENERATE_LOG = -700.0

_MOMENT_SEED_TOTAL = 4.0


class ModelDocumentError(ValueError):
    """A model document failed validation; the message names the field."""


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """Mixing weights plus per-cluster shape parameters."""

    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        comps = tuple(self.components)
        if w.ndim != 1 or w.size != len(comps) or w.size < 1:
            raise ValueError("weights and components must align, C >= 1")
        if np.any(w < 0.0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        for c, comp in enumerate(comps):
            if not isinstance(comp, BetaParams):
                raise ValueError(f"component {c} is not a BetaParams")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def n_clusters(self):
        return len(self.components)

    def alpha_matrix(self):
        return np.array([c.as_array() for c in self.components])


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """N two-dimensional points strictly inside the unit square."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError(f"expected an (N, 2) array, got {pts.shape}")
        if np.any(pts <= 0.0) or np.any(pts >= 1.0):
            raise ValueError("points must lie strictly inside the unit square")
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class Responsibilities:
    """Posterior membership probabilities, one row per point."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
            raise ValueError(f"expected an (N, C) array, got {g.shape}")
        if np.any(g < 0.0) or np.any(g > 1.0):
            raise ValueError("entries must lie in [0, 1]")
        if np.max(np.abs(g.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("rows must sum to 1")
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class FitConfig:
    epochs: int = 200
    conv_tol: float = 1e-4
    seed: int = 0
    restarts: int = 3

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.conv_tol <= 0:
            raise ValueError("conv_tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class FitTrace:
    log_likelihood_per_epoch: list
    epochs_run: int
    converged: bool


def _log_densities(model, data, cfg):
    """(N, C) matrix of per-component log densities."""
    try:
        return bbeta.log_pdf_batch(model.alpha_matrix(), data.points, cfg).T
    except QuadratureError as exc:
        pairs = ", ".join(f"(n={i}, c={j})" for i, j in exc.pairs[:8])
        raise QuadratureError(
            f"component density failed to converge at {pairs}: {exc}",
            exc.point_indices, exc.pairs) from None


def _weighted_log_matrix(model, data, cfg):
    dens = _log_densities(model, data, cfg)
    with np.errstate(divide="ignore"):
        return dens + np.log(model.weights)[None, :]


def _row_lse(a):
    mx = a.max(axis=1, keepdims=True)
    mxf = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        return mxf + np.log(np.exp(a - mxf).sum(axis=1, keepdims=True))


def _posteriors(a):
    """Responsibilities from the weighted log matrix, with underflow rescue."""
    lse = _row_lse(a)
    gamma = np.exp(a - lse)
    dead = a.max(axis=1) < _DEGENERATE_LOG
    if dead.any():
        idx = np.where(dead)[0]
        warnings.warn(
            f"likelihood underflow at point rows {idx.tolist()[:16]}; "
            f"assigning uniform responsibilities")
        gamma[dead] = 1.0 / a.shape[1]
    return gamma, lse


def log_likelihood(model: MixtureModel, data: DataMatrix,
                   cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Total log-likelihood of the data under the mixture."""
    a = _weighted_log_matrix(model, data, cfg)
    return float(_row_lse(a).sum())


def e_step(model: MixtureModel, data: DataMatrix,
           cfg: QuadratureConfig = DEFAULT_QUAD) -> Responsibilities:
    """Posterior membership probabilities for every point."""
    a = _weighted_log_matrix(model, data, cfg)
    gamma, _ = _posteriors(a)
    return Responsibilities(gamma)


def m_step_weights(resp: Responsibilities) -> np.ndarray:
    """Closed-form weight update: column means of the responsibilities."""
    w = resp.gamma.mean(axis=0)
    return w / w.sum()


def moment_seed(mx: float, my: float,
                total: float = _MOMENT_SEED_TOTAL) -> BetaParams:
    """Zero-covariance shape parameters whose mean is (mx, my)."""
    raw = total * np.array([
        mx * my, mx * (1.0 - my), (1.0 - mx) * my, (1.0 - mx) * (1.0 - my)
    ])
    a = np.clip(raw, ALPHA_MIN, ALPHA_MAX)
    return BetaParams(*a)


def m_step_components(model: MixtureModel, data: DataMatrix,
                      resp: Responsibilities, *,
                      cfg: QuadratureConfig = DEFAULT_QUAD,
                      max_opt_iters: int = 100,
                      opt_tol: float = 1e-6) -> MixtureModel:
    """Improve each cluster's shape parameters on its weighted likelihood.

    A cluster whose effective sample weight drops below 1e-6 * N is
    re-seeded at the point the current mixture explains worst instead of
    being optimized, and the weights are redistributed to give it one
    point's worth of mass.
    """
    x = data.points
    gam = resp.gamma
    n, n_clusters = gam.shape
    bounds = optim.Bounds4()
    comps = list(model.components)
    weights = model.weights.copy()
    mix_lp = None
    for c in range(n_clusters):
        col = gam[:, c]
        if col.sum() < 1e-6 * n:
            if mix_lp is None:
                mix_lp = _row_lse(_weighted_log_matrix(model, data, cfg))[:, 0]
            worst = int(np.argmin(mix_lp))
            comps[c] = moment_seed(x[worst, 0], x[worst, 1])
            old = weights[c]
            weights[c] = 1.0 / n
            others = weights.sum() - weights[c]
            scale = (1.0 - weights[c]) / others if others > 0 else 0.0
            for j in range(n_clusters):
                if j != c:
                    weights[j] = weights[j] * scale
            weights = weights / weights.sum()
            log.info("re-seeded empty cluster %d (weight was %.3g) at point %d",
                     c, old, worst)
            continue

        def objective(v, _col=col):
            # a diverging density (quadrature failure) is an invalid step,
            # not an error: report -inf so the optimizer rejects it
            try:
                return float(_col @ bbeta.log_pdf_batch(v[None, :], x, cfg)[0])
            except QuadratureError:
                return -np.inf

        def batch_objective(vs, _col=col):
            try:
                return bbeta.log_pdf_batch(vs, x, cfg) @ _col
            except QuadratureError:
                out = np.empty(len(vs))
                for i, row in enumerate(vs):
                    try:
                        out[i] = float(
                            _col @ bbeta.log_pdf_batch(row[None, :], x, cfg)[0])
                    except QuadratureError:
                        out[i] = -np.inf
                return out

        report = optim.maximize(objective, comps[c].as_array(), bounds,
                                max_iters=max_opt_iters, tol=opt_tol,
                                batch_objective=batch_objective)
        comps[c] = BetaParams(*report.argmax)
    return MixtureModel(weights, tuple(comps))


def _initial_model(data, n_clusters, seed):
    km = kmeans_fit(data.points, n_clusters, seed)
    labels = kmeans_predict(km, data.points)
    counts = np.bincount(labels, minlength=n_clusters).astype(float)
    weights = np.maximum(counts, 1.0)
    weights = weights / weights.sum()
    comps = []
    for c in range(n_clusters):
        mask = labels == c
        if mask.any():
            mx, my = data.points[mask].mean(axis=0)
        else:
            mx, my = km.centroids[c]
        comps.append(moment_seed(float(mx), float(my)))
    return MixtureModel(weights, tuple(comps))


def _em_run(data, model, cfg, quad, max_opt_iters, opt_tol):
    lls = []
    old = -np.inf
    converged = False
    for epoch in range(cfg.epochs):
        a = _weighted_log_matrix(model, data, quad)
        ll = float(_row_lse(a).sum())
        lls.append(ll)
        log.debug("epoch %d log-likelihood %.6f", epoch, ll)
        if abs(ll - old) < cfg.conv_tol:
            converged = True
            break
        old = ll
        gamma, _ = _posteriors(a)
        resp = Responsibilities(gamma)
        model = MixtureModel(m_step_weights(resp), model.components)
        model = m_step_components(model, data, resp, cfg=quad,
                                  max_opt_iters=max_opt_iters, opt_tol=opt_tol)
    return model, FitTrace(lls, len(lls), converged)


def fit(data: DataMatrix, n_clusters: int, cfg: FitConfig = FitConfig(), *,
        quad: QuadratureConfig = DEFAULT_QUAD, max_opt_iters: int = 100,
        opt_tol: float = 1e-6):
    """Fit the mixture by EM, keeping the best of ``cfg.restarts`` runs.

    Returns (model, responsibilities, trace).  Each restart draws its own
    k-means initialization from a seed sequence spawned off ``cfg.seed``;
    restarts that land on an identical initialization reuse the earlier
    run's result, so the outcome matches running them all.
    """
    if n_clusters < 1:
        raise ValueError("n_clusters must be >= 1")
    if data.n < n_clusters:
        raise ValueError(
            f"need at least {n_clusters} points, got {data.n}")
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    best = None
    cache = {}
    for r, child in enumerate(children):
        seed = int(child.generate_state(1)[0])
        model0 = _initial_model(data, n_clusters, seed)
        key = (model0.weights.tobytes(), model0.components)
        if key in cache:
            model, trace = cache[key]
            log.info("restart %d: duplicate initialization, reusing result", r)
        else:
            model, trace = _em_run(data, model0, cfg, quad,
                                   max_opt_iters, opt_tol)
            cache[key] = (model, trace)
            log.info("restart %d: %d epochs, log-likelihood %.6f", r,
                     trace.epochs_run, trace.log_likelihood_per_epoch[-1])
        if best is None or (trace.log_likelihood_per_epoch[-1]
                            > best[1].log_likelihood_per_epoch[-1]):
            best = (model, trace)
    model, trace = best
    resp = e_step(model, data, quad)
    return model, resp, trace


def predict(model: MixtureModel, data: DataMatrix,
            cfg: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """Hard labels: row argmax of the responsibilities, lowest index wins."""
    return np.argmax(e_step(model, data, cfg).gamma, axis=1)


def sample(model: MixtureModel, n: int, rng):
    """Draw n points from the generative process.

    Each point first draws its source cluster from the weights, then a
    point from that cluster's distribution; component draws are batched
    per cluster.  Returns (DataMatrix, source labels).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    z = rng.choice(model.n_clusters, size=n, p=model.weights)
    pts = np.empty((n, 2))
    for c in range(model.n_clusters):
        idx = np.where(z == c)[0]
        if idx.size:
            pts[idx] = bbeta.sample_many(model.components[c], idx.size, rng)
    return DataMatrix(pts), z


def save(model: MixtureModel) -> str:
    """Serialize a model to its versioned text document."""
    doc = {
        "format": MODEL_FORMAT,
        "clusters": model.n_clusters,
        "weights": [float(w) for w in model.weights],
        "components": [[comp.a1, comp.a2, comp.a3, comp.a4]
                       for comp in model.components],
    }
    return json.dumps(doc, indent=2) + "\n"


def _require(cond, message):
    if not cond:
        raise ModelDocumentError(message)


def load(document: str) -> MixtureModel:
    """Parse and validate a model document produced by ``save``."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ModelDocumentError(f"document is not valid JSON: {exc}") from None
    _require(isinstance(doc, dict), "document: expected a JSON object")
    _require(doc.get("format") == MODEL_FORMAT,
             f"format: expected {MODEL_FORMAT!r}, got {doc.get('format')!r}")
    c = doc.get("clusters")
    _require(isinstance(c, int) and c >= 1, f"clusters: expected int >= 1, got {c!r}")
    w = doc.get("weights")
    _require(isinstance(w, list) and len(w) == c,
             f"weights: expected a list of {c} numbers")
    for i, v in enumerate(w):
        _require(isinstance(v, (int, float)) and math.isfinite(v) and v >= 0,
                 f"weights[{i}]: expected a finite non-negative number, got {v!r}")
    total = math.fsum(w)
    _require(abs(total - 1.0) <= 1e-12, f"weights: sum {total!r} != 1")
    comps = doc.get("components")
    _require(isinstance(comps, list) and len(comps) == c,
             f"components: expected a list of {c} parameter quadruples")
    parsed = []
    for i, quad in enumerate(comps):
        _require(isinstance(quad, list) and len(quad) == 4,
                 f"components[{i}]: expected 4 values")
        for j, v in enumerate(quad):
            _require(isinstance(v, (int, float)) and math.isfinite(v),
                     f"components[{i}].a{j + 1}: expected a finite number, got {v!r}")
            _require(ALPHA_MIN <= v <= ALPHA_MAX,
                     f"components[{i}].a{j + 1}: {v!r} outside "
                     f"[ALPHA_MIN={ALPHA_MIN}, ALPHA_MAX={ALPHA_MAX}]")
        parsed.append(BetaParams(*[float(v) for v in quad]))
    return MixtureModel(np.array([float(v) for v in w]), tuple(parsed))
