"""Synthetic benchmark datasets, CSV files, normalization, and 2-D PCA.

The five generators reproduce qualitatively distinct clustering regimes:
concentric circles (hopeless for centroid methods), a wide blob between
two tight ones, strongly negatively and positively correlated elongated
clusters, and plain well-separated blobs.  Every generator ends with the
min-max normalization onto [0.01, 0.99] that the rest of the library
expects.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from betamix.emfit import DataMatrix

NORM_LO = 0.01
NORM_HI = 0.99


@dataclass(frozen=True, eq=False)
class RawMatrix:
    """A rectangular block of real features with optional integer labels."""

    values: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2 or v.shape[1] < 1:
            raise ValueError(f"expected an (N>=2, m>=1) array, got {v.shape}")
        object.__setattr__(self, "values", v)
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (v.shape[0],):
                raise ValueError("labels must align with the rows")
            object.__setattr__(self, "labels", lab.astype(np.int64))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    data: DataMatrix
    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels).astype(np.int64)
        if lab.shape != (self.data.n,):
            raise ValueError("labels must align with the data points")
        object.__setattr__(self, "labels", lab)


def _normalize_array(values):
    mins = values.min(axis=0)
    maxs = values.max(axis=0)
    flat = np.where(maxs <= mins)[0]
    if flat.size:
        raise ValueError(f"column {flat[0]} is constant; cannot normalize")
    return NORM_LO + (values - mins) * (NORM_HI - NORM_LO) / (maxs - mins)


def normalize(raw: RawMatrix) -> RawMatrix:
    """Min-max map of every column onto [0.01, 0.99]."""
    return RawMatrix(_normalize_array(raw.values), raw.labels)


def _split_sizes(n, k):
    base, rem = divmod(n, k)
    return [base + 1 if i < rem else base for i in range(k)]


def _finish(points, sizes):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    return LabeledDataset(DataMatrix(_normalize_array(points)), labels)


def gen_circles(n: int, noise_sd: float = 0.05, seed: int = 0) -> LabeledDataset:
    """Two concentric circles at radii 1.0 and 0.45 plus isotropic noise."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    sizes = _split_sizes(n, 2)
    parts = []
    for size, radius in zip(sizes, (1.0, 0.45)):
        ang = rng.uniform(0.0, 2.0 * np.pi, size)
        parts.append(radius * np.column_stack([np.cos(ang), np.sin(ang)]))
    points = np.vstack(parts) + rng.normal(0.0, noise_sd, (n, 2))
    return _finish(points, sizes)


def gen_varied_blobs(n: int, seed: int = 0) -> LabeledDataset:
    """Two tight blobs flanking a much wider one in the middle."""
    if n < 3:
        raise ValueError("n must be >= 3")
    rng = np.random.default_rng(seed)
    sizes = _split_sizes(n, 3)
    centers = [(-6.0, 0.0), (6.0, 0.0), (0.0, 0.0)]
    sds = (0.8, 0.8, 2.5)
    parts = [
        np.asarray(c) + rng.normal(0.0, sd, (size, 2))
        for size, c, sd in zip(sizes, centers, sds)
    ]
    return _finish(np.vstack(parts), sizes)


def gen_aniso(n: int, correlation_sign: int, seed: int = 0) -> LabeledDataset:
    """Three sheared blobs whose in-cluster correlation has the given sign.

    Isotropic sd-0.5 blobs are placed so that after the shear they form
    parallel elongated clusters offset diagonally, the arrangement where a
    centroid method clips the cluster tails.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    if correlation_sign not in (1, -1):
        raise ValueError("correlation_sign must be +1 or -1")
    s = float(correlation_sign)
    rng = np.random.default_rng(seed)
    sizes = _split_sizes(n, 3)
    centers = [(-0.8, -4.0 * s), (0.0, 0.0), (0.8, 4.0 * s)]
    shear = np.array([[1.0, 0.0], [1.5 * s, 0.5]])
    parts = [
        (np.asarray(c) + rng.normal(0.0, 0.5, (size, 2))) @ shear.T
        for size, c in zip(sizes, centers)
    ]
    return _finish(np.vstack(parts), sizes)


def gen_blobs(n: int, seed: int = 0) -> LabeledDataset:
    """Three tight, widely separated blobs; every method should ace this."""
    if n < 3:
        raise ValueError("n must be >= 3")
    rng = np.random.default_rng(seed)
    sizes = _split_sizes(n, 3)
    centers = [(0.0, 0.0), (10.0, 0.0), (5.0, 9.0)]
    parts = [
        np.asarray(c) + rng.normal(0.0, 0.6, (size, 2))
        for size, c in zip(sizes, centers)
    ]
    return _finish(np.vstack(parts), sizes)


def read_csv(path, labels: bool = False) -> RawMatrix:
    """Read a numeric CSV, auto-detecting a single header line.

    With ``labels=True`` the last column is split off as non-negative
    integer labels.  Ragged rows and non-numeric cells are rejected with
    their line number.
    """
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue
            try:
                parsed = [float(cell) for cell in row]
            except ValueError:
                if lineno == 1:
                    continue          # header line
                bad = next(c for c in row if not _is_number(c))
                raise ValueError(
                    f"{path}: line {lineno}: non-numeric value {bad!r}"
                ) from None
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} columns, "
                    f"got {len(parsed)}")
            rows.append(parsed)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, got {len(rows)}")
    values = np.asarray(rows, dtype=float)
    if not labels:
        return RawMatrix(values)
    if values.shape[1] < 2:
        raise ValueError(f"{path}: a label column needs at least 2 columns")
    lab = values[:, -1]
    if np.any(lab != np.rint(lab)) or np.any(lab < 0):
        raise ValueError(f"{path}: label column must hold non-negative integers")
    return RawMatrix(values[:, :-1], lab.astype(np.int64))


def _is_number(cell):
    try:
        float(cell)
        return True
    except ValueError:
        return False


def write_csv(values, path, labels=None, header=None):
    """Write values (and optional labels) with 17 significant digits, LF ends."""
    v = np.asarray(getattr(values, "points", values), dtype=float)
    if v.ndim != 2:
        raise ValueError("expected a 2-d array")
    if header is None:
        names = (["x", "y"] if v.shape[1] == 2
                 else [f"f{j}" for j in range(v.shape[1])])
        if labels is not None:
            names.append("label")
        header = ",".join(names)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(header + "\n")
        for i, row in enumerate(v):
            cells = [f"{x:.17g}" for x in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")


def _jacobi_eigh(a):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi."""
    a = np.array(a, dtype=float)
    m = a.shape[0]
    v = np.eye(m)
    for _ in range(100):
        off = math.sqrt(float((a ** 2).sum() - (np.diag(a) ** 2).sum()))
        if off <= 1e-14 * max(1.0, float(np.abs(np.diag(a)).max())):
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(m)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a).copy(), v


def pca_2d(raw: RawMatrix) -> RawMatrix:
    """Project onto the two leading principal axes, then normalize.

    Eigenvector signs are fixed so the largest-magnitude entry of each is
    positive.  Fails when the covariance has fewer than two positive
    eigenvalues.
    """
    v = raw.values
    n, m = v.shape
    if m < 2:
        raise ValueError("need at least 2 feature columns")
    if n < 3:
        raise ValueError("need at least 3 rows")
    centered = v - v.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    evals, evecs = _jacobi_eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[1] <= 1e-12 * max(1.0, evals[0]):
        raise ValueError("covariance has fewer than 2 positive eigenvalues")
    basis = evecs[:, :2].copy()
    for j in range(2):
        lead = np.argmax(np.abs(basis[:, j]))
        if basis[lead, j] < 0:
            basis[:, j] = -basis[:, j]
    return RawMatrix(_normalize_array(centered @ basis), raw.labels)
