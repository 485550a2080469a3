"""Partition-agreement metrics for clustering evaluation.

All three scores reduce two label vectors to a contingency table first.
Clustering accuracy is the best label-matching rate over all relabelings
of the prediction, found as a maximum-weight assignment; ARI is the
chance-corrected pair-counting score; AMI is mutual information corrected
by its exact expectation under the fixed-margins permutation model.
Logarithms are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import gammaln


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    counts: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    n: int


def _as_labels(values, name):
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name}: expected a non-empty 1-d label vector")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.all(arr == rounded):
            raise ValueError(f"{name}: labels must be integers")
        arr = rounded.astype(np.int64)
    return arr


def contingency(y, yhat) -> ContingencyTable:
    """Cross-tabulate true against predicted labels.

    Label values are canonicalized to contiguous codes, so any integer
    alphabet works.
    """
    y = _as_labels(y, "y")
    yhat = _as_labels(yhat, "yhat")
    if y.size != yhat.size:
        raise ValueError(f"length mismatch: {y.size} vs {yhat.size}")
    _, yi = np.unique(y, return_inverse=True)
    _, pj = np.unique(yhat, return_inverse=True)
    counts = np.zeros((yi.max() + 1, pj.max() + 1), dtype=np.int64)
    np.add.at(counts, (yi, pj), 1)
    return ContingencyTable(counts, counts.sum(axis=1), counts.sum(axis=0),
                            int(y.size))


def clustering_accuracy(y, yhat) -> float:
    """Best agreement rate over all relabelings of the prediction.

    The contingency table is zero-padded to a square so surplus clusters
    on either side simply match nothing, then solved as a maximum-weight
    assignment.
    """
    table = contingency(y, yhat)
    kt, kp = table.counts.shape
    k = max(kt, kp)
    padded = np.zeros((k, k), dtype=np.int64)
    padded[:kt, :kp] = table.counts
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum()) / table.n


def _comb2(v: int) -> int:
    return v * (v - 1) // 2


def adjusted_rand_index(y, yhat) -> float:
    """Chance-corrected pair-counting agreement; 1.0 for identical partitions.

    Pair counts are accumulated in exact integer arithmetic before the
    final division.  When both partitions are trivial (MaxIndex equals
    ExpectedIndex) the score is defined as 1.0.
    """
    table = contingency(y, yhat)
    if table.n < 2:
        raise ValueError("need at least two points")
    index = sum(_comb2(int(v)) for v in table.counts.flat)
    sum_a = sum(_comb2(int(v)) for v in table.row_sums)
    sum_b = sum(_comb2(int(v)) for v in table.col_sums)
    pairs = _comb2(table.n)
    expected = sum_a * sum_b / pairs
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


def _entropy(sums, n):
    p = sums[sums > 0] / n
    return float(-(p * np.log(p)).sum())


def _mutual_information(table: ContingencyTable) -> float:
    n = table.n
    mi = 0.0
    for i, ai in enumerate(table.row_sums):
        for j, bj in enumerate(table.col_sums):
            nij = int(table.counts[i, j])
            if nij > 0:
                mi += (nij / n) * (math.log(n * nij) - math.log(int(ai) * int(bj)))
    return mi


def _expected_mi(table: ContingencyTable) -> float:
    """Exact E[MI] under the fixed-margins permutation model.

    The inner sums run over every feasible cell count and accumulate the
    hypergeometric log-probabilities through log-factorials, which stays
    stable up to n around 1e5.
    """
    n = table.n
    lg_n = gammaln(n + 1)
    total = 0.0
    for ai in (int(v) for v in table.row_sums):
        for bj in (int(v) for v in table.col_sums):
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1)
            log_p = (
                gammaln(ai + 1) + gammaln(bj + 1)
                + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                - lg_n - gammaln(nij + 1)
                - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                - gammaln(n - ai - bj + nij + 1)
            )
            term = (nij / n) * (np.log(n * nij) - math.log(ai * bj))
            total += float((term * np.exp(log_p)).sum())
    return total


def adjusted_mutual_information(y, yhat) -> float:
    """Mutual information corrected by its expectation, at most 1.0.

    Normalized by the arithmetic mean of the two label entropies.  A zero
    denominator with MI equal to E[MI] means two trivial identical
    partitions and scores 1.0.
    """
    table = contingency(y, yhat)
    mi = _mutual_information(table)
    emi = _expected_mi(table)
    h_mean = 0.5 * (_entropy(table.row_sums, table.n)
                    + _entropy(table.col_sums, table.n))
    num = mi - emi
    den = h_mean - emi
    if abs(den) < 1e-15:
        return 1.0 if abs(num) < 1e-15 else num / math.copysign(1e-15, den)
    return num / den
