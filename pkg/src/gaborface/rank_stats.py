"""Spearman rank correlation with t-approximation or permutation p-values."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import AlignmentError, ParameterError, UndefinedCorrelationError

DEFAULT_PERMUTATION_SEED = 20230


@dataclass(frozen=True)
class PairedSeries:
    """Two paired value series over the canonical unordered item pairs."""

    x: np.ndarray
    y: np.ndarray
    pair_labels: tuple

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.x, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float))
        if x.size != y.size:
            raise ParameterError(f"series lengths differ: {x.size} vs {y.size}")
        if x.size < 3:
            raise ParameterError(f"need at least 3 pairs, got {x.size}")
        if len(self.pair_labels) != x.size:
            raise ParameterError("pair_labels length must match series length")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "pair_labels", tuple(self.pair_labels))


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    n: int
    p_two_sided: float
    method: str  # "t_approximation" or "permutation"

    def to_json(self, **extra):
        doc = dict(extra)
        doc.update(
            rho=self.rho, n_pairs=self.n, p_two_sided=self.p_two_sided,
            method=self.method,
        )
        return json.dumps(doc, indent=2, sort_keys=True)


def average_ranks(values):
    """Midranks 1..n; tied values share the mean of the ranks they span."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ParameterError("cannot rank an empty array")
    if not np.all(np.isfinite(values)):
        raise ParameterError("cannot rank non-finite values")
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _rho_from_ranks(rx, ry):
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    if denom == 0.0:
        raise UndefinedCorrelationError("constant series has no rank correlation")
    return float(np.dot(rx, ry) / denom)


def spearman_rho(series):
    """Pearson correlation of the midranks of the two series."""
    return _rho_from_ranks(average_ranks(series.x), average_ranks(series.y))


def significance(rho, n, permutations=None, series=None,
                 seed=DEFAULT_PERMUTATION_SEED):
    """Two-sided p-value for an observed rank correlation.

    Default: t-approximation, t = rho*sqrt((n-2)/(1-rho^2)) with n-2
    degrees of freedom.  With `permutations` set, a seeded Monte-Carlo
    permutation test on the series ranks is used instead (requires
    `series`).
    """
    if n < 4:
        raise ParameterError(f"need n >= 4 for a significance test, got {n}")
    if permutations is None:
        if abs(rho) >= 1.0:
            warnings.warn("exact-extreme correlation; t-approximation p = 0")
            return 0.0
        t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
        return float(2.0 * stats.t.sf(abs(t), n - 2))
    if series is None:
        raise ParameterError("permutation test needs the paired series")
    rx = average_ranks(series.x)
    ry = average_ranks(series.y)
    rng = np.random.default_rng(seed)
    hits = 0
    threshold = abs(rho) - 1e-12
    for _ in range(int(permutations)):
        if abs(_rho_from_ranks(rx, rng.permutation(ry))) >= threshold:
            hits += 1
    return (hits + 1) / (int(permutations) + 1)


def canonical_pairs(item_ids):
    """Unordered id pairs in canonical (lexicographic) order."""
    ordered = sorted(item_ids)
    return [(a, b) for i, a in enumerate(ordered) for b in ordered[i + 1:]]


def matrix_series(matrix):
    """Off-diagonal values of a PairMatrix in canonical pair order."""
    index = {item_id: i for i, item_id in enumerate(matrix.item_ids)}
    pairs = canonical_pairs(matrix.item_ids)
    return np.array([matrix.values[index[a], index[b]] for a, b in pairs]), pairs


def correlate_model_with_ratings(model, semantic, permutations=None,
                                 seed=DEFAULT_PERMUTATION_SEED):
    """Spearman correlation between a model matrix and semantic dissimilarity.

    Similarity-kind model values are negated first so that agreement with
    the human data reads as positive rho.
    """
    if set(model.item_ids) != set(semantic.item_ids):
        missing = set(model.item_ids) ^ set(semantic.item_ids)
        raise AlignmentError(
            f"item sets differ; unmatched ids: {sorted(missing)}"
        )
    x, pairs = matrix_series(model)
    y, _ = matrix_series(semantic)
    if model.kind == "similarity":
        x = -x
    series = PairedSeries(x, y, tuple(pairs))
    rho = spearman_rho(series)
    if permutations is None:
        p = significance(rho, series.x.size)
        method = "t_approximation"
    else:
        p = significance(rho, series.x.size, permutations=permutations,
                         series=series, seed=seed)
        method = "permutation"
    return CorrelationResult(rho, series.x.size, p, method)
