"""Pointwise mutual information matrices from co-occurrence counts.

PMI(i, j) = log( p(i,j) / (p(i) p(j)) ) over observed pairs; PPMI clamps
at zero and drops the clamped entries from storage.  Each unordered pair
is evaluated once and mirrored, so the matrices are exactly symmetric.
"""

from __future__ import annotations

import numpy as np

from .errors import ConsistencyError
from .sparse import SparseMatrix


class ProbabilityModel:
    """Pair and word probabilities estimated from co-occurrence counts.

    ``estimator="pair_marginal"`` derives word probabilities from the row
    marginals of the pair counts (the default, which makes both p_pair and
    p_word sum to one).  ``estimator="unigram"`` uses raw occurrence counts
    supplied by the caller instead.
    """

    def __init__(self, counts, estimator="pair_marginal", unigram_counts=None):
        if counts.total_pairs <= 0:
            raise ValueError("no co-occurrence pairs counted")
        self.counts = counts
        self.total_pairs = counts.total_pairs
        if estimator == "pair_marginal":
            self.word_probs = counts.row_marginals / float(counts.total_pairs)
        elif estimator == "unigram":
            if unigram_counts is None:
                raise ValueError("unigram estimator needs unigram_counts")
            uni = np.asarray(unigram_counts, dtype=np.float64)
            if uni.shape != (counts.n,):
                raise ValueError("unigram_counts length must equal vocabulary size")
            total = uni.sum()
            if total <= 0:
                raise ValueError("unigram counts sum to zero")
            self.word_probs = uni / total
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
        self.estimator = estimator

    def p_pair(self, i, j):
        return self.counts.count(i, j) / self.total_pairs

    def p_word(self, i):
        return float(self.word_probs[i])


def _upper_triplets(counts):
    items = [(i, j, c) for (i, j), c in counts.pair_counts.items() if i <= j]
    items.sort()
    if not items:
        return (np.empty(0, np.int64),) * 2 + (np.empty(0, np.float64),)
    ii = np.array([t[0] for t in items], dtype=np.int64)
    jj = np.array([t[1] for t in items], dtype=np.int64)
    cc = np.array([t[2] for t in items], dtype=np.float64)
    return ii, jj, cc


def _pmi_values(counts, model):
    ii, jj, cc = _upper_triplets(counts)
    pw = model.word_probs
    touched = np.unique(np.concatenate([ii, jj])) if len(ii) else []
    for idx in touched:
        if pw[idx] <= 0:
            raise ConsistencyError(
                f"word index {idx} appears in a pair but has zero probability"
            )
    # log p(i,j) - log p(i) - log p(j), evaluated once per unordered pair
    vals = np.log(cc / counts.total_pairs) - np.log(pw[ii]) - np.log(pw[jj])
    return ii, jj, vals


def _symmetric_csr(n, ii, jj, vals):
    off = ii != jj
    rows = np.concatenate([ii, jj[off]])
    cols = np.concatenate([jj, ii[off]])
    data = np.concatenate([vals, vals[off]])
    return SparseMatrix.from_coo(n, n, rows, cols, data)


def compute_pmi(counts, model=None):
    """Sparse PMI over observed pairs (unobserved pairs are absent)."""
    if model is None:
        model = ProbabilityModel(counts)
    ii, jj, vals = _pmi_values(counts, model)
    return _symmetric_csr(counts.n, ii, jj, vals)


def compute_ppmi(counts, model=None):
    """Sparse positive PMI: max(PMI, 0) with zeros dropped from storage."""
    if model is None:
        model = ProbabilityModel(counts)
    ii, jj, vals = _pmi_values(counts, model)
    keep = vals > 0
    return _symmetric_csr(counts.n, ii[keep], jj[keep], vals[keep])
