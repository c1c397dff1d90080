"""Similarity and analogy benchmarks, plus non-negativity diagnostics.

Similarity: Spearman correlation between cosine similarities and human
scores.  Analogy: for a question "a is to b as c is to d", guess the
vocabulary word minimizing ||(b - a + c) - w|| with a, b, c excluded;
questions containing out-of-vocabulary words are filtered and counted.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientDataError,
    OutOfVocabularyError,
    ParseError,
    UndefinedCorrelationError,
)


@dataclass
class SimilarityDataset:
    pairs: list  # (word1, word2, human_score)

    @classmethod
    def load(cls, path, lowercase=True):
        """Read delimited 'word1,word2,score' rows; a non-numeric third
        field on the first line is treated as a header."""
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = [p.strip() for p in (line.split(",") if "," in line else line.split())]
                if len(parts) < 3:
                    raise ParseError(path, lineno, "expected 'word1,word2,score'")
                try:
                    score = float(parts[2])
                except ValueError:
                    if lineno == 1:
                        continue  # header row
                    raise ParseError(path, lineno, f"bad score {parts[2]!r}")
                if not math.isfinite(score):
                    raise ParseError(path, lineno, "score must be finite")
                w1, w2 = parts[0], parts[1]
                if lowercase:
                    w1, w2 = w1.lower(), w2.lower()
                pairs.append((w1, w2, score))
        return cls(pairs=pairs)

    def __len__(self):
        return len(self.pairs)


@dataclass
class AnalogyDataset:
    questions: list       # (a, b, c, d)
    sections: list        # section label per question ("" when unlabeled)

    @classmethod
    def load(cls, path, lowercase=True):
        """Read 'a b c d' lines; lines beginning with ':' start a section."""
        questions, sections = [], []
        current = ""
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith(":"):
                    current = line[1:].strip()
                    continue
                parts = line.split()
                if len(parts) != 4:
                    raise ParseError(path, lineno, "expected four words per question")
                if any(not p for p in parts):
                    raise ParseError(path, lineno, "empty word in question")
                if lowercase:
                    parts = [p.lower() for p in parts]
                questions.append(tuple(parts))
                sections.append(current)
        return cls(questions=questions, sections=sections)

    def __len__(self):
        return len(self.questions)


@dataclass
class EvalResult:
    task: str
    score: float
    n_used: int
    n_skipped_oov: int
    sections: dict | None = None


@dataclass
class NegativityReport:
    fraction: float
    n_usable: int
    n_negative: int
    n_skipped_oov: int


def _average_ranks(values):
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average of ranks i+1..j+1
        i = j + 1
    return ranks


def spearman(x, y):
    """Spearman rank correlation: Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d sequences of equal length")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        raise UndefinedCorrelationError("an input has zero rank variance")
    return float(dx @ dy) / math.sqrt(vx * vy)


def _cosine(u, v):
    nu = float(u @ u)
    nv = float(v @ v)
    if nu == 0.0 or nv == 0.0:
        return 0.0  # zero vector: define cosine as 0
    return float(u @ v) / math.sqrt(nu * nv)


def eval_similarity(emb, dataset):
    """Spearman correlation of cosine similarity against human scores;
    pairs with out-of-vocabulary words are skipped and counted."""
    cosines, human = [], []
    skipped = 0
    for w1, w2, score in dataset.pairs:
        if w1 not in emb.vocab or w2 not in emb.vocab:
            skipped += 1
            continue
        cosines.append(_cosine(emb.vector(w1), emb.vector(w2)))
        human.append(score)
    if len(cosines) < 2:
        raise InsufficientDataError(
            f"only {len(cosines)} of {len(dataset)} pairs are in vocabulary"
        )
    rho = spearman(cosines, human)
    return EvalResult(
        task="similarity", score=rho, n_used=len(cosines), n_skipped_oov=skipped
    )


def solve_analogy(emb, a, b, c, metric="euclidean"):
    """Word minimizing the distance to b - a + c, excluding a, b, c.

    Tie-break is by lowest word index.  ``metric="cosine"`` ranks by
    cosine similarity to the target instead of Euclidean distance.
    """
    missing = [w for w in (a, b, c) if w not in emb.vocab]
    if missing:
        raise OutOfVocabularyError(missing)
    ia, ib, ic = (emb.vocab.index(w) for w in (a, b, c))
    target = emb.vectors[ib] - emb.vectors[ia] + emb.vectors[ic]
    if metric == "euclidean":
        diff = emb.vectors - target
        score = np.sum(diff * diff, axis=1)
    elif metric == "cosine":
        norms = np.sqrt(np.sum(emb.vectors ** 2, axis=1))
        tn = float(np.linalg.norm(target))
        with np.errstate(divide="ignore", invalid="ignore"):
            cos = np.where(
                (norms > 0) & (tn > 0), emb.vectors @ target / (norms * tn), 0.0
            )
        score = -cos
    else:
        raise ValueError(f"unknown metric {metric!r}")
    score[[ia, ib, ic]] = np.inf
    return emb.vocab.words[int(np.argmin(score))]


def eval_analogy(emb, dataset, metric="euclidean"):
    """Accuracy over questions whose four words are all in vocabulary,
    with per-section tallies."""
    used = 0
    correct = 0
    skipped = 0
    per_section = {}
    for (a, b, c, d), section in zip(dataset.questions, dataset.sections):
        if any(w not in emb.vocab for w in (a, b, c, d)):
            skipped += 1
            continue
        used += 1
        hit = solve_analogy(emb, a, b, c, metric=metric) == d
        correct += hit
        sec = per_section.setdefault(section, [0, 0])
        sec[0] += hit
        sec[1] += 1
    if used == 0:
        raise InsufficientDataError("no fully in-vocabulary analogy question")
    sections = {
        name: {"accuracy": hits / total, "n_used": total}
        for name, (hits, total) in sorted(per_section.items())
    }
    return EvalResult(
        task="analogy",
        score=correct / used,
        n_used=used,
        n_skipped_oov=skipped,
        sections=sections,
    )


def negativity_check(emb, dataset, threshold=-1e-12):
    """Fraction of usable (a, b, c) triplets whose b - a + c has at least
    one strictly negative component."""
    if emb.vectors.min(initial=0.0) < 0:
        warnings.warn(
            "negativity_check is intended for non-negative embeddings",
            stacklevel=2,
        )
    usable = 0
    negative = 0
    skipped = 0
    for a, b, c, _ in dataset.questions:
        if any(w not in emb.vocab for w in (a, b, c)):
            skipped += 1
            continue
        usable += 1
        t = emb.vector(b) - emb.vector(a) + emb.vector(c)
        if float(t.min()) < threshold:
            negative += 1
    fraction = negative / usable if usable else 0.0
    return NegativityReport(
        fraction=fraction,
        n_usable=usable,
        n_negative=negative,
        n_skipped_oov=skipped,
    )


def gaussian_nonneg_prob(mean, variance, d):
    """Probability that a N(mean * 1, variance * I) vector in R^d is
    entry-wise non-negative: Phi(mean / sigma) ** d."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    upper_tail = 0.5 * math.erfc(mean / math.sqrt(2.0 * variance))
    if upper_tail >= 1.0:
        return 0.0
    return math.exp(d * math.log1p(-upper_tail))
