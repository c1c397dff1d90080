"""Word vectors extracted from factorization results.

Extraction rules: SVD embeddings are the rows of U sqrt(S); QR offers two
variants, the rows of Q or the columns of R P^T restricted to the first d
rows; NMF embeddings are the rows of W.  No row normalization is applied
here; similarity scoring decides its own geometry.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .corpus import Vocabulary
from .errors import ParseError

METHODS = ("svd", "qr_q", "qr_r", "nmf")


@dataclass
class EmbeddingMatrix:
    vocab: Vocabulary
    vectors: np.ndarray
    method: str
    d: int

    def __post_init__(self):
        if self.vectors.shape != (len(self.vocab), self.d):
            raise ValueError(
                f"vectors shape {self.vectors.shape} does not match "
                f"(vocab={len(self.vocab)}, d={self.d})"
            )
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("embedding vectors must be finite")
        if self.method == "nmf" and self.vectors.min(initial=0.0) < 0:
            raise ValueError("nmf embeddings must be non-negative")

    def __len__(self):
        return len(self.vocab)

    def __contains__(self, word):
        return word in self.vocab

    def vector(self, word):
        return self.vectors[self.vocab.index(word)]

    def sparsity(self, tol=1e-12):
        """Fraction of entries with magnitude below tol."""
        return float(np.mean(np.abs(self.vectors) < tol))


def svd_embeddings(factors, vocab):
    """Rows of U diag(sqrt(S))."""
    vectors = factors.U * np.sqrt(factors.S)
    return EmbeddingMatrix(vocab=vocab, vectors=vectors, method="svd", d=factors.d)


def qr_q_embeddings(factors, vocab):
    """Rows of the orthonormal Q block."""
    return EmbeddingMatrix(
        vocab=vocab, vectors=factors.Q.copy(), method="qr_q", d=factors.d
    )


def qr_r_embeddings(factors, vocab):
    """Columns of [R P^T] restricted to its first d rows.

    Unpermuting R's columns restores the original word order, so row j of
    the result is the vector for word j.
    """
    inv = np.argsort(factors.P)
    vectors = factors.R[:, inv].T.copy()
    return EmbeddingMatrix(vocab=vocab, vectors=vectors, method="qr_r", d=factors.d)


def nmf_embeddings(factors, vocab):
    """Rows of W; non-negative by construction."""
    return EmbeddingMatrix(
        vocab=vocab, vectors=factors.W.copy(), method="nmf", d=factors.d
    )


def _sidecar_path(path):
    return f"{path}.meta.json"


def save_embeddings(emb, path, *, corpus_split=None, seed=None):
    """Write word2vec-style text ('n d' header, then 'word v1 .. vd')
    plus a JSON metadata sidecar."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(emb.vocab)} {emb.d}\n")
        for i, w in enumerate(emb.vocab.words):
            row = " ".join(f"{v:.9g}" for v in emb.vectors[i])
            fh.write(f"{w} {row}\n")
    meta = {
        "method": emb.method,
        "d": emb.d,
        "corpus_split": corpus_split,
        "seed": seed,
    }
    with open(_sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_embeddings(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise ParseError(path, 1, "expected header 'n d'")
        try:
            n, d = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(path, 1, f"bad header {header!r}")
        if n < 1 or d < 1:
            raise ParseError(path, 1, f"n and d must be positive, got {n} {d}")
        words = []
        vectors = np.empty((n, d))
        k = 0
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            if k >= n:
                raise ParseError(path, lineno, f"more rows than declared n={n}")
            parts = line.split()
            if len(parts) != d + 1:
                raise ParseError(
                    path, lineno, f"expected word + {d} values, got {len(parts)} fields"
                )
            words.append(parts[0])
            try:
                vectors[k] = [float(v) for v in parts[1:]]
            except ValueError:
                raise ParseError(path, lineno, "non-numeric vector component")
            k += 1
    if k != n:
        raise ParseError(path, 1, f"header declares n={n}, found {k} rows")
    method = "unknown"
    sidecar = _sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar, encoding="utf-8") as fh:
            meta = json.load(fh)
        method = meta.get("method", "unknown")
        if meta.get("d") != d:
            raise ParseError(sidecar, 0, f"sidecar d={meta.get('d')} but file has d={d}")
    vocab = Vocabulary(words, {w: 1 for w in words}, min_count=1)
    return EmbeddingMatrix(vocab=vocab, vectors=vectors, method=method, d=d)
