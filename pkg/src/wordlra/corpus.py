"""Corpus ingestion: tokenization, vocabulary, splits, co-occurrence counts.

Token sequences are flat lists of strings in which :data:`SENTENCE_BREAK`
marks sentence ends.  Context windows never cross a marker, so counting a
corpus equals summing the counts of sentence-aligned chunks.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import CorpusError, EmptyVocabularyError, ParseError

# Sentence-boundary marker. Real tokens are alphanumeric runs, so the
# marker can never collide with one.
SENTENCE_BREAK = "</s>"

_TOKEN_RE = re.compile(r"[0-9A-Za-z]+")
_SENT_END_RE = re.compile(r"[.!?]+(?=\s|\Z)")
_MARKUP_RE = re.compile(r"<[^>]*>")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+")


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    strip_non_textual: bool = True
    min_token_length: int = 1

    def __post_init__(self):
        if self.min_token_length < 1:
            raise ValueError("min_token_length must be >= 1")


def tokenize(raw_text, config=TokenizerConfig()):
    """Turn raw text (str or bytes) into a token sequence.

    Tokens are maximal alphanumeric runs; sentences end at ``.!?`` followed
    by whitespace and are terminated by :data:`SENTENCE_BREAK` in the output.
    Invalid byte sequences are replaced, never fatal.
    """
    if isinstance(raw_text, (bytes, bytearray)):
        text = bytes(raw_text).decode("utf-8", errors="replace")
    else:
        text = raw_text
    if config.strip_non_textual:
        text = _MARKUP_RE.sub(" ", text)
        text = _URL_RE.sub(" ", text)
    if config.lowercase:
        text = text.lower()
    tokens = []
    for sentence in _SENT_END_RE.split(text):
        words = [
            t for t in _TOKEN_RE.findall(sentence)
            if len(t) >= config.min_token_length
        ]
        if words:
            tokens.extend(words)
            tokens.append(SENTENCE_BREAK)
    return tokens


def tokenize_file(path, config=TokenizerConfig()):
    """Tokenize a plain-text corpus file. I/O failures name the path."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise CorpusError(path, exc) from exc
    return tokenize(data, config)


def sentences(tokens):
    """Split a token sequence into per-sentence word lists (markers removed)."""
    out, cur = [], []
    for t in tokens:
        if t == SENTENCE_BREAK:
            if cur:
                out.append(cur)
                cur = []
        else:
            cur.append(t)
    if cur:
        out.append(cur)
    return out


def word_count(tokens):
    """Number of real (non-marker) tokens."""
    return sum(1 for t in tokens if t != SENTENCE_BREAK)


class Vocabulary:
    """Word/index bijection with occurrence counts.

    Indices are contiguous ``0..n-1`` in order of descending frequency,
    ties broken lexicographically.
    """

    def __init__(self, words, counts, min_count):
        self.words = tuple(words)
        self.min_count = min_count
        self.index_of = {w: i for i, w in enumerate(self.words)}
        if len(self.index_of) != len(self.words):
            raise ValueError("duplicate words in vocabulary")
        self.count_of = dict(counts)
        for w in self.words:
            if self.count_of.get(w, 0) < min_count:
                raise ValueError(f"word '{w}' below min_count {min_count}")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index_of

    def index(self, word):
        return self.index_of[word]

    def count(self, word):
        return self.count_of[word]

    def __eq__(self, other):
        return (
            isinstance(other, Vocabulary)
            and self.words == other.words
            and self.count_of == other.count_of
            and self.min_count == other.min_count
        )


def build_vocabulary(tokens, min_count):
    """Retain words occurring at least ``min_count`` times."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    freq = Counter(t for t in tokens if t != SENTENCE_BREAK)
    kept = [(w, c) for w, c in freq.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(
            f"no word occurs at least {min_count} times"
        )
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    return Vocabulary([w for w, _ in kept], dict(kept), min_count)


def save_vocabulary(vocab, path):
    with open(path, "w", encoding="utf-8") as fh:
        for w in vocab.words:
            fh.write(f"{w}\t{vocab.count_of[w]}\n")


def load_vocabulary(path, min_count=None):
    words, counts = [], {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(path, lineno, "expected 'word<TAB>count'")
            try:
                count = int(parts[1])
            except ValueError:
                raise ParseError(path, lineno, f"bad count {parts[1]!r}")
            words.append(parts[0])
            counts[parts[0]] = count
    if not words:
        raise ParseError(path, 1, "empty vocabulary file")
    if min_count is None:
        min_count = min(counts.values())
    return Vocabulary(words, counts, min_count)


def split_corpus(tokens, k):
    """Split a token sequence into ``k`` contiguous chunks.

    Cut points target equal word counts; when the sequence contains
    sentence markers each cut snaps to the nearest sentence boundary so
    that no context window can span a chunk edge.  Concatenating the
    chunks in order reproduces the input exactly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n_words = word_count(tokens)
    if n_words < k:
        raise ValueError(f"cannot split {n_words} tokens into {k} chunks")
    if k == 1:
        return [list(tokens)]

    # position i has cumulative word count words_before[i]
    words_before = np.zeros(len(tokens) + 1, dtype=np.int64)
    for i, t in enumerate(tokens):
        words_before[i + 1] = words_before[i] + (t != SENTENCE_BREAK)

    # candidate cut positions: sentence boundaries (just after a marker),
    # or every position when the sequence has no markers
    boundaries = [i + 1 for i, t in enumerate(tokens) if t == SENTENCE_BREAK]
    snap = bool(boundaries)

    cuts = []
    prev = 0
    for j in range(1, k):
        ideal_words = round(j * n_words / k)
        if snap:
            cut = min(
                (b for b in boundaries if b > prev),
                key=lambda b: (abs(int(words_before[b]) - ideal_words), b),
                default=None,
            )
            if cut is None:
                cut = len(tokens)
        else:
            cut = int(np.searchsorted(words_before, ideal_words))
        cut = max(cut, prev + 1)
        cuts.append(cut)
        prev = cut
    cuts = [0] + cuts + [len(tokens)]
    return [list(tokens[cuts[i]:cuts[i + 1]]) for i in range(k)]


class CooccurrenceCounts:
    """Symmetric sparse pair counts from windowed scanning.

    ``pair_counts[(i, j)]`` is the number of (focus, context) incidences,
    recorded in both orders, so the map is symmetric and ``total_pairs``
    counts ordered incidences.
    """

    def __init__(self, n, pair_counts, window):
        self.n = n
        self.pair_counts = dict(pair_counts)
        self.window = window
        marg = np.zeros(n, dtype=np.int64)
        total = 0
        for (i, j), c in self.pair_counts.items():
            marg[i] += c
            total += c
        self.row_marginals = marg
        self.total_pairs = int(total)

    def count(self, i, j):
        return self.pair_counts.get((i, j), 0)

    @staticmethod
    def merge(parts):
        """Sum sharded counts produced over disjoint sentence ranges."""
        if not parts:
            raise ValueError("nothing to merge")
        n = parts[0].n
        window = parts[0].window
        merged = Counter()
        for p in parts:
            if p.n != n or p.window != window:
                raise ValueError("cannot merge counts with differing n or window")
            merged.update(p.pair_counts)
        return CooccurrenceCounts(n, merged, window)


def count_cooccurrences(tokens, vocab, window):
    """Count in-vocabulary pairs within ``window`` tokens on each side.

    Out-of-vocabulary tokens keep their positions (they are skipped as
    focus and context but still consume window slots); windows never
    cross sentence markers.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    index = vocab.index_of
    pair_counts = Counter()
    for sent in sentences(tokens):
        ids = [index.get(t, -1) for t in sent]
        m = len(ids)
        for t in range(m):
            i = ids[t]
            if i < 0:
                continue
            hi = min(t + window + 1, m)
            for u in range(t + 1, hi):
                j = ids[u]
                if j < 0:
                    continue
                pair_counts[(i, j)] += 1
                pair_counts[(j, i)] += 1
    return CooccurrenceCounts(len(vocab), pair_counts, window)


def save_counts(counts, path):
    """Write counts in text coordinate format, sorted by (i, j)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{counts.n} {counts.total_pairs}\n")
        for (i, j) in sorted(counts.pair_counts):
            fh.write(f"{i} {j} {counts.pair_counts[(i, j)]}\n")


def load_counts(path, window=0):
    pair_counts = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise ParseError(path, 1, "expected header 'n total_pairs'")
        try:
            n, total = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(path, 1, f"bad header {header!r}")
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(path, lineno, "expected 'i j count'")
            try:
                i, j, c = int(parts[0]), int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError(path, lineno, f"bad entry {line!r}")
            if not (0 <= i < n and 0 <= j < n):
                raise ParseError(path, lineno, f"index out of range: {i} {j}")
            if c < 1:
                raise ParseError(path, lineno, f"count must be >= 1, got {c}")
            pair_counts[(i, j)] = c
    out = CooccurrenceCounts(n, pair_counts, window)
    if out.total_pairs != total:
        raise ParseError(
            path, 1,
            f"header claims {total} total pairs, entries sum to {out.total_pairs}",
        )
    return out
