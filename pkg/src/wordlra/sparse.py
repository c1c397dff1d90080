"""Compressed sparse row matrix container and its text/binary file formats."""

from __future__ import annotations

import numpy as np
import scipy.sparse

from .errors import ParseError

MAGIC = b"PPMI"


class SparseMatrix:
    """CSR matrix with strictly increasing column indices per row.

    Absent entries mean zero.  Matrices holding clamped-positive data
    (such as PPMI) store only values > 0; use :func:`is_strictly_positive`
    to check that property.
    """

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = np.asarray(row_offsets, dtype=np.int64)
        self.col_indices = np.asarray(col_indices, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self._validate()

    def _validate(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("negative dimensions")
        if self.row_offsets.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != len(self.values):
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(self.row_offsets) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if len(self.col_indices) != len(self.values):
            raise ValueError("col_indices and values length mismatch")
        if len(self.col_indices):
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.n_cols:
                raise ValueError("column index out of range")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        for r in range(self.n_rows):
            lo, hi = self.row_offsets[r], self.row_offsets[r + 1]
            if hi - lo > 1 and np.any(np.diff(self.col_indices[lo:hi]) <= 0):
                raise ValueError(f"row {r}: column indices not strictly increasing")

    @property
    def nnz(self):
        return len(self.values)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if len(rows) > 1:
            same = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if np.any(same):
                raise ValueError("duplicate coordinates")
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        np.cumsum(offsets, out=offsets)
        return cls(n_rows, n_cols, offsets, cols, values)

    @classmethod
    def from_dense(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        rows, cols = np.nonzero(arr)
        return cls.from_coo(arr.shape[0], arr.shape[1], rows, cols, arr[rows, cols])

    @classmethod
    def from_scipy(cls, mat):
        csr = scipy.sparse.csr_matrix(mat)
        csr.sort_indices()
        csr.sum_duplicates()
        return cls(csr.shape[0], csr.shape[1], csr.indptr, csr.indices, csr.data)

    def to_scipy(self):
        return scipy.sparse.csr_matrix(
            (self.values, self.col_indices, self.row_offsets),
            shape=(self.n_rows, self.n_cols),
        )

    def to_dense(self):
        out = np.zeros((self.n_rows, self.n_cols))
        for r in range(self.n_rows):
            lo, hi = self.row_offsets[r], self.row_offsets[r + 1]
            out[r, self.col_indices[lo:hi]] = self.values[lo:hi]
        return out

    def frobenius_norm(self):
        return float(np.sqrt(np.sum(self.values ** 2)))

    def mean(self):
        """Mean over all n_rows * n_cols entries, zeros included."""
        if self.n_rows == 0 or self.n_cols == 0:
            return 0.0
        return float(self.values.sum()) / (self.n_rows * self.n_cols)

    def is_strictly_positive(self):
        return bool(np.all(self.values > 0))

    def allclose(self, other, atol=0.0, rtol=1e-12):
        if self.shape != other.shape or self.nnz != other.nnz:
            return False
        return (
            np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.allclose(self.values, other.values, atol=atol, rtol=rtol)
        )


def save_matrix_text(mat, path):
    """Coordinate text format: header 'n_rows n_cols nnz', then 'i j value'."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{mat.n_rows} {mat.n_cols} {mat.nnz}\n")
        for r in range(mat.n_rows):
            lo, hi = mat.row_offsets[r], mat.row_offsets[r + 1]
            for k in range(lo, hi):
                fh.write(f"{r} {mat.col_indices[k]} {mat.values[k]:.17g}\n")


def save_matrix_binary(mat, path):
    """Little-endian binary: magic, three int64 counts, then the CSR arrays."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        header = np.array([mat.n_rows, mat.n_cols, mat.nnz], dtype="<i8")
        fh.write(header.tobytes())
        fh.write(mat.row_offsets.astype("<i8").tobytes())
        fh.write(mat.col_indices.astype("<i8").tobytes())
        fh.write(mat.values.astype("<f8").tobytes())


def load_matrix(path):
    """Load either format; binary is detected by its magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return _load_binary(path)
    return _load_text(path)


def _load_binary(path):
    with open(path, "rb") as fh:
        data = fh.read()
    off = len(MAGIC)
    try:
        n_rows, n_cols, nnz = np.frombuffer(data, dtype="<i8", count=3, offset=off)
        off += 3 * 8
        row_offsets = np.frombuffer(data, dtype="<i8", count=n_rows + 1, offset=off)
        off += (n_rows + 1) * 8
        col_indices = np.frombuffer(data, dtype="<i8", count=nnz, offset=off)
        off += nnz * 8
        values = np.frombuffer(data, dtype="<f8", count=nnz, offset=off)
        off += nnz * 8
    except ValueError as exc:
        raise ParseError(path, 0, f"truncated binary matrix: {exc}")
    if off != len(data):
        raise ParseError(path, 0, "trailing bytes after binary matrix")
    try:
        return SparseMatrix(n_rows, n_cols, row_offsets, col_indices, values)
    except ValueError as exc:
        raise ParseError(path, 0, str(exc))


def _load_text(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 3:
            raise ParseError(path, 1, "expected header 'n_rows n_cols nnz'")
        try:
            n_rows, n_cols, nnz = (int(p) for p in parts)
        except ValueError:
            raise ParseError(path, 1, f"bad header {header!r}")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        k = 0
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            if k >= nnz:
                raise ParseError(path, lineno, f"more than {nnz} entries")
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(path, lineno, "expected 'i j value'")
            try:
                rows[k] = int(parts[0])
                cols[k] = int(parts[1])
                vals[k] = float(parts[2])
            except ValueError:
                raise ParseError(path, lineno, f"bad entry {line!r}")
            if k and (rows[k], cols[k]) <= (rows[k - 1], cols[k - 1]):
                raise ParseError(path, lineno, "entries must be sorted by (i, j)")
            k += 1
    if k != nnz:
        raise ParseError(path, 1, f"header claims {nnz} entries, found {k}")
    try:
        return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)
    except ValueError as exc:
        raise ParseError(path, 0, str(exc))
