"""Low-rank factorizations of sparse non-negative matrices.

Three routes to a rank-d approximation:

* :func:`truncated_svd` — randomized subspace iteration (Halko-style range
  finder with oversampling and power iterations) over sparse mat-vecs,
  with an ARPACK Lanczos path as an alternative/fallback.
* :func:`pivoted_qr` — Businger-Golub greedy column pivoting with
  incremental column-norm downdates and per-column norm recomputation.
* :func:`nmf` — Lee-Seung multiplicative updates for the squared
  Frobenius objective, initialized by :func:`nndsvd_init`.

All entry points are deterministic given the same inputs and seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from .errors import ConvergenceError, NumericalError, RankDeficiencyError
from .sparse import SparseMatrix, load_matrix, save_matrix_binary

_EPS = np.finfo(np.float64).eps


def _check_orthonormal(M, name, tol=1e-8):
    g = M.T @ M
    err = np.max(np.abs(g - np.eye(M.shape[1])))
    if err > tol:
        raise ValueError(f"{name} columns not orthonormal (max deviation {err:.3e})")


@dataclass
class SvdFactors:
    """Truncated SVD factors: U (n x d), S (d, non-increasing), V (n x d)."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    d: int

    def __post_init__(self):
        if self.U.shape[1] != self.d or self.V.shape[1] != self.d:
            raise ValueError("factor width must equal d")
        if self.S.shape != (self.d,):
            raise ValueError("S must have length d")
        if np.any(self.S < 0):
            raise ValueError("singular values must be non-negative")
        if np.any(np.diff(self.S) > 1e-12 * max(self.S[0], 1.0)):
            raise ValueError("singular values must be non-increasing")
        _check_orthonormal(self.U, "U")
        _check_orthonormal(self.V, "V")


@dataclass
class QrFactors:
    """Pivoted QR factors: A[:, P] ~= Q @ R with R upper-trapezoidal.

    ``R`` keeps the first ``d`` rows at full width n; ``P`` is the pivot
    permutation as an index array (``A[:, P[k]]`` is the k-th pivoted column).
    """

    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    d: int

    def __post_init__(self):
        if self.Q.shape[1] != self.d or self.R.shape[0] != self.d:
            raise ValueError("factor shapes inconsistent with d")
        if self.R.shape[1] != len(self.P):
            raise ValueError("R width must equal permutation length")
        if sorted(self.P.tolist()) != list(range(len(self.P))):
            raise ValueError("P is not a permutation")
        _check_orthonormal(self.Q, "Q")
        tri = np.tril(self.R[:, : self.d], -1)
        if np.any(tri != 0):
            raise ValueError("R must be upper-trapezoidal")
        diag = np.abs(np.diag(self.R[:, : self.d]))
        slack = 1e-10 * (diag[0] if len(diag) else 0.0)
        if np.any(np.diff(diag) > slack):
            raise ValueError("pivot diagonal magnitudes must be non-increasing")


@dataclass
class NmfFactors:
    """Non-negative factors W (n x d), H (d x n) and the objective trace.

    ``objective_trace[0]`` is the objective at the initial point; entry t
    is the objective after sweep t.  ``stop_reason`` records whether the
    relative-change tolerance or the iteration cap ended the run.
    """

    W: np.ndarray
    H: np.ndarray
    objective_trace: np.ndarray
    d: int
    iterations: int = 0
    converged: bool = False
    stop_reason: str = "max_iter"

    def __post_init__(self):
        if self.W.shape[1] != self.d or self.H.shape[0] != self.d:
            raise ValueError("factor shapes inconsistent with d")
        if self.W.min(initial=0.0) < 0 or self.H.min(initial=0.0) < 0:
            raise ValueError("NMF factors must be non-negative")


def truncated_svd(A, d, *, seed=0, oversample=10, power_iters=2, method="randomized"):
    """Best rank-d approximation factors of a sparse matrix.

    ``method="randomized"`` runs a seeded Gaussian range finder with the
    given oversampling and power (subspace) iterations, which needs only
    mat-vec products.  ``method="lanczos"`` calls ARPACK instead; it is
    also the fallback for ill-conditioned inputs where the randomized
    sketch degenerates.
    """
    m, n = A.shape
    if not 1 <= d < min(m, n):
        raise ValueError(f"rank d must satisfy 1 <= d < min(shape), got {d}")
    As = A.to_scipy()
    if method == "randomized":
        U, S, V = _randomized_svd(As, d, seed, oversample, power_iters)
        if not (np.all(np.isfinite(U)) and np.all(np.isfinite(S))):
            U, S, V = _lanczos_svd(As, d, seed)
    elif method == "lanczos":
        U, S, V = _lanczos_svd(As, d, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    # exact-rank inputs: trailing values at noise level are true zeros
    tiny = S[0] * max(m, n) * _EPS if S.size else 0.0
    S = np.where(S < tiny, 0.0, S)
    return SvdFactors(U=U, S=S, V=V, d=d)


def _randomized_svd(As, d, seed, oversample, power_iters):
    m, n = As.shape
    sketch = min(d + max(oversample, 0), n)
    rng = np.random.default_rng(seed)
    Y = As @ rng.standard_normal((n, sketch))
    Q, _ = np.linalg.qr(Y)
    for _ in range(power_iters):
        Q, _ = np.linalg.qr(As.T @ Q)
        Q, _ = np.linalg.qr(As @ Q)
    B = np.asarray(As.T @ Q).T  # sketch x n
    Ub, S, Vt = np.linalg.svd(B, full_matrices=False)
    return Q @ Ub[:, :d], S[:d], Vt[:d].T


def _lanczos_svd(As, d, seed):
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(min(As.shape))
    try:
        U, S, Vt = scipy.sparse.linalg.svds(As, k=d, v0=v0, which="LM")
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"Lanczos SVD did not converge for rank {d}",
            residual=float(np.max(np.abs(exc.eigenvalues))) if len(exc.eigenvalues) else None,
        ) from exc
    order = np.argsort(S)[::-1]
    return U[:, order], S[order], Vt[order].T


def pivoted_qr(A, d):
    """Householder QR with greedy column pivoting, truncated after d steps.

    Pivots choose the largest remaining column norm (ties: lowest index).
    Column norms are downdated incrementally and recomputed exactly when
    cancellation makes the downdate untrustworthy.
    """
    m, n = A.shape
    if not 1 <= d <= min(m, n):
        raise ValueError(f"rank d must satisfy 1 <= d <= min(shape), got {d}")
    X = A.to_dense()
    perm = np.arange(n)
    taus = np.zeros(d)
    nrm = np.linalg.norm(X, axis=0)
    nrm_ref = nrm.copy()
    rank_tol = max(m, n) * _EPS * (nrm.max() if n else 0.0)
    tol3z = math.sqrt(_EPS)

    for k in range(d):
        piv = k + int(np.argmax(nrm[k:]))
        if nrm[piv] <= rank_tol:
            raise RankDeficiencyError(requested=d, achieved=k)
        if piv != k:
            X[:, [k, piv]] = X[:, [piv, k]]
            perm[[k, piv]] = perm[[piv, k]]
            nrm[[k, piv]] = nrm[[piv, k]]
            nrm_ref[[k, piv]] = nrm_ref[[piv, k]]

        alpha = X[k, k]
        tail = X[k + 1:, k]
        sigma = float(tail @ tail)
        if sigma == 0.0:
            taus[k] = 0.0
            beta = alpha
        else:
            mu = math.sqrt(alpha * alpha + sigma)
            beta = -mu if alpha >= 0 else mu
            v0 = alpha - beta
            v_rest = tail / v0
            taus[k] = (beta - alpha) / beta
            if k + 1 < n:
                w = X[k, k + 1:] + v_rest @ X[k + 1:, k + 1:]
                X[k, k + 1:] -= taus[k] * w
                X[k + 1:, k + 1:] -= taus[k] * np.outer(v_rest, w)
            X[k, k] = beta
            X[k + 1:, k] = v_rest  # Householder vector (v[0] = 1 implied)

        if k + 1 < n:
            cols = slice(k + 1, n)
            r = X[k, cols]
            old = nrm[cols]
            with np.errstate(divide="ignore", invalid="ignore"):
                t = 1.0 - (r / old) ** 2
                t = np.where(old > 0, np.clip(t, 0.0, 1.0), 0.0)
                t2 = t * np.where(nrm_ref[cols] > 0, (old / nrm_ref[cols]) ** 2, 0.0)
            nrm[cols] = old * np.sqrt(t)
            for j in np.nonzero((t2 <= tol3z) & (nrm_ref[cols] > 0))[0] + (k + 1):
                nrm[j] = np.linalg.norm(X[k + 1:, j])
                nrm_ref[j] = nrm[j]

    R = np.triu(X[:d, :])
    Q = np.eye(m, d)
    for k in range(d - 1, -1, -1):
        if taus[k] == 0.0:
            continue
        v = np.empty(m - k)
        v[0] = 1.0
        v[1:] = X[k + 1:, k]
        Q[k:, :] -= taus[k] * np.outer(v, v @ Q[k:, :])
    return QrFactors(Q=Q, R=R, P=perm, d=d)


@dataclass
class RrqrReport:
    """Spectrum-tracking diagnostics for a full pivoted QR at truncation d."""

    ratio_min: float          # sigma_min(R11) / sigma_d(A)
    ratio_max: float          # sigma_max(R22) / sigma_{d+1}(A); inf when exact rank
    sigma_d: float
    sigma_d_plus_1: float
    smin_r11: float
    smax_r22: float
    tau: float
    exact_rank: bool
    rank_revealing: bool


def rrqr_spectrum_check(factors, A, d, *, tau=100.0, seed=0):
    """Compare the R11/R22 blocks of a full pivoted QR against the spectrum.

    Needs the untruncated R (factors computed with d = n).  The
    factorization counts as rank-revealing when both ratios lie within
    [1/tau, tau]; with sigma_{d+1} numerically zero the trailing ratio is
    reported as an infinite-quality sentinel instead.
    """
    m, n = A.shape
    if factors.d != min(m, n) or factors.R.shape != (min(m, n), n):
        raise ValueError("rrqr_spectrum_check needs a full (untruncated) R")
    if not 1 <= d < min(m, n):
        raise ValueError(f"need 1 <= d < min(shape), got {d}")
    svd = truncated_svd(A, d + 1, seed=seed)
    sigma_d = float(svd.S[d - 1])
    sigma_d1 = float(svd.S[d])
    if sigma_d <= 0:
        raise ValueError("sigma_d(A) must be positive")
    smin_r11 = float(np.linalg.svd(factors.R[:d, :d], compute_uv=False)[-1])
    smax_r22 = float(np.linalg.svd(factors.R[d:, d:], compute_uv=False)[0])
    ratio_min = smin_r11 / sigma_d
    zero_tol = float(svd.S[0]) * max(m, n) * _EPS
    exact = sigma_d1 <= zero_tol
    ratio_max = math.inf if exact else smax_r22 / sigma_d1
    revealing = ratio_min >= 1.0 / tau and (exact or ratio_max <= tau)
    return RrqrReport(
        ratio_min=ratio_min,
        ratio_max=ratio_max,
        sigma_d=sigma_d,
        sigma_d_plus_1=sigma_d1,
        smin_r11=smin_r11,
        smax_r22=smax_r22,
        tau=tau,
        exact_rank=exact,
        rank_revealing=revealing,
    )


def nndsvd_init(A, d, *, seed=0):
    """Non-negative double-SVD initialization (Boutsidis-Gallopoulos).

    Builds (W0, H0) from the positive/negative parts of the leading d
    singular vector pairs; components left at exact zero are filled with
    1e-6 times the matrix mean so multiplicative updates cannot stall.
    Deterministic given A, d, and seed.
    """
    if np.any(A.values < 0):
        raise ValueError("NNDSVD needs a non-negative matrix")
    m, n = A.shape
    svd = truncated_svd(A, d, seed=seed)
    U, S, V = svd.U, svd.S, svd.V
    W = np.zeros((m, d))
    H = np.zeros((d, n))
    W[:, 0] = np.sqrt(S[0]) * np.abs(U[:, 0])
    H[0, :] = np.sqrt(S[0]) * np.abs(V[:, 0])
    for k in range(1, d):
        x, y = U[:, k], V[:, k]
        xp, yp = np.maximum(x, 0), np.maximum(y, 0)
        xn, yn = np.maximum(-x, 0), np.maximum(-y, 0)
        npos = np.linalg.norm(xp) * np.linalg.norm(yp)
        nneg = np.linalg.norm(xn) * np.linalg.norm(yn)
        if npos >= nneg and npos > 0:
            u, v, sig = xp / np.linalg.norm(xp), yp / np.linalg.norm(yp), npos
        elif nneg > 0:
            u, v, sig = xn / np.linalg.norm(xn), yn / np.linalg.norm(yn), nneg
        else:
            continue  # dead singular pair, leave zeros for the fill below
        lam = np.sqrt(S[k] * sig)
        W[:, k] = lam * u
        H[k, :] = lam * v
    fill = 1e-6 * A.mean()
    W[W == 0.0] = fill
    H[H == 0.0] = fill
    return W, H


def nmf(A, d, max_iter=200, tol=1e-4, *, init=None, seed=0):
    """Lee-Seung multiplicative updates for min ||A - WH||_F^2, W,H >= 0.

    Stops when the relative objective decrease drops below ``tol`` or
    after ``max_iter`` sweeps; the result records which.  ``init`` may
    supply (W0, H0); by default :func:`nndsvd_init` is used.
    """
    m, n = A.shape
    if not 1 <= d < min(m, n):
        raise ValueError(f"rank d must satisfy 1 <= d < min(shape), got {d}")
    if np.any(A.values < 0):
        raise ValueError("NMF needs a non-negative matrix")
    if init is None:
        W, H = nndsvd_init(A, d, seed=seed)
    else:
        W, H = (np.array(init[0], dtype=np.float64), np.array(init[1], dtype=np.float64))
        if W.shape != (m, d) or H.shape != (d, n):
            raise ValueError("init shapes inconsistent with A and d")
        if W.min(initial=0.0) < 0 or H.min(initial=0.0) < 0:
            raise ValueError("init factors must be non-negative")
    As = A.to_scipy()
    norm_a2 = float(A.values @ A.values)

    def objective(AHt, HHt):
        return norm_a2 - 2.0 * float(np.sum(W * AHt)) + float(np.sum((W.T @ W) * HHt))

    trace = [objective(np.asarray(As @ H.T), H @ H.T)]
    iterations = 0
    converged = False
    reason = "max_iter"
    for it in range(1, max_iter + 1):
        num_h = np.asarray((As.T @ W)).T         # W^T A
        den_h = (W.T @ W) @ H
        H *= _safe_ratio(num_h, den_h, "H")
        AHt = np.asarray(As @ H.T)               # A H^T
        HHt = H @ H.T
        den_w = W @ HHt
        W *= _safe_ratio(AHt, den_w, "W")
        obj = objective(AHt, HHt)
        if not math.isfinite(obj):
            raise NumericalError(f"objective became non-finite at sweep {it}")
        trace.append(obj)
        iterations = it
        prev = trace[-2]
        rel = (prev - obj) / prev if prev > 0 else 0.0
        if rel < tol:
            converged = True
            reason = "tol"
            break
    return NmfFactors(
        W=W,
        H=H,
        objective_trace=np.array(trace),
        d=d,
        iterations=iterations,
        converged=converged,
        stop_reason=reason,
    )


def _safe_ratio(num, den, which):
    """Multiplicative-update ratio; vanished denominators yield factor 0.

    A zero denominator with the Lee-Seung update can only come from a
    dead component or an all-zero row/column, in which case the matching
    numerator entry is also zero and the entry's scale is zero anyway.
    """
    ratio = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    if not np.all(np.isfinite(ratio)):
        i, k = np.argwhere(~np.isfinite(ratio))[0]
        raise NumericalError(
            f"non-finite multiplicative update for {which}[{i},{k}] "
            "(degenerate row or column)"
        )
    return ratio


def approximation_error(A, factors, block_rows=256):
    """Frobenius norm of A - A_d, streamed block-row-wise.

    The rank-d reconstruction is never materialized in full: each block of
    rows is densified, subtracted exactly, and accumulated, so memory stays
    O(block * n) and exact factorizations report zero instead of the
    cancellation noise a trace-identity evaluation would leave.
    """
    m, n = A.shape
    if isinstance(factors, SvdFactors):
        if factors.U.shape[0] != m or factors.V.shape[0] != n:
            raise ValueError("SVD factor shapes do not match the matrix")
        US = factors.U * factors.S
        Vt = factors.V.T
        def block(lo, hi):
            return US[lo:hi] @ Vt
    elif isinstance(factors, QrFactors):
        if factors.Q.shape[0] != m or factors.R.shape[1] != n:
            raise ValueError("QR factor shapes do not match the matrix")
        RPt = factors.R[:, np.argsort(factors.P)]
        def block(lo, hi):
            return factors.Q[lo:hi] @ RPt
    elif isinstance(factors, NmfFactors):
        if factors.W.shape[0] != m or factors.H.shape[1] != n:
            raise ValueError("NMF factor shapes do not match the matrix")
        def block(lo, hi):
            return factors.W[lo:hi] @ factors.H
    else:
        raise TypeError(f"unsupported factor type {type(factors).__name__}")

    As = A.to_scipy()
    total = 0.0
    for lo in range(0, m, block_rows):
        hi = min(lo + block_rows, m)
        diff = np.asarray(As[lo:hi].todense()) - block(lo, hi)
        total += float(np.sum(diff * diff))
    return math.sqrt(total)


def _matrix_from_dense(arr):
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    n_rows, n_cols = arr.shape
    rows = np.repeat(np.arange(n_rows), n_cols)
    cols = np.tile(np.arange(n_cols), n_rows)
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, arr.ravel())


def save_factors(factors, prefix, *, seed=None):
    """Persist factors as binary matrix files plus a JSON sidecar."""
    prefix = str(prefix)
    meta = {"d": factors.d, "seed": seed, "iterations": None, "final_objective": None}
    if isinstance(factors, SvdFactors):
        meta["method"] = "svd"
        parts = {"U": factors.U, "S": factors.S.reshape(1, -1), "V": factors.V}
    elif isinstance(factors, QrFactors):
        meta["method"] = "qr"
        meta["permutation"] = [int(p) for p in factors.P]
        parts = {"Q": factors.Q, "R": factors.R}
    elif isinstance(factors, NmfFactors):
        meta["method"] = "nmf"
        meta["iterations"] = factors.iterations
        meta["final_objective"] = float(factors.objective_trace[-1])
        meta["objective_trace"] = [float(v) for v in factors.objective_trace]
        meta["converged"] = factors.converged
        meta["stop_reason"] = factors.stop_reason
        parts = {"W": factors.W, "H": factors.H}
    else:
        raise TypeError(f"unsupported factor type {type(factors).__name__}")
    for name, arr in parts.items():
        save_matrix_binary(_matrix_from_dense(arr), f"{prefix}.{name}.mat")
    with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_factors(prefix):
    prefix = str(prefix)
    with open(f"{prefix}.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    method = meta["method"]
    d = meta["d"]
    dense = lambda name: load_matrix(f"{prefix}.{name}.mat").to_dense()
    if method == "svd":
        return SvdFactors(U=dense("U"), S=dense("S").ravel(), V=dense("V"), d=d)
    if method == "qr":
        return QrFactors(
            Q=dense("Q"),
            R=dense("R"),
            P=np.array(meta["permutation"], dtype=np.int64),
            d=d,
        )
    if method == "nmf":
        return NmfFactors(
            W=dense("W"),
            H=dense("H"),
            objective_trace=np.array(meta["objective_trace"]),
            d=d,
            iterations=meta["iterations"],
            converged=meta["converged"],
            stop_reason=meta["stop_reason"],
        )
    raise ValueError(f"unknown factor method {method!r}")
