"""Truncated SVD and spectral helpers tuned for tall spiked-model matrices.

All routines are deterministic: the iterative path uses a fixed starting
vector, and any fallback is triggered only by the input itself.
"""

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import svds, ArpackError

__all__ = ["topk_svd", "all_singular_values", "op_norm"]


def _gram_topk(M, k):
    # Eigendecompose the smaller Gram matrix; recover the other side by
    # one matmul. Accurate for the O(1) top singular values we care about.
    p, n = M.shape
    if p <= n:
        G = M @ M.T
        w, u = sla.eigh(G, subset_by_index=[p - k, p - 1])
        w = w[::-1].clip(min=0.0)
        s = np.sqrt(w)
        u = u[:, ::-1]
        v = np.zeros((n, k))
        ok = s > 1e-12 * max(s[0], 1e-300)
        v[:, ok] = (M.T @ u[:, ok]) / s[ok]
        return u, s, v.T
    u, s, vt = _gram_topk(M.T, k)
    return vt.T, s, u.T


def topk_svd(M, k):
    """Top-k singular triplets of M, descending.

    Returns (U, s, Vt) with U p-by-k, s length k, Vt k-by-n. Picks between
    a dense SVD, ARPACK, and a Gram eigendecomposition based on size.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    p, n = M.shape
    q = min(p, n)
    if k < 0 or k > q:
        raise ValueError(f"k={k} out of range for a {p}x{n} matrix")
    if k == 0:
        return np.zeros((p, 0)), np.zeros(0), np.zeros((0, n))
    if q <= 400 or 3 * k >= q:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        return U[:, :k], s[:k], Vt[:k]
    use_arpack = k <= 2 or (k <= 4 and q >= 900)
    if use_arpack:
        try:
            u, s, vt = svds(M, k=k, v0=np.ones(q), maxiter=q * 20)
        except (ArpackError, np.linalg.LinAlgError):
            return _gram_topk(M, k)
        order = np.argsort(s)[::-1]
        return u[:, order], s[order], vt[order]
    return _gram_topk(M, k)


def all_singular_values(M):
    """All min(p, n) singular values of M, descending."""
    M = np.asarray(M, dtype=float)
    p, n = M.shape
    G = M @ M.T if p <= n else M.T @ M
    w = np.linalg.eigvalsh(G)
    return np.sqrt(w[::-1].clip(min=0.0))


def op_norm(M):
    """Largest singular value of M."""
    M = np.asarray(M, dtype=float)
    p, n = M.shape
    q = min(p, n)
    G = M @ M.T if p <= n else M.T @ M
    w = sla.eigh(G, subset_by_index=[q - 1, q - 1], eigvals_only=True)
    return float(np.sqrt(max(w[0], 0.0)))
