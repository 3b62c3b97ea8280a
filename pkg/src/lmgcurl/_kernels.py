"""Compiled Gauss-Seidel sweeps on CSR matrices."""
import numba
import numpy as np


@numba.njit(cache=True)
def gs_sweep(indptr, indices, data, diag, order, res, x):
    """One Gauss-Seidel sweep over ``order`` for a symmetric matrix.

    ``res`` holds the current residual ``b - A x`` and is kept consistent
    with ``x``: after relaxing dof ``i`` the column ``A[:, i]`` (equal to the
    row by symmetry) is subtracted from it.
    """
    for n in range(order.shape[0]):
        i = order[n]
        d = res[i] / diag[i]
        x[i] += d
        for k in range(indptr[i], indptr[i + 1]):
            res[indices[k]] -= data[k] * d


def csr_parts(A):
    """Arrays needed by :func:`gs_sweep`."""
    A = A.tocsr()
    A.sort_indices()
    return (
        A.indptr.astype(np.int64),
        A.indices.astype(np.int64),
        A.data.astype(np.float64),
        A.diagonal().astype(np.float64),
    )


@numba.njit(cache=True)
def greedy_color(indptr, indices, order, n):
    """First-fit coloring of the graph (CSR adjacency) visiting ``order``.

    Returns -1 for vertices not in ``order``.
    """
    color = -np.ones(n, dtype=np.int64)
    used = np.full(n + 1, -1, dtype=np.int64)
    for t in range(order.shape[0]):
        i = order[t]
        for k in range(indptr[i], indptr[i + 1]):
            c = color[indices[k]]
            if c >= 0:
                used[c] = i
        c = 0
        while used[c] == i:
            c += 1
        color[i] = c
    return color
