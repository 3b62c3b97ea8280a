"""Global assembly of the curl-curl plus mass form and the load vector."""
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .exceptions import EvaluationError
from .mesh import LOCAL_EDGES
from .quadrature import tet_rule

__all__ = [
    "AssembledSystem",
    "element_matrices",
    "assemble",
    "assemble_load",
    "assemble_nodal_laplacian",
    "export_matrix_market",
]

_LE = np.array(LOCAL_EDGES)


def element_matrices(grads, vol):
    """Local curl-curl and mass matrices of the edge shapes.

    Parameters
    ----------
    grads : ndarray, shape (n, 4, 3)
        Barycentric gradients.
    vol : ndarray, shape (n,)

    Returns
    -------
    kc, km : ndarray, shape (n, 6, 6)
        Unsigned local matrices in ``LOCAL_EDGES`` order.
    """
    gi, gj = grads[:, _LE[:, 0]], grads[:, _LE[:, 1]]
    curl = 2.0 * np.cross(gi, gj)
    kc = vol[:, None, None] * np.einsum("nad,nbd->nab", curl, curl)
    gg = np.einsum("nid,njd->nij", grads, grads)
    # int lam_a lam_b = vol (1 + delta_ab) / 20
    mm = (np.eye(4) + 1.0) / 20.0
    i, j = _LE[:, 0], _LE[:, 1]
    I, J = i[:, None], j[:, None]
    K, L = i[None, :], j[None, :]
    km = (
        mm[I, K] * gg[:, J, L]
        - mm[I, L] * gg[:, J, K]
        - mm[J, K] * gg[:, I, L]
        + mm[J, L] * gg[:, I, K]
    )
    km *= vol[:, None, None]
    return kc, km


@dataclass
class AssembledSystem:
    """Stiffness, mass and load on the active edge dofs.

    ``A_lift`` couples active rows to Dirichlet edges so that inhomogeneous
    boundary values ``g`` enter through :meth:`rhs`.
    """

    dofmap: object
    A_curl: sp.csr_matrix
    M: sp.csr_matrix
    A: sp.csr_matrix
    b: np.ndarray
    A_lift: sp.csr_matrix

    def rhs(self, g=None):
        """Load vector with the Dirichlet lift ``g`` (values on Dirichlet edges) moved over."""
        if g is None:
            return self.b.copy()
        return self.b - self.A_lift @ np.asarray(g, dtype=float)


def _global_matrix(dm, local):
    sign = dm.tet_edge_sign
    vals = local * sign[:, :, None] * sign[:, None, :]
    rows = np.repeat(dm.tet_edges, 6, axis=1).ravel()
    cols = np.tile(dm.tet_edges, (1, 6)).ravel()
    n = len(dm.edges)
    m = sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(n, n))
    m.sum_duplicates()
    return m


def _symmetrize(m):
    return ((m + m.T) * 0.5).tocsr()


def assemble_load(dm, f, degree=5):
    """Load ``int f . b_E`` on all edges of ``dm`` (ordering of ``dm.edges``)."""
    g, vol = dm.geometry()
    x = dm.tet_coords()
    bary, w = tet_rule(degree)
    pts = np.einsum("qk,nkd->nqd", bary, x)
    fv = np.asarray(f(pts.reshape(-1, 3)), dtype=float)
    if not np.all(np.isfinite(fv)):
        raise EvaluationError("source term returned non-finite values")
    fv = fv.reshape(len(x), len(w), 3)
    gi, gj = g[:, _LE[:, 0]], g[:, _LE[:, 1]]
    li, lj = bary[:, _LE[:, 0]], bary[:, _LE[:, 1]]
    fgj = np.einsum("nqd,ned->nqe", fv, gj)
    fgi = np.einsum("nqd,ned->nqe", fv, gi)
    loc = np.einsum("q,nqe->ne", w, li[None] * fgj - lj[None] * fgi) * vol[:, None]
    loc *= dm.tet_edge_sign
    return np.bincount(dm.tet_edges.ravel(), weights=loc.ravel(), minlength=len(dm.edges))


def assemble(dm, f=None, degree=5):
    """Assemble ``(curl u, curl v) + (u, v)`` and ``(f, v)`` on ``dm``.

    Element matrices use closed forms; the load uses the 14-point
    tetrahedron rule. Dirichlet edges are never part of the unknowns.

    Parameters
    ----------
    dm : DofMap
    f : callable, optional
        Source field on points (n, 3); zero if omitted.
    """
    g, vol = dm.geometry()
    kc, km = element_matrices(g, vol)
    Kc = _global_matrix(dm, kc)
    Km = _global_matrix(dm, km)
    act = np.flatnonzero(dm.edge_active)
    dirichlet = np.flatnonzero(~dm.edge_active)
    A_curl = _symmetrize(Kc[act][:, act])
    M = _symmetrize(Km[act][:, act])
    A = _symmetrize(A_curl + M)
    K = (Kc + Km).tocsr()
    lift = K[act][:, dirichlet].tocsr()
    b = np.zeros(len(act)) if f is None else assemble_load(dm, f, degree)[act]
    return AssembledSystem(dofmap=dm, A_curl=A_curl, M=M, A=A, b=b, A_lift=lift)


def assemble_nodal_laplacian(A, G):
    """Nodal operator ``G^T A G`` used for the gradient-space corrections."""
    if A.shape[0] != A.shape[1] or A.shape[1] != G.shape[0]:
        raise ValueError(f"dimension mismatch: A {A.shape}, G {G.shape}")
    return _symmetrize(G.T @ (A @ G))


def export_matrix_market(path, A, comment=""):
    """Write a sparse operator in Matrix Market coordinate format."""
    scipy.io.mmwrite(path, sp.coo_matrix(A), comment=comment, precision=17)
