"""Lowest-order edge and nodal finite element spaces.

Edge dofs are path integrals along edges oriented from the lower to the higher
vertex id. On a tetrahedron with barycentric coordinates ``lam`` the local
shape function of edge ``(i, j)`` is ``lam_i grad lam_j - lam_j grad lam_i``;
the global basis function carries the orientation sign of the edge.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import EvaluationError, InvalidAssignmentError, InvalidElementError
from .mesh import LOCAL_EDGES
from .quadrature import gauss_segment, tet_rule

__all__ = [
    "DofMap",
    "LevelDofSets",
    "barycentric_gradients",
    "barycentric_coordinates",
    "edge_shape",
    "edge_shape_curl",
    "edge_interpolate",
    "nodal_interpolate",
    "build_gradient_map",
    "level_dof_sets",
    "dual_basis",
    "quasi_interpolate",
    "coarsest_neighbor_assignment",
    "evaluate_edge_field",
    "evaluate_nodal_field",
]

_LE = np.array(LOCAL_EDGES)


def barycentric_gradients(x):
    """Gradients of barycentric coordinates and volumes.

    Parameters
    ----------
    x : ndarray, shape (n, 4, 3)
        Vertex coordinates of ``n`` tetrahedra.

    Returns
    -------
    grads : ndarray, shape (n, 4, 3)
    vol : ndarray, shape (n,)

    Raises
    ------
    InvalidElementError
        For (numerically) degenerate tetrahedra.
    """
    x = np.asarray(x, dtype=float)
    d = np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1))  # columns x_i - x_0
    det = np.linalg.det(d)
    scale = np.abs(d).max(axis=(1, 2)) ** 3 if len(d) else np.zeros(0)
    if np.any(np.abs(det) <= 1e-13 * scale):
        raise InvalidElementError("degenerate tetrahedron")
    binv = np.linalg.inv(d)  # rows: grad lam_1..3
    g = np.empty((len(x), 4, 3))
    g[:, 1:, :] = binv
    g[:, 0, :] = -binv.sum(axis=1)
    return g, np.abs(det) / 6.0


def barycentric_coordinates(x, pts):
    """Barycentric coordinates of ``pts`` (n, q, 3) w.r.t. tets ``x`` (n, 4, 3)."""
    g, _ = barycentric_gradients(x)
    lam = np.einsum("nkd,nqd->nqk", g, pts - x[:, None, 0, :])
    lam[:, :, 0] += 1.0
    return lam


def edge_shape(x, local_edge, pts):
    """Local edge shape function of one tetrahedron.

    Parameters
    ----------
    x : ndarray, shape (4, 3)
        Vertex coordinates.
    local_edge : int
        Index into ``LOCAL_EDGES``.
    pts : ndarray, shape (q, 3)

    Returns
    -------
    ndarray, shape (q, 3)
    """
    x = np.asarray(x, dtype=float)[None]
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    g, _ = barycentric_gradients(x)
    lam = barycentric_coordinates(x, pts[None])[0]
    i, j = LOCAL_EDGES[local_edge]
    return lam[:, i, None] * g[0, j] - lam[:, j, None] * g[0, i]


def edge_shape_curl(x, local_edge):
    """Constant curl ``2 grad lam_i x grad lam_j`` of a local edge shape."""
    g, _ = barycentric_gradients(np.asarray(x, dtype=float)[None])
    i, j = LOCAL_EDGES[local_edge]
    return 2.0 * np.cross(g[0, i], g[0, j])


@dataclass
class DofMap:
    """Edge and vertex numbering on one conforming set of tetrahedra.

    Attributes
    ----------
    mesh : Mesh
    tets : ndarray
        Forest ids of the tetrahedra.
    edges : ndarray
        Global (forest) edge ids of all edges, ascending.
    edge_verts : ndarray, shape (n_all_edges, 2)
        Vertex pairs, lower id first; this fixes the orientation.
    edge_active : ndarray of bool
        False for edges lying in the Dirichlet boundary.
    vertices : ndarray
        All vertex ids, ascending.
    vertex_active : ndarray of bool
    tet_edges : ndarray, shape (n_tets, 6)
        Position of each local edge in ``edges``.
    tet_edge_sign : ndarray, shape (n_tets, 6)
        +1 if the local edge runs from lower to higher vertex id.
    tet_edge_dofs, tet_vert_dofs : ndarray
        Active dof numbers per local edge / vertex, -1 where inactive.
    """

    mesh: object
    tets: np.ndarray
    edges: np.ndarray
    edge_verts: np.ndarray
    edge_active: np.ndarray
    vertices: np.ndarray
    vertex_active: np.ndarray
    tet_verts: np.ndarray
    tet_edges: np.ndarray
    tet_edge_sign: np.ndarray
    tet_edge_dofs: np.ndarray
    tet_vert_dofs: np.ndarray
    edge_dof: np.ndarray
    vertex_dof: np.ndarray
    _geom: tuple = field(default=None, repr=False, compare=False)

    @classmethod
    def build(cls, mesh, tets=None):
        """Number the dofs of ``tets`` (leaves of ``mesh`` by default)."""
        tets = mesh.leaves() if tets is None else np.asarray(tets, dtype=np.int64)
        tab = mesh.forest_tables()
        tv = mesh.tets[tets]
        gte = tab["tet_edges"][tets]
        edges, inv = np.unique(gte, return_inverse=True)
        tet_edges = inv.reshape(-1, 6)
        edge_verts = tab["edge_verts"][edges]
        edge_active = ~tab["edge_dirichlet"][edges]
        sign = np.where(tv[:, _LE[:, 0]] < tv[:, _LE[:, 1]], 1, -1)
        vertices, vinv = np.unique(tv, return_inverse=True)
        vertex_active = ~tab["vertex_dirichlet"][vertices]

        edge_dof = -np.ones(len(edges), dtype=np.int64)
        edge_dof[edge_active] = np.arange(edge_active.sum())
        vertex_dof = -np.ones(len(vertices), dtype=np.int64)
        vertex_dof[vertex_active] = np.arange(vertex_active.sum())
        return cls(
            mesh=mesh,
            tets=tets,
            edges=edges,
            edge_verts=edge_verts,
            edge_active=edge_active,
            vertices=vertices,
            vertex_active=vertex_active,
            tet_verts=tv,
            tet_edges=tet_edges,
            tet_edge_sign=sign,
            tet_edge_dofs=edge_dof[tet_edges],
            tet_vert_dofs=vertex_dof[vinv.reshape(-1, 4)],
            edge_dof=edge_dof,
            vertex_dof=vertex_dof,
        )

    @property
    def n_edges(self):
        """Number of active edge dofs."""
        return int(self.edge_active.sum())

    @property
    def n_vertices(self):
        """Number of active vertex dofs."""
        return int(self.vertex_active.sum())

    @property
    def active_edges(self):
        """Vertex pairs of the active edges in dof order."""
        return self.edge_verts[self.edge_active]

    @property
    def active_vertices(self):
        return self.vertices[self.vertex_active]

    @property
    def n_tets(self):
        return len(self.tets)

    def tet_coords(self):
        return self.mesh.coords[self.tet_verts]

    def geometry(self):
        """Cached barycentric gradients and volumes of the tetrahedra."""
        if self._geom is None:
            self._geom = barycentric_gradients(self.tet_coords())
        return self._geom


def _check_finite(vals, what):
    if not np.all(np.isfinite(vals)):
        raise EvaluationError(f"{what} returned non-finite values")
    return vals


def edge_interpolate(dm, v, n_points=5, active_only=True):
    """Edge interpolant: path integral of ``v`` along each edge.

    Parameters
    ----------
    dm : DofMap
    v : callable
        Maps points (n, 3) to vectors (n, 3).
    n_points : int
        Gauss-Legendre points per edge.
    active_only : bool
        Return only active dofs (default) or all edges of ``dm``.
    """
    ev = dm.edge_verts[dm.edge_active] if active_only else dm.edge_verts
    x = dm.mesh.coords
    a, b = x[ev[:, 0]], x[ev[:, 1]]
    t, w = gauss_segment(n_points)
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    vals = _check_finite(np.asarray(v(pts.reshape(-1, 3)), dtype=float), "vector field")
    vals = vals.reshape(len(ev), len(t), 3)
    return np.einsum("q,nqd,nd->n", w, vals, b - a)


def nodal_interpolate(dm, u, active_only=True):
    """Nodal interpolant: values of ``u`` at the (active) vertices."""
    vids = dm.active_vertices if active_only else dm.vertices
    vals = np.asarray(u(dm.mesh.coords[vids]), dtype=float)
    return _check_finite(vals, "scalar field")


def build_gradient_map(dm, active_only=True):
    """Incidence matrix mapping nodal coefficients to edge coefficients.

    Row ``E = [p, q]`` (``p < q``) has +1 in column ``q`` and -1 in column
    ``p``; columns of Dirichlet vertices are dropped.
    """
    ev = dm.edge_verts
    vpos = np.searchsorted(dm.vertices, ev)
    if active_only:
        rows_keep = dm.edge_active
        col_of = dm.vertex_dof
        nrow, ncol = dm.n_edges, dm.n_vertices
        row_of = dm.edge_dof
    else:
        rows_keep = np.ones(len(ev), dtype=bool)
        col_of = np.arange(len(dm.vertices))
        row_of = np.arange(len(ev))
        nrow, ncol = len(ev), len(dm.vertices)
    r = np.repeat(row_of[rows_keep], 2)
    c = col_of[vpos[rows_keep]].ravel()
    v = np.tile([-1.0, 1.0], int(rows_keep.sum()))
    keep = c >= 0
    return sp.csr_matrix((v[keep], (r[keep], c[keep])), shape=(nrow, ncol))


def evaluate_edge_field(dm, coef, bary):
    """Values and curls of an edge field at barycentric points of every tet.

    Parameters
    ----------
    coef : ndarray
        Coefficients over all edges of ``dm`` (``len(dm.edges)``).
    bary : ndarray, shape (q, 4)

    Returns
    -------
    vals : ndarray, shape (n_tets, q, 3)
    curl : ndarray, shape (n_tets, 3)
    """
    g, _ = dm.geometry()
    c = coef[dm.tet_edges] * dm.tet_edge_sign  # (n, 6)
    gi, gj = g[:, _LE[:, 0]], g[:, _LE[:, 1]]  # (n, 6, 3)
    li, lj = bary[:, _LE[:, 0]], bary[:, _LE[:, 1]]  # (q, 6)
    vals = np.einsum("ne,qe,ned->nqd", c, li, gj) - np.einsum("ne,qe,ned->nqd", c, lj, gi)
    curl = 2.0 * np.einsum("ne,ned->nd", c, np.cross(gi, gj))
    return vals, curl


def evaluate_nodal_field(dm, coef, bary):
    """Values of a P1 field (coefficients over ``dm.vertices``) at barycentric points."""
    vpos = np.searchsorted(dm.vertices, dm.tet_verts)
    return np.einsum("nk,qk->nq", coef[vpos], bary)


@dataclass
class LevelDofSets:
    """Dofs of each virtual level whose support lies in the refinement zone.

    ``edges[l]`` and ``vertices[l]`` are ascending arrays of active dof
    numbers of the level-``l`` dof map.
    """

    edges: list
    vertices: list

    def sizes(self):
        return [(len(e), len(v)) for e, v in zip(self.edges, self.vertices)]


def level_dof_sets(hierarchy, dms):
    """Smoothing sets of the local multilevel splitting.

    For ``l >= 1`` a dof of ``T_l`` is kept iff every ``T_l`` tetrahedron
    touching it has level ``l``; on level 0 all dofs are kept.
    """
    lev = hierarchy.mesh.levels
    edges, verts = [], []
    for l, dm in enumerate(dms):
        if l == 0:
            edges.append(np.arange(dm.n_edges))
            verts.append(np.arange(dm.n_vertices))
            continue
        old = lev[dm.tets] < l
        bad_e = np.zeros(len(dm.edges), dtype=bool)
        bad_e[dm.tet_edges[old].ravel()] = True
        vpos = np.searchsorted(dm.vertices, dm.tet_verts)
        bad_v = np.zeros(len(dm.vertices), dtype=bool)
        bad_v[vpos[old].ravel()] = True
        edges.append(np.sort(dm.edge_dof[dm.edge_active & ~bad_e]))
        verts.append(np.sort(dm.vertex_dof[dm.vertex_active & ~bad_v]))
    return LevelDofSets(edges=edges, vertices=verts)


def dual_basis(x):
    """Coefficients of the L2-dual basis of the barycentric coordinates.

    Parameters
    ----------
    x : ndarray, shape (4, 3) or (n, 4, 3)

    Returns
    -------
    ndarray, shape (4, 4) or (n, 4, 4)
        Row ``j`` holds ``a_jk`` with ``psi_j = sum_k a_jk lam_k``.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 2
    xs = x[None] if single else x
    _, vol = barycentric_gradients(xs)
    gram = (np.eye(4) + 1.0)[None] * (vol / 20.0)[:, None, None]
    a = np.linalg.solve(gram, np.broadcast_to(np.eye(4), gram.shape))
    return a[0] if single else a


def coarsest_neighbor_assignment(dm):
    """Assign every active vertex to an incident tet of minimal level.

    Ties are broken by the smallest forest tet id. Returns positions into
    ``dm.tets``, one per active vertex.
    """
    lev = dm.mesh.levels[dm.tets]
    vpos = np.searchsorted(dm.vertices, dm.tet_verts)
    n = len(dm.tets)
    owner = np.repeat(np.arange(n), 4)
    v = vpos.ravel()
    order = np.lexsort((dm.tets[owner], lev[owner], v))
    v_sorted = v[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = v_sorted[1:] != v_sorted[:-1]
    best = np.empty(len(dm.vertices), dtype=np.int64)
    best[v_sorted[first]] = owner[order][first]
    return best[dm.vertex_active]


def quasi_interpolate(dm, u, assignment=None, degree=5):
    """Quasi-interpolation onto the nodal space with dual basis weights.

    Parameters
    ----------
    dm : DofMap
    u : callable or ndarray
        A scalar callable on points (n, 3), or nodal values over
        ``dm.vertices`` describing a P1 function (integrated exactly).
    assignment : ndarray, optional
        Position in ``dm.tets`` for each active vertex; coarsest neighbour by
        default.

    Returns
    -------
    ndarray
        Coefficients of the active vertices.
    """
    if assignment is None:
        assignment = coarsest_neighbor_assignment(dm)
    assignment = np.asarray(assignment, dtype=np.int64)
    act = dm.active_vertices
    if len(assignment) != len(act):
        raise InvalidAssignmentError("assignment must list one tet per active vertex")
    tv = dm.tet_verts[assignment]
    hit = tv == act[:, None]
    if not np.all(hit.any(axis=1)):
        raise InvalidAssignmentError("vertex assigned to a non-incident tetrahedron")
    local = hit.argmax(axis=1)
    x = dm.mesh.coords[tv]
    a = dual_basis(x)[np.arange(len(act)), local]  # (n, 4)
    _, vol = barycentric_gradients(x)
    if callable(u):
        bary, w = tet_rule(degree)
        pts = np.einsum("qk,nkd->nqd", bary, x)
        vals = _check_finite(np.asarray(u(pts.reshape(-1, 3)), dtype=float), "scalar field")
        vals = vals.reshape(len(act), len(w))
        psi = a @ bary.T  # (n, q)
        return vol * np.einsum("q,nq,nq->n", w, psi, vals)
    coef = np.asarray(u, dtype=float)
    uk = coef[np.searchsorted(dm.vertices, tv)]  # (n, 4)
    gram = (np.eye(4) + 1.0) / 20.0
    return vol * np.einsum("nk,kl,nl->n", a, gram, uk)
