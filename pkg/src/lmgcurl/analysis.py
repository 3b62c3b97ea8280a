"""Measurements behind the convergence theory.

Covers colorings of the level dof sets, energy cosines between color-class
subspaces on different levels, and contraction trends along adaptive runs.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ._kernels import greedy_color
from .adaptive import run_adaptive

__all__ = [
    "ColoringPartition",
    "ScsSample",
    "ScsResult",
    "greedy_coloring",
    "subspace_cosine",
    "measure_scs",
    "uniformity_study",
]


def _incidence(table, n):
    rows = np.repeat(np.arange(len(table)), table.shape[1])
    cols = table.ravel()
    keep = cols >= 0
    return sp.csr_matrix((np.ones(int(keep.sum())), (rows[keep], cols[keep])), shape=(len(table), n))


def _color(table, n, members):
    T = _incidence(table, n)
    adj = (T.T @ T).tocsr()
    adj.sort_indices()
    c = greedy_color(adj.indptr.astype(np.int64), adj.indices.astype(np.int64),
                     np.asarray(members, dtype=np.int64), n)
    return c[members]


@dataclass
class ColoringPartition:
    """Colors of the smoothing dofs of every level.

    ``vertex_colors[l][k]`` is the color of ``vertices[l][k]`` (and likewise
    for edges).
    """

    vertices: list
    edges: list
    vertex_colors: list
    edge_colors: list

    @property
    def n_vertex_colors(self):
        return max((int(c.max()) + 1 for c in self.vertex_colors if len(c)), default=0)

    @property
    def n_edge_colors(self):
        return max((int(c.max()) + 1 for c in self.edge_colors if len(c)), default=0)

    def classes(self, l, family):
        """List of dof arrays, one per color, on level ``l`` (family ``"edge"`` or ``"vertex"``)."""
        dofs = self.edges[l] if family == "edge" else self.vertices[l]
        col = self.edge_colors[l] if family == "edge" else self.vertex_colors[l]
        if len(col) == 0:
            return []
        return [dofs[col == c] for c in range(int(col.max()) + 1)]

    def is_valid(self, dofmaps):
        """Brute-force check that no tet carries two same-colored dofs."""
        for l, dm in enumerate(dofmaps):
            for table, n, dofs, col in (
                (dm.tet_vert_dofs, dm.n_vertices, self.vertices[l], self.vertex_colors[l]),
                (dm.tet_edge_dofs, dm.n_edges, self.edges[l], self.edge_colors[l]),
            ):
                full = -np.ones(n + 1, dtype=np.int64)
                full[dofs] = col
                c = full[table]  # index -1 hits the sentinel slot
                c = np.where(table >= 0, c, -1)
                cs = np.sort(c, axis=1)
                dup = (cs[:, 1:] == cs[:, :-1]) & (cs[:, 1:] >= 0)
                if dup.any():
                    return False
        return True


def greedy_coloring(dofmaps, dof_sets):
    """First-fit coloring of each level's smoothing dofs, ascending dof index.

    Two dofs conflict when they share a tetrahedron of their level mesh.

    Parameters
    ----------
    dofmaps : list of DofMap
        One per level.
    dof_sets : LevelDofSets
    """
    vc, ec = [], []
    for l, dm in enumerate(dofmaps):
        vc.append(_color(dm.tet_vert_dofs, dm.n_vertices, dof_sets.vertices[l]))
        ec.append(_color(dm.tet_edge_dofs, dm.n_edges, dof_sets.edges[l]))
    return ColoringPartition(
        vertices=[np.asarray(v) for v in dof_sets.vertices],
        edges=[np.asarray(e) for e in dof_sets.edges],
        vertex_colors=vc,
        edge_colors=ec,
    )


def _inv_sqrt_factor(G):
    """Matrix ``W`` with ``W^T G W = I`` for an SPD Gram matrix."""
    G = G.toarray() if sp.issparse(G) else np.asarray(G)
    d = np.diag(G)
    off = G - np.diag(d)
    if not np.any(off):
        return np.diag(1.0 / np.sqrt(d))
    Lc = np.linalg.cholesky(G)
    return sla.solve_triangular(Lc, np.eye(len(G)), lower=True).T


def subspace_cosine(A, U, V):
    """Largest energy cosine between ``span(U)`` and ``span(V)``.

    ``U`` and ``V`` hold basis vectors (columns) in the space of ``A``.
    Returns ``sigma_max(Wu^T U^T A V Wv)`` with ``Wu``, ``Wv`` orthonormalising
    the two bases in the energy product.
    """
    A = sp.csr_matrix(A)
    U = sp.csr_matrix(U)
    V = sp.csr_matrix(V)
    if U.shape[1] == 0 or V.shape[1] == 0:
        return 0.0
    AV = A @ V
    C = (U.T @ AV).toarray()
    if not np.any(C):
        return 0.0
    Wu = _inv_sqrt_factor(U.T @ (A @ U))
    Wv = _inv_sqrt_factor(V.T @ AV)
    s = np.linalg.svd(Wu.T @ C @ Wv, compute_uv=False)
    return float(min(s[0], 1.0))


@dataclass
class ScsSample:
    """Energy cosine between class ``i`` on level ``l`` and class ``j`` on level ``m``."""

    l: int
    m: int
    family_l: str
    family_m: str
    class_l: int
    class_m: int
    cosine: float


@dataclass
class ScsResult:
    samples: list
    distance: np.ndarray
    max_cosine: np.ndarray
    q_hat: float
    c_hat: float
    seed: int = 0
    notes: dict = field(default_factory=dict)


def _basis(mgh, l, family, dofs):
    """Columns of a class subspace, expressed in level-``l`` edge coefficients."""
    lev = mgh.levels[l]
    if family == "coarse":
        return sp.identity(lev.n_dofs, format="csr")
    if family == "edge":
        n = lev.n_dofs
        return sp.csr_matrix((np.ones(len(dofs)), (dofs, np.arange(len(dofs)))), shape=(n, len(dofs)))
    return lev.G[:, dofs].tocsr()


def _lift(mgh, B, l, m):
    for k in range(l, m):
        B = mgh.levels[k].P @ B
    return B.tocsr()


def measure_scs(mgh, samples=20, seed=0, coloring=None):
    """Sample energy cosines between color classes of different levels.

    Level 0 enters with its whole space, levels ``l >= 1`` with the color
    classes of both dof families (edges and gradients of vertex functions).
    For each level pair, up to ``samples`` class pairs are drawn and the
    exact subspace cosine is computed. A geometric decay ``c q^d`` in the
    level distance ``d`` is fitted to the per-distance maxima.
    """
    from .space import level_dof_sets

    rng = np.random.default_rng(seed)
    dms = [lev.dofmap for lev in mgh.levels]
    if coloring is None:
        coloring = greedy_coloring(dms, level_dof_sets(mgh.hierarchy, dms))
    L = mgh.L
    pool = {0: [("coarse", 0, None)]}
    for l in range(1, L + 1):
        pool[l] = [("edge", i, c) for i, c in enumerate(coloring.classes(l, "edge"))] + [
            ("vertex", i, c) for i, c in enumerate(coloring.classes(l, "vertex"))
        ]
    out = []
    for l in range(L + 1):
        for m in range(l + 1, L + 1):
            pairs = [(a, b) for a in range(len(pool[l])) for b in range(len(pool[m]))]
            if not pairs:
                continue
            if len(pairs) > samples:
                pick = rng.choice(len(pairs), size=samples, replace=False)
                pairs = [pairs[k] for k in np.sort(pick)]
            A = mgh.levels[m].A
            for a, b in pairs:
                fl, il, dl = pool[l][a]
                fm, im, dm_ = pool[m][b]
                U = _lift(mgh, _basis(mgh, l, fl, dl), l, m)
                V = _basis(mgh, m, fm, dm_)
                out.append(ScsSample(l, m, fl, fm, il, im, subspace_cosine(A, U, V)))
    d = np.array([s.m - s.l for s in out])
    dist = np.unique(d)
    mx = np.array([max(s.cosine for s, dd in zip(out, d) if dd == k) for k in dist])
    ok = mx > 0
    if ok.sum() >= 2:
        slope, icpt = np.polyfit(dist[ok], np.log(mx[ok]), 1)
        q, c = float(np.exp(slope)), float(np.exp(icpt))
    else:
        q, c = float("nan"), float("nan")
    return ScsResult(samples=out, distance=dist, max_cosine=mx, q_hat=q, c_hat=c, seed=seed)


def uniformity_study(preset, max_stages=8, hybrid=True, initial_refinements=0, seed=42, **kw):
    """Contraction estimates along an adaptive run.

    Returns
    -------
    list of (L, n_el, contraction) tuples, one per stage.
    """
    rows, _ = run_adaptive(
        preset,
        max_stages=max_stages,
        hybrid=hybrid,
        initial_refinements=initial_refinements,
        seed=seed,
        **kw,
    )
    return [(r.levels - 1, r.n_el, r.contraction) for r in rows]
