"""Local multigrid for the edge element discretisation.

The V-cycle runs on the virtual refinement hierarchy. Level operators are
Galerkin products of the fine operator, and level ``l >= 1`` only relaxes
the dofs whose support lies inside the refinement zone ``omega_l``. Each
relaxation is hybrid: Gauss-Seidel on gradients of nodal functions (through
``G^T A G``) followed by Gauss-Seidel on the edge functions.
"""
import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, column_or_1d

from ._kernels import csr_parts, gs_sweep
from .assembly import assemble
from .exceptions import ConfigurationError, HierarchyError
from .hierarchy import virtual_hierarchy
from .mesh import LOCAL_EDGES
from .space import DofMap, barycentric_coordinates, build_gradient_map, level_dof_sets

__all__ = [
    "Prolongation",
    "MgLevel",
    "MgHierarchy",
    "SolveReport",
    "LocalMultigrid",
    "build_prolongation",
    "build_mg_hierarchy",
    "write_solve_reports",
]

_LE = np.array(LOCAL_EDGES)


@dataclass
class Prolongation:
    """Edge map ``P`` and nodal map ``Pv`` from ``T_l`` to ``T_{l+1}`` (active dofs)."""

    P: sp.csr_matrix
    Pv: sp.csr_matrix


def _snap(v, tol=1e-9):
    # bisection weights are multiples of 1/4; keep them exact
    q = np.round(v * 4.0) / 4.0
    close = np.abs(v - q) < tol
    out = np.where(close, q, v)
    out[np.abs(out) < 1e-14] = 0.0
    return out


def _containers(mesh, fine_tets, coarse_tets):
    """Position in ``coarse_tets`` of the coarse tet containing each fine tet."""
    par = mesh.parents
    cur = np.asarray(fine_tets, dtype=np.int64).copy()
    pos = np.searchsorted(coarse_tets, cur).clip(0, len(coarse_tets) - 1)
    found = coarse_tets[pos] == cur
    for _ in range(mesh.max_level + 1):
        if found.all():
            break
        todo = ~found
        cur[todo] = par[cur[todo]]
        if np.any(cur[todo] < 0):
            raise HierarchyError("fine element not contained in any coarse element")
        pos[todo] = np.searchsorted(coarse_tets, cur[todo]).clip(0, len(coarse_tets) - 1)
        found[todo] = coarse_tets[pos[todo]] == cur[todo]
    if not found.all():
        raise HierarchyError("fine element not contained in any coarse element")
    return pos


def build_prolongation(coarse, fine):
    """Transfer maps between the dof maps of two nested meshes.

    The edge weight ``P[e, E]`` is the path integral of the coarse basis
    function ``b_E`` along the fine edge ``e``, evaluated on the coarse
    element containing ``e`` (the integrand is linear along ``e``, so the
    midpoint rule is exact).

    Parameters
    ----------
    coarse, fine : DofMap

    Returns
    -------
    Prolongation
    """
    mesh = fine.mesh
    if coarse.mesh is not mesh:
        raise HierarchyError("dof maps belong to different meshes")
    cpos = _containers(mesh, fine.tets, coarse.tets)

    # first occurrence of every fine edge
    flat = fine.tet_edges.ravel()
    _, first = np.unique(flat, return_index=True)
    tet_i, loc_k = np.divmod(first, 6)
    ev = fine.edge_verts
    x = mesh.coords
    a, b = x[ev[:, 0]], x[ev[:, 1]]
    mid = 0.5 * (a + b)
    t = b - a

    ct = cpos[tet_i]
    cx = coarse.tet_coords()[ct]
    g, _ = coarse.geometry()
    g = g[ct]
    lam = barycentric_coordinates(cx, mid[:, None, :])[:, 0, :]
    gt = np.einsum("nkd,nd->nk", g, t)
    w = lam[:, _LE[:, 0]] * gt[:, _LE[:, 1]] - lam[:, _LE[:, 1]] * gt[:, _LE[:, 0]]
    w *= coarse.tet_edge_sign[ct]
    w = _snap(w)

    rows = np.repeat(fine.edge_dof, 6)
    cols = coarse.tet_edge_dofs[ct].ravel()
    vals = w.ravel()
    keep = (rows >= 0) & (cols >= 0) & (vals != 0.0)
    P = sp.csr_matrix(
        (vals[keep], (rows[keep], cols[keep])), shape=(fine.n_edges, coarse.n_edges)
    )

    # nodal: old vertices copy, new midpoints average the refinement edge ends
    fv = fine.vertices
    cv_pos = np.searchsorted(coarse.vertices, fv).clip(0, len(coarse.vertices) - 1)
    old = coarse.vertices[cv_pos] == fv
    r_list = [np.flatnonzero(old)]
    c_list = [cv_pos[old]]
    v_list = [np.ones(int(old.sum()))]
    if not old.all():
        gone = np.setdiff1d(coarse.tets, fine.tets)
        kids = mesh.children[gone]
        mids = mesh.tets[kids[:, 0], 3]
        ends = mesh.tets[gone][:, :2]
        mids, ui = np.unique(mids, return_index=True)
        ends = ends[ui]
        new = np.flatnonzero(~old)
        mp = np.searchsorted(mids, fv[new]).clip(0, max(len(mids) - 1, 0))
        if len(mids) == 0 or np.any(mids[mp] != fv[new]):
            raise HierarchyError("new vertex is not a bisection midpoint")
        for j in range(2):
            r_list.append(new)
            c_list.append(np.searchsorted(coarse.vertices, ends[mp, j]))
            v_list.append(np.full(len(new), 0.5))
    r = fine.vertex_dof[np.concatenate(r_list)]
    c = coarse.vertex_dof[np.concatenate(c_list)]
    v = np.concatenate(v_list)
    keep = (r >= 0) & (c >= 0)
    Pv = sp.csr_matrix((v[keep], (r[keep], c[keep])), shape=(fine.n_vertices, coarse.n_vertices))
    return Prolongation(P=P, Pv=Pv)


@dataclass
class MgLevel:
    """Operators and smoothing sets of one level."""

    dofmap: DofMap
    A: sp.csr_matrix
    G: sp.csr_matrix
    AG: sp.csr_matrix
    A_node: sp.csr_matrix
    smooth_edges: np.ndarray
    smooth_vertices: np.ndarray
    P: sp.csr_matrix = None  # to the next finer level
    Pv: sp.csr_matrix = None
    _edge_csr: tuple = field(default=None, repr=False)
    _node_csr: tuple = field(default=None, repr=False)

    @property
    def n_dofs(self):
        return self.A.shape[0]


@dataclass
class MgHierarchy:
    """Per-level Galerkin operators, transfer maps and smoothing sets."""

    mesh: object
    hierarchy: object
    levels: list
    coarse_factor: tuple

    @property
    def L(self):
        return len(self.levels) - 1

    @property
    def fine(self):
        return self.levels[-1]

    def work_units(self, pre=0, post=1, hybrid=True):
        """Smoothed dofs per V-cycle plus the coarse dofs."""
        s = 0
        for lev in self.levels[1:]:
            s += len(lev.smooth_edges) + (len(lev.smooth_vertices) if hybrid else 0)
        return (pre + post) * s + self.levels[0].n_dofs


def _sym(m):
    return ((m + m.T) * 0.5).tocsr()


def build_mg_hierarchy(mesh, A=None, hierarchy=None):
    """Set up the local multigrid hierarchy for the leaves of ``mesh``.

    Parameters
    ----------
    mesh : Mesh
    A : sparse matrix, optional
        Fine operator on the active edges of the leaf mesh; assembled when
        omitted.
    hierarchy : MeshHierarchy, optional
    """
    h = virtual_hierarchy(mesh) if hierarchy is None else hierarchy
    dms = [DofMap.build(mesh, tl) for tl in h.levels]
    sets = level_dof_sets(h, dms)
    if A is None:
        A = assemble(dms[-1]).A
    A = sp.csr_matrix(A)
    if A.shape != (dms[-1].n_edges,) * 2:
        raise ConfigurationError(
            f"operator shape {A.shape} does not match {dms[-1].n_edges} fine dofs"
        )
    ops = [None] * len(dms)
    prol = [None] * len(dms)
    ops[-1] = A
    for l in range(len(dms) - 2, -1, -1):
        prol[l] = build_prolongation(dms[l], dms[l + 1])
        P = prol[l].P
        ops[l] = _sym(P.T @ ops[l + 1] @ P)
    levels = []
    for l, dm in enumerate(dms):
        G = build_gradient_map(dm)
        AG = (ops[l] @ G).tocsr()
        levels.append(
            MgLevel(
                dofmap=dm,
                A=ops[l],
                G=G,
                AG=AG,
                A_node=_sym(G.T @ AG),
                smooth_edges=sets.edges[l],
                smooth_vertices=sets.vertices[l],
                P=None if prol[l] is None else prol[l].P,
                Pv=None if prol[l] is None else prol[l].Pv,
            )
        )
    A0 = levels[0].A.toarray()
    if A0.size:
        try:
            cf = sla.cho_factor(A0)
        except np.linalg.LinAlgError as exc:
            raise HierarchyError("coarse operator is not positive definite") from exc
    else:
        cf = None
    for lev in levels[1:]:
        lev._edge_csr = csr_parts(lev.A)
        lev._node_csr = csr_parts(lev.A_node)
    return MgHierarchy(mesh=mesh, hierarchy=h, levels=levels, coarse_factor=cf)


@dataclass
class SolveReport:
    """Outcome of one multigrid solve."""

    level: int
    n_elements: int
    n_dofs: int
    iters: int
    converged: bool
    residuals: list
    contraction_estimate: float = float("nan")
    work_units: int = 0

    @property
    def rates(self):
        r = np.asarray(self.residuals)
        return r[1:] / r[:-1] if len(r) > 1 else np.zeros(0)

    def row(self):
        return [
            self.level,
            self.n_elements,
            self.n_dofs,
            self.iters,
            f"{self.contraction_estimate:.6g}",
            self.work_units,
        ]


SOLVE_REPORT_COLUMNS = ["level", "n_elements", "n_dofs", "iters", "contraction_estimate", "work_units"]


def write_solve_reports(path, reports):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SOLVE_REPORT_COLUMNS)
        for r in reports:
            w.writerow(r.row())


class LocalMultigrid(BaseEstimator):
    """Local multigrid solver with hybrid Gauss-Seidel smoothing.

    Parameters
    ----------
    pre_smooth, post_smooth : int
        Hybrid sweeps before and after the coarse correction on each level.
    hybrid : bool
        Smooth on gradients of nodal functions as well as on edge functions.
        Switching it off is only meant for ablation studies.
    mode : {"iteration", "pcg"}
        Plain stationary iteration, or conjugate gradients preconditioned
        with the symmetrised cycle.
    reduction : float
        Target reduction of the Euclidean residual norm.
    max_iter : int
    """

    def __init__(self, pre_smooth=0, post_smooth=1, hybrid=True, mode="iteration",
                 reduction=1e-8, max_iter=200):
        self.pre_smooth = pre_smooth
        self.post_smooth = post_smooth
        self.hybrid = hybrid
        self.mode = mode
        self.reduction = reduction
        self.max_iter = max_iter

    def _validate_params(self):
        if self.mode not in ("iteration", "pcg"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.reduction < 1.0:
            raise ConfigurationError("reduction must lie in (0, 1)")
        if self.pre_smooth < 0 or self.post_smooth < 0 or self.pre_smooth + self.post_smooth < 1:
            raise ConfigurationError("need at least one smoothing step per level")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be positive")

    def fit(self, mesh, A=None, hierarchy=None):
        """Build the multigrid hierarchy on the leaves of ``mesh``."""
        self._validate_params()
        self.hierarchy_ = build_mg_hierarchy(mesh, A, hierarchy)
        self.n_levels_ = len(self.hierarchy_.levels)
        self.n_dofs_ = self.hierarchy_.fine.n_dofs
        self.work_units_ = self.hierarchy_.work_units(self.pre_smooth, self.post_smooth, self.hybrid)
        return self

    # smoothing -------------------------------------------------------------

    def _smooth(self, lev, e, res, forward):
        if forward:
            if self.hybrid:
                self._node_sweep(lev, e, res, lev.smooth_vertices)
            gs_sweep(*lev._edge_csr, lev.smooth_edges, res, e)
        else:
            gs_sweep(*lev._edge_csr, lev.smooth_edges[::-1], res, e)
            if self.hybrid:
                self._node_sweep(lev, e, res, lev.smooth_vertices[::-1])

    @staticmethod
    def _node_sweep(lev, e, res, order):
        if len(order) == 0:
            return
        rv = lev.G.T @ res
        d = np.zeros(lev.G.shape[1])
        gs_sweep(*lev._node_csr, order, rv, d)
        e += lev.G @ d
        res -= lev.AG @ d

    def _cycle(self, r, pre, post):
        """Correction ``C r`` of one V-cycle applied to the residual ``r``."""
        levels = self.hierarchy_.levels
        L = len(levels) - 1
        rs = [None] * (L + 1)
        es = [None] * (L + 1)
        rs[L] = r
        for l in range(L, 0, -1):
            lev = levels[l]
            e = np.zeros(lev.n_dofs)
            res = rs[l].copy()
            for _ in range(pre):
                self._smooth(lev, e, res, forward=False)
            es[l] = e
            rs[l - 1] = levels[l - 1].P.T @ res
        cf = self.hierarchy_.coarse_factor
        e = sla.cho_solve(cf, rs[0]) if cf is not None else np.zeros(0)
        for l in range(1, L + 1):
            lev = levels[l]
            e = es[l] + levels[l - 1].P @ e
            res = rs[l] - lev.A @ e
            for _ in range(post):
                self._smooth(lev, e, res, forward=True)
        return e

    def ssc_step(self, x, b):
        """One multiplicative subspace correction sweep from the iterate ``x``."""
        check_is_fitted(self, "hierarchy_")
        A = self.hierarchy_.fine.A
        return x + self._cycle(b - A @ x, self.pre_smooth, self.post_smooth)

    def error_propagation(self, e, adjoint=False):
        """Apply ``E = I - C A`` (or its energy adjoint) to the error ``e``."""
        check_is_fitted(self, "hierarchy_")
        A = self.hierarchy_.fine.A
        pre, post = self.pre_smooth, self.post_smooth
        if adjoint:
            pre, post = post, pre
        return e - self._cycle(A @ e, pre, post)

    def estimate_contraction(self, iters=30, seed=0, tol=1e-6):
        """Power-iteration estimate of the energy norm of the error propagator.

        Iterates ``E* E`` (with ``E*`` the energy adjoint) and returns the
        square root of its dominant eigenvalue estimate.
        """
        check_is_fitted(self, "hierarchy_")
        A = self.hierarchy_.fine.A
        n = A.shape[0]
        if n == 0:
            return 0.0
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(n)
        v /= np.sqrt(v @ (A @ v))
        est = 0.0
        for _ in range(iters):
            ev = self.error_propagation(v)
            new = float(np.sqrt(max(ev @ (A @ ev), 0.0)))
            w = self.error_propagation(ev, adjoint=True)
            nw = np.sqrt(max(w @ (A @ w), 0.0))
            if nw < 1e-300:
                return new
            v = w / nw
            if abs(new - est) <= tol * max(new, 1e-300):
                est = new
                break
            est = new
        return est

    # outer iterations -----------------------------------------------------

    def solve(self, b, x0=None):
        """Solve ``A x = b`` to the configured residual reduction.

        Returns
        -------
        x : ndarray
        report : SolveReport
        """
        check_is_fitted(self, "hierarchy_")
        hier = self.hierarchy_
        A = hier.fine.A
        b = column_or_1d(np.asarray(b, dtype=float), warn=False)
        if b.shape[0] != A.shape[0]:
            raise ConfigurationError(f"rhs has {b.shape[0]} entries, expected {A.shape[0]}")
        x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
        r = b - A @ x
        r0 = float(np.linalg.norm(r))
        hist = [r0]
        it = 0
        converged = r0 == 0.0
        if not converged:
            if self.mode == "pcg":
                x, hist, converged = self._pcg(A, x, r, r0)
                it = len(hist) - 1
            else:
                while it < self.max_iter:
                    x = x + self._cycle(r, self.pre_smooth, self.post_smooth)
                    r = b - A @ x
                    it += 1
                    hist.append(float(np.linalg.norm(r)))
                    if hist[-1] <= self.reduction * r0:
                        converged = True
                        break
        rep = SolveReport(
            level=hier.L,
            n_elements=hier.fine.dofmap.n_tets,
            n_dofs=A.shape[0],
            iters=it,
            converged=converged,
            residuals=hist,
            work_units=self.work_units_,
        )
        return x, rep

    def _pcg(self, A, x, r, r0):
        m = max(self.pre_smooth, self.post_smooth)
        z = self._cycle(r, m, m)
        p = z.copy()
        rz = r @ z
        hist = [r0]
        for _ in range(self.max_iter):
            Ap = A @ p
            pAp = p @ Ap
            if pAp <= 0 or rz <= 0:
                raise HierarchyError("preconditioned CG met a non-positive curvature direction")
            alpha = rz / pAp
            x = x + alpha * p
            r = r - alpha * Ap
            hist.append(float(np.linalg.norm(r)))
            if hist[-1] <= self.reduction * r0:
                return x, hist, True
            z = self._cycle(r, m, m)
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        return x, hist, False
