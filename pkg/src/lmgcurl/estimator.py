"""Residual a posteriori error estimator and maximum marking."""
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .mesh import LOCAL_EDGES, LOCAL_FACES
from .quadrature import tet_rule, triangle_rule
from .space import evaluate_edge_field

__all__ = ["EstimatorReport", "estimate", "mark", "interior_faces"]

_LE = np.array(LOCAL_EDGES)
_LF = np.array(LOCAL_FACES)


@dataclass
class EstimatorReport:
    """Element indicators on the leaves of a dof map.

    Attributes
    ----------
    tets : ndarray
        Forest ids of the leaves.
    eta : ndarray
        Indicator per leaf.
    """

    tets: np.ndarray
    eta: np.ndarray
    volume_part: np.ndarray = None
    jump_part: np.ndarray = None

    @property
    def eta_h(self):
        return float(np.sqrt(np.sum(self.eta**2)))

    @property
    def eta_max(self):
        return float(self.eta.max()) if len(self.eta) else 0.0


def interior_faces(tet_verts):
    """Pairs of tets sharing a face.

    Returns
    -------
    pairs : ndarray, shape (F, 2)
        Positions in ``tet_verts``.
    local : ndarray, shape (F, 2)
        Local face index in each of the two tets.
    """
    faces = np.sort(tet_verts[:, _LF], axis=2).reshape(-1, 3)
    order = np.lexsort(faces.T[::-1])
    fs = faces[order]
    same = np.all(fs[1:] == fs[:-1], axis=1)
    i = np.flatnonzero(same)
    a, b = order[i], order[i + 1]
    pairs = np.column_stack([a // 4, b // 4])
    local = np.column_stack([a % 4, b % 4])
    return pairs, local


def _diameters(x):
    return np.linalg.norm(x[:, _LE[:, 0]] - x[:, _LE[:, 1]], axis=2).max(axis=1)


def estimate(dm, coef, f, div_f=None):
    """Element indicators of a discrete solution.

    ``eta_T^2 = h_T^2 (||f - u_h||_T^2 + ||div(f - u_h)||_T^2)
    + h_T/2 * sum_F (||[u_h]||_F^2 + ||[curl u_h x n]||_F^2)`` with the face
    sum over interior faces only. ``h_T`` is the element diameter. Lowest
    order edge functions are divergence free inside each element.

    Parameters
    ----------
    dm : DofMap
        Leaf dof map.
    coef : ndarray
        Coefficients over all edges of ``dm`` (Dirichlet edges included).
    f, div_f : callable
    """
    if div_f is None:
        raise ConfigurationError("the estimator needs the divergence of the source")
    coef = np.asarray(coef, dtype=float)
    if coef.shape[0] != len(dm.edges):
        raise ConfigurationError(f"expected {len(dm.edges)} edge coefficients, got {coef.shape[0]}")
    x = dm.tet_coords()
    _, vol = dm.geometry()
    h = _diameters(x)

    bary, w = tet_rule(5)
    pts = np.einsum("qk,nkd->nqd", bary, x).reshape(-1, 3)
    uh, curl = evaluate_edge_field(dm, coef, bary)
    fv = np.asarray(f(pts), dtype=float).reshape(uh.shape)
    dv = np.asarray(div_f(pts), dtype=float).reshape(uh.shape[:2])
    res = np.einsum("q,nq->n", w, np.sum((fv - uh) ** 2, axis=2) + dv**2) * vol
    volume = h**2 * res

    pairs, local = interior_faces(dm.tet_verts)
    jump = np.zeros(len(dm.tets))
    if len(pairs):
        fb, fw = triangle_rule(4)
        ka, kb = pairs[:, 0], pairs[:, 1]
        fverts = dm.tet_verts[ka[:, None], _LF[local[:, 0]]]  # (F, 3)
        fx = dm.mesh.coords[fverts]
        qp = np.einsum("qk,fkd->fqd", fb, fx)
        nrm = np.cross(fx[:, 1] - fx[:, 0], fx[:, 2] - fx[:, 0])
        area = 0.5 * np.linalg.norm(nrm, axis=1)
        nu = nrm / (2.0 * area[:, None])
        va = _values_at(dm, coef, ka, qp)
        vb = _values_at(dm, coef, kb, qp)
        jv = np.einsum("q,fq->f", fw, np.sum((va - vb) ** 2, axis=2)) * area
        jc = np.sum(np.cross(curl[ka] - curl[kb], nu) ** 2, axis=1) * area
        face = jv + jc
        jump = np.bincount(ka, face, len(dm.tets)) + np.bincount(kb, face, len(dm.tets))
    jump *= 0.5 * h
    eta = np.sqrt(volume + jump)
    return EstimatorReport(tets=dm.tets, eta=eta, volume_part=volume, jump_part=jump)


def _values_at(dm, coef, k, pts):
    # edge field of tets k at physical points pts (F, q, 3)
    g, _ = dm.geometry()
    g = g[k]
    x0 = dm.mesh.coords[dm.tet_verts[k, 0]]
    lam = np.einsum("nkd,nqd->nqk", g, pts - x0[:, None, :])
    lam[:, :, 0] += 1.0
    c = coef[dm.tet_edges[k]] * dm.tet_edge_sign[k]
    gi, gj = g[:, _LE[:, 0]], g[:, _LE[:, 1]]
    li, lj = lam[:, :, _LE[:, 0]], lam[:, :, _LE[:, 1]]
    return np.einsum("ne,nqe,ned->nqd", c, li, gj) - np.einsum("ne,nqe,ned->nqd", c, lj, gi)


def mark(report, theta=0.5):
    """Maximum strategy: forest ids of leaves with ``eta_T >= theta * eta_max``."""
    if not 0.0 < theta <= 1.0:
        raise ConfigurationError("theta must lie in (0, 1]")
    if len(report.eta) == 0:
        raise ConfigurationError("empty estimator report")
    emax = report.eta_max
    if emax == 0.0:
        return np.zeros(0, dtype=np.int64)
    return report.tets[report.eta >= theta * emax]
