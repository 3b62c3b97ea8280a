"""Quadrature rules on segments, triangles and tetrahedra.

All rules are expressed in barycentric coordinates with weights that sum to
one, so that ``sum(w * f(x)) * measure`` approximates the integral over the
physical cell.
"""
import numpy as np

__all__ = ["gauss_segment", "triangle_rule", "tet_rule"]


def gauss_segment(n=5):
    """Gauss-Legendre rule on [0, 1] with ``n`` points.

    Returns
    -------
    t : ndarray, shape (n,)
        Parameter values in (0, 1).
    w : ndarray, shape (n,)
        Weights summing to one.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _orbit(*bary):
    # all distinct permutations of a barycentric tuple
    from itertools import permutations
    return sorted(set(permutations(bary)))


# Strang-Fix / Dunavant 6-point rule, exact for degree 4
_TRI4_A = 0.445948490915965
_TRI4_B = 0.091576213509771
_TRI4_WA = 0.223381589678011
_TRI4_WB = 0.109951743655322


def triangle_rule(degree=4):
    """Symmetric triangle rule in barycentric coordinates.

    Parameters
    ----------
    degree : int
        Requested polynomial exactness. Degrees up to 4 are served by the
        6-point rule; degree 2 by the 3-point edge-midpoint rule; degree 1 by
        the centroid.
    """
    if degree <= 1:
        return np.array([[1.0, 1.0, 1.0]]) / 3.0, np.array([1.0])
    if degree == 2:
        pts = np.array(_orbit(0.5, 0.5, 0.0))
        return pts, np.full(3, 1.0 / 3.0)
    if degree > 4:
        raise ValueError("triangle rules above degree 4 are not tabulated")
    a, b = _TRI4_A, _TRI4_B
    pa = _orbit(a, a, 1.0 - 2.0 * a)
    pb = _orbit(b, b, 1.0 - 2.0 * b)
    pts = np.array(pa + pb)
    w = np.array([_TRI4_WA] * 3 + [_TRI4_WB] * 3)
    return pts, w / w.sum()


# 14-point symmetric rule, exact for degree 5 (weights for unit volume)
_TET5_A1 = 0.0927352503108912
_TET5_A2 = 0.3108859192633006
_TET5_E = 0.0455037041256496
_TET5_W1 = 0.01224884051939366 * 6.0
_TET5_W2 = 0.01878132095300264 * 6.0
_TET5_WE = 0.007091003462846911 * 6.0


def tet_rule(degree=5):
    """Symmetric tetrahedron rule in barycentric coordinates.

    Degree 1 uses the centroid, degree 2 the 4-point rule, anything up to 5 the
    14-point rule. Returns ``(bary, weights)`` with ``bary`` of shape (q, 4).
    """
    if degree <= 1:
        return np.full((1, 4), 0.25), np.array([1.0])
    if degree == 2:
        a = 0.1381966011250105
        pts = np.array(_orbit(a, a, a, 1.0 - 3.0 * a))
        return pts, np.full(4, 0.25)
    if degree > 5:
        raise ValueError("tetrahedron rules above degree 5 are not tabulated")
    a1, a2, e = _TET5_A1, _TET5_A2, _TET5_E
    p1 = _orbit(a1, a1, a1, 1.0 - 3.0 * a1)
    p2 = _orbit(a2, a2, a2, 1.0 - 3.0 * a2)
    pe = _orbit(e, e, 0.5 - e, 0.5 - e)
    pts = np.array(p1 + p2 + pe)
    w = np.array([_TET5_W1] * 4 + [_TET5_W2] * 4 + [_TET5_WE] * 6)
    return pts, w
