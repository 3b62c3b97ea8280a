import numpy as np
import pytest
import scipy.sparse.linalg as spla

from lmgcurl.assembly import assemble
from lmgcurl.estimator import _values_at, estimate, interior_faces, mark
from lmgcurl.exceptions import ConfigurationError
from lmgcurl.mesh import LOCAL_EDGES, LOCAL_FACES, Mesh, kuhn_box
from lmgcurl.problems import get_preset
from lmgcurl.quadrature import tet_rule, triangle_rule
from lmgcurl.space import DofMap, edge_interpolate, edge_shape, edge_shape_curl

ZERO3 = lambda p: np.zeros((len(p), 3))
ZERO = lambda p: np.zeros(len(p))


def _box():
    m = kuhn_box((2, 2, 2), dirichlet="none")
    m.refine_uniform(1)
    m.refine(m.leaves()[:5])
    return DofMap.build(m)


def test_constant_field_has_zero_estimate():
    dm = _box()
    c = np.array([1.0, 2.0, -0.5])
    f = lambda p: np.tile(c, (len(p), 1))
    coef = edge_interpolate(dm, f, active_only=False)
    rep = estimate(dm, coef, f, ZERO)
    assert rep.eta_max < 1e-12


def test_tangential_trace_continuous():
    dm = _box()
    coef = np.random.default_rng(0).standard_normal(len(dm.edges))
    pairs, local = interior_faces(dm.tet_verts)
    fb, _ = triangle_rule(4)
    lf = np.array(LOCAL_FACES)
    fx = dm.mesh.coords[dm.tet_verts[pairs[:, 0][:, None], lf[local[:, 0]]]]
    qp = np.einsum("qk,fkd->fqd", fb, fx)
    n = np.cross(fx[:, 1] - fx[:, 0], fx[:, 2] - fx[:, 0])
    jump = _values_at(dm, coef, pairs[:, 0], qp) - _values_at(dm, coef, pairs[:, 1], qp)
    assert np.abs(np.cross(jump, n[:, None, :])).max() < 1e-12
    assert np.abs(jump).max() > 1e-3


def test_interior_faces_brute_force():
    dm = _box()
    pairs, local = interior_faces(dm.tet_verts)
    seen = {}
    for k, tv in enumerate(dm.tet_verts):
        for j, f in enumerate(LOCAL_FACES):
            seen.setdefault(tuple(sorted(tv[list(f)])), []).append(k)
    expect = sorted(tuple(sorted(v)) for v in seen.values() if len(v) == 2)
    assert sorted(tuple(sorted(p)) for p in pairs) == expect
    lf = np.array(LOCAL_FACES)
    fa = np.sort(dm.tet_verts[pairs[:, 0][:, None], lf[local[:, 0]]], axis=1)
    fb = np.sort(dm.tet_verts[pairs[:, 1][:, None], lf[local[:, 1]]], axis=1)
    np.testing.assert_array_equal(fa, fb)


def _local_field(x, c, pts):
    return sum(c[e] * edge_shape(x, e, pts) for e in range(6))


def test_two_tet_oracle():
    x = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0.7, 0.8, 0.9]])
    m = Mesh(x, [[0, 1, 2, 3], [1, 2, 3, 4]], dirichlet=[])
    dm = DofMap.build(m)
    coef = np.random.default_rng(4).standard_normal(len(dm.edges))
    f = lambda p: np.column_stack([p[:, 1], -p[:, 0], 1 + p[:, 2]])
    div_f = lambda p: np.ones(len(p))
    rep = estimate(dm, coef, f, div_f)

    tb, tw = tet_rule(2)
    fb, fw = triangle_rule(2)
    loc = []
    for k in range(2):
        xk = m.coords[dm.tet_verts[k]]
        c = coef[dm.tet_edges[k]] * dm.tet_edge_sign[k]
        loc.append((xk, c))
    face = np.array([[1.0, 0, 0], [0, 1, 0], [0, 0, 1]])
    qp = fb @ face
    n = np.cross(face[1] - face[0], face[2] - face[0])
    area = 0.5 * np.linalg.norm(n)
    n /= 2 * area
    ua = _local_field(*loc[0], qp)
    ub = _local_field(*loc[1], qp)
    ca = sum(loc[0][1][e] * edge_shape_curl(loc[0][0], e) for e in range(6))
    cb = sum(loc[1][1][e] * edge_shape_curl(loc[1][0], e) for e in range(6))
    face_term = area * (fw @ np.sum((ua - ub) ** 2, axis=1)) + area * np.sum(np.cross(ca - cb, n) ** 2)
    for k in range(2):
        xk, c = loc[k]
        h = max(np.linalg.norm(xk[a] - xk[b]) for a, b in LOCAL_EDGES)
        vol = abs(np.linalg.det(xk[1:] - xk[0])) / 6
        tp = tb @ xk
        # degree-2 integrand is exact under the 4-point rule
        vol_term = vol * (tw @ (np.sum((f(tp) - _local_field(xk, c, tp)) ** 2, axis=1) + 1.0))
        expect = h**2 * vol_term + 0.5 * h * face_term
        assert rep.eta[k] ** 2 == pytest.approx(expect, rel=1e-10)


def test_homogeneity():
    dm = _box()
    rng = np.random.default_rng(1)
    coef = rng.standard_normal(len(dm.edges))
    f = lambda p: np.sin(p)
    div_f = lambda p: np.cos(p).sum(axis=1)
    base = estimate(dm, coef, f, div_f).eta
    scaled = estimate(dm, -3 * coef, lambda p: -3 * f(p), lambda p: -3 * div_f(p)).eta
    np.testing.assert_allclose(scaled, 3 * base, rtol=1e-12)


def test_locality():
    dm = _box()
    rng = np.random.default_rng(2)
    coef = rng.standard_normal(len(dm.edges))
    E = len(dm.edges) // 2
    before = estimate(dm, coef, ZERO3, ZERO).eta
    coef[E] += 1.0
    after = estimate(dm, coef, ZERO3, ZERO).eta
    touch = np.any(dm.tet_edges == E, axis=1)
    pairs, _ = interior_faces(dm.tet_verts)
    near = touch.copy()
    for a, b in pairs:
        if touch[a] or touch[b]:
            near[a] = near[b] = True
    changed = np.abs(after - before) > 1e-14
    assert np.all(changed[touch])
    assert not np.any(changed[~near])


def test_mark_maximum_strategy():
    dm = _box()
    coef = np.random.default_rng(3).standard_normal(len(dm.edges))
    rep = estimate(dm, coef, ZERO3, ZERO)
    top = rep.tets[rep.eta == rep.eta.max()]
    np.testing.assert_array_equal(mark(rep, 1.0), top)
    half = mark(rep, 0.5)
    assert set(half) == set(rep.tets[rep.eta >= 0.5 * rep.eta_max])
    assert len(mark(rep, 0.1)) >= len(half)


def test_mark_validation():
    dm = _box()
    rep = estimate(dm, np.zeros(len(dm.edges)), ZERO3, ZERO)
    assert len(mark(rep)) == 0
    with pytest.raises(ConfigurationError):
        mark(rep, 0.0)
    with pytest.raises(ConfigurationError):
        mark(rep, 1.5)
    with pytest.raises(ConfigurationError):
        estimate(dm, np.zeros(len(dm.edges)), ZERO3)
    with pytest.raises(ConfigurationError):
        estimate(dm, np.zeros(3), ZERO3, ZERO)


def _touching_fraction(theta):
    pre = get_preset("lshape")
    m = pre.build_mesh()
    dm = DofMap.build(m)
    s = assemble(dm, pre.f)
    g = pre.dirichlet_values(dm)
    coef = np.empty(len(dm.edges))
    coef[dm.edge_active] = spla.spsolve(s.A.tocsc(), s.rhs(g))
    coef[~dm.edge_active] = g
    rep = estimate(dm, coef, pre.f, pre.div_f)
    marked = mark(rep, theta)
    r = np.linalg.norm(m.coords[m.tets[marked]][:, :, :2], axis=2).min(axis=1)
    return np.mean(r < 1e-12)


def test_lshape_marks_reentrant_edge():
    assert _touching_fraction(0.7) == 1.0
    assert _touching_fraction(0.9) == 1.0
    # at theta = 0.5 a few second-layer tets are marked as well
    assert _touching_fraction(0.5) > 0.75
