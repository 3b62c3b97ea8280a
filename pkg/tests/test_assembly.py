import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from lmgcurl.assembly import (
    assemble,
    assemble_load,
    assemble_nodal_laplacian,
    element_matrices,
    export_matrix_market,
)
from lmgcurl.mesh import Mesh, kuhn_box, lshape_mesh
from lmgcurl.quadrature import tet_rule
from lmgcurl.space import DofMap, barycentric_gradients, build_gradient_map, edge_shape, edge_shape_curl, edge_interpolate


def _random_tet(rng):
    while True:
        x = rng.standard_normal((4, 3))
        if abs(np.linalg.det(x[1:] - x[0])) > 0.2:
            return x


@pytest.mark.parametrize("seed", range(3))
def test_element_matrices_match_quadrature(seed):
    x = _random_tet(np.random.default_rng(seed))
    g, vol = barycentric_gradients(x[None])
    kc, km = element_matrices(g, vol)
    bary, w = tet_rule(5)
    pts = bary @ x
    phi = np.stack([edge_shape(x, e, pts) for e in range(6)])
    curl = np.stack([edge_shape_curl(x, e) for e in range(6)])
    km_ref = vol[0] * np.einsum("q,aqd,bqd->ab", w, phi, phi)
    kc_ref = vol[0] * curl @ curl.T
    np.testing.assert_allclose(km[0], km_ref, atol=1e-13)
    np.testing.assert_allclose(kc[0], kc_ref, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(km[0]) > 0)


def _mesh():
    m = lshape_mesh()
    m.refine_uniform(1)
    m.refine(m.leaves()[:12])
    return m


def test_gradients_in_curl_kernel():
    dm = DofMap.build(_mesh())
    sys_ = assemble(dm)
    G = build_gradient_map(dm)
    assert abs(sys_.A_curl @ G).max() <= 1e-12 * abs(sys_.A_curl).max()


def test_symmetric_positive_definite():
    dm = DofMap.build(_mesh())
    A = assemble(dm).A
    assert abs(A - A.T).max() == 0.0
    lam = np.linalg.eigvalsh(A.toarray())
    assert lam.min() > 0


def test_constant_field_load_patch():
    m = kuhn_box((2, 2, 2), dirichlet="none")
    dm = DofMap.build(m)
    c = np.array([1.0, -2.0, 0.5])
    f = lambda p: np.tile(c, (len(p), 1))
    s = assemble(dm, f)
    u = edge_interpolate(dm, f, active_only=False)
    # constant u has zero curl, so A u = M u = b
    np.testing.assert_allclose(s.A @ u, s.b, atol=1e-13)
    np.testing.assert_allclose(s.A_curl @ u, 0, atol=1e-13)


def test_rhs_lift_equals_full_system():
    m = kuhn_box((2, 2, 2))
    m.refine_uniform(1)
    dm = DofMap.build(m)
    c = np.array([0.2, 0.3, -1.0])
    f = lambda p: np.tile(c, (len(p), 1))
    s = assemble(dm, f)
    u = edge_interpolate(dm, f, active_only=False)
    g = u[~dm.edge_active]
    np.testing.assert_allclose(s.A @ u[dm.edge_active], s.rhs(g), atol=1e-13)


def test_load_linear_in_f():
    dm = DofMap.build(_mesh())
    f1 = lambda p: np.sin(p)
    f2 = lambda p: p**2
    b = assemble_load(dm, lambda p: 2 * f1(p) - 3 * f2(p))
    np.testing.assert_allclose(b, 2 * assemble_load(dm, f1) - 3 * assemble_load(dm, f2), atol=1e-13)


def test_nodal_laplacian():
    dm = DofMap.build(_mesh())
    s = assemble(dm)
    G = build_gradient_map(dm)
    An = assemble_nodal_laplacian(s.A, G)
    np.testing.assert_allclose((An - (G.T @ s.M @ G)).toarray(), 0, atol=1e-13)
    assert np.linalg.eigvalsh(An.toarray()).min() > 0
    with pytest.raises(ValueError):
        assemble_nodal_laplacian(s.A, G[:-1])


def test_single_tet_all_dirichlet_is_empty():
    x = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    dm = DofMap.build(Mesh(x, [[0, 1, 2, 3]]))
    s = assemble(dm)
    assert s.A.shape == (0, 0)


def test_matrix_market_roundtrip(tmp_path):
    dm = DofMap.build(_mesh())
    A = assemble(dm).A
    p = tmp_path / "A.mtx"
    export_matrix_market(p, A, comment="test")
    B = sp.csr_matrix(scipy.io.mmread(p))
    assert abs(A - B).max() == 0.0
