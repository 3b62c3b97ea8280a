import numpy as np
import pytest
import scipy.linalg as sla

from lmgcurl.analysis import greedy_coloring, measure_scs, subspace_cosine, uniformity_study
from lmgcurl.hierarchy import virtual_hierarchy
from lmgcurl.mesh import Mesh, kuhn_box
from lmgcurl.problems import get_preset
from lmgcurl.solver import build_mg_hierarchy
from lmgcurl.space import DofMap, level_dof_sets
from lmgcurl.verify import graded_mesh

REF = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])


def _coloring(m):
    h = virtual_hierarchy(m)
    dms = [DofMap.build(m, t) for t in h.levels]
    return greedy_coloring(dms, level_dof_sets(h, dms)), dms


def test_single_tet_colors():
    col, dms = _coloring(Mesh(REF, [[0, 1, 2, 3]], dirichlet=[]))
    assert col.n_vertex_colors == 4 and col.n_edge_colors == 6
    assert col.is_valid(dms)


def test_two_tets_share_face():
    x = np.vstack([REF, [[1.0, 1, 1]]])
    col, dms = _coloring(Mesh(x, [[0, 1, 2, 3], [1, 2, 3, 4]], dirichlet=[]))
    assert col.n_vertex_colors == 4
    # 9 edges; the 3 face edges are seen by both tets
    assert col.n_edge_colors == 6
    assert col.is_valid(dms)


def test_invalid_coloring_detected():
    col, dms = _coloring(kuhn_box((2, 2, 2), dirichlet="none"))
    col.edge_colors[0][:] = 0
    assert not col.is_valid(dms)


def test_color_count_stable_under_uniform_refinement():
    m = kuhn_box((2, 2, 2))
    counts = []
    for _ in range(4):
        m.refine_uniform(1)
        col, dms = _coloring(m)
        assert col.is_valid(dms)
        counts.append((col.n_vertex_colors, col.n_edge_colors))
    assert max(c for pair in counts for c in pair) <= 64
    assert counts[-1][0] <= counts[1][0] + 4 and counts[-1][1] <= counts[1][1] + 8


def test_subspace_cosine_against_principal_angles():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((12, 12))
    A = B @ B.T + 12 * np.eye(12)
    U = rng.standard_normal((12, 3))
    V = rng.standard_normal((12, 2))
    R = np.linalg.cholesky(A).T
    ref = np.cos(sla.subspace_angles(R @ U, R @ V)).max()
    assert subspace_cosine(A, U, V) == pytest.approx(ref, rel=1e-10)


def test_subspace_cosine_extremes():
    A = np.diag([1.0, 2.0, 3.0])
    e = np.eye(3)
    assert subspace_cosine(A, e[:, :1], e[:, 1:2]) == 0.0
    assert subspace_cosine(A, e[:, :2], e[:, 1:2]) == pytest.approx(1.0)
    assert subspace_cosine(A, e[:, :0], e[:, 1:2]) == 0.0


@pytest.fixture(scope="module")
def scs():
    m = graded_mesh(rounds=2, uniform=2)
    return measure_scs(build_mg_hierarchy(m), samples=10, seed=0)


def test_scs_decay(scs):
    assert len(scs.distance) >= 2
    assert 0 < scs.q_hat <= 0.95
    assert np.all(np.array([s.cosine for s in scs.samples]) <= 1.0 + 1e-12)


def test_scs_reproducible(scs):
    m = graded_mesh(rounds=2, uniform=2)
    again = measure_scs(build_mg_hierarchy(m), samples=10, seed=0)
    np.testing.assert_array_equal(again.max_cosine, scs.max_cosine)


@pytest.mark.slow
def test_uniformity_study_bounded():
    rows = uniformity_study(get_preset("lshape"), max_stages=6, initial_refinements=2)
    rho = np.array([r[2] for r in rows])
    assert np.all(rho < 0.95)
    assert [r[0] for r in rows] == sorted(r[0] for r in rows)


@pytest.mark.slow
def test_hybrid_ablation_increases_contraction():
    pre = get_preset("lshape")
    on = uniformity_study(pre, max_stages=4, initial_refinements=2)
    off = uniformity_study(pre, max_stages=4, initial_refinements=2, hybrid=False, max_iter=5)
    assert max(r[2] for r in off) >= max(r[2] for r in on) + 0.1
