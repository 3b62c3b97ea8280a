import numpy as np
import pytest

from lmgcurl.exceptions import ConfigurationError
from lmgcurl.problems import PRESETS, get_preset, gradient_field, potential
from lmgcurl.space import DofMap


def _sample(rng, n=50):
    p = rng.uniform(-1, 1, (n, 3))
    # keep away from the axis and from the branch cut y = 0, x > 0
    p = p[(np.hypot(p[:, 0], p[:, 1]) > 0.1) & ~((np.abs(p[:, 1]) < 0.05) & (p[:, 0] > 0))]
    return p


def test_potential_closed_form():
    p = np.array([[1.0, 0, 0], [0, 4.0, 0], [-1.0, 0, 2], [0, -1.0, 0]])
    np.testing.assert_allclose(potential(p), [0.0, 2 * np.sin(np.pi / 4), 1.0, np.sin(3 * np.pi / 4)], atol=1e-15)


def test_gradient_matches_finite_differences():
    p = _sample(np.random.default_rng(0))
    h = 1e-6
    fd = np.column_stack([
        (potential(p + h * e) - potential(p - h * e)) / (2 * h) for e in np.eye(3)
    ])
    np.testing.assert_allclose(gradient_field(p), fd, atol=1e-7)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_is_consistent(name):
    pre = get_preset(name)
    p = _sample(np.random.default_rng(1))
    assert np.abs(pre.curl_of_u_numeric(p)).max() < 1e-6
    assert np.abs(pre.strong_residual(p)).max() < 1e-6
    np.testing.assert_array_equal(pre.div_f(p), 0.0)
    # div u = 0 by finite differences
    h = 1e-5
    div = sum((pre.u(p + h * e)[:, k] - pre.u(p - h * e)[:, k]) / (2 * h) for k, e in enumerate(np.eye(3)))
    assert np.abs(div).max() < 1e-5


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_dirichlet_values_are_potential_differences(name):
    pre = get_preset(name)
    m = pre.build_mesh()
    m.refine_uniform(1)
    dm = DofMap.build(m)
    g = pre.dirichlet_values(dm)
    assert len(g) == int((~dm.edge_active).sum())
    assert np.all(np.isfinite(g))
    ev = dm.edge_verts[~dm.edge_active]
    x = m.coords
    # compare with a path integral away from the axis
    far = (np.hypot(x[ev[:, 0], 0], x[ev[:, 0], 1]) > 0.5) & (np.hypot(x[ev[:, 1], 0], x[ev[:, 1], 1]) > 0.5)
    t, w = np.polynomial.legendre.leggauss(20)
    t, w = 0.5 * (t + 1), 0.5 * w
    for k in np.flatnonzero(far)[:20]:
        a, b = x[ev[k, 0]], x[ev[k, 1]]
        pts = a + t[:, None] * (b - a)
        ref = w @ (pre.u(pts) @ (b - a))
        assert g[k] == pytest.approx(ref, abs=1e-8)


def test_crack_slit_values_match_both_sides():
    pre = get_preset("crack")
    m = pre.build_mesh()
    on_slit = np.flatnonzero((np.abs(m.coords[:, 1]) < 1e-14) & (m.coords[:, 0] > 0))
    assert len(on_slit) > 0
    np.testing.assert_allclose(pre.potential(m.coords[on_slit]), 0.0, atol=1e-15)


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        get_preset("cube")
