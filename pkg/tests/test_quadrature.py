from itertools import product
from math import factorial

import numpy as np
import pytest

from lmgcurl.quadrature import gauss_segment, tet_rule, triangle_rule


def _exact(alpha, dim):
    # mean of prod lam_i^alpha_i over the simplex
    num = np.prod([factorial(a) for a in alpha]) * factorial(dim)
    return num / factorial(sum(alpha) + dim)


@pytest.mark.parametrize("degree", [1, 2, 5])
def test_tet_rule_exactness(degree):
    bary, w = tet_rule(degree)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    for alpha in product(range(degree + 1), repeat=4):
        if sum(alpha) > degree:
            continue
        got = w @ np.prod(bary ** np.array(alpha), axis=1)
        assert got == pytest.approx(_exact(alpha, 3), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("degree", [1, 2, 4])
def test_triangle_rule_exactness(degree):
    bary, w = triangle_rule(degree)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    for alpha in product(range(degree + 1), repeat=3):
        if sum(alpha) > degree:
            continue
        got = w @ np.prod(bary ** np.array(alpha), axis=1)
        assert got == pytest.approx(_exact(alpha, 2), rel=1e-12, abs=1e-15)


def test_tet_rule_size():
    bary, w = tet_rule(5)
    assert len(w) == 14
    np.testing.assert_allclose(bary.sum(axis=1), 1.0)
    assert triangle_rule(4)[0].shape == (6, 3)


def test_gauss_segment():
    t, w = gauss_segment(5)
    for k in range(10):
        assert w @ t**k == pytest.approx(1 / (k + 1), rel=1e-13)


def test_unsupported_degree():
    with pytest.raises(ValueError):
        tet_rule(6)
    with pytest.raises(ValueError):
        triangle_rule(5)
