from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fosls.quadrature import MAX_DEGREE, edge_rule, polar_split_rule, triangle_rule


def dirichlet_moment(a, b):
    # int over the reference triangle of x^a y^b
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@given(st.integers(1, 40))
def test_triangle_rule_exact_for_all_monomials(d):
    rule = triangle_rule(d)
    x, y = rule.points.T
    assert rule.degree >= d
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 0.5) < 1e-14
    worst = max(
        abs((rule.weights * x**a * y**b).sum() - dirichlet_moment(a, b))
        for a in range(d + 1)
        for b in range(d + 1 - a)
    )
    assert worst < 1e-13


@given(st.integers(1, 40))
def test_edge_rule_exact(d):
    rule = edge_rule(d)
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 1.0) < 1e-14
    for k in range(d + 1):
        assert abs((rule.weights * rule.points**k).sum() - 1.0 / (k + 1)) < 1e-14


def test_triangle_midpoint_moment():
    rule = triangle_rule(1)
    assert abs((rule.weights * rule.points.sum(axis=1)).sum() - 1.0 / 3.0) < 1e-15


def test_edge_rule_degree5_is_three_point_gauss():
    rule = edge_rule(5)
    assert len(rule) == 3
    assert abs(rule.weights.sum() - 1.0) < 1e-15


def test_triangle_degree20_dirichlet_moment():
    rule = triangle_rule(20)
    x, y = rule.points.T
    exact = factorial(8) * factorial(8) / factorial(18)
    assert abs((rule.weights * x**8 * y**8).sum() - exact) < 1e-13


@pytest.mark.parametrize("d", [0, MAX_DEGREE + 1])
def test_unsupported_degree(d):
    with pytest.raises(ValueError):
        triangle_rule(d)
    with pytest.raises(ValueError):
        edge_rule(d)


def test_rules_are_read_only():
    rule = triangle_rule(4)
    with pytest.raises(ValueError):
        rule.weights[0] = 1.0


SPLIT_TRIANGLES = [
    np.array([[0.1, 0.2], [0.9, 0.1], [0.3, 0.8]]),  # circle crosses two edges
    np.array([[0.0, 0.0], [0.8, 0.0], [0.0, 0.8]]),  # origin at a vertex
    np.array([[-0.4, -0.3], [0.6, -0.2], [0.0, 0.7]]),  # origin inside
    np.array([[0.7, 0.1], [1.0, 0.2], [0.8, 0.5]]),  # entirely outside the circle
]


@pytest.mark.parametrize("tri", SPLIT_TRIANGLES)
def test_split_rule_integrates_polynomials(tri):
    pts, w, _ = polar_split_rule(tri, 0.5, 8)
    A = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    ref = triangle_rule(8)
    xr = tri[0] + ref.points @ A.T
    wr = ref.weights * abs(np.linalg.det(A))
    for f in (lambda p: np.ones(len(p)), lambda p: p[:, 0] ** 3 * p[:, 1] + p[:, 1] ** 4 - 2 * p[:, 0]):
        assert abs((w * f(pts)).sum() - (wr * f(xr)).sum()) < 1e-14


def test_split_rule_inside_area_of_sector():
    R = 0.5
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    _, w, inside = polar_split_rule(tri, R, 6)
    assert abs(w[inside].sum() - np.pi * R**2 / 6) < 1e-14


def test_split_rule_rejects_origin_on_edge_interior():
    tri = np.array([[-0.5, 0.0], [0.5, 0.0], [0.0, 0.5]])
    with pytest.raises(ValueError):
        polar_split_rule(tri, 0.3, 4)
