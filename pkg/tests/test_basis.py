import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fosls.basis import (
    EDGE_NORMAL,
    REF_VERTICES,
    ScalarBasis,
    VectorBasis,
    dubiner,
    edge_points,
    legendre01,
    piola_push,
    poly_dim,
)
from fosls.quadrature import edge_rule, triangle_rule

ref_points = st.tuples(st.floats(0, 1), st.floats(0, 1)).filter(lambda p: p[0] + p[1] <= 1).map(np.array)


def monomials(p, x):
    return np.column_stack([x[:, 0] ** a * x[:, 1] ** (n - a) for n in range(p + 1) for a in range(n + 1)])


def generic_points(n, seed=0):
    r = np.random.default_rng(seed).random((n, 2))
    flip = r.sum(1) > 1
    r[flip] = 1 - r[flip]
    return r


def fd_grad(f, x, h=1e-6):
    e = np.eye(2)
    return np.stack([(f(x + h * e[k]) - f(x - h * e[k])) / (2 * h) for k in range(2)], axis=-1)


@pytest.mark.parametrize("p", range(0, 9))
def test_dubiner_orthonormal(p):
    rule = triangle_rule(2 * p + 2)
    v, _ = dubiner(p, rule.points)
    G = (v * rule.weights[:, None]).T @ v
    assert v.shape[1] == poly_dim(p)
    assert np.abs(G - np.eye(len(G))).max() < 1e-12


@pytest.mark.parametrize("p", [1, 2, 3, 5, 8])
def test_scalar_gradients_match_finite_differences(p):
    b = ScalarBasis(p)
    x = generic_points(6, p) * 0.9 + 0.03
    _, g = b.eval(x)
    fd = fd_grad(lambda y: b.eval(y)[0], x)
    assert np.abs(g - fd).max() < 1e-6 * max(1, np.abs(g).max())


def test_scalar_p1_barycentre():
    v, _ = ScalarBasis(1).eval(np.array([[1 / 3, 1 / 3]]))
    assert np.allclose(v, 1 / 3, atol=1e-15)


@given(st.integers(1, 8), ref_points)
def test_scalar_partition_of_unity(p, x):
    v, g = ScalarBasis(p).eval(x[None])
    # vertex functions sum to one; all higher functions vanish at the vertices
    assert abs(v[0, :3].sum() - 1) < 1e-14
    assert np.abs(g[0, :3].sum(axis=0)).max() < 1e-14


@pytest.mark.parametrize("p", range(1, 9))
def test_scalar_basis_spans_polynomials(p):
    b = ScalarBasis(p)
    x = generic_points(3 * b.size, p)
    v, _ = b.eval(x)
    assert b.size == poly_dim(p)
    assert np.linalg.matrix_rank(v, tol=1e-10) == b.size
    # same span as the monomials: stacking them does not raise the rank
    assert np.linalg.matrix_rank(np.hstack([v, monomials(p, x)]), tol=1e-9) == b.size


def test_scalar_p3_vandermonde_nonsingular():
    x = generic_points(10, 3)
    v, _ = ScalarBasis(3).eval(x)
    assert v.shape == (10, 10)
    assert np.linalg.cond(v) < 1e8


def test_scalar_groups_vanish_where_required():
    p = 5
    b = ScalarBasis(p)
    v, _ = b.eval(REF_VERTICES)
    assert np.allclose(v[:, :3], np.eye(3))
    assert np.abs(v[:, 3:]).max() < 1e-14
    t = np.linspace(0, 1, 7)
    for i in range(3):
        ve, _ = b.eval(edge_points(i, t))
        others = [b.edge_slice(j) for j in range(3) if j != i]
        for sl in others:
            assert np.abs(ve[:, sl]).max() < 1e-14
        assert np.abs(ve[:, b.interior_slice]).max() < 1e-14


def test_scalar_mass_conditioning_algebraic():
    conds = []
    for p in range(2, 11):
        rule = triangle_rule(2 * p)
        v, _ = ScalarBasis(p).eval(rule.points)
        conds.append(np.linalg.cond((v * rule.weights[:, None]).T @ v))
    # at most polynomial growth: log cond grows like log p, far below exponential
    assert conds[-1] < 1e8
    slope = np.polyfit(np.log(np.arange(2, 11)), np.log(conds), 1)[0]
    assert slope < 10


@pytest.mark.parametrize("family,p,size", [("RT", 1, 3), ("RT", 2, 8), ("BDM", 1, 6), ("BDM", 2, 12), ("RT", 4, 24)])
def test_vector_dimensions(family, p, size):
    b = VectorBasis(family, p)
    v, d = b.eval(generic_points(4))
    assert b.size == size
    assert v.shape == (4, size, 2) and d.shape == (4, size)


def rt_span(p, x):
    # P_{p-1}^2 + x P_{p-1} in monomials
    m = monomials(p - 1, x)
    top = monomials(p - 1, x)[:, poly_dim(p - 2):]
    cols = [np.stack([c, 0 * c], -1) for c in m.T] + [np.stack([0 * c, c], -1) for c in m.T]
    cols += [x * c[:, None] for c in top.T]
    return np.stack(cols, axis=1)


@pytest.mark.parametrize("family", ["RT", "BDM"])
@pytest.mark.parametrize("p", range(1, 7))
def test_vector_span(family, p):
    b = VectorBasis(family, p)
    x = generic_points(2 * b.size, p)
    v, _ = b.eval(x)
    if family == "RT":
        ref = rt_span(p, x)
    else:
        m = monomials(p, x)
        ref = np.stack([np.stack([c, 0 * c], -1) for c in m.T] + [np.stack([0 * c, c], -1) for c in m.T], 1)
    flat = lambda a: a.transpose(0, 2, 1).reshape(-1, a.shape[1])
    assert ref.shape[1] == b.size
    assert np.linalg.matrix_rank(flat(v), tol=1e-9) == b.size
    assert np.linalg.matrix_rank(np.hstack([flat(v), flat(ref)]), tol=1e-8) == b.size


@pytest.mark.parametrize("family", ["RT", "BDM"])
@pytest.mark.parametrize("p", range(1, 7))
def test_vector_divergence_matches_finite_differences(family, p):
    b = VectorBasis(family, p)
    x = generic_points(5, p) * 0.9 + 0.03
    _, d = b.eval(x)
    e = np.eye(2)
    h = 1e-6
    fd = sum((b.eval(x + h * e[k])[0][..., k] - b.eval(x - h * e[k])[0][..., k]) / (2 * h) for k in range(2))
    assert np.abs(d - fd).max() < 1e-6 * max(1, np.abs(d).max())


def test_rt2_divergence_is_linear():
    b = VectorBasis("RT", 2)
    x = generic_points(30)
    _, d = b.eval(x)
    V = monomials(1, x)
    coef, *_ = np.linalg.lstsq(V, d, rcond=None)
    assert np.abs(V @ coef - d).max() < 1e-12


@pytest.mark.parametrize("family", ["RT", "BDM"])
@pytest.mark.parametrize("p", range(1, 7))
def test_edge_moments_are_dual_and_interior_traces_vanish(family, p):
    b = VectorBasis(family, p)
    er = edge_rule(2 * p + 4)
    for i in range(3):
        v, _ = b.eval(edge_points(i, er.points))
        flux = v @ EDGE_NORMAL[i]  # phi.n ds on the reference edge
        L = np.column_stack([legendre01(j, er.points) for j in range(b.n_edge)])
        mom = (L * er.weights[:, None]).T @ flux
        expect = np.zeros((b.n_edge, b.size))
        expect[:, b.edge_slice(i)] = np.eye(b.n_edge)
        assert np.abs(mom - expect).max() < 1e-11
        # normal trace is a polynomial of the trace degree: fully captured by the moments
        assert np.abs(flux - L @ mom).max() < 1e-11
        if b.n_interior:
            assert np.abs(flux[:, b.interior_slice]).max() < 1e-12


@pytest.mark.parametrize("family", ["RT", "BDM"])
def test_interior_functions_orthonormal(family):
    b = VectorBasis(family, 5)
    rule = triangle_rule(12)
    v, _ = b.eval(rule.points)
    G = np.einsum("q,qik,qjk->ij", rule.weights, v, v)
    I = b.interior_slice
    assert np.abs(G[I, I] - np.eye(b.n_interior)).max() < 1e-11
    assert np.abs(G[: I.start, I]).max() < 1e-11


def test_piola_identity_and_scaling():
    vals = np.random.default_rng(0).random((3, 2))
    div = np.array([1.0, 2.0, 3.0])
    out, d = piola_push(np.eye(2), 1.0, vals, div)
    assert np.allclose(out, vals) and np.allclose(d, div)
    out, d = piola_push(2 * np.eye(2), 4.0, vals, div)
    assert np.allclose(out, vals / 2) and np.allclose(d, div / 4)


def test_piola_rejects_degenerate_map():
    with pytest.raises(ValueError):
        piola_push(np.zeros((2, 2)), 0.0, np.zeros((1, 2)), np.zeros(1))


@pytest.mark.parametrize("family", ["RT", "BDM"])
def test_piola_commutes_with_divergence_on_affine_map(family):
    # divergence of the pushed field by finite differences in physical space
    A = np.array([[1.3, 0.4], [-0.2, 0.9]])
    c = np.array([0.2, -0.1])
    detA = np.linalg.det(A)
    b = VectorBasis(family, 3)
    xh = generic_points(4) * 0.8 + 0.05
    x = c + xh @ A.T
    Ainv = np.linalg.inv(A)

    def push(xp):
        v, d = b.eval((xp - c) @ Ainv.T)
        return piola_push(np.broadcast_to(A, (len(xp), 2, 2)), np.full(len(xp), detA), v, d)

    _, d = push(x)
    h = 1e-6
    e = np.eye(2)
    fd = sum((push(x + h * e[k])[0][..., k] - push(x - h * e[k])[0][..., k]) / (2 * h) for k in range(2))
    assert np.abs(d - fd).max() < 1e-6


def test_invalid_arguments():
    with pytest.raises(ValueError):
        ScalarBasis(0)
    with pytest.raises(ValueError):
        VectorBasis("NED", 2)
    with pytest.raises(ValueError):
        VectorBasis("RT", 0)
