import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fosls.assembly import Discretization
from fosls.errors import scalar_at, vector_at
from fosls.mesh import Mesh, make_disk_mesh, make_square_mesh
from fosls.oracle import manufactured
from fosls.projector import (
    DivRange,
    Field,
    TriNorm,
    best_approx,
    constraint_matrix,
    ih_gamma,
    scalar_l2_error,
    tri_norm_of_error,
    vector_error_norms,
)
from fosls.spaces import ScalarSpace, VectorSpace


def wave(x):
    X, Y = x[..., 0], x[..., 1]
    return np.stack([np.sin(X + Y), X * Y**2], -1)


def wave_div(x):
    X, Y = x[..., 0], x[..., 1]
    return np.cos(X + Y) + 2 * X * Y


WAVE = Field(wave, div=wave_div)
SOLENOIDAL = Field(lambda x: np.stack([np.sin(x[..., 1]), np.cos(x[..., 0])], -1),
                   div=lambda x: np.zeros(x.shape[:-1]))


@pytest.fixture(scope="module", params=["square", "disk"])
def space(request):
    mesh = make_square_mesh(3) if request.param == "square" else make_disk_mesh(1)
    V = VectorSpace(mesh, "RT", 2)
    return V, Discretization(V, None)


def test_reproduces_space_elements():
    mesh = make_square_mesh(3)
    for family, p in [("RT", 1), ("RT", 2), ("BDM", 1), ("BDM", 2)]:
        V = VectorSpace(mesh, family, p)
        # (a + b x) lies in every RT and BDM space
        F = Field(lambda x: np.array([1.0, 2.0]) + 0.5 * x, div=lambda x: np.ones(x.shape[:-1]))
        c = ih_gamma(V, F)
        ref = V.interpolate(F.value)
        assert np.abs(c - ref).max() < 1e-11


def test_solenoidal_field_gives_divergence_free_projection(space):
    V, disc = space
    c = ih_gamma(V, SOLENOIDAL, disc)
    _, _, div2 = vector_error_norms(V, c, None, disc)
    assert np.sqrt(div2) < 1e-11


def test_divergence_is_local_l2_projection():
    # on affine elements div(phi_h) is the L2 projection of div(phi) onto P_{p-1} per element
    mesh = make_square_mesh(2)
    V = VectorSpace(mesh, "RT", 3)
    disc = Discretization(V, None, degree=14)
    c = ih_gamma(V, WAVE, disc)
    R = DivRange(disc)
    for tab, eta in zip(disc.volume(), R.values()):
        _, dh = vector_at(tab, V, c)
        coefs = np.einsum("eq,eqk->ek", tab.dx * wave_div(tab.x), eta)
        proj = np.einsum("ek,eqk->eq", coefs, eta)
        assert np.abs(dh - proj).max() < 1e-11


def test_divergence_optimality_against_candidates(space):
    V, disc = space
    c = ih_gamma(V, WAVE, disc)
    _, _, best = vector_error_norms(V, c, WAVE, disc)
    rng = np.random.default_rng(0)
    for _ in range(10):
        cand = c + rng.standard_normal(V.ndof) * 10.0 ** rng.uniform(-4, 0)
        _, _, d = vector_error_norms(V, cand, WAVE, disc)
        assert np.sqrt(best) <= np.sqrt(d) * (1 + 1e-12)


def test_tri_optimality_under_constraint(space):
    # perturbations that keep the divergence moments do not lower the tri-norm error
    V, disc = space
    res = ih_gamma(V, WAVE, disc, full=True)
    B = res.B.toarray()
    _, _, Vt = np.linalg.svd(B)
    null = Vt[B.shape[0]:]
    base = tri_norm_of_error(V, res.coef, WAVE, disc).value
    rng = np.random.default_rng(1)
    for _ in range(10):
        d = rng.standard_normal(len(null)) @ null * 1e-2
        assert np.abs(B @ d).max() < 1e-12
        assert tri_norm_of_error(V, res.coef + d, WAVE, disc).value >= base * (1 - 1e-12)


def test_saddle_residuals_and_rank(space):
    V, disc = space
    res = ih_gamma(V, WAVE, disc, full=True)
    r1, r2 = res.residuals()
    assert r1 < 1e-11 and r2 < 1e-11
    B, R = constraint_matrix(disc)
    assert B.shape == (V.mesh.nt * R.nloc, V.ndof)
    assert np.linalg.matrix_rank(B.toarray()) == B.shape[0]


def test_idempotence(space):
    V, disc = space
    c = ih_gamma(V, WAVE, disc)
    assert np.abs(ih_gamma(V, c, disc) - c).max() < 1e-12 * np.abs(c).max()


@settings(max_examples=5)
@given(st.integers(0, 2**31 - 1))
def test_space_elements_are_fixed_points(seed):
    mesh = make_disk_mesh(0)
    V = VectorSpace(mesh, "BDM", 2)
    c = np.random.default_rng(seed).standard_normal(V.ndof)
    assert np.abs(ih_gamma(V, c) - c).max() < 1e-11


def test_constrained_error_dominates_unconstrained(space):
    V, disc = space
    ih = tri_norm_of_error(V, ih_gamma(V, WAVE, disc), WAVE, disc).value
    star = tri_norm_of_error(V, best_approx(V, WAVE, "tri", disc), WAVE, disc).value
    assert star <= ih * (1 + 1e-12)
    l2 = best_approx(V, WAVE, "L2", disc)
    vol_l2, _, _ = vector_error_norms(V, l2, WAVE, disc)
    vol_star, _, _ = vector_error_norms(V, best_approx(V, WAVE, "tri", disc), WAVE, disc)
    assert np.sqrt(vol_l2) <= np.sqrt(vol_star) * (1 + 1e-12)


def test_tri_norm_convergence():
    errs = []
    for n in (2, 4, 8):
        V = VectorSpace(make_square_mesh(n), "RT", 2)
        errs.append(tri_norm_of_error(V, ih_gamma(V, WAVE), WAVE).value)
    assert np.log2(errs[1] / errs[2]) > 1.8


def test_best_l2_on_reference_triangle():
    mesh = Mesh.from_triangles([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [(0, 1, 2)], "square")
    S = ScalarSpace(mesh, 1)
    c = best_approx(S, Field(lambda x: x[..., 0] ** 2), "L2")
    M = np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24
    # int x^2 lambda_i with int x^a y^b = a! b! / (a + b + 2)!
    rhs = np.array([1 / 60, 1 / 20, 1 / 60])
    assert np.abs(c - np.linalg.solve(M, rhs)).max() < 1e-13


@pytest.mark.parametrize("norm", ["L2", "H1"])
def test_scalar_best_approximation_is_optimal(norm):
    mesh = make_disk_mesh(1)
    S = ScalarSpace(mesh, 2)
    ex = manufactured("disk_smooth")
    F = Field.scalar_of(ex)
    disc = Discretization(None, S)

    def err(c):
        e = 0.0
        for tab in disc.volume():
            uh, gh = scalar_at(tab, S, c)
            e += (tab.dx * (ex.u(tab.x) - uh) ** 2).sum()
            if norm == "H1":
                e += (tab.dx[..., None] * (ex.grad_u(tab.x) - gh) ** 2).sum()
        return e

    c = best_approx(S, F, norm, disc)
    rng = np.random.default_rng(2)
    assert all(err(c) <= err(c + 1e-3 * rng.standard_normal(S.ndof)) for _ in range(10))
    if norm == "L2":
        assert abs(scalar_l2_error(S, c, F, disc) - np.sqrt(err(c))) < 1e-14


def test_vector_div_norm_best_approximation():
    mesh = make_square_mesh(3)
    V = VectorSpace(mesh, "BDM", 1)
    disc = Discretization(V, None)
    c = best_approx(V, WAVE, "div", disc)

    def err(c):
        vol, _, div = vector_error_norms(V, c, WAVE, disc)
        return vol + div

    rng = np.random.default_rng(3)
    assert all(err(c) <= err(c + 1e-3 * rng.standard_normal(V.ndof)) for _ in range(10))


def test_best_approx_rejects_unknown_norm():
    V = VectorSpace(make_square_mesh(1), "RT", 1)
    with pytest.raises(ValueError):
        best_approx(V, WAVE, "H1")
    with pytest.raises(ValueError):
        best_approx(ScalarSpace(V.mesh, 1), WAVE, "tri")


def test_tri_norm_values():
    mesh = make_disk_mesh(1)
    V = VectorSpace(mesh, "RT", 1)
    zero = np.zeros(V.ndof)
    assert tri_norm_of_error(V, zero).value == 0.0
    const = Field(lambda x: np.broadcast_to([1.0, 0.0], x.shape))
    t = tri_norm_of_error(V, zero, const)
    # ||(1, 0)||^2 = pi on the disk, and int_Gamma n_x^2 = pi
    assert abs(t.volume - np.pi) < 1e-12 and abs(t.boundary - np.pi) < 1e-12
    assert abs(float(t) - np.sqrt(2 * np.pi)) < 1e-12
    bubble = Field(lambda x: (1 - (x**2).sum(-1))[..., None] * np.array([1.0, 0.0]))
    tb = tri_norm_of_error(V, zero, bubble)
    assert tb.boundary < 1e-28 and tb.volume > 0
    assert TriNorm(3.0, 1.0).value == 2.0
