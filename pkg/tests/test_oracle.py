import numpy as np
import pytest
import scipy.special as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from fosls.oracle import (
    CASES,
    RadialSolution,
    bessel_i,
    bessel_i_integral,
    bessel_k,
    bessel_k_integral,
    exact_solution,
    manufactured,
    radial_exact,
    radial_fv,
    radial_fv_extrapolated,
)

SMOOTH = ["const", "linear", "square_smooth", "disk_smooth"]


def sample_points(n=20, seed=0):
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.random(n)) * 0.95
    t = rng.random(n) * 2 * np.pi
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def fd_grad(u, x, h=1e-5):
    e = np.eye(2) * h
    return np.stack([(u(x + e[i]) - u(x - e[i])) / (2 * h) for i in range(2)], -1)


def fd_laplacian(u, x, h=1e-3):
    e = np.eye(2) * h
    return sum((u(x + e[i]) - 2 * u(x) + u(x - e[i])) / h**2 for i in range(2))


def test_manufactured_examples():
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]])
    sq = manufactured("square_smooth")
    assert np.allclose(sq.u(x), [1.0, -1.0, 0.0], atol=1e-15)
    dk = manufactured("disk_smooth")
    assert np.allclose(dk.u(x), [2.0, 1.0, 1 + 0.5 * np.exp(0.5)])
    assert np.allclose(manufactured("const").f(x), 2.0)
    assert np.allclose(manufactured("linear").f(x), 2 * x[:, 0])
    with pytest.raises(ValueError):
        manufactured("gaussian")


@pytest.mark.parametrize("case", SMOOTH)
def test_gradient_and_laplacian_by_differences(case):
    ex = manufactured(case)
    x = sample_points()
    assert np.abs(fd_grad(ex.u, x) - ex.grad_u(x)).max() < 1e-8
    assert np.abs(fd_laplacian(ex.u, x) - ex.laplacian(x)).max() < 1e-5
    # f from its definition, computed by differences
    assert np.abs(-fd_laplacian(ex.u, x) + ex.gamma * ex.u(x) - ex.f(x)).max() < 1e-5


@pytest.mark.parametrize("case", CASES)
def test_first_order_system(case):
    ex = exact_solution(case)
    x = sample_points(seed=1)
    assert np.abs(ex.phi(x) + ex.grad_u(x)).max() == 0.0
    assert np.abs(ex.div_phi(x) + ex.gamma * ex.u(x) - ex.f(x)).max() < 1e-13
    t = np.linspace(0, 2 * np.pi, 13)
    n = np.column_stack([np.cos(t), np.sin(t)])
    # on the unit circle the outward normal is x itself
    assert np.abs((ex.phi(n) * n).sum(-1) - ex.alpha * ex.u(n) + ex.g(n, n)).max() < 1e-13


@given(st.floats(0.5, 5.0), st.floats(0.1, 3.0))
def test_parameters_propagate(gamma, alpha):
    ex = manufactured("square_smooth", gamma, alpha)
    prob = ex.problem()
    assert prob.gamma == gamma and prob.alpha == alpha
    x = sample_points(5)
    assert np.allclose(prob.f(x), (np.pi**2 - 1) * ex.u(x) + gamma * ex.u(x))


# --- radial step-load solution ---


@pytest.fixture(scope="module")
def rad():
    return radial_exact()


def test_radial_interface_conditions(rad):
    r0 = rad.r0
    eps = 1e-12
    for order in (0, 1):
        assert abs(rad.radial(r0 - eps, order) - rad.radial(r0 + eps, order)) < 1e-11
    # u'' jumps by the jump of -f, i.e. by +1 outwards
    jump = rad.radial(r0 + eps, 2) - rad.radial(r0 - eps, 2)
    assert abs(jump - 1.0) < 1e-10


def test_radial_boundary_conditions(rad):
    assert abs(rad.radial(1.0, 1)) < 1e-14
    assert rad.radial(0.0, 1) == 0.0
    ex = rad.exact()
    t = np.linspace(0, 2 * np.pi, 7)
    n = np.column_stack([np.cos(t), np.sin(t)])
    assert np.allclose(ex.g(n, n), ex.alpha * rad.radial(1.0))


def test_radial_ode_residual(rad):
    r = np.linspace(0.01, 0.99, 200)
    r = r[np.abs(r - rad.r0) > 2e-3]
    h = 1e-4
    up = (rad.radial(r + h) - rad.radial(r - h)) / (2 * h)
    upp = (rad.radial(r + h) - 2 * rad.radial(r) + rad.radial(r - h)) / h**2
    f = (r <= rad.r0).astype(float)
    res = -upp - up / r + rad.gamma * rad.radial(r) - f
    assert np.abs(res).max() < 1e-6
    assert np.abs(up - rad.radial(r, 1)).max() < 1e-8
    assert np.abs(upp - rad.radial(r, 2)).max() < 1e-6


def test_radial_constants(rad):
    assert np.allclose(rad.constants, [-0.3195, 0.04646, 0.13298], atol=1e-4)
    with pytest.raises(ValueError):
        rad.radial(0.3, 3)


def test_radial_gradient_and_laplacian_in_2d(rad):
    ex = rad.exact()
    x = sample_points(30, seed=3)
    x = x[np.abs(np.linalg.norm(x, axis=1) - 0.5) > 1e-2]
    assert np.abs(fd_grad(ex.u, x) - ex.grad_u(x)).max() < 1e-8
    assert np.abs(fd_laplacian(ex.u, x, 1e-3) - ex.laplacian(x)).max() < 1e-5
    assert np.allclose(ex.grad_u(np.zeros(2)), 0.0)


@settings(max_examples=10)
@given(st.floats(0.5, 6.0))
def test_radial_conditions_for_any_gamma(gamma):
    rs = RadialSolution(gamma)
    assert abs(rs.radial(1.0, 1)) < 1e-12
    assert abs(rs.radial(0.5, 0) - rs.radial(0.5 + 1e-13, 0)) < 1e-10
    assert abs(rs.radial(0.5, 1) - rs.radial(0.5 + 1e-13, 1)) < 1e-10


def test_finite_volume_agreement(rad):
    radii = np.array([0.0, 0.25, 0.75, 1.0])
    fv = radial_fv_extrapolated(100000, tuple(radii))
    assert np.abs(fv - rad.radial(radii)).max() < 1e-8


def test_finite_volume_second_order(rad):
    errs = []
    for n in (100, 200, 400):
        r, u = radial_fv(n)
        errs.append(np.abs(u - rad.radial(r)).max())
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 1.8)


def test_finite_volume_rejects_off_grid_radii():
    with pytest.raises(ValueError):
        radial_fv_extrapolated(100, (0.333,))


# --- Bessel functions ---

X = np.linspace(0.05, 3.0, 60)


@pytest.mark.parametrize("n", [0, 1])
def test_bessel_series_vs_integrals(n):
    assert np.abs(bessel_i(n, X) - bessel_i_integral(n, X)).max() < 1e-12
    assert np.abs(bessel_k(n, X) - bessel_k_integral(n, X)).max() < 1e-12


@pytest.mark.parametrize("n", [0, 1])
def test_bessel_vs_library(n):
    assert np.abs(bessel_i(n, X) / ss.iv(n, X) - 1).max() < 1e-13
    assert np.abs(bessel_k(n, X) / ss.kv(n, X) - 1).max() < 1e-13


def test_bessel_wronskian():
    w = bessel_i(0, X) * bessel_k(1, X) + bessel_i(1, X) * bessel_k(0, X)
    assert np.abs(w * X - 1).max() < 1e-13


def test_bessel_derivatives():
    h = 1e-5
    di0 = (bessel_i(0, X + h) - bessel_i(0, X - h)) / (2 * h)
    dk0 = (bessel_k(0, X + h) - bessel_k(0, X - h)) / (2 * h)
    assert np.abs(di0 - bessel_i(1, X)).max() < 1e-8
    assert np.abs(dk0 / bessel_k(1, X) + 1).max() < 1e-7


def test_bessel_order_check():
    with pytest.raises(ValueError):
        bessel_k(2, X)
