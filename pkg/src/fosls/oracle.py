"""Exact solutions: manufactured smooth cases and the radial step-load solution.

Every solution is described by u, grad u and Laplace u; the remaining fields
follow from phi = -grad u:

    div phi = -Laplace u,   f = -Laplace u + gamma u,   g = grad u . n + alpha u.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import factorial
from typing import Callable, Optional

import numpy as np
import scipy.linalg as la

from .assembly import RobinProblem

EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class ExactSolution:
    """Smooth or piecewise smooth exact solution of the Robin problem.

    All callables take points of shape (..., 2); ``g`` and ``dudn`` also take
    the outward unit normal (..., 2).
    """

    name: str
    u: Callable
    grad_u: Callable
    laplacian: Callable
    gamma: float = 2.0
    alpha: float = 1.0
    interface_radius: Optional[float] = None
    load: Optional[Callable] = None  # overrides -Laplace u + gamma u (discontinuous loads)
    meta: dict = field(default_factory=dict)

    def phi(self, x):
        return -self.grad_u(x)

    def div_phi(self, x):
        return -self.laplacian(x)

    def f(self, x):
        if self.load is not None:
            return self.load(x)
        return -self.laplacian(x) + self.gamma * self.u(x)

    def dudn(self, x, n):
        return (self.grad_u(x) * n).sum(-1)

    def g(self, x, n):
        return self.dudn(x, n) + self.alpha * self.u(x)

    def problem(self):
        return RobinProblem(self.gamma, self.alpha, self.f, self.g, self.interface_radius)


def _xy(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1]


def _const(gamma, alpha):
    return ExactSolution(
        "const",
        u=lambda x: np.ones(np.shape(x)[:-1]),
        grad_u=lambda x: np.zeros(np.shape(x)),
        laplacian=lambda x: np.zeros(np.shape(x)[:-1]),
        gamma=gamma,
        alpha=alpha,
    )


def _linear(gamma, alpha):
    def grad(x):
        g = np.zeros(np.shape(x))
        g[..., 0] = 1.0
        return g

    return ExactSolution(
        "linear",
        u=lambda x: np.array(x, dtype=float)[..., 0],
        grad_u=grad,
        laplacian=lambda x: np.zeros(np.shape(x)[:-1]),
        gamma=gamma,
        alpha=alpha,
    )


def _square_smooth(gamma, alpha):
    def u(x):
        X, Y = _xy(x)
        return np.cos(np.pi * X) * np.cosh(Y)

    def grad(x):
        X, Y = _xy(x)
        return np.stack([-np.pi * np.sin(np.pi * X) * np.cosh(Y), np.cos(np.pi * X) * np.sinh(Y)], -1)

    return ExactSolution(
        "square_smooth", u, grad, lambda x: (1.0 - np.pi**2) * u(x), gamma=gamma, alpha=alpha
    )


def _disk_smooth(gamma, alpha):
    def u(x):
        X, Y = _xy(x)
        return np.exp(X) * (1.0 - X * X - Y * Y) + 1.0

    def grad(x):
        X, Y = _xy(x)
        e = np.exp(X)
        return np.stack([e * (1.0 - X * X - Y * Y - 2.0 * X), -2.0 * Y * e], -1)

    def lap(x):
        X, Y = _xy(x)
        return np.exp(X) * (-3.0 - X * X - Y * Y - 4.0 * X)

    return ExactSolution("disk_smooth", u, grad, lap, gamma=gamma, alpha=alpha)


MANUFACTURED = {
    "const": _const,
    "linear": _linear,
    "square_smooth": _square_smooth,
    "disk_smooth": _disk_smooth,
}


def manufactured(case, gamma=2.0, alpha=1.0):
    """Smooth manufactured solution by name: const, linear, square_smooth, disk_smooth."""
    try:
        return MANUFACTURED[case](gamma, alpha)
    except KeyError:
        raise ValueError(f"unknown manufactured case {case!r}; choose from {sorted(MANUFACTURED)}") from None


# --- modified Bessel functions of order 0 and 1 (real argument x > 0) -------

_NTERMS = 40


def bessel_i(n, x):
    """I_n(x) for n in {0, 1} by its power series."""
    x = np.asarray(x, dtype=float)
    q = 0.25 * x * x
    term = (0.5 * x) ** n / factorial(n)
    s = term.copy() if np.ndim(term) else term
    for k in range(1, _NTERMS):
        term = term * q / (k * (k + n))
        s = s + term
    return s


def bessel_k(n, x):
    """K_n(x) for n in {0, 1} from the logarithmic series (x > 0)."""
    x = np.asarray(x, dtype=float)
    q = 0.25 * x * x
    lg = np.log(0.5 * x)
    # psi(k + 1) = -gamma_E + H_k
    H = [0.0]
    for k in range(1, _NTERMS + 2):
        H.append(H[-1] + 1.0 / k)
    if n == 0:
        s = 0.0
        term = np.ones_like(x)
        for k in range(_NTERMS):
            if k:
                term = term * q / (k * k)
            s = s + (H[k] - EULER_GAMMA) * term
        return -lg * bessel_i(0, x) + s
    if n == 1:
        s = 0.0
        term = 0.5 * x
        for k in range(_NTERMS):
            if k:
                term = term * q / (k * (k + 1))
            s = s + (H[k] + H[k + 1] - 2.0 * EULER_GAMMA) * term
        return 1.0 / x + lg * bessel_i(1, x) - 0.5 * s
    raise ValueError("only orders 0 and 1 are supported")


def bessel_i_integral(n, x, m=64):
    """I_n(x) = (1/pi) int_0^pi exp(x cos t) cos(n t) dt.

    The integrand is smooth, even and 2 pi periodic, so the trapezoidal rule
    converges geometrically.
    """
    t = np.linspace(0.0, np.pi, m + 1)
    w = np.full(m + 1, np.pi / m)
    w[[0, -1]] *= 0.5
    x = np.asarray(x, dtype=float)
    return (np.exp(np.multiply.outer(x, np.cos(t))) * np.cos(n * t)) @ w / np.pi


def bessel_k_integral(n, x, step=0.02):
    """K_n(x) = int_0^inf exp(-x cosh t) cosh(n t) dt for x > 0.

    Trapezoidal rule on the even, double-exponentially decaying integrand
    (geometric convergence in 1/step), truncated where x cosh t > 745.
    """
    x = np.asarray(x, dtype=float)
    tmax = np.arccosh(max(745.0 / np.min(x), 1.0))
    t = np.arange(0.0, tmax + step, step)
    w = np.full(len(t), step)
    w[0] *= 0.5
    return np.exp(-np.multiply.outer(x, np.cosh(t))) * np.cosh(n * t) @ w


# --- radial solution with step load ----------------------------------------


@dataclass(frozen=True)
class RadialSolution:
    """u(r) for -u'' - u'/r + gamma u = 1_{r <= r0}, u'(0) = 0, u'(1) = 0.

    u = 1/gamma + c1 I0(k r) on r <= r0 and c2 I0(k r) + c3 K0(k r) on r > r0,
    k = sqrt(gamma).  The Robin datum on the unit circle is g = alpha u(1).
    """

    gamma: float = 2.0
    alpha: float = 1.0
    r0: float = 0.5

    @property
    def k(self):
        return np.sqrt(self.gamma)

    @cached_property
    def constants(self):
        k, r0 = self.k, self.r0
        a = k * r0
        M = np.array(
            [
                [bessel_i(0, a), -bessel_i(0, a), -bessel_k(0, a)],
                [k * bessel_i(1, a), -k * bessel_i(1, a), k * bessel_k(1, a)],
                [0.0, k * bessel_i(1, k), -k * bessel_k(1, k)],
            ]
        )
        rhs = np.array([-1.0 / self.gamma, 0.0, 0.0])
        return la.solve(M, rhs)

    def radial(self, r, order=0):
        """u, u' or u'' at radii r (one-sided limit from inside at r0)."""
        r = np.asarray(r, dtype=float)
        c1, c2, c3 = self.constants
        k = self.k
        inner = r <= self.r0
        rs = np.where(r > 0, r, 1.0)
        kr = k * rs
        if order == 0:
            out = np.where(inner, 1.0 / self.gamma + c1 * bessel_i(0, k * r), c2 * bessel_i(0, kr) + c3 * bessel_k(0, kr))
            return out
        if order == 1:
            return np.where(
                inner, c1 * k * bessel_i(1, k * r), k * (c2 * bessel_i(1, kr) - c3 * bessel_k(1, kr))
            )
        if order == 2:
            # from the ODE: u'' = -u'/r + gamma u - f, with u'/r -> u''(0) at r = 0
            f = inner.astype(float)
            u = self.radial(r, 0)
            up = self.radial(r, 1)
            lap = self.gamma * u - f
            return np.where(r > 0, lap - up / rs, 0.5 * lap)
        raise ValueError("order must be 0, 1 or 2")

    def load(self, x):
        return (np.linalg.norm(np.asarray(x, dtype=float), axis=-1) <= self.r0).astype(float)

    def exact(self):
        """The 2D exact solution, with the discontinuous load attached."""

        def u(x):
            return self.radial(np.linalg.norm(x, axis=-1), 0)

        def grad(x):
            x = np.asarray(x, dtype=float)
            r = np.linalg.norm(x, axis=-1)
            up = self.radial(r, 1)
            return x * np.where(r > 0, up / np.where(r > 0, r, 1.0), 0.0)[..., None]

        def lap(x):
            return self.gamma * u(x) - self.load(x)

        return ExactSolution(
            "radial_step",
            u,
            grad,
            lap,
            gamma=self.gamma,
            alpha=self.alpha,
            interface_radius=self.r0,
            load=self.load,
        )


def radial_exact(gamma=2.0, alpha=1.0):
    return RadialSolution(gamma, alpha)


def exact_solution(case, gamma=2.0, alpha=1.0):
    """Manufactured case or ``"radial_step"`` (step load on the unit disk)."""
    if case == "radial_step":
        return radial_exact(gamma, alpha).exact()
    return manufactured(case, gamma, alpha)


CASES = tuple(sorted(MANUFACTURED)) + ("radial_step",)


# --- independent finite-volume oracle for the radial problem -----------------


def radial_fv(n, gamma=2.0, r0=0.5):
    """Vertex-centred finite-volume solve of -(r u')'/r + gamma u = 1_{r<=r0}, u'(0)=u'(1)=0.

    ``n`` cells of width 1/n with r0 on a node; cell volumes and load
    integrals (weight r) are exact.  Second order; returns (r, u).
    """
    H = 1.0 / n
    r = np.arange(n + 1) * H
    lo = np.maximum(r - 0.5 * H, 0.0)
    hi = np.minimum(r + 0.5 * H, 1.0)
    vol = 0.5 * (hi**2 - lo**2)
    a, b = np.minimum(lo, r0), np.minimum(hi, r0)
    load = 0.5 * (b**2 - a**2)
    rf = r[:-1] + 0.5 * H  # face radii
    t = rf / H
    diag = gamma * vol
    diag[:-1] += t
    diag[1:] += t
    ab = np.zeros((3, n + 1))
    ab[0, 1:] = -t
    ab[1] = diag
    ab[2, :-1] = -t
    return r, la.solve_banded((1, 1), ab, load)


def radial_fv_extrapolated(n=100000, radii=(0.0, 0.25, 0.75, 1.0), gamma=2.0):
    """Richardson extrapolation of :func:`radial_fv` on n and 2n cells at the given radii.

    ``n`` must be a multiple of 4 so each radius in ``radii`` (multiples of
    1/4) is a node.
    """
    out = []
    for m in (n, 2 * n):
        r, u = radial_fv(m, gamma)
        idx = np.rint(np.asarray(radii) * m).astype(int)
        if not np.allclose(r[idx], radii, atol=1e-14):
            raise ValueError("radii must be nodes of the finite-volume grid")
        out.append(u[idx])
    return (4.0 * out[1] - out[0]) / 3.0
