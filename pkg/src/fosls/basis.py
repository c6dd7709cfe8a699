"""Reference-element bases on the triangle (0,0), (1,0), (0,1).

Local numbering: vertex i is opposite edge i, and edge i runs from vertex
i+1 to vertex i+2 (indices mod 3), which makes every edge counter-clockwise.

* :func:`dubiner` -- L2-orthonormal polynomial basis of P_p with gradients.
* :class:`ScalarBasis` -- hierarchic H1 basis (vertex, edge, bubble functions).
* :class:`VectorBasis` -- RT_{p-1} / BDM_p basis whose edge functions are dual
  to Legendre normal moments and whose interior functions are L2-orthonormal.
* :func:`piola_push` -- contravariant Piola transform of reference values.
"""

from functools import lru_cache

import numpy as np
from scipy.special import eval_jacobi, eval_legendre

from .quadrature import edge_rule, triangle_rule

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# edge i: start point, tangent (end - start)
EDGE_START = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
EDGE_TANGENT = np.array([[-1.0, 1.0], [0.0, -1.0], [1.0, 0.0]])
# rot(t) = (t_y, -t_x) is the outward normal scaled by the edge length
EDGE_NORMAL = np.column_stack([EDGE_TANGENT[:, 1], -EDGE_TANGENT[:, 0]])


def edge_points(i, t):
    """Reference points on edge ``i`` at parameters ``t`` in [0, 1]."""
    t = np.asarray(t, dtype=float)
    return EDGE_START[i] + t[..., None] * EDGE_TANGENT[i]


def barycentric(x):
    x = np.atleast_2d(x)
    return np.column_stack([1.0 - x[:, 0] - x[:, 1], x[:, 0], x[:, 1]])


BARY_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def legendre01(j, t):
    """Legendre polynomial of degree j, orthonormal on [0, 1]."""
    return np.sqrt(2 * j + 1) * eval_legendre(j, 2.0 * np.asarray(t) - 1.0)


def dubiner_indices(p):
    return [(i, n - i) for n in range(p + 1) for i in range(n, -1, -1)]


def _dubiner_raw(p, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    X, Y = x[:, 0], x[:, 1]
    a = 2.0 * X + Y - 1.0
    b = 1.0 - Y
    da = np.array([2.0, 1.0])
    db = np.array([0.0, -1.0])
    # homogenised Legendre Q_i(a, b) = b^i P_i(a / b), a polynomial in x, y
    Q = [np.ones_like(X), a.copy()]
    dQ = [np.zeros(X.shape + (2,)), np.broadcast_to(da, X.shape + (2,)).copy()]
    for i in range(1, p):
        q = ((2 * i + 1) * a * Q[i] - i * b * b * Q[i - 1]) / (i + 1)
        dq = (
            (2 * i + 1) * (da * Q[i][:, None] + a[:, None] * dQ[i])
            - i * (2.0 * (b * Q[i - 1])[:, None] * db + (b * b)[:, None] * dQ[i - 1])
        ) / (i + 1)
        Q.append(q)
        dQ.append(dq)
    s = 2.0 * Y - 1.0
    idx = dubiner_indices(p)
    vals = np.empty((len(X), len(idx)))
    grads = np.empty((len(X), len(idx), 2))
    for k, (i, j) in enumerate(idx):
        alpha = 2 * i + 1
        P = eval_jacobi(j, alpha, 0, s)
        if j > 0:
            dP = 0.5 * (j + alpha + 1) * eval_jacobi(j - 1, alpha + 1, 1, s) * 2.0
        else:
            dP = np.zeros_like(s)
        vals[:, k] = Q[i] * P
        grads[:, k, 0] = dQ[i][:, 0] * P
        grads[:, k, 1] = dQ[i][:, 1] * P + Q[i] * dP
    return vals, grads


@lru_cache(maxsize=None)
def _dubiner_scale(p):
    rule = triangle_rule(2 * p + 2)
    v, _ = _dubiner_raw(p, rule.points)
    return 1.0 / np.sqrt((v**2 * rule.weights[:, None]).sum(axis=0))


def dubiner(p, x):
    """L2(reference)-orthonormal basis of P_p: values (n, m) and gradients (n, m, 2)."""
    v, g = _dubiner_raw(p, x)
    s = _dubiner_scale(p)
    return v * s, g * s[None, :, None]


def poly_dim(p):
    return (p + 1) * (p + 2) // 2 if p >= 0 else 0


class ScalarBasis:
    """Hierarchic H1-conforming basis of P_p on the reference triangle.

    Order: 3 vertex functions, then p-1 functions per edge (edge 0, 1, 2),
    then (p-1)(p-2)/2 bubbles.  Edge function k on edge i is
    lam_a lam_b P_k^{(1,1)}(lam_b - lam_a) with (a, b) = (i+1, i+2); it
    changes sign by (-1)^k when the edge direction is reversed.
    """

    def __init__(self, degree):
        if degree < 1:
            raise ValueError("scalar degree must be >= 1")
        self.degree = degree
        self.n_edge = degree - 1
        self.n_interior = poly_dim(degree - 3)
        self.size = poly_dim(degree)
        self.edge_parity = np.array([(-1.0) ** k for k in range(self.n_edge)])

    def eval(self, x):
        """Values (n, size) and reference gradients (n, size, 2) at points x."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lam = barycentric(x)
        n = len(x)
        vals = np.empty((n, self.size))
        grads = np.empty((n, self.size, 2))
        vals[:, :3] = lam
        grads[:, :3, :] = BARY_GRAD[None]
        col = 3
        for i in range(3):
            a, b = (i + 1) % 3, (i + 2) % 3
            s = lam[:, b] - lam[:, a]
            ds = BARY_GRAD[b] - BARY_GRAD[a]
            w = lam[:, a] * lam[:, b]
            dw = lam[:, a, None] * BARY_GRAD[b] + lam[:, b, None] * BARY_GRAD[a]
            for k in range(self.n_edge):
                P = eval_jacobi(k, 1, 1, s)
                dP = 0.5 * (k + 3) * eval_jacobi(k - 1, 2, 2, s) if k > 0 else np.zeros(n)
                vals[:, col] = w * P
                grads[:, col] = dw * P[:, None] + (w * dP)[:, None] * ds
                col += 1
        if self.n_interior:
            bub = lam[:, 0] * lam[:, 1] * lam[:, 2]
            dbub = (
                (lam[:, 1] * lam[:, 2])[:, None] * BARY_GRAD[0]
                + (lam[:, 0] * lam[:, 2])[:, None] * BARY_GRAD[1]
                + (lam[:, 0] * lam[:, 1])[:, None] * BARY_GRAD[2]
            )
            dv, dg = dubiner(self.degree - 3, x)
            vals[:, col:] = bub[:, None] * dv
            grads[:, col:] = dbub[:, None, :] * dv[..., None] + bub[:, None, None] * dg
        return vals, grads

    def edge_slice(self, i):
        return slice(3 + i * self.n_edge, 3 + (i + 1) * self.n_edge)

    @property
    def interior_slice(self):
        return slice(3 + 3 * self.n_edge, self.size)


def _vector_generators(family, p, x):
    """Monomial-type spanning set of RT_{p-1} or BDM_p: values and divergences."""
    if family == "RT":
        v, g = dubiner(p - 1, x)
        top = [k for k, (i, j) in enumerate(dubiner_indices(p - 1)) if i + j == p - 1]
    else:
        v, g = dubiner(p, x)
        top = []
    n, m = v.shape
    vals = np.zeros((n, 2 * m + len(top), 2))
    div = np.zeros((n, 2 * m + len(top)))
    vals[:, :m, 0] = v
    vals[:, m : 2 * m, 1] = v
    div[:, :m] = g[:, :, 0]
    div[:, m : 2 * m] = g[:, :, 1]
    for c, k in enumerate(top):
        # x * q: div = 2 q + x . grad q
        vals[:, 2 * m + c, 0] = x[:, 0] * v[:, k]
        vals[:, 2 * m + c, 1] = x[:, 1] * v[:, k]
        div[:, 2 * m + c] = 2.0 * v[:, k] + x[:, 0] * g[:, k, 0] + x[:, 1] * g[:, k, 1]
    return vals, div


class VectorBasis:
    """H(div) basis of RT_{p-1} (``family="RT"``) or BDM_p (``family="BDM"``).

    ``degree`` is p_v >= 1.  Edge function j on edge i has normal moments
    int_e phi.n L_k ds = delta_{jk} against orthonormal Legendre polynomials
    L_k on that edge (and zero moments on the other edges); since the normal
    trace lies in the span of the L_k, this fixes the trace exactly.  The
    interior functions have vanishing normal trace and are L2-orthonormal.
    Edge functions are L2-orthogonal to the interior ones.
    """

    def __init__(self, family, degree):
        family = family.upper()
        if family not in ("RT", "BDM"):
            raise ValueError(f"unknown vector family {family!r}")
        if degree < 1:
            raise ValueError("vector degree must be >= 1")
        self.family = family
        self.degree = degree
        self.trace_degree = degree - 1 if family == "RT" else degree
        self.n_edge = self.trace_degree + 1
        self.size = degree * (degree + 2) if family == "RT" else (degree + 1) * (degree + 2)
        self.n_interior = self.size - 3 * self.n_edge
        self.div_degree = degree - 1
        # reversing an edge flips the normal and maps L_j(t) -> (-1)^j L_j(t)
        self.edge_parity = np.array([-((-1.0) ** j) for j in range(self.n_edge)])
        self._coef = self._build()

    def _build(self):
        p = self.degree
        er = edge_rule(2 * p + 2)
        rows = []
        for i in range(3):
            xe = edge_points(i, er.points)
            gv, _ = _vector_generators(self.family, p, xe)
            gn = gv @ EDGE_NORMAL[i]
            for j in range(self.n_edge):
                L = legendre01(j, er.points)
                rows.append((er.weights * L) @ gn)
        E = np.array(rows)
        ng = E.shape[1]
        if ng != self.size:
            raise AssertionError("generator count does not match space dimension")
        tr = triangle_rule(2 * p + 2)
        gv, _ = _vector_generators(self.family, p, tr.points)
        Mg = np.einsum("q,qik,qjk->ij", tr.weights, gv, gv)
        _, sv, vt = np.linalg.svd(E)
        Z = vt[E.shape[0] :].T
        lam, U = np.linalg.eigh(Z.T @ Mg @ Z)
        C_int = Z @ (U / np.sqrt(lam)) @ U.T
        lhs = np.vstack([E, Z.T @ Mg])
        rhs = np.zeros((ng, E.shape[0]))
        rhs[: E.shape[0]] = np.eye(E.shape[0])
        C_edge = np.linalg.solve(lhs, rhs)
        return np.hstack([C_edge, C_int])

    def eval(self, x):
        """Reference values (n, size, 2) and reference divergences (n, size)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        gv, gd = _vector_generators(self.family, self.degree, x)
        vals = np.einsum("qgk,gb->qbk", gv, self._coef)
        return vals, gd @ self._coef

    def edge_slice(self, i):
        return slice(i * self.n_edge, (i + 1) * self.n_edge)

    @property
    def interior_slice(self):
        return slice(3 * self.n_edge, self.size)


def piola_push(J, detJ, vals, div):
    """Contravariant Piola transform: phi = J phi_hat / det J, div phi = div_hat / det J.

    ``J`` has shape (..., 2, 2) and ``detJ`` (...,); ``vals`` (..., m, 2) and
    ``div`` (..., m) are reference quantities at the same points.
    """
    detJ = np.asarray(detJ)
    if np.any(detJ <= 0.0):
        raise ValueError("degenerate element map: det J <= 0")
    phys = np.einsum("...kl,...ml->...mk", J, vals) / detJ[..., None, None]
    return phys, div / detJ[..., None]
