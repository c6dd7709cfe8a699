"""Assembly of the least-squares system and of auxiliary Gram matrices.

Unknowns are ordered (phi, u): all vector dofs first, then scalar dofs.
The bilinear form is

    b((phi, u), (psi, v)) = (div phi + gamma u, div psi + gamma v)
                          + (grad u + phi, grad v + psi)
                          + <phi.n - alpha u, psi.n - alpha v>_Gamma

and the load F(psi, v) = (f, div psi + gamma v) + <-g, psi.n - alpha v>_Gamma.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .basis import EDGE_NORMAL, EDGE_TANGENT, edge_points, piola_push
from .quadrature import edge_rule, polar_split_rule, triangle_rule


@dataclass(frozen=True)
class RobinProblem:
    """-Laplace u + gamma u = f in Omega, d_n u + alpha u = g on Gamma.

    ``f(x)`` takes points (..., 2); ``g(x, n)`` also receives the outward
    unit normal.  If ``interface_radius`` is set, f may jump across the
    circle |x| = interface_radius and elements cut by it are integrated with
    a split rule.
    """

    gamma: float
    alpha: float
    f: Callable
    g: Callable
    interface_radius: Optional[float] = None

    def __post_init__(self):
        if not (self.gamma > 0 and self.alpha > 0):
            raise ValueError("gamma and alpha must be positive")


@dataclass
class VolumeTab:
    elems: np.ndarray
    xhat: np.ndarray  # (nE, nq, 2)
    x: np.ndarray
    detJ: np.ndarray
    dx: np.ndarray  # physical weights
    phi: np.ndarray = None  # (nE, nq, nv, 2), signs applied
    div: np.ndarray = None  # (nE, nq, nv)
    u: np.ndarray = None  # (nE, nq, ns)
    grad: np.ndarray = None  # (nE, nq, ns, 2)


@dataclass
class BoundaryTab:
    elems: np.ndarray
    x: np.ndarray
    normal: np.ndarray
    ds: np.ndarray
    phin: np.ndarray = None  # (nE, nq, nv)
    u: np.ndarray = None  # (nE, nq, ns)


def cut_elements(mesh, radius):
    """Elements whose closure meets the circle |x| = radius in their interior."""
    V = mesh.vertices[mesh.triangles]
    rmax = np.linalg.norm(V, axis=-1).max(axis=1)
    rmin = np.full(mesh.nt, np.inf)
    for i in range(3):
        P, Q = V[:, i], V[:, (i + 1) % 3]
        e = Q - P
        t = np.clip(-(P * e).sum(1) / (e * e).sum(1), 0.0, 1.0)
        rmin = np.minimum(rmin, np.linalg.norm(P + t[:, None] * e, axis=1))
    _, A = mesh.affine()
    d1, d2 = A[:, :, 0], A[:, :, 1]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    inside = np.ones(mesh.nt, dtype=bool)
    for i in range(3):
        P, Q = V[:, (i + 1) % 3], V[:, (i + 2) % 3]
        e = Q - P
        inside &= (e[:, 0] * (-P[:, 1]) - e[:, 1] * (-P[:, 0])) / area2 >= 0
    rmin[inside] = 0.0
    cut = (rmin < radius) & (rmax > radius)
    if np.any(cut & mesh.curved):
        raise ValueError("interface circle crosses a curved element")
    return np.nonzero(cut)[0]


class Discretization:
    """Quadrature layout and tabulated physical basis values for a pair of spaces.

    Parameters
    ----------
    vspace : VectorSpace or None
    sspace : ScalarSpace or None
    degree : int, optional
        Volume quadrature degree; default 2 max(p_s, p_v) + 2.
    curved_extra : int
        Added to ``degree`` on curved elements.
    boundary_degree : int, optional
        Edge rule degree on Gamma; default 2 max(p_s, p_v) + 4.
    interface_radius : float, optional
        Elements cut by this circle get a polar split rule.
    """

    def __init__(self, vspace=None, sspace=None, degree=None, curved_extra=4,
                 boundary_degree=None, interface_radius=None):
        space = vspace if vspace is not None else sspace
        self.mesh = space.mesh
        self.vspace, self.sspace = vspace, sspace
        pmax = max(s.degree for s in (vspace, sspace) if s is not None)
        self.degree = degree if degree is not None else 2 * pmax + 2
        self.curved_extra = curved_extra
        self.boundary_degree = boundary_degree if boundary_degree is not None else 2 * pmax + 4
        self.interface_radius = interface_radius
        self._vol = None
        self._bnd = None

    @property
    def nphi(self):
        return 0 if self.vspace is None else self.vspace.ndof

    @property
    def nu(self):
        return 0 if self.sspace is None else self.sspace.ndof

    def _geometry(self, elems, xhat):
        x, J, detJ = self.mesh.eval_maps(elems, xhat)
        if np.any(detJ <= 0.0):
            raise ValueError("element map with non-positive Jacobian at a quadrature point")
        return x, J, detJ

    def _fill(self, tab, J, xhat):
        if self.vspace is not None:
            vb = self.vspace.basis
            vals, div = vb.eval(xhat)
            phys, pdiv = piola_push(J, tab.detJ, vals[None], div[None])
            s = self.vspace.signs[tab.elems]
            tab.phi = phys * s[:, None, :, None]
            tab.div = pdiv * s[:, None, :]
        if self.sspace is not None:
            sb = self.sspace.basis
            vals, grads = sb.eval(xhat)
            s = self.sspace.signs[tab.elems]
            inv = np.linalg.inv(J)
            tab.u = np.broadcast_to(vals, (len(tab.elems),) + vals.shape) * s[:, None, :]
            tab.grad = np.einsum("eqlk,qml->eqmk", inv, grads) * s[:, None, :, None]

    def volume(self):
        if self._vol is not None:
            return self._vol
        mesh = self.mesh
        tabs = []
        cut = np.zeros(mesh.nt, dtype=bool)
        if self.interface_radius is not None:
            cut[cut_elements(mesh, self.interface_radius)] = True
        for curved in (False, True):
            elems = np.nonzero((mesh.curved == curved) & ~cut)[0]
            if len(elems) == 0:
                continue
            rule = triangle_rule(self.degree + (self.curved_extra if curved else 0))
            x, J, detJ = self._geometry(elems, rule.points)
            nE = len(elems)
            tab = VolumeTab(elems, np.broadcast_to(rule.points, (nE,) + rule.points.shape), x, detJ,
                            detJ * rule.weights)
            self._fill(tab, J, rule.points)
            tabs.append(tab)
        off, A = mesh.affine()
        for k in np.nonzero(cut)[0]:
            V = mesh.vertices[mesh.triangles[k]]
            pts, w, _ = polar_split_rule(V, self.interface_radius, self.degree + 2)
            xh = np.linalg.solve(A[k], (pts - off[k]).T).T
            elems = np.array([k])
            x, J, detJ = self._geometry(elems, xh)
            tab = VolumeTab(elems, xh[None], x, detJ, w[None])
            self._fill(tab, J, xh)
            tabs.append(tab)
        self._vol = tabs
        return tabs

    def boundary(self):
        if self._bnd is not None:
            return self._bnd
        mesh = self.mesh
        rule = edge_rule(self.boundary_degree)
        be = mesh.boundary_edges
        tris = mesh.edge_tris[be, 0]
        local = np.argmax(mesh.tri_edges[tris] == be[:, None], axis=1)
        tabs = []
        for i in range(3):
            elems = tris[local == i]
            if len(elems) == 0:
                continue
            xh = edge_points(i, rule.points)
            x, J, detJ = self._geometry(elems, xh)
            tJ = J @ EDGE_TANGENT[i]
            speed = np.linalg.norm(tJ, axis=-1)
            normal = np.stack([tJ[..., 1], -tJ[..., 0]], axis=-1) / speed[..., None]
            tab = BoundaryTab(elems, x, normal, speed * rule.weights)
            if self.vspace is not None:
                vals, _ = self.vspace.basis.eval(xh)
                fl = vals @ EDGE_NORMAL[i]  # phi_hat . rot(t_hat)
                s = self.vspace.signs[elems]
                tab.phin = fl[None] / speed[..., None] * s[:, None, :]
            if self.sspace is not None:
                vals, _ = self.sspace.basis.eval(xh)
                tab.u = vals[None] * self.sspace.signs[elems][:, None, :]
            tabs.append(tab)
        self._bnd = tabs
        return tabs

    def local_dofs(self, elems):
        parts = []
        if self.vspace is not None:
            parts.append(self.vspace.dofs[elems])
        if self.sspace is not None:
            parts.append(self.sspace.dofs[elems] + self.nphi)
        return np.hstack(parts)


def _gram(tab_dx, R):
    """sum_q w_q R_qi R_qj for R of shape (nE, nq, n) or (nE, nq, n, 2)."""
    if R.ndim == 4:
        nE, nq, n, d = R.shape
        Rw = (R * tab_dx[:, :, None, None]).transpose(0, 2, 1, 3).reshape(nE, n, d * nq)
        Rf = R.transpose(0, 2, 1, 3).reshape(nE, n, d * nq)
    else:
        Rw = (R * tab_dx[:, :, None]).transpose(0, 2, 1)
        Rf = R.transpose(0, 2, 1)
    return Rw @ Rf.transpose(0, 2, 1)


def _scatter(pieces, n):
    rows, cols, vals = [], [], []
    for dofs, loc in pieces:
        loc = 0.5 * (loc + loc.transpose(0, 2, 1))
        m = dofs.shape[1]
        rows.append(np.repeat(dofs, m, axis=1).ravel())
        cols.append(np.tile(dofs, (1, m)).ravel())
        vals.append(loc.ravel())
    if not rows:
        return sp.csr_matrix((n, n))
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return A.tocsr()


def _residual_tables(tab, gamma):
    """R1 = div phi + gamma u and R2 = grad u + phi as local tables."""
    R1 = np.concatenate([tab.div, gamma * tab.u], axis=2)
    R2 = np.concatenate([tab.phi, tab.grad], axis=2)
    return R1, R2


def assemble_fosls(mesh, vspace, sspace, problem, disc=None):
    """Matrix of b and vector of F in (phi, u) block ordering.

    Returns
    -------
    A : scipy.sparse.csr_matrix
        Symmetric positive definite FOSLS matrix.
    rhs : ndarray
    """
    if disc is None:
        disc = Discretization(vspace, sspace, interface_radius=problem.interface_radius)
    if disc.mesh is not mesh or vspace.mesh is not mesh or sspace.mesh is not mesh:
        raise ValueError("spaces must live on the given mesh")
    n = disc.nphi + disc.nu
    gam, alp = problem.gamma, problem.alpha
    pieces = []
    rhs = np.zeros(n)
    for tab in disc.volume():
        R1, R2 = _residual_tables(tab, gam)
        loc = _gram(tab.dx, R1) + _gram(tab.dx, R2)
        dofs = disc.local_dofs(tab.elems)
        pieces.append((dofs, loc))
        fl = np.einsum("eq,eqi->ei", tab.dx * problem.f(tab.x), R1)
        np.add.at(rhs, dofs.ravel(), fl.ravel())
    for tab in disc.boundary():
        R3 = np.concatenate([tab.phin, -alp * tab.u], axis=2)
        dofs = disc.local_dofs(tab.elems)
        pieces.append((dofs, _gram(tab.ds, R3)))
        gl = np.einsum("eq,eqi->ei", -tab.ds * problem.g(tab.x, tab.normal), R3)
        np.add.at(rhs, dofs.ravel(), gl.ravel())
    return _scatter(pieces, n), rhs


GRAM_KINDS = ("product_norm", "tri_scalar", "div_div", "l2_boundary", "l2", "h1", "hdiv")


def assemble_gram(mesh, spaces, kind, disc=None):
    """Gram matrix of an inner product on the given space(s).

    ``spaces`` is ``(vspace, sspace)`` for ``kind="product_norm"`` (block
    ordering as in :func:`assemble_fosls`) or a single space otherwise.

    Kinds: ``product_norm`` (H1 on u, H(div) plus L2(Gamma) normal trace on
    phi), ``tri_scalar`` ((phi, psi) + <phi.n, psi.n>), ``div_div``,
    ``l2_boundary`` (<phi.n, psi.n>), ``l2``, ``h1`` (scalar) and ``hdiv``.
    """
    if kind not in GRAM_KINDS:
        raise ValueError(f"unknown Gram kind {kind!r}")
    if kind == "product_norm":
        vspace, sspace = spaces
    elif hasattr(spaces, "basis") and hasattr(spaces.basis, "family"):
        vspace, sspace = spaces, None
    else:
        vspace, sspace = None, spaces
    if disc is None:
        disc = Discretization(vspace, sspace)
    n = disc.nphi + disc.nu
    vol = kind in ("product_norm", "tri_scalar", "div_div", "l2", "h1", "hdiv")
    bnd = kind in ("product_norm", "tri_scalar", "l2_boundary")
    pieces = []
    if vol:
        for tab in disc.volume():
            loc = 0.0
            if vspace is not None:
                if kind in ("product_norm", "tri_scalar", "l2", "hdiv"):
                    loc = loc + _gram(tab.dx, tab.phi)
                if kind in ("product_norm", "div_div", "hdiv"):
                    loc = loc + _gram(tab.dx, tab.div)
            if sspace is not None:
                ls = _gram(tab.dx, tab.u) if kind != "div_div" else 0.0
                if kind in ("product_norm", "h1"):
                    ls = ls + _gram(tab.dx, tab.grad)
                if vspace is not None:
                    nv, ns = tab.phi.shape[2], tab.u.shape[2]
                    full = np.zeros((len(tab.elems), nv + ns, nv + ns))
                    full[:, :nv, :nv] = loc
                    full[:, nv:, nv:] = ls
                    loc = full
                else:
                    loc = ls
            pieces.append((disc.local_dofs(tab.elems), loc))
    if bnd and vspace is not None:
        for tab in disc.boundary():
            loc = _gram(tab.ds, tab.phin)
            if sspace is not None:
                nv, ns = tab.phin.shape[2], tab.u.shape[2]
                full = np.zeros((len(tab.elems), nv + ns, nv + ns))
                full[:, :nv, :nv] = loc
                loc = full
            pieces.append((disc.local_dofs(tab.elems), loc))
    return _scatter(pieces, n)


@dataclass
class FoslsSolution:
    """Coefficients of (phi_h, u_h) in the block ordering."""

    vspace: object
    sspace: object
    coef: np.ndarray

    @property
    def phi_coef(self):
        return self.coef[: self.vspace.ndof]

    @property
    def u_coef(self):
        return self.coef[self.vspace.ndof :]


def evaluate_solution(solution, element, xhat):
    """Fields at F_K(xhat) on element ``element``: (x, u, grad u, phi, div phi)."""
    vs, ss = solution.vspace, solution.sspace
    mesh = vs.mesh
    xh = np.atleast_2d(np.asarray(xhat, dtype=float))
    x, J, detJ = mesh.eval_maps([element], xh)
    vals, div = vs.basis.eval(xh)
    phys, pdiv = piola_push(J[0], detJ[0], vals, div)
    cv = solution.phi_coef[vs.dofs[element]] * vs.signs[element]
    sv, sg = ss.basis.eval(xh)
    cs = solution.u_coef[ss.dofs[element]] * ss.signs[element]
    grad = np.einsum("qlk,qml->qmk", np.linalg.inv(J[0]), sg)
    out = (x[0], sv @ cs, np.einsum("qmk,m->qk", grad, cs), np.einsum("qmk,m->qk", phys, cv), pdiv @ cv)
    if np.ndim(xhat) == 1:
        return tuple(o[0] for o in out)
    return out
