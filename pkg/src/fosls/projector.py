"""Constrained approximation in the tri-norm and plain best approximations.

The tri-scalar product on H(div) fields is

    <<phi, psi>> = (phi, psi)_Omega + <phi.n, psi.n>_Gamma.

:func:`ih_gamma` minimises <<phi - phi_h>> over the vector space subject to
(div (phi - phi_h), eta_h) = 0 for all eta_h in div(V_h), i.e. it solves

    <<phi_h, mu>> + (div mu, lam) = <<phi, mu>>       for all mu in V_h,
    (div phi_h, eta)               = (div phi, eta)   for all eta in div(V_h).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .assembly import Discretization, assemble_gram
from .basis import dubiner, poly_dim
from .errors import scalar_at, vector_at
from .solve import solve_saddle, solve_spd


@dataclass(frozen=True)
class Field:
    """A vector field with its divergence, or a scalar field with its gradient."""

    value: Callable
    div: Optional[Callable] = None
    grad: Optional[Callable] = None

    @classmethod
    def flux_of(cls, exact):
        return cls(exact.phi, div=exact.div_phi)

    @classmethod
    def scalar_of(cls, exact):
        return cls(exact.u, grad=exact.grad_u)


@dataclass(frozen=True)
class TriNorm:
    volume: float  # ||phi||_{L2(Omega)}^2
    boundary: float  # ||phi.n||_{L2(Gamma)}^2

    @property
    def value(self):
        return float(np.sqrt(self.volume + self.boundary))

    def __float__(self):
        return self.value


class DivRange:
    """Orthonormal basis of div(V_h): on element K, (q / det J) o F_K^{-1} with q in P_{p_v - 1}.

    For both families the reference divergence spans P_{p_v - 1}, and the
    Piola transform divides it by det J, so this is exactly the range of the
    divergence (also on curved elements).  Each element block is
    L2(K)-orthonormalised.
    """

    def __init__(self, disc):
        vs = disc.vspace
        self.disc = disc
        self.degree = vs.basis.div_degree
        self.nloc = poly_dim(self.degree)
        self.size = disc.mesh.nt * self.nloc
        G = np.zeros((disc.mesh.nt, self.nloc, self.nloc))
        self._raw = []
        for tab in disc.volume():
            q = self._reference(tab)
            G[tab.elems] += np.einsum("eq,eqi,eqj->eij", tab.dx, q, q)
            self._raw.append(q)
        # eta = q C with C^T G C = I
        L = np.linalg.cholesky(G)
        eye = np.broadcast_to(np.eye(self.nloc), G.shape)
        self.coef = np.linalg.solve(L, eye).transpose(0, 2, 1)

    def _reference(self, tab):
        nE, nq, _ = tab.xhat.shape
        q, _ = dubiner(self.degree, tab.xhat.reshape(-1, 2))
        return q.reshape(nE, nq, -1) / tab.detJ[..., None]

    def values(self):
        """Per volume table: basis values (nE, nq, nloc)."""
        return [np.einsum("eqi,eij->eqj", q, self.coef[tab.elems]) for q, tab in zip(self._raw, self.disc.volume())]

    def dofs(self, elems):
        return np.asarray(elems)[:, None] * self.nloc + np.arange(self.nloc)


def _tri_load(disc, field):
    vs = disc.vspace
    rhs = np.zeros(vs.ndof)
    for tab in disc.volume():
        loc = np.einsum("eq,eqk,eqik->ei", tab.dx, field.value(tab.x), tab.phi)
        np.add.at(rhs, vs.dofs[tab.elems].ravel(), loc.ravel())
    for tab in disc.boundary():
        fn = (field.value(tab.x) * tab.normal).sum(-1)
        loc = np.einsum("eq,eqi->ei", tab.ds * fn, tab.phin)
        np.add.at(rhs, vs.dofs[tab.elems].ravel(), loc.ravel())
    return rhs


def constraint_matrix(disc, rng_basis=None):
    """B[k, j] = (div mu_j, eta_k) and the div-range basis used."""
    vs = disc.vspace
    R = rng_basis or DivRange(disc)
    rows, cols, vals = [], [], []
    for tab, eta in zip(disc.volume(), R.values()):
        loc = np.einsum("eq,eqk,eqj->ekj", tab.dx, eta, tab.div)
        rd = R.dofs(tab.elems)
        cd = vs.dofs[tab.elems]
        rows.append(np.repeat(rd, cd.shape[1], axis=1).ravel())
        cols.append(np.tile(cd, (1, rd.shape[1])).ravel())
        vals.append(loc.ravel())
    B = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(R.size, vs.ndof))
    return B.tocsr(), R


def _div_load(disc, R, field):
    rhs = np.zeros(R.size)
    for tab, eta in zip(disc.volume(), R.values()):
        loc = np.einsum("eq,eqk->ek", tab.dx * field.div(tab.x), eta)
        np.add.at(rhs, R.dofs(tab.elems).ravel(), loc.ravel())
    return rhs


@dataclass
class ProjectionResult:
    coef: np.ndarray
    multiplier: np.ndarray
    M: sp.csr_matrix
    B: sp.csr_matrix
    rhs_primal: np.ndarray
    rhs_constraint: np.ndarray
    div_range: DivRange

    def residuals(self):
        """Relative residuals of both saddle equations."""
        r1 = self.M @ self.coef + self.B.T @ self.multiplier - self.rhs_primal
        r2 = self.B @ self.coef - self.rhs_constraint
        n1 = max(np.linalg.norm(self.rhs_primal), np.finfo(float).tiny)
        n2 = max(np.linalg.norm(self.rhs_constraint), np.finfo(float).tiny)
        return np.linalg.norm(r1) / n1, np.linalg.norm(r2) / n2


def ih_gamma(vspace, field, disc=None, full=False):
    """Tri-norm projection of ``field`` with divergence constraint.

    ``field`` is a :class:`Field` (value and div callables) or a coefficient
    vector of ``vspace``.  Returns the coefficient vector, or a
    :class:`ProjectionResult` if ``full``.
    """
    disc = disc or Discretization(vspace, None)
    M = assemble_gram(vspace.mesh, vspace, "tri_scalar", disc)
    B, R = constraint_matrix(disc)
    if isinstance(field, Field):
        f1, f2 = _tri_load(disc, field), _div_load(disc, R, field)
    else:
        c = np.asarray(field, dtype=float)
        f1, f2 = M @ c, B @ c
    x, lam = solve_saddle(M, B, f1, f2)
    if full:
        return ProjectionResult(x, lam, M, B, f1, f2, R)
    return x


_VECTOR_KINDS = {"L2": "l2", "tri": "tri_scalar", "div": "hdiv"}
_SCALAR_KINDS = {"L2": "l2", "H1": "h1"}


def best_approx(space, field, norm, disc=None):
    """Best approximation of ``field`` in ``space`` for the given norm.

    Vector spaces: ``norm`` in {"L2", "tri", "div"}, where "div" is the full
    H(div) norm ||phi||^2 + ||div phi||^2.  Scalar spaces: {"L2", "H1"}.
    """
    is_vec = hasattr(space.basis, "family")
    kinds = _VECTOR_KINDS if is_vec else _SCALAR_KINDS
    if norm not in kinds:
        raise ValueError(f"norm {norm!r} not available; choose from {sorted(kinds)}")
    if disc is None:
        disc = Discretization(space, None) if is_vec else Discretization(None, space)
    G = assemble_gram(space.mesh, space, kinds[norm], disc)
    rhs = np.zeros(space.ndof)
    for tab in disc.volume():
        if is_vec:
            loc = np.einsum("eq,eqk,eqik->ei", tab.dx, field.value(tab.x), tab.phi)
            if norm == "div":
                loc += np.einsum("eq,eqi->ei", tab.dx * field.div(tab.x), tab.div)
        else:
            loc = np.einsum("eq,eqi->ei", tab.dx * field.value(tab.x), tab.u)
            if norm == "H1":
                loc += np.einsum("eq,eqk,eqik->ei", tab.dx, field.grad(tab.x), tab.grad)
        np.add.at(rhs, space.dofs[tab.elems].ravel(), loc.ravel())
    if is_vec and norm == "tri":
        for tab in disc.boundary():
            fn = (field.value(tab.x) * tab.normal).sum(-1)
            np.add.at(rhs, space.dofs[tab.elems].ravel(), np.einsum("eq,eqi->ei", tab.ds * fn, tab.phin).ravel())
    return solve_spd(G, rhs)


def vector_error_norms(vspace, coef, field=None, disc=None):
    """Squared norms of field - phi_h: (L2(Omega), L2(Gamma) normal trace, div)."""
    disc = disc or Discretization(vspace, None)
    vol = bnd = div = 0.0
    for tab in disc.volume():
        ph, dh = vector_at(tab, vspace, coef)
        if field is not None:
            ph = field.value(tab.x) - ph
            if field.div is not None:
                dh = field.div(tab.x) - dh
        vol += (tab.dx[..., None] * ph**2).sum()
        div += (tab.dx * dh**2).sum()
    for tab in disc.boundary():
        pn = np.einsum("eqi,ei->eq", tab.phin, coef[vspace.dofs[tab.elems]])
        if field is not None:
            pn = (field.value(tab.x) * tab.normal).sum(-1) - pn
        bnd += (tab.ds * pn**2).sum()
    return float(vol), float(bnd), float(div)


def tri_norm_of_error(vspace, coef, field=None, disc=None):
    """<<field - phi_h>> by quadrature (``field=None`` gives <<phi_h>>)."""
    vol, bnd, _ = vector_error_norms(vspace, coef, field, disc)
    return TriNorm(vol, bnd)


def scalar_l2_error(sspace, coef, field, disc=None):
    disc = disc or Discretization(None, sspace)
    err = 0.0
    for tab in disc.volume():
        uh, _ = scalar_at(tab, sspace, coef)
        err += (tab.dx * (field.value(tab.x) - uh) ** 2).sum()
    return float(np.sqrt(err))
