"""Global finite element spaces: DOF numbering, orientation signs, interpolation.

The restriction of a global basis function to element K equals
``signs[K, j] * (local basis function j)``, mapped to K (identity map for
scalars, contravariant Piola for vector fields).
"""

import numpy as np

from .basis import EDGE_TANGENT, REF_VERTICES, ScalarBasis, VectorBasis, edge_points, legendre01
from .quadrature import edge_rule, triangle_rule


def _edge_block(mesh, per_edge, offset, parity):
    dofs = np.empty((mesh.nt, 3, per_edge), dtype=np.int64)
    signs = np.ones((mesh.nt, 3, per_edge))
    for i in range(3):
        dofs[:, i] = offset + mesh.tri_edges[:, i, None] * per_edge + np.arange(per_edge)
        rev = mesh.edge_sign[:, i] < 0
        signs[rev, i] = parity
    return dofs.reshape(mesh.nt, -1), signs.reshape(mesh.nt, -1)


class ScalarSpace:
    """H1-conforming S_p(T_h): vertex dofs, then edge dofs, then bubbles."""

    def __init__(self, mesh, degree):
        self.mesh = mesh
        self.degree = degree
        self.basis = b = ScalarBasis(degree)
        ed, es = _edge_block(mesh, b.n_edge, mesh.nv, b.edge_parity)
        off = mesh.nv + mesh.ne * b.n_edge
        idof = off + np.arange(mesh.nt)[:, None] * b.n_interior + np.arange(b.n_interior)
        self.dofs = np.hstack([mesh.triangles, ed, idof]).astype(np.int64)
        self.signs = np.hstack([np.ones((mesh.nt, 3)), es, np.ones((mesh.nt, b.n_interior))])
        self.ndof = off + mesh.nt * b.n_interior

    def interpolate(self, u):
        """Projection-based interpolant of a callable u(x) (vectorised over x[..., 2]).

        Vertex values, then edge-wise and interior L2 projections of the
        remainder; reproduces every element of the space exactly.
        """
        mesh, b = self.mesh, self.basis
        coef = np.zeros(self.ndof)
        x, _, _ = mesh.eval_maps(np.arange(mesh.nt), REF_VERTICES)
        coef[mesh.triangles.ravel()] = u(x).ravel()
        if b.n_edge:
            er = edge_rule(2 * b.degree + 4)
            for i in range(3):
                xh = edge_points(i, er.points)
                xp, _, _ = mesh.eval_maps(np.arange(mesh.nt), xh)
                vals, _ = b.eval(xh)
                vv = vals[:, :3]
                ve = vals[:, b.edge_slice(i)]
                vc = coef[mesh.triangles]
                rem = u(xp) - vc @ vv.T
                G = (ve * er.weights[:, None]).T @ ve
                rhs = (rem * er.weights) @ ve
                loc = np.linalg.solve(G, rhs.T).T
                d = self.dofs[:, b.edge_slice(i)]
                coef[d] = loc * self.signs[:, b.edge_slice(i)]
        if b.n_interior:
            tr = triangle_rule(2 * b.degree + 4)
            xp, _, _ = mesh.eval_maps(np.arange(mesh.nt), tr.points)
            vals, _ = b.eval(tr.points)
            isl = b.interior_slice
            c = coef[self.dofs[:, : isl.start]] * self.signs[:, : isl.start]
            rem = u(xp) - c @ vals[:, : isl.start].T
            vi = vals[:, isl]
            G = (vi * tr.weights[:, None]).T @ vi
            loc = np.linalg.solve(G, ((rem * tr.weights) @ vi).T).T
            coef[self.dofs[:, isl]] = loc
        return coef


class VectorSpace:
    """H(div)-conforming RT_{p-1}(T_h) or BDM_p(T_h): edge dofs, then interior dofs."""

    def __init__(self, mesh, family, degree):
        self.mesh = mesh
        self.basis = b = VectorBasis(family, degree)
        self.family = b.family
        self.degree = degree
        ed, es = _edge_block(mesh, b.n_edge, 0, b.edge_parity)
        off = mesh.ne * b.n_edge
        idof = off + np.arange(mesh.nt)[:, None] * b.n_interior + np.arange(b.n_interior)
        self.dofs = np.hstack([ed, idof]).astype(np.int64)
        self.signs = np.hstack([es, np.ones((mesh.nt, b.n_interior))])
        self.ndof = off + mesh.nt * b.n_interior

    def interpolate(self, phi):
        """Interpolant from edge normal moments plus interior L2 (Piola) projection.

        ``phi(x)`` returns (..., 2).  Elements of the space are reproduced.
        """
        mesh, b = self.mesh, self.basis
        coef = np.zeros(self.ndof)
        er = edge_rule(2 * b.degree + 6)
        nt = np.arange(mesh.nt)
        for i in range(3):
            xh = edge_points(i, er.points)
            xp, J, _ = mesh.eval_maps(nt, xh)
            tJ = J @ EDGE_TANGENT[i]
            rot = np.stack([tJ[..., 1], -tJ[..., 0]], axis=-1)
            flux = (phi(xp) * rot).sum(-1)
            L = np.column_stack([legendre01(j, er.points) for j in range(b.n_edge)])
            mom = (flux * er.weights) @ L
            sl = b.edge_slice(i)
            coef[self.dofs[:, sl]] = mom * self.signs[:, sl]
        if b.n_interior:
            tr = triangle_rule(2 * b.degree + 6)
            xp, J, detJ = mesh.eval_maps(nt, tr.points)
            ph = phi(xp)
            # pull back: phi_hat = det J J^{-1} phi
            adj = np.stack([np.stack([J[..., 1, 1], -J[..., 0, 1]], -1), np.stack([-J[..., 1, 0], J[..., 0, 0]], -1)], -2)
            phat = np.einsum("eqkl,eql->eqk", adj, ph)
            vals, _ = b.eval(tr.points)
            isl = b.interior_slice
            c = coef[self.dofs[:, : isl.start]] * self.signs[:, : isl.start]
            rem = phat - np.einsum("eb,qbk->eqk", c, vals[:, : isl.start])
            coef[self.dofs[:, isl]] = np.einsum("q,eqk,qbk->eb", tr.weights, rem, vals[:, isl])
        return coef
