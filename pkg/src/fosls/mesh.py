"""Triangulations of the unit square and the unit disk.

Every element map has the form F_K = R_K o A_K with an affine part A_K and a
smooth part R_K that is the identity for straight elements.  On the disk,
elements with an edge on the circle are curved: local vertices are rotated
so that the curved edge is edge 0 (from vertex 1 to vertex 2), and

    F_K(xh) = A_K(xh) + lam1 lam2 * D(t),   t = (1 + yh - xh) / 2,

where D(t) = (arc(t) - chord(t)) / (t (1 - t)) is analytic, the arc is
parametrised linearly in angle, and lam1 = xh, lam2 = yh.  On edge 0 the
map reproduces the arc exactly; on edges 1 and 2 it is affine, so curved
elements stay compatible with their straight neighbours.
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .basis import EDGE_START, EDGE_TANGENT
from .quadrature import triangle_rule

_QCOEF = np.array([1.0 / factorial(k + 2) for k in range(30)])


def _q(z):
    """(exp(z) - 1 - z) / z**2 and its derivative, by Taylor series (|z| <= 2)."""
    val = np.zeros_like(z)
    der = np.zeros_like(z)
    for k in range(len(_QCOEF) - 1, -1, -1):
        val = val * z + _QCOEF[k]
    for k in range(len(_QCOEF) - 1, 0, -1):
        der = der * z + k * _QCOEF[k]
    return val, der


def _arc_blend(theta1, delta, radius, t):
    """D(t) and D'(t) as complex arrays; theta1/delta broadcast against t."""
    t = np.asarray(t, dtype=float)
    theta1, delta, t = np.broadcast_arrays(theta1, delta, t)
    D = np.empty(t.shape, dtype=complex)
    dD = np.empty(t.shape, dtype=complex)
    lo = t <= 0.5
    for mask, sgn in ((lo, 1.0), (~lo, -1.0)):
        if not mask.any():
            continue
        d = sgn * delta[mask]
        s = t[mask] if sgn > 0 else 1.0 - t[mask]
        base = theta1[mask] if sgn > 0 else theta1[mask] + delta[mask]
        C = radius * np.exp(1j * base) * d * d
        q_full, _ = _q(1j * d)
        q_s, dq_s = _q(1j * s * d)
        N = q_full - s * q_s
        dN = -q_s - s * 1j * d * dq_s
        D[mask] = C * N / (1.0 - s)
        dD[mask] = sgn * C * (dN * (1.0 - s) + N) / (1.0 - s) ** 2
    return D, dD


@dataclass(frozen=True)
class ElementMap:
    """F_K = R_K o A_K for one element.

    ``A`` and ``offset`` define the affine part x = offset + A xh.  For curved
    elements ``arc = (theta1, delta, radius)`` describes the image of edge 0.
    """

    A: np.ndarray
    offset: np.ndarray
    h: float
    arc: tuple = None

    @property
    def curved(self):
        return self.arc is not None


def map_eval(emap, xhat):
    """Evaluate x = F_K(xh), the Jacobian J and det J at reference points.

    ``xhat`` is (2,) or (n, 2); outputs have matching leading shape.
    """
    xh = np.asarray(xhat, dtype=float)
    single = xh.ndim == 1
    xh = np.atleast_2d(xh)
    x = emap.offset + xh @ emap.A.T
    J = np.broadcast_to(emap.A, (len(xh), 2, 2)).copy()
    if emap.curved:
        th1, dl, rad = emap.arc
        corr, dcorr = _curved_correction(np.array([th1]), np.array([dl]), rad, xh)
        x = x + corr[0]
        J = J + dcorr[0]
    detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    if single:
        return x[0], J[0], detJ[0]
    return x, J, detJ


def _curved_correction(theta1, delta, radius, xh):
    """Blend term and its Jacobian for elements (ne,) at points (nq, 2)."""
    X, Y = xh[:, 0], xh[:, 1]
    t = 0.5 * (1.0 + Y - X)
    w = X * Y
    D, dD = _arc_blend(theta1[:, None], delta[:, None], radius, t[None, :])
    Dv = np.stack([D.real, D.imag], axis=-1)
    dDv = np.stack([dD.real, dD.imag], axis=-1)
    corr = w[None, :, None] * Dv
    dcorr = np.empty(Dv.shape + (2,))
    dcorr[..., 0] = Y[None, :, None] * Dv - 0.5 * w[None, :, None] * dDv
    dcorr[..., 1] = X[None, :, None] * Dv + 0.5 * w[None, :, None] * dDv
    return corr, dcorr


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with (possibly curved) element maps.

    Triangles are counter-clockwise.  ``edges`` holds vertex pairs in
    ascending global order; ``tri_edges[k, i]`` is the global edge opposite
    local vertex i, and ``edge_sign[k, i]`` is +1 when the local direction
    (vertex i+1 -> vertex i+2) agrees with the global one.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    tri_edges: np.ndarray
    edge_sign: np.ndarray
    boundary: np.ndarray
    edge_tris: np.ndarray
    curved: np.ndarray
    arcs: np.ndarray
    domain: str
    radius: float = 1.0
    hs: np.ndarray = field(default=None)

    @classmethod
    def from_triangles(cls, vertices, triangles, domain, radius=1.0):
        V = np.asarray(vertices, dtype=float)
        T = np.array(triangles, dtype=np.int64)
        nt = len(T)
        loc = np.stack([T[:, [1, 2]], T[:, [2, 0]], T[:, [0, 1]]], axis=1)  # (nt, 3, 2)
        key = np.sort(loc, axis=2).reshape(-1, 2)
        edges, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        inv = inv.reshape(-1)
        if counts.max() > 2:
            raise ValueError("non-manifold triangulation")
        boundary = counts == 1

        if domain == "disk":
            bmask = boundary[inv].reshape(nt, 3)
            nb = bmask.sum(axis=1)
            if nb.max() > 1:
                raise ValueError("a triangle has more than one edge on the circle")
            for k in np.nonzero(nb == 1)[0]:
                i = int(np.argmax(bmask[k]))
                T[k] = np.roll(T[k], -i)
            loc = np.stack([T[:, [1, 2]], T[:, [2, 0]], T[:, [0, 1]]], axis=1)
            key = np.sort(loc, axis=2).reshape(-1, 2)
            edges2, inv = np.unique(key, axis=0, return_inverse=True)
            inv = inv.reshape(-1)
            assert np.array_equal(edges, edges2)

        tri_edges = inv.reshape(nt, 3)
        edge_sign = np.where(loc[:, :, 0] < loc[:, :, 1], 1, -1).astype(np.int8)
        edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
        for k in range(nt):
            for i in range(3):
                e = tri_edges[k, i]
                edge_tris[e, 0 if edge_tris[e, 0] < 0 else 1] = k

        d1 = V[T[:, 1]] - V[T[:, 0]]
        d2 = V[T[:, 2]] - V[T[:, 0]]
        if np.any(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] <= 0):
            raise ValueError("triangles must be counter-clockwise")

        curved = np.zeros(nt, dtype=bool)
        arcs = np.zeros((nt, 2))
        if domain == "disk":
            curved = boundary[tri_edges[:, 0]].copy()
            for k in np.nonzero(curved)[0]:
                a = V[T[k, 1]]
                b = V[T[k, 2]]
                t1 = np.arctan2(a[1], a[0])
                dl = (np.arctan2(b[1], b[0]) - t1 + np.pi) % (2 * np.pi) - np.pi
                arcs[k] = (t1, dl)
        mesh = cls(V, T, edges, tri_edges, edge_sign, boundary, edge_tris, curved, arcs, domain, radius)
        object.__setattr__(mesh, "hs", mesh._diameters())
        for arr in (V, T, edges, tri_edges, edge_sign, boundary, edge_tris, curved, arcs, mesh.hs):
            arr.setflags(write=False)
        return mesh

    @property
    def nv(self):
        return len(self.vertices)

    @property
    def nt(self):
        return len(self.triangles)

    @property
    def ne(self):
        return len(self.edges)

    @property
    def h(self):
        return float(self.hs.max())

    @property
    def boundary_edges(self):
        return np.nonzero(self.boundary)[0]

    def affine(self, k=None):
        """Affine parts (offset, A) for element k or for all elements."""
        T = self.triangles if k is None else self.triangles[[k]]
        v0 = self.vertices[T[:, 0]]
        A = np.stack([self.vertices[T[:, 1]] - v0, self.vertices[T[:, 2]] - v0], axis=-1)
        if k is None:
            return v0, A
        return v0[0], A[0]

    def element_map(self, k):
        off, A = self.affine(k)
        arc = (float(self.arcs[k, 0]), float(self.arcs[k, 1]), self.radius) if self.curved[k] else None
        return ElementMap(A, off, float(self.hs[k]), arc)

    @property
    def maps(self):
        return [self.element_map(k) for k in range(self.nt)]

    def eval_maps(self, elems, xhat):
        """Batched F_K, J, det J for elements ``elems`` at reference points (nq, 2)."""
        elems = np.asarray(elems, dtype=np.int64)
        xh = np.atleast_2d(np.asarray(xhat, dtype=float))
        off, A = self.affine()
        off, A = off[elems], A[elems]
        x = off[:, None, :] + np.einsum("ekl,ql->eqk", A, xh)
        J = np.broadcast_to(A[:, None], (len(elems), len(xh), 2, 2)).copy()
        cm = self.curved[elems]
        if cm.any():
            ce = elems[cm]
            corr, dcorr = _curved_correction(self.arcs[ce, 0], self.arcs[ce, 1], self.radius, xh)
            x[cm] += corr
            J[cm] += dcorr
        detJ = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        return x, J, detJ

    def _diameters(self):
        V = self.vertices[self.triangles]
        h = np.max(np.linalg.norm(V[:, [0, 1, 2]] - V[:, [1, 2, 0]], axis=-1), axis=1)
        ck = np.nonzero(self.curved)[0]
        if len(ck):
            t = np.linspace(0.0, 1.0, 17)
            pts = np.concatenate([EDGE_START[i] + t[:, None] * EDGE_TANGENT[i] for i in range(3)])
            x, _, _ = self.eval_maps(ck, pts)
            diff = x[:, :, None, :] - x[:, None, :, :]
            h = h.copy()
            h[ck] = np.linalg.norm(diff, axis=-1).max(axis=(1, 2))
        return h

    def shape_regularity(self):
        """kappa = max_K max(h_K |A_K'^{-1}|, |A_K'| / h_K) (spectral norms)."""
        _, A = self.affine()
        s = np.linalg.svd(A, compute_uv=False)
        return float(np.max(np.maximum(self.hs / s[:, 1], s[:, 0] / self.hs)))

    def area(self, degree=12):
        rule = triangle_rule(degree)
        _, _, detJ = self.eval_maps(np.arange(self.nt), rule.points)
        return float((detJ * rule.weights).sum())

    def dump(self, path):
        """Write the plain-text mesh format (header ``nv nt ne``)."""
        with open(path, "w") as fh:
            fh.write(f"{self.nv} {self.nt} {self.ne}\n")
            for x, y in self.vertices:
                fh.write(f"{float(x)!r} {float(y)!r}\n")
            for a, b, c in self.triangles:
                fh.write(f"{a} {b} {c}\n")
            for (a, b), bd in zip(self.edges, self.boundary):
                fh.write(f"{a} {b} {int(bd)}\n")


def read_mesh(path, domain="square"):
    """Read a mesh written by :meth:`Mesh.dump`."""
    with open(path) as fh:
        nv, nt, _ = map(int, fh.readline().split())
        V = np.array([list(map(float, fh.readline().split())) for _ in range(nv)])
        T = np.array([list(map(int, fh.readline().split())) for _ in range(nt)])
    return Mesh.from_triangles(V, T, domain)


def make_square_mesh(n):
    """Structured mesh of [0,1]^2 with 2 n^2 affine triangles."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g, indexing="xy")
    V = np.column_stack([X.ravel(), Y.ravel()])
    tris = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return Mesh.from_triangles(V, tris, "square")


INNER_RADIUS = 0.6


def _coarse_disk():
    V = [(0.0, 0.0)]
    V += [(INNER_RADIUS * np.cos(j * np.pi / 3), INNER_RADIUS * np.sin(j * np.pi / 3)) for j in range(6)]
    V += [(np.cos(k * np.pi / 6), np.sin(k * np.pi / 6)) for k in range(12)]
    inner = lambda j: 1 + j % 6
    bnd = lambda k: 7 + k % 12
    T = []
    for j in range(6):
        T.append((0, inner(j), inner(j + 1)))
        T.append((inner(j), bnd(2 * j), bnd(2 * j + 1)))
        T.append((inner(j), bnd(2 * j - 1), bnd(2 * j)))
        T.append((inner(j), bnd(2 * j + 1), inner(j + 1)))
    return Mesh.from_triangles(np.array(V), T, "disk")


def refine_uniform(mesh):
    """Split every triangle into four by its reference-space edge midpoints.

    New vertices are images of reference midpoints under F_K, so midpoints
    of boundary edges land on the circle.  The refined mesh recomputes which
    elements are curved.
    """
    mids = np.empty((mesh.ne, 2))
    for i in range(3):
        xm = EDGE_START[i] + 0.5 * EDGE_TANGENT[i]
        x, _, _ = mesh.eval_maps(np.arange(mesh.nt), xm[None])
        mids[mesh.tri_edges[:, i]] = x[:, 0]
    V = np.vstack([mesh.vertices, mids])
    m = mesh.nv + mesh.tri_edges
    T = mesh.triangles
    children = np.concatenate(
        [
            np.column_stack([T[:, 0], m[:, 2], m[:, 1]]),
            np.column_stack([m[:, 2], T[:, 1], m[:, 0]]),
            np.column_stack([m[:, 1], m[:, 0], T[:, 2]]),
            np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
        ]
    )
    return Mesh.from_triangles(V, children, mesh.domain, mesh.radius)


def make_disk_mesh(level):
    """Unit-disk mesh: coarse mesh (h ~ 0.6) refined ``level`` times.

    No vertex or edge of any level lies on the circle r = 1/2.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    mesh = _coarse_disk()
    for _ in range(level):
        mesh = refine_uniform(mesh)
    return mesh


def make_mesh(domain, level):
    """Level-indexed mesh family: square n = 2**(level+1), disk as above."""
    if domain == "square":
        return make_square_mesh(2 ** (level + 1))
    if domain == "disk":
        return make_disk_mesh(level)
    raise ValueError(f"unknown domain {domain!r}")
