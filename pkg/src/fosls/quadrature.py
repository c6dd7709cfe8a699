"""Quadrature rules on the reference triangle, the unit interval and cut elements.

The reference triangle has vertices (0,0), (1,0), (0,1); the reference
interval is [0, 1].  Triangle rules are collapsed (Duffy) Gauss rules built
from a Gauss-Legendre and a Gauss-Jacobi(1, 0) factor, so every weight is
positive and any exactness degree can be requested.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 60
MAX_SECTOR = np.pi / 8


@dataclass(frozen=True)
class QuadRule:
    """Points and weights of a quadrature rule with exactness degree."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)


def _check_degree(d):
    if not 1 <= d <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {d} (1..{MAX_DEGREE})")


@lru_cache(maxsize=None)
def edge_rule(d: int) -> QuadRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials of degree ``d``."""
    _check_degree(d)
    n = d // 2 + 1
    s, w = roots_legendre(n)
    pts = 0.5 * (s + 1.0)
    rule = QuadRule(pts, 0.5 * w, 2 * n - 1)
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


@lru_cache(maxsize=None)
def triangle_rule(d: int) -> QuadRule:
    """Collapsed Gauss rule on the reference triangle, exact to degree ``d``.

    Uses x = u (1 - v), y = v with Gauss-Legendre in u and Gauss-Jacobi
    (weight 1 - v) in v.  Returns points of shape (n, 2).
    """
    _check_degree(d)
    n = d // 2 + 1
    su, wu = roots_legendre(n)
    sv, wv = roots_jacobi(n, 1.0, 0.0)
    u = 0.5 * (su + 1.0)
    v = 0.5 * (sv + 1.0)
    wu = 0.5 * wu
    wv = 0.25 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    pts = np.column_stack([(U * (1.0 - V)).ravel(), V.ravel()])
    rule = QuadRule(pts, W.ravel(), 2 * n - 1)
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _circle_edge_hits(P, Q, radius):
    """Parameters tau in (0, 1) where segment P->Q crosses |x| = radius."""
    e = Q - P
    a = e @ e
    b = 2.0 * (P @ e)
    c = P @ P - radius**2
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return []
    sq = np.sqrt(disc)
    taus = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
    return [t for t in taus if 1e-14 < t < 1.0 - 1e-14]


def polar_split_rule(vertices, radius, degree, n_theta=None):
    """Quadrature over a straight triangle cut by the circle |x| = ``radius``.

    The triangle is swept in polar coordinates around the origin.  The
    angular range is split at vertex angles and at the angles where the
    circle crosses an edge, so that on every sub-sector both the radial
    limits and the side of the circle are fixed.  Radial Gauss rules are
    then applied separately inside and outside the circle; no point lies on
    the circle itself.

    Parameters
    ----------
    vertices : (3, 2) array
        Physical triangle vertices.
    radius : float
        Radius of the cutting circle centred at the origin.
    degree : int
        Polynomial degree integrated exactly in the radial direction.
    n_theta : int, optional
        Angular Gauss points per sub-sector (default ``degree + 8``);
        sub-sectors are at most pi/8 wide.

    Returns
    -------
    points : (n, 2) array
    weights : (n,) array
        Physical weights (they sum to the triangle area).
    inside : (n,) bool array
        True for points with |x| < radius.
    """
    V = np.asarray(vertices, dtype=float)
    if n_theta is None:
        n_theta = degree + 8
    nr = (degree + 1) // 2 + 1
    rs, rw = roots_legendre(nr)
    ts, tw = roots_legendre(n_theta)

    norms = np.linalg.norm(V, axis=1)
    at_vertex = norms < 1e-14
    edges = [(V[(i + 1) % 3], V[(i + 2) % 3]) for i in range(3)]
    area2 = _cross(V[1] - V[0], V[2] - V[0])
    if area2 <= 0:
        raise ValueError("triangle must be counter-clockwise")
    bary_origin = [_cross(Q - P, -P) / area2 for P, Q in edges]
    origin_inside = min(bary_origin) > 1e-14
    if not at_vertex.any() and not origin_inside and min(bary_origin) > -1e-14:
        raise ValueError("origin on an edge of the cut triangle is not supported")

    centroid = V.mean(axis=0)
    ref = np.arctan2(centroid[1], centroid[0])

    def rel_angle(x):
        a = np.arctan2(x[1], x[0]) - ref
        return (a + np.pi) % (2.0 * np.pi) - np.pi

    if origin_inside:
        lo, hi = -np.pi, np.pi
        brk = [rel_angle(v) for v in V]
    else:
        angs = [rel_angle(v) for v, z in zip(V, at_vertex) if not z]
        lo, hi = min(angs), max(angs)
        brk = list(angs)
    for P, Q in edges:
        for t in _circle_edge_hits(P, Q, radius):
            brk.append(rel_angle(P + t * (Q - P)))
    brk = np.unique(np.clip(np.array(brk + [lo, hi]), lo, hi))
    # the angular integrand is rational, not polynomial: keep sectors narrow
    fine = [brk[:1]]
    for a0, a1 in zip(brk[:-1], brk[1:]):
        m = int(np.ceil((a1 - a0) / MAX_SECTOR))
        fine.append(np.linspace(a0, a1, m + 1)[1:])
    brk = np.concatenate(fine)

    pts, wts, ins = [], [], []
    for a0, a1 in zip(brk[:-1], brk[1:]):
        if a1 - a0 < 1e-15:
            continue
        mid = ref + 0.5 * (a0 + a1)
        dmid = np.array([np.cos(mid), np.sin(mid)])
        hits = []
        for P, Q in edges:
            e = Q - P
            den = _cross(dmid, e)
            if abs(den) < 1e-300:
                continue
            s = _cross(P, e) / den
            tau = _cross(P, dmid) / den
            if -1e-12 <= tau <= 1 + 1e-12 and s > 1e-14:
                hits.append((s, P, e))
        hits.sort(key=lambda h: h[0])
        if not hits:
            continue
        far = hits[-1]
        near = hits[0] if (len(hits) > 1 and not (origin_inside or at_vertex.any())) else None

        th = ref + a0 + 0.5 * (a1 - a0) * (ts + 1.0)
        wth = 0.5 * (a1 - a0) * tw
        d = np.column_stack([np.cos(th), np.sin(th)])
        b = _cross(far[1], far[2]) / _cross(d, far[2])
        if near is None:
            a = np.zeros_like(b)
        else:
            a = _cross(near[1], near[2]) / _cross(d, near[2])
        a_mid = 0.0 if near is None else near[0]
        b_mid = far[0]
        pieces = []
        if a_mid < radius:
            pieces.append((a, np.minimum(b, radius), True))
        if b_mid > radius:
            pieces.append((np.maximum(a, radius), b, False))
        for r0, r1, flag in pieces:
            r = r0[:, None] + 0.5 * (r1 - r0)[:, None] * (rs[None, :] + 1.0)
            w = wth[:, None] * 0.5 * (r1 - r0)[:, None] * rw[None, :] * r
            x = r[..., None] * d[:, None, :]
            pts.append(x.reshape(-1, 2))
            wts.append(w.ravel())
            ins.append(np.full(w.size, flag))
    return np.concatenate(pts), np.concatenate(wts), np.concatenate(ins)
