"""Structural invariant suites run by ``fosls check``.

Each check returns a :class:`CheckResult` with the measured quantity and the
threshold it is compared against.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import Discretization, FoslsSolution, assemble_fosls, assemble_gram
from .basis import EDGE_TANGENT, edge_points, piola_push
from .errors import compute_errors
from .mesh import make_disk_mesh, make_square_mesh
from .oracle import (
    bessel_i,
    bessel_i_integral,
    bessel_k,
    bessel_k_integral,
    manufactured,
    radial_exact,
    radial_fv_extrapolated,
)
from .projector import Field, best_approx, ih_gamma, tri_norm_of_error, vector_error_norms
from .quadrature import edge_rule, triangle_rule
from .solve import solve_spd
from .spaces import ScalarSpace, VectorSpace


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (threshold {self.threshold:g})"


def _below(name, value, threshold):
    return CheckResult(name, float(value), threshold, bool(value < threshold))


def check_symmetry(level=1, p=2):
    """Relative Frobenius asymmetry of the FOSLS matrix on the disk."""
    mesh = make_disk_mesh(level)
    ex = manufactured("disk_smooth")
    A, _ = assemble_fosls(mesh, VectorSpace(mesh, "RT", p), ScalarSpace(mesh, p), ex.problem())
    asym = spla.norm(A - A.T) / spla.norm(A)
    return _below("matrix symmetry", asym, 1e-14)


def check_galerkin(seed=0, n=4, p=1, trials=20, scale=1e-2):
    """b-norm error of the FOSLS solution is below that of random perturbations."""
    rng = np.random.default_rng(seed)
    mesh = make_square_mesh(n)
    ex = manufactured("square_smooth")
    V, S = VectorSpace(mesh, "RT", p), ScalarSpace(mesh, p)
    A, b = assemble_fosls(mesh, V, S, ex.problem())
    x = solve_spd(A, b)
    best = compute_errors(FoslsSolution(V, S, x), ex).err_b
    worst_gap = np.inf
    for _ in range(trials):
        y = x + scale * rng.standard_normal(len(x))
        worst_gap = min(worst_gap, compute_errors(FoslsSolution(V, S, y), ex).err_b - best)
    return CheckResult("Galerkin b-norm optimality (min gap)", worst_gap, 0.0, bool(worst_gap > 0))


def divergence_theorem_defect(mesh, family="RT", p=3):
    """max over curved elements and basis functions of |int_K div phi - int_dK phi.n| (physical route)."""
    vb = VectorSpace(mesh, family, p).basis
    elems = np.nonzero(mesh.curved)[0]
    tr = triangle_rule(2 * p + 8)
    _, J, detJ = mesh.eval_maps(elems, tr.points)
    vals, div = vb.eval(tr.points)
    _, pdiv = piola_push(J, detJ, vals[None], div[None])
    vol = np.einsum("eq,eqm->em", detJ * tr.weights, pdiv)
    er = edge_rule(2 * p + 8)
    flux = np.zeros_like(vol)
    for i in range(3):
        xh = edge_points(i, er.points)
        _, Je, dJe = mesh.eval_maps(elems, xh)
        v, d = vb.eval(xh)
        phys, _ = piola_push(Je, dJe, v[None], d[None])
        tJ = Je @ EDGE_TANGENT[i]
        speed = np.linalg.norm(tJ, axis=-1)
        normal = np.stack([tJ[..., 1], -tJ[..., 0]], -1) / speed[..., None]
        flux += np.einsum("eq,eqmk,eqk->em", speed * er.weights, phys, normal)
    return float(np.abs(vol - flux).max())


def check_divergence_theorem(level=1, p=3):
    return _below("divergence theorem on curved elements", divergence_theorem_defect(make_disk_mesh(level), "RT", p), 1e-10)


def check_radial_oracle(n=100000):
    """Closed-form radial solution against the extrapolated finite-volume solve."""
    radii = np.array([0.0, 0.25, 0.75, 1.0])
    fv = radial_fv_extrapolated(n, tuple(radii))
    diff = np.abs(fv - radial_exact().radial(radii)).max()
    return _below("radial solution vs finite-volume oracle", diff, 1e-7)


def check_bessel(npts=50):
    x = np.linspace(0.05, np.sqrt(2.0), npts)
    d = max(np.abs(bessel_i(n, x) - bessel_i_integral(n, x)).max() for n in (0, 1))
    d = max(d, max(np.abs(bessel_k(n, x) - bessel_k_integral(n, x)).max() for n in (0, 1)))
    return _below("Bessel series vs integral representation", d, 1e-12)


def rayleigh_extremes(n, p=1, family="RT"):
    """Smallest and largest generalized eigenvalues of (FOSLS matrix, product-norm Gram)."""
    mesh = make_square_mesh(n)
    ex = manufactured("square_smooth")
    V, S = VectorSpace(mesh, family, p), ScalarSpace(mesh, p)
    A, _ = assemble_fosls(mesh, V, S, ex.problem())
    M = assemble_gram(mesh, (V, S), "product_norm")
    v0 = np.ones(A.shape[0])
    hi = spla.eigsh(A, k=1, M=M, which="LA", v0=v0, return_eigenvectors=False)[0]
    lo = spla.eigsh(A, k=1, M=M, sigma=0.0, which="LM", v0=v0, return_eigenvectors=False)[0]
    return float(lo), float(hi)


def check_norm_equivalence(ns=(4, 8, 16, 32), p=1):
    ext = np.array([rayleigh_extremes(n, p) for n in ns])
    spread = max(np.ptp(ext[:, 0]) / ext[:, 0].min(), np.ptp(ext[:, 1]) / ext[:, 1].min())
    ok = spread < 0.15 and ext[:, 0].min() > 0
    return CheckResult("norm equivalence: Rayleigh quotient spread", float(spread), 0.15, bool(ok))


def projector_checks(seed=0, ns=(2, 4, 8, 16), p=2, candidates=10):
    """Idempotence, divergence orthogonality, div-optimality and boundedness ratio."""
    rng = np.random.default_rng(seed)
    ex = manufactured("square_smooth")
    F = Field.flux_of(ex)
    idem = orth = 0.0
    ineq_ok = True
    ratios = []
    for n in ns:
        mesh = make_square_mesh(n)
        V = VectorSpace(mesh, "RT", p)
        disc = Discretization(V, None)
        res = ih_gamma(V, F, disc, full=True)
        c = res.coef
        idem = max(idem, np.abs(ih_gamma(V, c, disc) - c).max() / np.abs(c).max())
        orth = max(orth, np.abs(res.B @ c - res.rhs_constraint).max() / np.abs(res.rhs_constraint).max())
        _, _, d_i = vector_error_norms(V, c, F, disc)
        for _ in range(candidates):
            cand = c + rng.standard_normal(V.ndof) * 10.0 ** rng.uniform(-4, 0)
            _, _, d_c = vector_error_norms(V, cand, F, disc)
            ineq_ok &= np.sqrt(d_i) <= np.sqrt(d_c) * (1 + 1e-12)
        star = best_approx(V, F, "tri", disc)
        vol, bnd, dv = vector_error_norms(V, star, F, disc)
        ratios.append(tri_norm_of_error(V, c, F, disc).value / (np.sqrt(vol + bnd) + mesh.h * np.sqrt(dv)))
    return [
        _below("projector idempotence", idem, 1e-12),
        _below("divergence orthogonality residual", orth, 1e-11),
        CheckResult("divergence optimality vs random candidates", 0.0 if ineq_ok else 1.0, 0.5, bool(ineq_ok)),
        CheckResult("tri-norm boundedness ratio (max)", float(max(ratios)), 10.0, bool(max(ratios) <= 10.0)),
    ]


def run_all(seed=0, log=None):
    results = [
        check_symmetry(),
        check_galerkin(seed),
        check_divergence_theorem(),
        check_radial_oracle(),
        check_bessel(),
        check_norm_equivalence(),
        *projector_checks(seed),
    ]
    if log:
        for r in results:
            log(r.line())
    return results
