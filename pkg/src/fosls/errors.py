"""Error norms of a discrete pair (phi_h, u_h) against an exact solution."""

from dataclasses import asdict, dataclass

import numpy as np

from .assembly import Discretization

NORM_NAMES = ("err_u_l2", "err_grad_u", "err_phi_l2", "err_div_phi", "err_phi_n", "err_b")


@dataclass(frozen=True)
class ErrorReport:
    err_u_l2: float
    err_grad_u: float
    err_phi_l2: float
    err_div_phi: float
    err_phi_n: float
    err_b: float
    ndof: int
    h: float
    p_s: int
    p_v: int
    # squared residual terms of err_b: volume div, volume grad, boundary trace
    b_terms: tuple = (0.0, 0.0, 0.0)

    def as_dict(self):
        return asdict(self)


def vector_at(tab, vspace, coef):
    """phi_h and div phi_h on a volume table; ``coef`` holds the vector dofs."""
    c = coef[vspace.dofs[tab.elems]]
    return np.einsum("eqik,ei->eqk", tab.phi, c), np.einsum("eqi,ei->eq", tab.div, c)


def scalar_at(tab, sspace, coef):
    """u_h and grad u_h on a volume table; ``coef`` holds the scalar dofs."""
    c = coef[sspace.dofs[tab.elems]]
    return np.einsum("eqi,ei->eq", tab.u, c), np.einsum("eqik,ei->eqk", tab.grad, c)


def error_discretization(vspace, sspace, interface_radius=None, extra=2):
    """Quadrature for error norms: assembly degrees raised by ``extra``."""
    pmax = max(s.degree for s in (vspace, sspace) if s is not None)
    return Discretization(
        vspace,
        sspace,
        degree=2 * pmax + 2 + extra,
        boundary_degree=2 * pmax + 4 + extra,
        interface_radius=interface_radius,
    )


def compute_errors(solution, exact, disc=None):
    """All tracked error norms of ``solution`` (a FoslsSolution) against ``exact``.

    Elements cut by ``exact.interface_radius`` are integrated with the split
    rule, so the jump of the exact second derivatives there is resolved.
    """
    vs, ss = solution.vspace, solution.sspace
    if disc is None:
        disc = error_discretization(vs, ss, exact.interface_radius)
    gam, alp = exact.gamma, exact.alpha
    pc, uc = solution.phi_coef, solution.u_coef
    acc = dict(u=0.0, gu=0.0, phi=0.0, div=0.0, r1=0.0, r2=0.0, r3=0.0, n=0.0)
    for tab in disc.volume():
        ph, dh = vector_at(tab, vs, pc)
        uh, gh = scalar_at(tab, ss, uc)
        eu = exact.u(tab.x) - uh
        eg = exact.grad_u(tab.x) - gh
        ep = exact.phi(tab.x) - ph
        ed = exact.div_phi(tab.x) - dh
        w = tab.dx
        acc["u"] += (w * eu**2).sum()
        acc["gu"] += (w[..., None] * eg**2).sum()
        acc["phi"] += (w[..., None] * ep**2).sum()
        acc["div"] += (w * ed**2).sum()
        acc["r1"] += (w * (ed + gam * eu) ** 2).sum()
        acc["r2"] += (w[..., None] * (eg + ep) ** 2).sum()
    for tab in disc.boundary():
        c = pc[vs.dofs[tab.elems]]
        pn = np.einsum("eqi,ei->eq", tab.phin, c)
        uh = np.einsum("eqi,ei->eq", tab.u, uc[ss.dofs[tab.elems]])
        en = (exact.phi(tab.x) * tab.normal).sum(-1) - pn
        eu = exact.u(tab.x) - uh
        acc["n"] += (tab.ds * en**2).sum()
        acc["r3"] += (tab.ds * (en - alp * eu) ** 2).sum()
    terms = (acc["r1"], acc["r2"], acc["r3"])
    return ErrorReport(
        err_u_l2=float(np.sqrt(acc["u"])),
        err_grad_u=float(np.sqrt(acc["gu"])),
        err_phi_l2=float(np.sqrt(acc["phi"])),
        err_div_phi=float(np.sqrt(acc["div"])),
        err_phi_n=float(np.sqrt(acc["n"])),
        err_b=float(np.sqrt(sum(terms))),
        ndof=int(vs.ndof + ss.ndof),
        h=float(vs.mesh.h),
        p_s=int(ss.degree),
        p_v=int(vs.degree),
        b_terms=tuple(float(t) for t in terms),
    )
