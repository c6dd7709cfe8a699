"""High-order first-order system least-squares solver for the Robin problem.

    -Laplace u + gamma u = f in Omega,   d_n u + alpha u = g on Gamma,

posed for (phi, u) with phi = -grad u in RT_{p_v-1} or BDM_{p_v} times S_{p_s},
on the unit square and on the unit disk (exactly curved boundary elements).
"""

from .assembly import (
    Discretization,
    FoslsSolution,
    RobinProblem,
    assemble_fosls,
    assemble_gram,
    evaluate_solution,
)
from .mesh import Mesh, make_disk_mesh, make_mesh, make_square_mesh, map_eval, refine_uniform
from .solve import SolveOptions, SolverError, solve_saddle, solve_spd
from .spaces import ScalarSpace, VectorSpace

__all__ = [
    "Discretization",
    "FoslsSolution",
    "Mesh",
    "RobinProblem",
    "ScalarSpace",
    "SolveOptions",
    "SolverError",
    "VectorSpace",
    "assemble_fosls",
    "assemble_gram",
    "evaluate_solution",
    "make_disk_mesh",
    "make_mesh",
    "make_square_mesh",
    "map_eval",
    "refine_uniform",
    "solve_saddle",
    "solve_spd",
]
