"""Boundary-layer approximations for singularly perturbed three-point problems.

The public modules:

* :mod:`~nonlocal_sps.exprlang` small expression language with symbolic derivatives
* :mod:`~nonlocal_sps.problem` problem data and the reduced solution ``eta``
* :mod:`~nonlocal_sps.layers` closed-form layer functions
* :mod:`~nonlocal_sps.approximation` the composite approximation ``y_tilde``
* :mod:`~nonlocal_sps.reference` Shishkin-mesh finite-difference reference solver
* :mod:`~nonlocal_sps.quadratic` feasibility conditions for ``f = y^2 + u``
* :mod:`~nonlocal_sps.control` open-loop input synthesis
* :mod:`~nonlocal_sps.turning` turning points of autonomous problems
"""

from . import approximation, control, exprlang, layers, problem, quadratic, reference, turning
from .approximation import Approximation, build
from .exprlang import parse
from .problem import Problem, load_problem
from .reference import solve_bvp3

__version__ = "0.1.0"

__all__ = [
    "approximation", "control", "exprlang", "layers", "problem", "quadratic", "reference",
    "turning", "Approximation", "build", "parse", "Problem", "load_problem", "solve_bvp3",
]
