"""Conserved-quantity hierarchy, transmission Wronskian and Sobolev-norm
comparison machinery for the derivative nonlinear Schrodinger equation."""

__version__ = "0.1.0"

from .diffpoly import (  # noqa: F401
    DiffMonomial,
    DiffPolynomial,
    Factor,
    INHOMOGENEOUS,
    functionals_equal,
)
from .exactnum import QC  # noqa: F401
from .grid import GridFunction  # noqa: F401
from .hierarchy import EnergyFunctional, MuCoefficient, energy, mu_j1, mu_jm  # noqa: F401
from .resolvent import (  # noqa: F401
    HomogeneousPart,
    MatrixSymbol,
    PPoly,
    homogeneous_parts,
    recurse,
    verify_structure,
)
from .scattering import (  # noqa: F401
    OperatorDiscretization,
    SpectralParameter,
    build_T_matrix,
    jost_transmission,
    log_a_series,
    perturbation_determinant,
    trace_T2,
    trace_T4,
)
