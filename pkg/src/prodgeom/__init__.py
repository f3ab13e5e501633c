"""Numerical geometry of hypersurfaces in S^2 x S^2.

Submodules:

- ``ambient``: closed-form structure of S^2 x S^2 (metric, P, J1, J2, curvature,
  geodesics, parallel transport)
- ``immersions``: the explicit hypersurface families as parametrized maps
- ``frames``: unit normal, product angle C, adapted frame E1 E2 E3, shape entries
- ``verify``: Gauss and Codazzi equations, derivative identities for the b-coefficients, Tsinghua identity
- ``sinhgordon``: sinh-Gordon solver and the intrinsic data it generates
- ``parallel``: Jacobi-field tangent map, parallel shape operators, minimality check at r*
- ``cli``: command line front end
"""

from prodgeom.config import DEFAULT_TOL, Tolerances
from prodgeom.errors import (
    ContractError,
    DegenerateFrameError,
    DomainError,
    ExcludedSetError,
    FocalPointError,
    NonConvergenceError,
    ProdGeomError,
    SingularChartError,
    UsageError,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "Tolerances",
    "ProdGeomError",
    "UsageError",
    "DomainError",
    "SingularChartError",
    "DegenerateFrameError",
    "ExcludedSetError",
    "NonConvergenceError",
    "FocalPointError",
    "ContractError",
]
