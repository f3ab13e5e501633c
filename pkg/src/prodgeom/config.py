"""Tolerance constants shared across modules."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # exact algebra on closed-form objects
    exact: float = 1e-12
    # identities evaluated on finite-difference frames
    frame: float = 1e-5
    # identities that need second-order finite differences of frame fields
    fd: float = 1e-3
    # |C|^2 must stay below 1 - c_degenerate for the adapted frame
    c_degenerate: float = 1e-6
    # minimum Gram determinant of the chart partials
    gram_min: float = 1e-8
    # denominator threshold defining the excluded set in (u, v, t)
    excluded: float = 1e-10
    # |det B| below this is a focal point
    focal: float = 1e-10


DEFAULT_TOL = Tolerances()
