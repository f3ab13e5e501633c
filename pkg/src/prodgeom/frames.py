"""Unit normal, product angle, canonical frame and shape operator of a hypersurface.

The shape operator comes from the Weingarten formula: the normal field is
differenced over the chart and its tangential part read off through the
induced metric.  Everything is computed batch-wise in :func:`fields`;
:class:`FrameData` is the per-point view.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from prodgeom.ambient import AmbientPoint, AmbientTangent, J6, P6, project_tangent6
from prodgeom.config import DEFAULT_TOL
from prodgeom.errors import DegenerateFrameError, SingularChartError
from prodgeom.immersions import check_rank, gram, jet, partials


@dataclass(frozen=True)
class FrameTolerance:
    c_degenerate: float = 1e-6
    residual_tol: float = 1e-5

    def __post_init__(self):
        if self.c_degenerate <= 0 or self.residual_tol <= 0:
            raise ValueError("frame tolerances must be positive")


# ---------------------------------------------------------------------------
# batched core

def chart_normals(im, s, d1=None):
    """Oriented unit normals at parameters s, shape (..., 6).

    Orientation: det[(p,0), (0,q), d1_1, d1_2, d1_3, N] > 0, times ``im.normal_sign``.
    If the immersion carries an exact normal field that one is returned instead.
    """
    s = np.asarray(s, dtype=float)
    if im.normal_field is not None:
        return np.asarray(im.normal_field(s), dtype=float)
    x = im(s)
    if d1 is None:
        d1 = partials(im, s)
    check_rank(d1)
    pz = np.concatenate([x[..., :3], np.zeros_like(x[..., :3])], axis=-1)
    zq = np.concatenate([np.zeros_like(x[..., 3:]), x[..., 3:]], axis=-1)
    M = np.concatenate([pz[..., None, :], zq[..., None, :], d1], axis=-2)
    _, _, vt = np.linalg.svd(M)
    n = vt[..., -1, :]
    full = np.concatenate([M, n[..., None, :]], axis=-2)
    sign = np.sign(np.linalg.det(full)) * im.normal_sign
    n = project_tangent6(x, n)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    return sign[..., None] * n


def _solve_coords(G, d1, vecs):
    """Chart components of tangent vectors vecs (..., k, 6): returns (..., 3, k)."""
    rhs = np.einsum("...ia,...ka->...ik", d1, vecs)
    return np.linalg.solve(G, rhs)


@dataclass
class Fields:
    """Batched first-order data; leading axes match the parameter batch."""

    params: np.ndarray
    x: np.ndarray        # points (..., 6)
    d1: np.ndarray       # (..., 3, 6)
    G: np.ndarray        # induced metric (..., 3, 3)
    N: np.ndarray        # (..., 6)
    C: np.ndarray        # (...)
    X: np.ndarray        # PN - CN, (..., 6)
    A: np.ndarray        # shape operator in chart coordinates, column i = A d_i
    T: np.ndarray        # chart matrix of the tangential part of P
    mu: np.ndarray       # mu(d_i)

    def to_ambient(self, coords):
        """Chart components (..., 3) or (..., 3, k) to ambient vectors."""
        if coords.ndim == self.d1.ndim - 1:
            return np.einsum("...i,...ia->...a", coords, self.d1)
        return np.einsum("...ik,...ia->...ka", coords, self.d1)


def fields(im, s, h=None):
    """Compute N, C, X, A, T, mu at a batch of parameters."""
    s = np.asarray(s, dtype=float)
    h = im.fd_step if h is None else h
    x = im(s)
    d1 = partials(im, s, h)
    G = gram(d1)
    N = chart_normals(im, s, d1)
    # Weingarten: A d_i = -(d_i N)^T
    eye = np.eye(3) * h
    Np = chart_normals(im, s[..., None, :] + eye)
    Nm = chart_normals(im, s[..., None, :] - eye)
    dN = (Np - Nm) / (2.0 * h)
    A = -_solve_coords(G, d1, dN)
    PN = P6(N)
    C = np.sum(PN * N, axis=-1)
    X = PN - C[..., None] * N
    Pd = P6(d1)
    T = _solve_coords(G, d1, Pd)
    mu = np.einsum("...ia,...a->...i", Pd, N)
    return Fields(s, x, d1, G, N, C, X, A, T, mu)


def canonical_E(x, N, C):
    """E1, E2, E3 from J1 N, J2 N and X; shape (..., 3, 6)."""
    J1N, J2N = J6(1, x, N), J6(2, x, N)
    X = P6(N) - C[..., None] * N
    e1 = (J1N + J2N) / np.sqrt(2.0 * (1.0 + C))[..., None]
    e2 = (J1N - J2N) / np.sqrt(2.0 * (1.0 - C))[..., None]
    e3 = X / np.sqrt(1.0 - C**2)[..., None]
    return np.stack([e1, e2, e3], axis=-2)


def gram_schmidt(d1):
    out = []
    for v in np.moveaxis(d1, -2, 0):
        for e in out:
            v = v - np.sum(v * e, axis=-1, keepdims=True) * e
        out.append(v / np.linalg.norm(v, axis=-1, keepdims=True))
    return np.stack(out, axis=-2)


def orthonormal_data(F, tol=FrameTolerance()):
    """Orthonormal basis (E-frame where defined) with T, A, mu in that basis.

    Returns (basis, T, A, mu, degenerate) where matrices follow M[j, k] = g(op e_j, e_k).
    """
    degenerate = F.C**2 >= 1.0 - tol.c_degenerate
    safeC = np.where(degenerate, 0.0, F.C)
    E = canonical_E(F.x, F.N, safeC)
    E = np.where(degenerate[..., None, None], gram_schmidt(F.d1), E)
    Q = _solve_coords(F.G, F.d1, E)                  # chart comps of e_j in columns
    AE = F.to_ambient(np.einsum("...ik,...kj->...ij", F.A, Q))
    A = np.einsum("...ja,...ka->...jk", AE, E)
    PE = P6(E)
    T = np.einsum("...ja,...ka->...jk", PE, E)
    mu = np.einsum("...ja,...a->...j", PE, F.N)
    return E, T, A, mu, degenerate


# ---------------------------------------------------------------------------
# per-point view

@dataclass(frozen=True)
class FrameData:
    point: AmbientPoint
    tangents: tuple
    N: AmbientTangent
    C: float
    X: AmbientTangent
    E: Optional[tuple]
    basis: np.ndarray    # orthonormal basis used for T, A, mu (E-frame unless degenerate)
    T: np.ndarray
    mu: np.ndarray
    A: np.ndarray        # shape operator matrix, A[j, k] = g(A e_j, e_k)
    degenerate: bool
    params: Optional[np.ndarray] = None

    @property
    def b(self):
        """(b1, ..., b6) with AE1 = b1E1+b2E2+b3E3, AE2 = b2E1+b4E2+b5E3, AE3 = b3E1+b5E2+b6E3."""
        if self.degenerate:
            raise DegenerateFrameError("E-frame undefined where C^2 = 1")
        a = 0.5 * (self.A + self.A.T)
        return (a[0, 0], a[0, 1], a[0, 2], a[1, 1], a[1, 2], a[2, 2])

    @property
    def shape_matrix(self):
        return 0.5 * (self.A + self.A.T)

    def flipped(self):
        """The same frame data for the opposite normal."""
        return build_from_arrays(self.point.vec, np.array([t.vec for t in self.tangents]), -self.N.vec,
                                 -self.A, FrameTolerance(), self.params)


def build_from_arrays(x, d1, N, A_coord_or_basis, tol, params=None, A_is_basis=True):
    """Helper for reconstructing a frame from an explicit normal and shape matrix."""
    point = AmbientPoint.from_vec(x)
    C = float(np.dot(P6(N), N))
    X = P6(N) - C * N
    degenerate = C**2 >= 1.0 - tol.c_degenerate
    basis = gram_schmidt(d1) if degenerate else canonical_E(x, N, np.asarray(C))
    PE = P6(basis)
    T = basis @ PE.T
    mu = PE @ N
    return FrameData(point, tuple(AmbientTangent.from_vec(point, v) for v in d1), AmbientTangent.from_vec(point, N),
                     C, AmbientTangent.from_vec(point, X),
                     None if degenerate else tuple(AmbientTangent.from_vec(point, e) for e in basis),
                     basis, T, mu, np.asarray(A_coord_or_basis), degenerate, params)


def frames_from_fields(F, tol=FrameTolerance()):
    basis, T, A, mu, deg = orthonormal_data(F, tol)
    out = []
    for i in np.ndindex(F.C.shape):
        point = AmbientPoint.from_vec(F.x[i])
        E = None if deg[i] else tuple(AmbientTangent.from_vec(point, e) for e in basis[i])
        out.append(FrameData(point, tuple(AmbientTangent.from_vec(point, v) for v in F.d1[i]),
                             AmbientTangent.from_vec(point, F.N[i]), float(F.C[i]),
                             AmbientTangent.from_vec(point, F.X[i]), E, basis[i], T[i], mu[i], A[i],
                             bool(deg[i]), F.params[i]))
    return out


def frames_at(im, S, tol=FrameTolerance()):
    """FrameData for each row of the parameter array S."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    return frames_from_fields(fields(im, S), tol)


def unit_normal(j):
    """Oriented unit normal at a jet."""
    n = chart_normals(j.immersion, j.params, j.d1)
    return AmbientTangent.from_vec(j.point, n)


def build_frame(j, tol=FrameTolerance()):
    """Full first-order frame data at a jet."""
    F = fields(j.immersion, j.params[None, :])
    return frames_from_fields(F, tol)[0]


def frame_at(im, params, tol=FrameTolerance()):
    return build_frame(jet(im, params), tol)


def mean_curvature(f):
    return float(np.trace(f.shape_matrix) / 3.0)


def principal_curvatures(f):
    return tuple(float(k) for k in np.linalg.eigvalsh(f.shape_matrix))


def frame_residuals(f):
    """Max deviation of the algebraic frame relations (TE1=E1, TE2=-E2, TE3=-CE3, mu, |X|^2)."""
    if f.degenerate:
        raise DegenerateFrameError("E-frame undefined where C^2 = 1")
    C = f.C
    Texp = np.diag([1.0, -1.0, -C])
    muexp = np.array([0.0, 0.0, np.sqrt(1.0 - C * C)])
    xx = f.X.norm() ** 2 - (1.0 - C * C)
    return {
        "T": float(np.max(np.abs(f.T - Texp))),
        "mu": float(np.max(np.abs(f.mu - muexp))),
        "X": float(abs(xx)),
        "A_sym": float(np.max(np.abs(f.A - f.A.T))),
    }


__all__ = [
    "FrameTolerance", "FrameData", "Fields", "fields", "chart_normals", "canonical_E", "orthonormal_data",
    "frames_at", "frame_at", "unit_normal", "build_frame", "mean_curvature", "principal_curvatures",
    "frame_residuals", "gram_schmidt", "DEFAULT_TOL", "SingularChartError",
]
