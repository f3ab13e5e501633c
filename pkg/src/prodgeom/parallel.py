"""Parallel hypersurfaces of C = 0 hypersurfaces along the unit normal geodesics.

For a source point with shape entries (b1, b2, b4) in the E-frame, the tangent
map of the normal flow at distance r is the matrix B, and the shape operator of
the parallel hypersurface in the transported frame is A_r = B^{-1} D.  Both the
closed forms and the matrix route are provided.

Trigonometric functions of sqrt2 r are evaluated by reduction to quarter
periods of r* = pi / (2 sqrt2), so r = r* gives cos(sqrt2 r) = 0 exactly.
"""

from dataclasses import dataclass

import numpy as np

from prodgeom.ambient import exp6, geodesic_velocity6
from prodgeom.config import DEFAULT_TOL
from prodgeom.errors import ContractError, FocalPointError
from prodgeom.frames import chart_normals, fields, frames_from_fields
from prodgeom.immersions import Immersion
from prodgeom.verify import VERIFY_STEP, CheckReport, gauss_tensor, random_planes, sectional_from_tensor

SQRT2 = np.sqrt(2.0)
R_STAR = np.pi / (2.0 * SQRT2)


@dataclass(frozen=True)
class ParallelParams:
    """Normal distance r and source shape entries; fields may be arrays of a common shape."""

    r: float
    b1: float
    b2: float
    b4: float


def trig_sqrt2(r):
    """(cos(sqrt2 r), sin(sqrt2 r)) with exact values at multiples of r*."""
    q = np.asarray(r, dtype=float) / R_STAR
    k = np.rint(q)
    f = (q - k) * (np.pi / 2.0)
    c0, s0 = np.cos(f), np.sin(f)
    m = np.mod(k, 4).astype(int)
    c = np.choose(m, [c0, -s0, -c0, s0])
    s = np.choose(m, [s0, c0, -s0, -c0])
    return c, s


def _half(r):
    r = np.asarray(r, dtype=float)
    return np.cos(r / SQRT2), np.sin(r / SQRT2)


def B_matrix(pp):
    c, s = _half(pp.r)
    b1, b2, b4 = (np.asarray(x, dtype=float) for x in (pp.b1, pp.b2, pp.b4))
    shape = np.broadcast(c, b1, b2, b4).shape
    out = np.zeros(shape + (3, 3))
    out[..., 0, 0] = c - SQRT2 * b1 * s
    out[..., 0, 1] = out[..., 1, 0] = -SQRT2 * b2 * s
    out[..., 1, 1] = c - SQRT2 * b4 * s
    out[..., 2, 2] = 1.0
    return out


def D_matrix(pp):
    c, s = _half(pp.r)
    b1, b2, b4 = (np.asarray(x, dtype=float) for x in (pp.b1, pp.b2, pp.b4))
    shape = np.broadcast(c, b1, b2, b4).shape
    out = np.zeros(shape + (3, 3))
    out[..., 0, 0] = b1 * c + s / SQRT2
    out[..., 0, 1] = out[..., 1, 0] = b2 * c
    out[..., 1, 1] = b4 * c + s / SQRT2
    return out


def _den(pp):
    """1 - 2 b2^2 + 2 b1 b4 + (1 + 2 b2^2 - 2 b1 b4) cos(sqrt2 r) - sqrt2 (b1 + b4) sin(sqrt2 r)."""
    c2, s2 = trig_sqrt2(pp.r)
    k = 2 * pp.b2**2 - 2 * pp.b1 * pp.b4
    return 1 - k + (1 + k) * c2 - SQRT2 * (pp.b1 + pp.b4) * s2


def det_B(pp):
    return 0.5 * _den(pp)


def _check_focal(det, tol=DEFAULT_TOL.focal):
    if np.any(np.abs(det) <= tol):
        raise FocalPointError(f"focal point: |det B| = {float(np.min(np.abs(det))):.3e}")


def A_r(pp):
    """Shape operator of the parallel hypersurface in the transported frame (closed form)."""
    _check_focal(det_B(pp))
    c2, s2 = trig_sqrt2(pp.r)
    b1, b2, b4 = pp.b1, pp.b2, pp.b4
    den = _den(pp)
    k = 1 + 2 * b2**2 - 2 * b1 * b4
    a11 = (SQRT2 * (b1 - b4 + (b1 + b4) * c2) + k * s2) / (SQRT2 * den)
    a22 = (SQRT2 * (-b1 + b4 + (b1 + b4) * c2) + k * s2) / (SQRT2 * den)
    a12 = 2 * b2 / den
    shape = np.broadcast(a11, a12, a22).shape
    out = np.zeros(shape + (3, 3))
    out[..., 0, 0] = a11
    out[..., 0, 1] = out[..., 1, 0] = a12
    out[..., 1, 1] = a22
    return out


def A_r_matrix(pp):
    """The same shape operator as B^{-1} D."""
    B = B_matrix(pp)
    _check_focal(np.linalg.det(B))
    return np.linalg.solve(B, D_matrix(pp))


def mean_curvature_r(pp, hyp_tol=1e-6):
    """H(r) for a source with b1 b4 - b2^2 = 1/2."""
    gap = np.asarray(pp.b1 * pp.b4 - pp.b2**2 - 0.5)
    if np.any(np.abs(gap) > hyp_tol):
        raise ContractError(f"mean_curvature_r needs b1 b4 - b2^2 = 1/2 (off by {float(np.max(np.abs(gap))):.2e})")
    _check_focal(det_B(pp))
    c2, s2 = trig_sqrt2(pp.r)
    tr = pp.b1 + pp.b4
    return 2 * tr * c2 / (6 - 3 * SQRT2 * tr * s2)


def parallel_ricci_minimal(b1, b2, r):
    """Ricci eigenvalues (on E1, E2 and on E3) of the parallel of a minimal C = 0 source."""
    c2, _ = trig_sqrt2(r)
    x = -1 + 2 * b1**2 + 2 * b2**2
    y = 1 + 2 * b1**2 + 2 * b2**2
    den = x - y * c2
    if np.any(np.abs(den) <= DEFAULT_TOL.focal):
        raise FocalPointError(f"focal point at r = {r!r}")
    return x / den, np.ones_like(np.asarray(den, dtype=float)) if np.ndim(den) else 1.0


def parallel_immersion(im, r):
    """params -> exp(x, r N(x)); the normal of the result is the geodesic velocity at r."""
    r = float(r)

    def func(s):
        x = im(s)
        return exp6(x, chart_normals(im, s), r)

    def normal(s):
        x = im(s)
        return geodesic_velocity6(x, chart_normals(im, s), r)

    info = dict(im.info)
    info.update(parallel_of=im.name, r=r)
    return Immersion(func, im.box, im.fd_step, name=f"parallel({im.name},r={r:.6g})", normal_field=normal,
                     info=info)


def source_params(im, S, r):
    """ParallelParams from the source frames at parameters S."""
    frames = frames_from_fields(fields(im, np.atleast_2d(S)))
    b = np.array([f.b for f in frames])
    return ParallelParams(np.full(len(frames), float(r)), b[:, 0], b[:, 1], b[:, 3])


def curvature_spread(im, n_samples=20, seed=0, planes=20):
    frames = frames_from_fields(fields(im, im.sample(n_samples, seed)))
    rng = np.random.default_rng(seed + 1)
    ks = []
    for f in frames:
        R = gauss_tensor(f.T, f.shape_matrix)
        ks.extend(sectional_from_tensor(R, u, y) for u, y in random_planes(rng, planes))
    return float(np.ptp(ks))


def theorem46_check(im, n_samples=30, seed=0, r=R_STAR, spread_tol=1e-4, fd_step=VERIFY_STEP):
    """Parallel at distance r of a constant-curvature hypersurface: reports max |H| and max |C|.

    The parallel of a constant-curvature hypersurface can have focal points
    inside the chart; near them the shape operator is large and a larger
    difference step is the better-conditioned choice, hence ``fd_step``.
    """
    spread = curvature_spread(im, min(n_samples, 20), seed)
    if spread > spread_tol:
        raise ContractError(f"{im.name} does not have constant sectional curvature (spread {spread:.3e})")
    S = im.sample(n_samples, seed)
    det = det_B(source_params(im, S, r))
    _check_focal(det)
    par = parallel_immersion(im.with_step(fd_step), r)
    frames = frames_from_fields(fields(par, S))
    H = np.array([np.trace(f.shape_matrix) / 3 for f in frames])
    C = np.array([f.C for f in frames])
    meta = {"family": im.name, "r": repr(float(r)), "seed": seed, "spread": repr(spread),
            "fd_step": repr(fd_step), "detB_min": repr(float(np.min(np.abs(det))))}
    return [CheckReport("theorem46_H", float(np.max(np.abs(H))), 1e-4, len(frames), dict(meta)),
            CheckReport("theorem46_C", float(np.max(np.abs(C))), 1e-8, len(frames), dict(meta))]


def sweep(im, r_values, n_samples=20, seed=0, include_r_star=True):
    """Rows (r, H_mean, H_max, C_max, detB_min) over the normal distances.

    Raises FocalPointError at the first r where det B vanishes at some sample.
    """
    r_values = sorted(set(float(r) for r in r_values))
    if include_r_star and r_values and r_values[0] <= R_STAR <= r_values[-1]:
        r_values = sorted(set(r_values) | {float(R_STAR)})
    S = im.sample(n_samples, seed)
    base = source_params(im, S, 0.0)
    rows = []
    for r in r_values:
        pp = ParallelParams(np.full_like(base.b1, r), base.b1, base.b2, base.b4)
        det = det_B(pp)
        if np.any(np.abs(det) <= DEFAULT_TOL.focal):
            raise FocalPointError(f"focal point at r = {r!r}")
        frames = frames_from_fields(fields(parallel_immersion(im, r), S))
        H = np.array([np.trace(f.shape_matrix) / 3 for f in frames])
        C = np.array([f.C for f in frames])
        rows.append((r, float(np.mean(H)), float(np.max(np.abs(H))), float(np.max(np.abs(C))),
                     float(np.min(np.abs(det)))))
    return rows
