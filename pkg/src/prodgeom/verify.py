"""Finite-difference verification of the structure equations of a hypersurface.

Two independent curvature paths are compared: the Gauss equation built from
(g, T, A), and the intrinsic Riemann tensor of the induced metric obtained by
differencing Christoffel symbols in the chart.  Covariant derivatives of A, X,
T, mu are taken in the chart with the same Christoffel symbols.

All tensors are finally expressed in an orthonormal basis (the E-frame when
defined) before residuals are measured, so tolerances are chart-independent.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from prodgeom.errors import SingularChartError, UsageError
from prodgeom.frames import FrameTolerance, fields, frames_from_fields, orthonormal_data
from prodgeom.immersions import gram, partials

VERIFY_STEP = 1e-3
ALG_TOL = 1e-5
FD_TOL = 1e-3


# ---------------------------------------------------------------------------
# reports

@dataclass
class CheckReport:
    """One named check.  ``tolerance=None`` marks an informational report that always passes."""

    name: str
    max_residual: float
    tolerance: Optional[float]
    samples: int
    metadata: dict = field(default_factory=dict)
    skipped: int = 0

    @property
    def passed(self):
        if self.tolerance is None:
            return True
        return bool(np.isfinite(self.max_residual) and self.max_residual <= self.tolerance)

    def to_dict(self):
        return {
            "name": self.name,
            "max_residual": _jsonable(self.max_residual),
            "tolerance": _jsonable(self.tolerance),
            "samples": int(self.samples),
            "skipped": int(self.skipped),
            "pass": self.passed,
            "metadata": {str(k): str(v) for k, v in sorted(self.metadata.items())},
        }

    def line(self):
        tol = "info" if self.tolerance is None else f"{self.tolerance:.1e}"
        status = "INFO" if self.tolerance is None else ("PASS" if self.passed else "FAIL")
        return f"{status} {self.name}: max_residual={self.max_residual:.3e} tol={tol} samples={self.samples}"


def _jsonable(x):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def reports_to_json(reports, **header):
    doc = {"schema": 1, **{k: header[k] for k in sorted(header)}, "checks": [r.to_dict() for r in reports]}
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def reports_to_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "max_residual", "tolerance", "samples", "skipped", "pass", "metadata"])
    for r in reports:
        d = r.to_dict()
        meta = ";".join(f"{k}={v}" for k, v in d["metadata"].items())
        w.writerow([d["name"], repr(r.max_residual), "" if r.tolerance is None else repr(r.tolerance),
                    d["samples"], d["skipped"], d["pass"], meta])
    return buf.getvalue()


def _meta(im, h, **extra):
    out = {"family": im.name, "fd_step": repr(float(h))}
    out.update({k: str(v) for k, v in extra.items()})
    return out


# ---------------------------------------------------------------------------
# algebra on orthonormal data

def gauss_tensor(T, A):
    """g(R(e_a, e_b) e_c, e_d) from the Gauss equation; T, A symmetric (..., 3, 3)."""
    I = np.broadcast_to(np.eye(3), T.shape)

    def wedge(M):
        # M_bc M_ad - M_ac M_bd
        return np.einsum("...bc,...ad->...abcd", M, M) - np.einsum("...ac,...bd->...abcd", M, M)

    return 0.5 * (wedge(I) + wedge(T)) + wedge(A)


def sectional_from_tensor(R, u, y):
    return float(np.einsum("abcd,a,b,c,d->", R, u, y, y, u))


def sectional_curvature(f, U, Y):
    """Sectional curvature of the plane (U, Y), both AmbientTangents, via the Gauss equation."""
    u = np.asarray(f.basis) @ U.vec
    y = np.asarray(f.basis) @ Y.vec
    gram_uy = np.array([[U.vec @ U.vec, U.vec @ Y.vec], [U.vec @ Y.vec, Y.vec @ Y.vec]])
    if np.max(np.abs(gram_uy - np.eye(2))) > 1e-8:
        raise UsageError("plane vectors must be orthonormal")
    if abs(u @ u - 1) > 1e-8 or abs(y @ y - 1) > 1e-8:
        raise UsageError("plane vectors must be tangent to the hypersurface")
    return sectional_from_tensor(gauss_tensor(f.T, f.shape_matrix), u, y)


def random_planes(rng, n):
    """n random orthonormal pairs in R^3 (basis coordinates)."""
    out = []
    for _ in range(n):
        m = rng.normal(size=(3, 2))
        q, _ = np.linalg.qr(m)
        out.append((q[:, 0], q[:, 1]))
    return out


def tsinghua_terms(T, A, R=None):
    """Both sides of the cyclic identity for all basis quadruples.

    Returns (lhs, rhs) arrays indexed [w, u, y, z].
    """
    T = np.asarray(T, dtype=float)
    A = np.asarray(A, dtype=float)
    if R is None:
        R = gauss_tensor(T, A)
    AT = A @ T
    # I(w,u,y,z) = 1/2 { -T_yz (AT)_wu + T_uz (AT)_wy }
    I = 0.5 * (-np.einsum("yz,wu->wuyz", T, AT) + np.einsum("uz,wy->wuyz", T, AT))
    # g(R(w,u)y, Az) + g(R(w,u)z, Ay)
    J = np.einsum("wuym,zm->wuyz", R, A) + np.einsum("wuzm,ym->wuyz", R, A)

    def cyc(K):
        return K + np.transpose(K, (1, 2, 0, 3)) + np.transpose(K, (2, 0, 1, 3))

    return cyc(I), -cyc(J)


def tsinghua_identity(f, curvature_oracle=None, tol=ALG_TOL):
    """Residual of the cyclic identity at one frame; metadata carries the right side's magnitude."""
    A = f.shape_matrix if hasattr(f, "shape_matrix") else np.asarray(f.A)
    R = None if curvature_oracle is None else curvature_oracle(f)
    lhs, rhs = tsinghua_terms(f.T, A, R)
    return CheckReport("tsinghua", float(np.max(np.abs(lhs - rhs))), tol, 1,
                       {"rhs_max": repr(float(np.max(np.abs(rhs))))})


def ricci_from_b(b, C):
    """Ricci matrix in the E-frame from the shape entries and C."""
    b1, b2, b3, b4, b5, b6 = b
    return np.array([
        [(1 - C) / 2 + b1 * b4 + b1 * b6 - b2**2 - b3**2, b2 * b6 - b3 * b5, b3 * b4 - b2 * b5],
        [b2 * b6 - b3 * b5, (1 + C) / 2 + b1 * b4 + b4 * b6 - b2**2 - b5**2, b1 * b5 - b2 * b3],
        [b3 * b4 - b2 * b5, b1 * b5 - b2 * b3, 1 + b1 * b6 + b4 * b6 - b3**2 - b5**2],
    ])


def scalar_from_A(A):
    A = np.asarray(A, dtype=float)
    H = np.trace(A) / 3.0
    return 2.0 + 9.0 * H * H - float(np.sum(A * A))


def ricci_scalar(f):
    """(Ricci matrix in the E-frame, scalar curvature from its trace)."""
    ric = ricci_from_b(f.b, f.C)
    return ric, float(np.trace(ric))


# ---------------------------------------------------------------------------
# chart calculus

def _shift(S, h):
    e = np.eye(3) * h
    return [S + e[i] for i in range(3)], [S - e[i] for i in range(3)]


def _christoffel_from(G, Gp, Gm, h):
    """Gamma[k, i, j] at the center from metrics at +-h along each axis."""
    dG = np.stack([(Gp[l] - Gm[l]) / (2 * h) for l in range(3)], axis=-3)  # [..., a, b, c] = d_a G_bc
    lowered = 0.5 * (dG + np.einsum("...jil->...ijl", dG) - np.einsum("...lij->...ijl", dG))
    return np.einsum("...kl,...ijl->...kij", np.linalg.inv(G), lowered)


def metric_at(im, S, h):
    return gram(partials(im, S, h))


def christoffel(im, S, h):
    plus, minus = _shift(S, h)
    return _christoffel_from(metric_at(im, S, h), [metric_at(im, p, h) for p in plus],
                             [metric_at(im, m, h) for m in minus], h)


def intrinsic_riemann(im, S, h):
    """R[i, j, k, l] = g(R(d_i, d_j) d_k, d_l) of the induced metric."""
    S = np.asarray(S, dtype=float)
    G = metric_at(im, S, h)
    Gam = christoffel(im, S, h)
    plus, minus = _shift(S, h)
    dGam = np.stack([(christoffel(im, plus[m], h) - christoffel(im, minus[m], h)) / (2 * h) for m in range(3)],
                    axis=-4)  # [..., m, l, j, k] = d_m Gamma^l_jk
    # R^l_ijk = d_i Gam^l_jk - d_j Gam^l_ik + Gam^l_im Gam^m_jk - Gam^l_jm Gam^m_ik
    up = (np.einsum("...iljk->...ijkl", dGam) - np.einsum("...jlik->...ijkl", dGam)
          + np.einsum("...lim,...mjk->...ijkl", Gam, Gam) - np.einsum("...ljm,...mik->...ijkl", Gam, Gam))
    return np.einsum("...ijkm,...ml->...ijkl", up, G)


def _to_basis_coords(F, basis):
    """Q[..., i, a]: chart components of orthonormal basis vector a."""
    rhs = np.einsum("...ix,...ax->...ia", F.d1, basis)
    return np.linalg.solve(F.G, rhs)


def _vec_norm(G, v):
    return np.sqrt(np.maximum(np.einsum("...i,...ij,...j->...", v, G, v), 0.0))


class _Stencil:
    """Fields at a batch of centers and their six axis neighbours."""

    def __init__(self, im, S, h, tol=FrameTolerance()):
        self.h = h
        self.F = fields(im, S, h)
        plus, minus = _shift(S, h)
        self.Fp = [fields(im, p, h) for p in plus]
        self.Fm = [fields(im, m, h) for m in minus]
        self.Gam = _christoffel_from(self.F.G, [f.G for f in self.Fp], [f.G for f in self.Fm], h)
        self.basis, self.T_on, self.A_on, self.mu_on, self.degenerate = orthonormal_data(self.F, tol)
        self.Q = _to_basis_coords(self.F, self.basis)
        self.tol = tol

    def d(self, getter):
        """Chart partials of a field: result has a new axis -k (derivative index first)."""
        vals = [(getter(p) - getter(m)) / (2 * self.h) for p, m in zip(self.Fp, self.Fm)]
        nd = np.asarray(getter(self.F)).ndim - (self.F.C.ndim)
        return np.stack(vals, axis=-(nd + 1))


def _dual_basis_residual(G, Q, res_vec):
    """Norm of chart vectors res_vec[..., i, j, k] contracted into the orthonormal basis pairs."""
    r = np.einsum("...ia,...jb,...ijk->...abk", Q, Q, res_vec)
    return _vec_norm(G[..., None, None, :, :], r)


def _run(fn, S):
    """Apply a batched residual function; on a singular chart fall back to per-sample with skips."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    try:
        return fn(S), 0
    except SingularChartError:
        vals, skipped = [], 0
        for row in S:
            try:
                vals.append(fn(row[None, :]))
            except SingularChartError:
                skipped += 1
        if not vals:
            return np.array([np.nan]), skipped
        return np.concatenate(vals), skipped


# ---------------------------------------------------------------------------
# checks

def gauss_crosscheck(im, params, fd_step=VERIFY_STEP, tol=FD_TOL, seed=None):
    """Gauss-equation curvature versus curvature of the induced metric."""
    im2 = im.with_step(fd_step)

    def fn(S):
        F = fields(im2, S, fd_step)
        basis, T, A, _, _ = orthonormal_data(F)
        Q = _to_basis_coords(F, basis)
        Rg = gauss_tensor(T, 0.5 * (A + np.swapaxes(A, -1, -2)))
        Ri = intrinsic_riemann(im2, S, fd_step)
        Ri = np.einsum("...ia,...jb,...kc,...ld,...ijkl->...abcd", Q, Q, Q, Q, Ri)
        return np.max(np.abs(Rg - Ri), axis=(-4, -3, -2, -1))

    vals, skipped = _run(fn, params)
    return CheckReport("gauss_crosscheck", float(np.max(vals)), tol, len(vals),
                       _meta(im, fd_step, seed=seed), skipped)


def _codazzi_vals(st):
    F, Gam = st.F, st.Gam
    dA = st.d(lambda f: f.A)                                   # [..., i, k, j] = d_i A^k_j
    nabA = (dA + np.einsum("...kil,...lj->...ikj", Gam, F.A)
            - np.einsum("...lij,...kl->...ikj", Gam, F.A))    # (nabla_i A)^k_j
    lhs = nabA - np.swapaxes(nabA, -3, -1)                    # [i, k, j] - [j, k, i]
    gX = np.einsum("...ix,...x->...i", F.d1, F.X)
    rhs = 0.5 * (np.einsum("...i,...kj->...ikj", gX, F.T) - np.einsum("...j,...ki->...ikj", gX, F.T))
    res = np.swapaxes(lhs - rhs, -2, -1)                       # [i, j, k]
    return np.max(_dual_basis_residual(F.G, st.Q, res), axis=(-2, -1))


def codazzi_residual(im, params, fd_step=VERIFY_STEP, tol=FD_TOL, seed=None):
    """(nabla_Y A)Z - (nabla_Z A)Y against 1/2 [g(Y,X) TZ - g(Z,X) TY]."""
    im2 = im.with_step(fd_step)
    vals, skipped = _run(lambda S: _codazzi_vals(_Stencil(im2, S, fd_step)), params)
    return CheckReport("codazzi", float(np.max(vals)), tol, len(vals), _meta(im, fd_step, seed=seed), skipped)


def _lemma21_vals(st):
    F, Gam, G = st.F, st.Gam, st.F.G
    Ginv = np.linalg.inv(G)
    Xc = np.linalg.solve(G, np.einsum("...ix,...x->...i", F.d1, F.X)[..., None])[..., 0]
    GA = np.einsum("...kl,...lj->...kj", G, F.A)              # GA[j, i] = g(d_j, A d_i)
    # grad C + 2 A X
    dC = st.d(lambda f: f.C)
    r1 = np.einsum("...kl,...l->...k", Ginv, dC) + 2 * np.einsum("...kl,...l->...k", F.A, Xc)
    n1 = _vec_norm(G, r1)
    # nabla_i X - (C A d_i - T A d_i)
    dX = st.d(lambda f: np.linalg.solve(f.G, np.einsum("...ix,...x->...i", f.d1, f.X)[..., None])[..., 0])
    nabX = dX + np.einsum("...kil,...l->...ik", Gam, Xc)
    TA = np.einsum("...kl,...li->...ki", F.T, F.A)
    r2 = nabX - np.swapaxes(F.C[..., None, None] * F.A - TA, -1, -2)      # [i, k]
    r2b = np.einsum("...ia,...ik->...ak", st.Q, r2)
    n2 = np.max(_vec_norm(G[..., None, :, :], r2b), axis=-1)
    # (nabla_i T) d_j - (g(A d_i, d_j) X + mu(d_j) A d_i)
    dT = st.d(lambda f: f.T)
    nabT = (dT + np.einsum("...kil,...lj->...ikj", Gam, F.T) - np.einsum("...lij,...kl->...ikj", Gam, F.T))
    rhs3 = (np.einsum("...ji,...k->...ikj", GA, Xc) + np.einsum("...j,...ki->...ikj", F.mu, F.A))
    r3 = np.swapaxes(nabT - rhs3, -2, -1)                      # [i, j, k]
    n3 = np.max(_dual_basis_residual(G, st.Q, r3), axis=(-2, -1))
    # (nabla_i mu) d_j - (C g(A d_i, d_j) - g(T d_j, A d_i))
    dmu = st.d(lambda f: f.mu)                                 # [i, j]
    nabmu = dmu - np.einsum("...lij,...l->...ij", Gam, F.mu)
    TGA = np.einsum("...kj,...kl,...li->...ij", F.T, G, F.A)   # g(T d_j, A d_i) at [i, j]
    r4 = nabmu - (F.C[..., None, None] * np.swapaxes(GA, -1, -2) - TGA)
    n4 = np.max(np.abs(np.einsum("...ia,...jb,...ij->...ab", st.Q, st.Q, r4)), axis=(-2, -1))
    return np.stack([n1, n2, n3, n4], axis=-1)


LEMMA21_PARTS = ("grad_C", "nabla_X", "nabla_T", "nabla_mu")


def lemma21_residuals(im, params, fd_step=VERIFY_STEP, tol=FD_TOL, seed=None):
    """The four first-order structure identities; max over them, individual maxima in metadata."""
    im2 = im.with_step(fd_step)
    vals, skipped = _run(lambda S: _lemma21_vals(_Stencil(im2, S, fd_step)), params)
    parts = np.max(vals, axis=0)
    meta = _meta(im, fd_step, seed=seed)
    meta.update({name: repr(float(v)) for name, v in zip(LEMMA21_PARTS, parts)})
    return CheckReport("lemma21", float(np.max(parts)), tol, len(vals), meta, skipped)


def _constant_c_vals(st):
    F = st.F
    C = F.C
    if np.any(st.degenerate):
        raise SingularChartError("E-frame undefined")

    def bmat(f):
        _, _, A, _, _ = orthonormal_data(f, st.tol)
        return 0.5 * (A + np.swapaxes(A, -1, -2))

    A = st.A_on
    b1, b2, b4 = A[..., 0, 0], A[..., 0, 1], A[..., 1, 1]
    dB = st.d(bmat)                                            # [..., i, r, c]
    Eb = np.einsum("...ia,...irc->...arc", st.Q, dB)           # E_a b_rc
    m = np.sqrt((1 - C) / (1 + C))
    p = np.sqrt((1 + C) / (1 - C))
    s = np.sqrt(1 - C * C)
    res = [
        Eb[..., 2, 0, 0] - (s / 2 + b1**2 * m - b2**2 * p),
        Eb[..., 2, 0, 1] - b2 * (b1 * m - b4 * p),
        Eb[..., 2, 1, 1] - (-s / 2 + b2**2 * m - b4**2 * p),
        Eb[..., 0, 0, 1] - Eb[..., 1, 0, 0],
        Eb[..., 0, 1, 1] - Eb[..., 1, 0, 1],
        A[..., 0, 2], A[..., 1, 2], A[..., 2, 2],
    ]
    return np.max(np.abs(np.stack(res, axis=-1)), axis=-1)


def constant_c_residual(im, params, fd_step=VERIFY_STEP, tol=FD_TOL, seed=None):
    """Frame equations for E3 b1, E3 b2, E3 b4, E1 b2 - E2 b1, E1 b4 - E2 b2 and b3 = b5 = b6 = 0.

    Valid only on hypersurfaces with constant C different from +-1.
    """
    im2 = im.with_step(fd_step)
    vals, skipped = _run(lambda S: _constant_c_vals(_Stencil(im2, S, fd_step)), params)
    return CheckReport("constant_c_equations", float(np.max(vals)), tol, len(vals),
                       _meta(im, fd_step, seed=seed), skipped)


def tsinghua_check(im, params, fd_step=None, tol=ALG_TOL, seed=None):
    """Batch version of :func:`tsinghua_identity`; metadata carries max |right side|."""
    h = im.fd_step if fd_step is None else fd_step
    frames = frames_from_fields(fields(im, np.atleast_2d(params), h))
    res, rhs = 0.0, 0.0
    for f in frames:
        lhs, r = tsinghua_terms(f.T, f.shape_matrix)
        res = max(res, float(np.max(np.abs(lhs - r))))
        rhs = max(rhs, float(np.max(np.abs(r))))
    meta = _meta(im, h, seed=seed)
    meta["rhs_max"] = repr(rhs)
    return CheckReport("tsinghua", res, tol, len(frames), meta)


def _stats(name, values, tol=None, target=None, meta=None):
    v = np.asarray(values, dtype=float)
    meta = dict(meta or {})
    meta.update(min=repr(float(v.min())), max=repr(float(v.max())), mean=repr(float(v.mean())),
                range=repr(float(np.ptp(v))))
    resid = float(np.max(np.abs(v - target))) if target is not None else float(np.ptp(v))
    return CheckReport(name, resid, tol, v.size, meta)


def classification_probe(im, n_samples=30, seed=0, planes=20, criteria=None, fd_step=None):
    """Summary statistics of C, H, rho, sectional curvature and b1 b4 - b2^2.

    ``criteria`` maps a statistic name to (target, tol); a statistic with a
    target reports max |value - target|, otherwise its range, informationally.
    """
    criteria = criteria or {}
    h = im.fd_step if fd_step is None else fd_step
    S = im.sample(n_samples, seed)
    frames = frames_from_fields(fields(im, S, h))
    rng = np.random.default_rng(seed + 1)
    Cs, Hs, rhos, ks, dets = [], [], [], [], []
    for f in frames:
        A = f.shape_matrix
        Cs.append(f.C)
        Hs.append(np.trace(A) / 3)
        rhos.append(scalar_from_A(A))
        R = gauss_tensor(f.T, A)
        for u, y in random_planes(rng, planes):
            ks.append(sectional_from_tensor(R, u, y))
        if not f.degenerate:
            dets.append(A[0, 0] * A[1, 1] - A[0, 1] ** 2)
    meta = _meta(im, h, seed=seed)
    out = []
    for name, vals in (("C", Cs), ("H", Hs), ("scalar", rhos), ("sectional", ks), ("b1b4_minus_b2sq", dets)):
        if not vals:
            continue
        target, tol = criteria.get(name, (None, None))
        out.append(_stats(f"probe_{name}", vals, tol, target, meta))
    return out
