"""Minimal C = 0 hypersurfaces from solutions of the sinh-Gordon equation.

A solution h(u, v) of  h_uu + h_vv = -(1/sqrt2) sinh(sqrt2 h)  determines a
metric g, a traceless shape operator A and a product tensor P on (u, v, t)
space.  This module solves the equation on a grid and evaluates those data and
their integrability conditions.

Derivatives along u, v come from compact central differences of h on the
grid, chained through the closed-form dependence of each quantity on
(t, h, h_u, h_v); the partials of the closed forms use the complex step.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import diags, identity, kron
from scipy.sparse.linalg import spsolve

from prodgeom.config import DEFAULT_TOL
from prodgeom.errors import DomainError, ExcludedSetError, NonConvergenceError, UsageError
from prodgeom.verify import CheckReport

SQRT2 = np.sqrt(2.0)
EXCLUDED = 1e-10
CS = 1e-30          # complex step


def sg_rhs(h):
    """-(1/sqrt2) sinh(sqrt2 h), the right side of the equation."""
    return -np.sinh(SQRT2 * h) / SQRT2


# ---------------------------------------------------------------------------
# grid solutions

@dataclass(frozen=True)
class GridSolution:
    h: np.ndarray
    domain: tuple
    residual: float
    boundary: str = "custom"
    periodic: bool = False
    iterations: int = 0

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.ndim != 2 or min(h.shape) < 3:
            raise UsageError("grid must be two-dimensional")
        if not np.all(np.isfinite(h)):
            raise UsageError("grid values must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "domain", tuple(float(x) for x in self.domain))

    @property
    def nu(self):
        return self.h.shape[0]

    @property
    def nv(self):
        return self.h.shape[1]

    @property
    def du(self):
        u0, u1 = self.domain[:2]
        return (u1 - u0) / (self.nu if self.periodic else self.nu - 1)

    @property
    def dv(self):
        v0, v1 = self.domain[2:]
        return (v1 - v0) / (self.nv if self.periodic else self.nv - 1)

    @property
    def u(self):
        return self.domain[0] + self.du * np.arange(self.nu)

    @property
    def v(self):
        return self.domain[2] + self.dv * np.arange(self.nv)

    def pde_residual(self):
        """Discrete residual at interior (or all, if periodic) nodes."""
        return _pde_residual(self.h, self.du, self.dv, self.periodic)

    def with_h(self, h):
        h = np.asarray(h, dtype=float)
        return replace(self, h=h, residual=float(np.max(np.abs(_pde_residual(h, self.du, self.dv, self.periodic)))))

    def header(self):
        return {
            "schema": 1, "nu": self.nu, "nv": self.nv, "du": self.du, "dv": self.dv,
            "domain": list(self.domain), "residual": self.residual, "boundary": self.boundary,
            "periodic": self.periodic, "iterations": self.iterations,
        }


def _lap(h, du, dv, periodic):
    if periodic:
        return ((np.roll(h, 1, 0) - 2 * h + np.roll(h, -1, 0)) / du**2
                + (np.roll(h, 1, 1) - 2 * h + np.roll(h, -1, 1)) / dv**2)
    out = np.zeros_like(h)
    out[1:-1, 1:-1] = ((h[2:, 1:-1] - 2 * h[1:-1, 1:-1] + h[:-2, 1:-1]) / du**2
                       + (h[1:-1, 2:] - 2 * h[1:-1, 1:-1] + h[1:-1, :-2]) / dv**2)
    return out


def _pde_residual(h, du, dv, periodic):
    r = _lap(h, du, dv, periodic) - sg_rhs(h)
    if not periodic:
        r[0, :] = r[-1, :] = r[:, 0] = r[:, -1] = 0.0
    return r


def _rb_sor(rhs, diag, du, dv, periodic, omega, sweeps, tol):
    """Red-black SOR for (L + diag) x = rhs with x = 0 on a Dirichlet boundary."""
    x = np.zeros_like(rhs)
    nu, nv = rhs.shape
    ii, jj = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    interior = np.ones_like(rhs, dtype=bool)
    if not periodic:
        interior[0, :] = interior[-1, :] = interior[:, 0] = interior[:, -1] = False
    colors = [interior & ((ii + jj) % 2 == c) for c in (0, 1)]
    d = diag - 2.0 / du**2 - 2.0 / dv**2
    scale = max(float(np.max(np.abs(rhs))), 1e-300)
    for _ in range(sweeps):
        for mask in colors:
            nb = ((np.roll(x, 1, 0) + np.roll(x, -1, 0)) / du**2 + (np.roll(x, 1, 1) + np.roll(x, -1, 1)) / dv**2)
            gs = (rhs - nb) / d
            x = np.where(mask, (1.0 - omega) * x + omega * gs, x)
        r = rhs - (_lap(x, du, dv, periodic) + diag * x)
        if not periodic:
            r[~interior] = 0.0
        if np.max(np.abs(r)) <= tol * scale:
            break
    return x


def _direct(rhs, diag, du, dv, periodic):
    nu, nv = rhs.shape
    if periodic:
        def d2(n, h):
            m = diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n)).tolil()
            m[0, n - 1] = m[n - 1, 0] = 1.0
            return m.tocsr() / h**2
        L = kron(d2(nu, du), identity(nv)) + kron(identity(nu), d2(nv, dv))
        J = (L + diags(diag.ravel())).tocsc()
        return spsolve(J, rhs.ravel()).reshape(nu, nv)
    mu, mv = nu - 2, nv - 2
    Lu = diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(mu, mu)) / du**2
    Lv = diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(mv, mv)) / dv**2
    L = kron(Lu, identity(mv)) + kron(identity(mu), Lv)
    J = (L + diags(diag[1:-1, 1:-1].ravel())).tocsc()
    x = np.zeros_like(rhs)
    x[1:-1, 1:-1] = spsolve(J, rhs[1:-1, 1:-1].ravel()).reshape(mu, mv)
    return x


def optimal_omega(nu, nv):
    rho = 0.5 * (np.cos(np.pi / (nu - 1)) + np.cos(np.pi / (nv - 1)))
    return 2.0 / (1.0 + np.sqrt(1.0 - rho * rho))


def solve_sinh_gordon(domain, boundary=None, init=None, shape=(128, 128), max_iter=50, tol=1e-10,
                      periodic=False, inner="rbsor", omega=None, boundary_label="custom"):
    """Damped Newton for h_uu + h_vv = -(1/sqrt2) sinh(sqrt2 h).

    ``boundary`` is an (nu, nv) array whose edge values are the Dirichlet data
    (interior values are ignored), or a callable (u, v) -> h, or None for zero.
    ``init`` is the initial interior guess (default: the boundary array / zero).
    ``inner`` selects the linear solver: "rbsor" (red-black SOR) or "direct".
    """
    u0, u1, v0, v1 = (float(x) for x in domain)
    if not (u1 > u0 and v1 > v0):
        raise UsageError(f"empty domain {domain}")
    nu, nv = (int(n) for n in (init.shape if init is not None else shape))
    if nu < 16 or nv < 16:
        raise UsageError("grid must be at least 16 x 16")
    du = (u1 - u0) / (nu if periodic else nu - 1)
    dv = (v1 - v0) / (nv if periodic else nv - 1)
    uu, vv = np.meshgrid(u0 + du * np.arange(nu), v0 + dv * np.arange(nv), indexing="ij")
    if boundary is None:
        bnd = np.zeros((nu, nv))
    elif callable(boundary):
        bnd = np.asarray(boundary(uu, vv), dtype=float)
    else:
        bnd = np.asarray(boundary, dtype=float)
    if bnd.shape != (nu, nv) or not np.all(np.isfinite(bnd)):
        raise UsageError("boundary data must be finite with the grid's shape")
    h = np.array(init, dtype=float) if init is not None else np.zeros((nu, nv))
    if not periodic:
        h[0, :], h[-1, :], h[:, 0], h[:, -1] = bnd[0, :], bnd[-1, :], bnd[:, 0], bnd[:, -1]
    if inner not in ("rbsor", "direct"):
        raise UsageError(f"unknown inner solver {inner!r}")
    omega = optimal_omega(nu, nv) if omega is None else float(omega)

    def resid(x):
        return _pde_residual(x, du, dv, periodic)

    r = resid(h)
    rn = float(np.max(np.abs(r)))
    growth = 0
    it = 0
    history = [rn]
    while rn > tol:
        if it >= max_iter:
            raise NonConvergenceError(f"no convergence after {max_iter} Newton steps (residual {rn:.3e})",
                                      last_iterate=h, residuals=tuple(history))
        it += 1
        diag = np.cosh(SQRT2 * h)
        if inner == "direct":
            delta = _direct(-r, diag, du, dv, periodic)
        else:
            delta = _rb_sor(-r, diag, du, dv, periodic, omega, sweeps=20000, tol=1e-3)
        lam, accepted = 1.0, False
        for _ in range(21):
            trial = h + lam * delta
            rt = resid(trial)
            rtn = float(np.max(np.abs(rt)))
            if np.isfinite(rtn) and rtn < rn:
                accepted = True
                break
            lam *= 0.5
        if accepted:
            h, r, rn = trial, rt, rtn
            growth = 0
        else:
            growth += 1
            h = h + lam * delta
            r = resid(h)
            rn = float(np.max(np.abs(r)))
            if growth >= 10 or not np.isfinite(rn):
                raise NonConvergenceError("residual grew over 10 consecutive damped steps",
                                          last_iterate=h, residuals=tuple(history))
        history.append(rn)
    return GridSolution(h, (u0, u1, v0, v1), rn, boundary_label, periodic, it)


def soliton_profile(h0=0.5, length=3.0):
    """H with H'' = -(1/sqrt2) sinh(sqrt2 H), H(0) = h0, H'(0) = 0, evaluated as an even function."""
    sol = solve_ivp(lambda s, y: [y[1], sg_rhs(y[0])], (0.0, float(length)), [float(h0), 0.0],
                    method="DOP853", rtol=1e-13, atol=1e-14, dense_output=True)

    def H(x):
        x = np.abs(np.asarray(x, dtype=float))
        if np.any(x > length):
            raise DomainError("profile evaluated beyond its integration range")
        return sol.sol(x.ravel())[0].reshape(x.shape)

    return H


def profile_boundary(h0=0.5, angle=0.0):
    """Dirichlet data h(u, v) = H(u cos(angle) + v sin(angle))."""
    H = soliton_profile(h0)
    c, s = np.cos(angle), np.sin(angle)
    return lambda u, v: H(u * c + v * s)


# ---------------------------------------------------------------------------
# archive

def save_grid(gs, base):
    """Write ``<base>.json`` (header) and ``<base>.csv`` (rows u,v,h)."""
    base = Path(base)
    base.with_suffix(".json").write_text(json.dumps(gs.header(), sort_keys=True, indent=2) + "\n")
    uu, vv = np.meshgrid(gs.u, gs.v, indexing="ij")
    with base.with_suffix(".csv").open("w") as fh:
        fh.write("u,v,h\n")
        for a, b, c in zip(uu.ravel(), vv.ravel(), gs.h.ravel()):
            fh.write(f"{float(a)!r},{float(b)!r},{float(c)!r}\n")
    return base.with_suffix(".json"), base.with_suffix(".csv")


def load_grid(base):
    base = Path(base)
    try:
        head = json.loads(base.with_suffix(".json").read_text())
        data = np.loadtxt(base.with_suffix(".csv"), delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"{base}: unreadable archive ({exc})") from exc
    nu, nv = int(head["nu"]), int(head["nv"])
    if data.shape != (nu * nv, 3):
        raise UsageError(f"{base}: expected {nu * nv} rows of u,v,h")
    return GridSolution(data[:, 2].reshape(nu, nv), tuple(head["domain"]), float(head["residual"]),
                        head.get("boundary", "custom"), bool(head.get("periodic", False)),
                        int(head.get("iterations", 0)))


# ---------------------------------------------------------------------------
# closed forms in (t, h, h_u, h_v)

def _denominator(t, h):
    return np.cos(t / SQRT2) ** 2 + np.sinh(h / SQRT2) ** 2


def _check_excluded(t, h):
    d = np.real(_denominator(t, h))
    if np.any(d < EXCLUDED):
        raise ExcludedSetError("point lies on the excluded set (h = 0, sqrt2 t = odd multiple of pi)")
    return d


def b_values(t, h):
    """(b1, b2, b4) at (t, h); b4 = -b1."""
    D = _denominator(t, h)
    b1 = np.sin(t / SQRT2) * np.cos(t / SQRT2) / D / SQRT2
    b2 = np.sinh(h / SQRT2) * np.cosh(h / SQRT2) / D / SQRT2
    return b1, b2, -b1


def a_values(t, h):
    return np.cos(t / SQRT2) * np.cosh(h / SQRT2), np.sin(t / SQRT2) * np.sinh(h / SQRT2)


def d_values(t, h, hu, hv):
    a1, a2 = a_values(t, h)
    den = np.cos(SQRT2 * t) + np.cosh(SQRT2 * h)
    return 2 * (a1 * hv + a2 * hu) / den, 2 * (a2 * hv - a1 * hu) / den


def frame_coeffs(t, h, hu, hv):
    """Rows: components of E1, E2, E3 on (d_u, d_v, d_t)."""
    a1, a2 = a_values(t, h)
    n = a1 * a1 + a2 * a2
    d1, d2 = d_values(t, h, hu, hv)
    one, zero = np.ones_like(n), np.zeros_like(n)
    return np.stack([
        np.stack([a1 / n, -a2 / n, -d1], axis=-1),
        np.stack([a2 / n, a1 / n, -d2], axis=-1),
        np.stack([zero, zero, one], axis=-1),
    ], axis=-2)


def g3_matrix(t, h, hu, hv):
    a = 0.5 * (np.cos(SQRT2 * t) + np.cosh(SQRT2 * h))
    return np.stack([
        np.stack([a + hv * hv, -hu * hv, hv], axis=-1),
        np.stack([-hu * hv, a + hu * hu, -hu], axis=-1),
        np.stack([hv, -hu, np.ones_like(a)], axis=-1),
    ], axis=-2)


def A3_matrix(t, h, hu, hv):
    """Mixed-index shape operator: column j is A applied to the j-th coordinate field."""
    c, s = np.cos(SQRT2 * t), np.sin(SQRT2 * t)
    ch, sh = np.cosh(SQRT2 * h), np.sinh(SQRT2 * h)
    den = SQRT2 * (c + ch)
    zero = np.zeros_like(den)
    col_u = [ch * s / den, c * sh / den, -(ch * s * hv - c * sh * hu) / den]
    col_v = [c * sh / den, -ch * s / den, -(sh * c * hv + s * ch * hu) / den]
    col_t = [zero, zero, zero]
    return np.stack([np.stack(col_u, axis=-1), np.stack(col_v, axis=-1), np.stack(col_t, axis=-1)], axis=-1)


def P4_matrix(t, h, hu, hv):
    """Product tensor on (d_u, d_v, d_t, N): column j is the image of the j-th basis vector."""
    c, s = np.cos(SQRT2 * t), np.sin(SQRT2 * t)
    ch, sh = np.cosh(SQRT2 * h), np.sinh(SQRT2 * h)
    den = c + ch
    zero, one = np.zeros_like(den), np.ones_like(den)
    col_u = [(1 + c * ch) / den, -s * sh / den, -(hv + hv * c * ch + hu * s * sh) / den, hv]
    col_v = [-s * sh / den, -(1 + c * ch) / den, -(hu + hu * c * ch - hv * s * sh) / den, -hu]
    col_t = [zero, zero, zero, one]
    col_n = [zero, zero, one, zero]
    return np.stack([np.stack(col, axis=-1) for col in (col_u, col_v, col_t, col_n)], axis=-1)


def _cs_partials(fn, t, h, hu, hv):
    """Complex-step partials of fn(t, h, hu, hv) with respect to each argument."""
    args = [np.asarray(x, dtype=complex) for x in (t, h, hu, hv)]
    out = []
    for k in range(4):
        a = list(args)
        a[k] = a[k] + 1j * CS
        out.append(np.imag(fn(*a)) / CS)
    return out


def directional(fn, E, t, h, hu, hv, huu, huv, hvv):
    """E(q) for q = fn(t, h(u,v), h_u, h_v) and a vector E = (E_u, E_v, E_t)."""
    qt, qh, qhu, qhv = _cs_partials(fn, t, h, hu, hv)
    eu, ev, et = E[..., 0], E[..., 1], E[..., 2]
    if np.ndim(qt) > np.ndim(eu):
        eu, ev, et = eu[..., None], ev[..., None], et[..., None]
    du_q = qh * _ex(hu, qh) + qhu * _ex(huu, qh) + qhv * _ex(huv, qh)
    dv_q = qh * _ex(hv, qh) + qhu * _ex(huv, qh) + qhv * _ex(hvv, qh)
    return eu * du_q + ev * dv_q + et * qt


def _ex(x, like):
    x = np.asarray(x, dtype=float)
    while x.ndim < np.ndim(like):
        x = x[..., None]
    return x


# ---------------------------------------------------------------------------
# node data from the grid

@dataclass(frozen=True)
class NodeJets:
    i: np.ndarray
    j: np.ndarray
    u: np.ndarray
    v: np.ndarray
    h: np.ndarray
    hu: np.ndarray
    hv: np.ndarray
    huu: np.ndarray
    huv: np.ndarray
    hvv: np.ndarray


def node_jets(gs, i, j):
    """h and its first and second central differences at grid nodes (i, j)."""
    i, j = np.asarray(i, dtype=int), np.asarray(j, dtype=int)
    H = gs.h
    nu, nv = H.shape
    if gs.periodic:
        ip, im_, jp, jm = (i + 1) % nu, (i - 1) % nu, (j + 1) % nv, (j - 1) % nv
    else:
        if np.any((i < 1) | (i > nu - 2) | (j < 1) | (j > nv - 2)):
            raise DomainError("node too close to the grid boundary for central differences")
        ip, im_, jp, jm = i + 1, i - 1, j + 1, j - 1
    du, dv = gs.du, gs.dv
    h = H[i, j]
    hu = (H[ip, j] - H[im_, j]) / (2 * du)
    hv = (H[i, jp] - H[i, jm]) / (2 * dv)
    huu = (H[ip, j] - 2 * h + H[im_, j]) / du**2
    hvv = (H[i, jp] - 2 * h + H[i, jm]) / dv**2
    huv = (H[ip, jp] - H[ip, jm] - H[im_, jp] + H[im_, jm]) / (4 * du * dv)
    return NodeJets(i, j, gs.u[i], gs.v[j], h, hu, hv, huu, huv, hvv)


def _interpolators(gs):
    nu, nv = gs.h.shape
    ii, jj = np.meshgrid(np.arange(1, nu - 1), np.arange(1, nv - 1), indexing="ij")
    J = node_jets(gs, ii, jj)
    pts = (gs.u[1:-1], gs.v[1:-1])
    mk = lambda a: RegularGridInterpolator(pts, a, method="linear")  # noqa: E731
    return mk(J.h), mk(J.hu), mk(J.hv)


def _interp(gs, u, v):
    u, v = float(u), float(v)
    if not (gs.u[1] <= u <= gs.u[-2] and gs.v[1] <= v <= gs.v[-2]):
        raise DomainError(f"({u}, {v}) is within one cell of the grid boundary")
    fh, fu, fv = _interpolators(gs)
    p = np.array([[u, v]])
    return float(fh(p)[0]), float(fu(p)[0]), float(fv(p)[0])


@dataclass(frozen=True)
class BFields:
    b1: float
    b2: float
    b4: float


@dataclass(frozen=True)
class IntrinsicData:
    u: float
    v: float
    t: float
    h: float
    hu: float
    hv: float
    g3: np.ndarray
    A3: np.ndarray
    P4: np.ndarray


def b_fields(gs, u, v, t):
    h, _, _ = _interp(gs, u, v)
    _check_excluded(t, h)
    return BFields(*(float(x) for x in b_values(float(t), h)))


def intrinsic_data(gs, u, v, t):
    h, hu, hv = _interp(gs, u, v)
    t = float(t)
    _check_excluded(t, h)
    return IntrinsicData(float(u), float(v), t, h, hu, hv, g3_matrix(t, h, hu, hv), A3_matrix(t, h, hu, hv),
                         P4_matrix(t, h, hu, hv))


# ---------------------------------------------------------------------------
# integrability checks

def _algebraic_residuals(t, h, hu, hv):
    """(a)-(d) residuals, each an array over samples."""
    g = g3_matrix(t, h, hu, hv)
    A = A3_matrix(t, h, hu, hv)
    P = P4_matrix(t, h, hu, hv)
    a = 0.5 * (np.cos(SQRT2 * t) + np.cosh(SQRT2 * h))
    eig = np.linalg.eigvalsh(g)
    res_a = np.maximum(np.abs(g - np.swapaxes(g, -1, -2)).max(axis=(-1, -2)),
                       np.abs(np.linalg.det(g) - a * a) / (a * a))
    res_a = np.where(eig[..., 0] > 0, res_a, np.inf)
    gA = np.einsum("...ki,...kj->...ij", A, g)               # g(A d_i, d_j)
    res_b = np.abs(gA - np.swapaxes(gA, -1, -2)).max(axis=(-1, -2))
    res_c = np.abs(np.trace(A, axis1=-2, axis2=-1))
    g4 = np.zeros(g.shape[:-2] + (4, 4))
    g4[..., :3, :3] = g
    g4[..., 3, 3] = 1.0
    gP = np.einsum("...ki,...kj->...ij", P, g4)
    res_d = np.maximum(np.abs(P @ P - np.eye(4)).max(axis=(-1, -2)),
                       np.abs(gP - np.swapaxes(gP, -1, -2)).max(axis=(-1, -2)))
    return res_a, res_b, res_c, res_d


def _b1(t, h, hu, hv):
    return b_values(t, h)[0]


def _b2(t, h, hu, hv):
    return b_values(t, h)[1]


def _b4(t, h, hu, hv):
    return b_values(t, h)[2]


def _coeff(k, m):
    return lambda t, h, hu, hv: frame_coeffs(t, h, hu, hv)[..., k, m]


def frame_residuals(t, J):
    """Residuals of the C = 0 frame equations and the Lie-bracket relations.

    Returns a dict of arrays: 'codazzi' (five frame equations), 'brackets'
    (all three relations), and 'bracket12_t' (signed d_t component of
    [E1, E2] + 2 b2 E3, the only one sensitive to the equation for h).
    """
    h, hu, hv = J.h, J.hu, J.hv
    sec = (J.huu, J.huv, J.hvv)
    E = frame_coeffs(t, h, hu, hv)
    b1, b2, b4 = b_values(t, h)

    def d(fn, k):
        return directional(fn, E[..., k, :], t, h, hu, hv, *sec)

    codazzi = np.stack([
        d(_b1, 2) - (0.5 + b1**2 - b2**2),
        d(_b2, 2) - b2 * (b1 - b4),
        d(_b4, 2) - (-0.5 + b2**2 - b4**2),
        d(_b2, 0) - d(_b1, 1),
        d(_b4, 0) - d(_b2, 1),
    ], axis=-1)

    def bracket(k, l):
        return np.stack([d(_coeff(l, m), k) - d(_coeff(k, m), l) for m in range(3)], axis=-1)

    br12 = bracket(0, 1) + 2 * b2[..., None] * E[..., 2, :]
    br13 = bracket(0, 2) - (-b1[..., None] * E[..., 0, :] + b2[..., None] * E[..., 1, :])
    br23 = bracket(1, 2) - (-b2[..., None] * E[..., 0, :] - b1[..., None] * E[..., 1, :])
    brackets = np.concatenate([br12, br13, br23], axis=-1)
    return {"codazzi": codazzi, "brackets": brackets, "bracket12_t": br12[..., 2]}


def _flatness_residuals(t, J):
    h, hu, hv = J.h, J.hu, J.hv
    sec = (J.huu, J.huv, J.hvv)
    E = frame_coeffs(t, h, hu, hv)
    b1, b2, _ = b_values(t, h)
    a1, a2 = a_values(t, h)
    d1, d2 = d_values(t, h, hu, hv)
    fa1 = lambda t, h, hu, hv: a_values(t, h)[0]  # noqa: E731
    fa2 = lambda t, h, hu, hv: a_values(t, h)[1]  # noqa: E731
    fd1 = lambda t, h, hu, hv: d_values(t, h, hu, hv)[0]  # noqa: E731
    fd2 = lambda t, h, hu, hv: d_values(t, h, hu, hv)[1]  # noqa: E731

    def d(fn, k):
        return directional(fn, E[..., k, :], t, h, hu, hv, *sec)

    rel = (a1 + 1j * a2) ** 2 * (2 * (b1 - 1j * b2) ** 2 + 1) - 1
    flat = np.stack([
        d(fa1, 2) + a1 * b1 + a2 * b2,
        d(fa2, 2) - (a1 * b2 - a2 * b1),
        d(fa2, 0) + d(fa1, 1),
        d(fa1, 0) - d(fa2, 1),
        d(fd1, 2) - (b1 * d1 - b2 * d2),
        d(fd2, 2) - (b1 * d2 + b2 * d1),
        d(fd2, 0) - d(fd1, 1) - 2 * b2,
    ], axis=-1)
    return np.abs(rel), flat


def bracket_sensitivity(t, J):
    """Coefficient c with (d_t part of [E1,E2] + 2 b2 E3) = c * (h_uu + h_vv - rhs(h))."""
    base = frame_residuals(t, J)["bracket12_t"]
    bumped = replace(J, hvv=J.hvv + 1.0)
    return frame_residuals(t, bumped)["bracket12_t"] - base


def sample_nodes(gs, n_samples, seed, t_range=(-1.5, 1.5), margin=2):
    rng = np.random.default_rng(seed)
    lo = 0 if gs.periodic else margin
    i = rng.integers(lo, gs.nu - lo, size=n_samples)
    j = rng.integers(lo, gs.nv - lo, size=n_samples)
    t = rng.uniform(*t_range, size=n_samples)
    return i, j, t


def all_nodes(gs, seed=0, t_range=(-1.5, 1.5), margin=2):
    """Every node at least ``margin`` away from the edge, each with a seeded t."""
    lo = 0 if gs.periodic else margin
    i, j = np.meshgrid(np.arange(lo, gs.nu - lo), np.arange(lo, gs.nv - lo), indexing="ij")
    t = np.random.default_rng(seed).uniform(*t_range, size=i.size)
    return i.ravel(), j.ravel(), t


def intrinsic_checks(gs, n_samples=50, seed=0, tol=1e-4, nodes=None):
    """Integrability residuals at seeded (node, t) samples.

    (a) g positive definite with det g = a^2; (b) A g-self-adjoint; (c) trace A = 0;
    (d) P^2 = Id and P g-symmetric; (e) C = 0 frame equations and Lie brackets;
    (f) the [E1, E2] defect equals its sensitivity times the discrete equation residual.
    ``nodes`` = (i, j, t) arrays overrides the seeded sample.
    """
    i, j, t = sample_nodes(gs, n_samples, seed) if nodes is None else (np.asarray(x) for x in nodes)
    t = np.asarray(t, dtype=float)
    J = node_jets(gs, i, j)
    _check_excluded(t, J.h)
    meta = {"seed": seed, "grid": f"{gs.nu}x{gs.nv}", "boundary": gs.boundary}
    ra, rb, rc, rd = _algebraic_residuals(t, J.h, J.hu, J.hv)
    fr = frame_residuals(t, J)
    re = np.maximum(np.abs(fr["codazzi"]).max(axis=-1), np.abs(fr["brackets"]).max(axis=-1))
    pde = J.huu + J.hvv - sg_rhs(J.h)
    rf = np.abs(fr["bracket12_t"] - bracket_sensitivity(t, J) * pde)
    n = int(np.size(t))
    out = []
    i, j = np.broadcast_to(i, t.shape).ravel(), np.broadcast_to(j, t.shape).ravel()
    for name, r in (("a_metric", ra), ("b_selfadjoint", rb), ("c_minimal", rc), ("d_product", rd),
                    ("e_frame_equations", re), ("f_bracket_vs_pde", rf)):
        r = np.broadcast_to(r, t.shape).ravel()
        k = int(np.argmax(r))
        m = dict(meta, worst_node=f"({int(i[k])},{int(j[k])})", worst_t=repr(float(t.ravel()[k])))
        out.append(CheckReport(f"sg_{name}", float(r[k]), tol, n, m))
    return out


def coordinate_solution_check(gs, n_samples=50, seed=0, tol=1e-8, nodes=None):
    """a1, a2 against the complex-square relation, and the coordinate flatness system."""
    i, j, t = sample_nodes(gs, n_samples, seed) if nodes is None else (np.asarray(x) for x in nodes)
    t = np.asarray(t, dtype=float)
    J = node_jets(gs, i, j)
    _check_excluded(t, J.h)
    rel, flat = _flatness_residuals(t, J)
    meta = {"seed": seed, "grid": f"{gs.nu}x{gs.nv}", "flatness": repr(float(np.max(np.abs(flat))))}
    return [CheckReport("sg_complex_square", float(np.max(rel)), tol, int(np.size(t)), dict(meta)),
            CheckReport("sg_flatness", float(np.max(np.abs(flat))), 1e-4, int(np.size(t)), dict(meta))]


__all__ = [
    "GridSolution", "BFields", "IntrinsicData", "NodeJets", "solve_sinh_gordon", "soliton_profile",
    "profile_boundary", "save_grid", "load_grid", "b_values", "a_values", "d_values", "frame_coeffs",
    "g3_matrix", "A3_matrix", "P4_matrix", "b_fields", "intrinsic_data", "node_jets", "frame_residuals",
    "bracket_sensitivity", "all_nodes", "intrinsic_checks", "coordinate_solution_check", "sg_rhs", "optimal_omega",
    "DEFAULT_TOL",
]
