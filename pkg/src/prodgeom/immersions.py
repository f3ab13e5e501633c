"""Parametrized hypersurfaces of S^2 x S^2 and their finite-difference jets.

Every family is a vectorized map from parameter triples, shape ``(..., 3)``, to
embedded points ``(..., 6)``.  Charts are local: each family carries an open
parameter box on which its Jacobian has rank 3.
"""

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp, quad
from scipy.interpolate import CubicSpline

from prodgeom.ambient import AmbientPoint, AmbientTangent, project_tangent6
from prodgeom.config import DEFAULT_TOL
from prodgeom.errors import DomainError, SingularChartError, UsageError

SQRT2 = np.sqrt(2.0)
E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Immersion:
    """A chart ``box -> S^2 x S^2``.

    ``normal_sign`` flips the chart-orientation convention for the unit normal.
    ``normal_field``, when given, is an exact unit normal field (used by
    parallel hypersurfaces, whose normal is the transported geodesic velocity).
    """

    func: Callable[[np.ndarray], np.ndarray]
    box: np.ndarray
    fd_step: float = 1e-4
    name: str = "immersion"
    normal_sign: float = 1.0
    normal_field: Optional[Callable[[np.ndarray], np.ndarray]] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        box = np.array(self.box, dtype=float).reshape(3, 2)
        if np.any(box[:, 0] >= box[:, 1]):
            raise UsageError(f"empty parameter box {box.tolist()}")
        box.setflags(write=False)
        object.__setattr__(self, "box", box)
        if not 0.0 < self.fd_step < 1.0:
            raise UsageError(f"fd_step out of range: {self.fd_step}")

    def __call__(self, s):
        return self.func(np.asarray(s, dtype=float))

    def point(self, s):
        return AmbientPoint.from_vec(self(s))

    def with_step(self, fd_step):
        return replace(self, fd_step=float(fd_step))

    def interior(self, s, margin):
        s = np.asarray(s, dtype=float)
        return bool(np.all(s - margin > self.box[:, 0]) and np.all(s + margin < self.box[:, 1]))

    def sample(self, n, seed=0, shrink=0.9):
        """n seeded parameter triples, uniform in the box shrunk about its center."""
        rng = np.random.default_rng(seed)
        center = self.box.mean(axis=1)
        half = 0.5 * (self.box[:, 1] - self.box[:, 0]) * shrink
        return center + rng.uniform(-1.0, 1.0, size=(int(n), 3)) * half


@dataclass(frozen=True)
class Jet2:
    point: AmbientPoint
    d1: np.ndarray
    d2: np.ndarray
    params: np.ndarray
    immersion: Immersion

    @property
    def tangents(self):
        return [AmbientTangent.from_vec(self.point, x) for x in self.d1]

    @property
    def d2_six(self):
        """The six distinct second partials in the order 11, 12, 13, 22, 23, 33."""
        return np.array([self.d2[i, j] for i in range(3) for j in range(i, 3)])


# ---------------------------------------------------------------------------
# finite differences

def partials(im, s, h=None):
    """Central-difference first partials, projected to the tangent space: (..., 3, 6)."""
    s = np.asarray(s, dtype=float)
    h = im.fd_step if h is None else h
    eye = np.eye(3) * h
    plus = im(s[..., None, :] + eye)
    minus = im(s[..., None, :] - eye)
    d1 = (plus - minus) / (2.0 * h)
    return project_tangent6(im(s)[..., None, :], d1)


def second_partials(im, s, h=None):
    """Central second differences (pre-projection): (..., 3, 3, 6)."""
    s = np.asarray(s, dtype=float)
    h = im.fd_step if h is None else h
    e = np.eye(3) * h
    f0 = im(s)
    out = np.empty(s.shape[:-1] + (3, 3, 6))
    for i in range(3):
        out[..., i, i, :] = (im(s + e[i]) - 2.0 * f0 + im(s - e[i])) / h**2
        for j in range(i + 1, 3):
            mixed = (im(s + e[i] + e[j]) - im(s + e[i] - e[j]) - im(s - e[i] + e[j]) + im(s - e[i] - e[j]))
            out[..., i, j, :] = out[..., j, i, :] = mixed / (4.0 * h**2)
    return out


def gram(d1):
    return np.einsum("...ik,...jk->...ij", d1, d1)


def check_rank(d1, tol=DEFAULT_TOL.gram_min):
    det = np.linalg.det(gram(d1))
    if np.any(det <= tol):
        raise SingularChartError(f"Gram determinant {np.min(det):.3e} below {tol:g}")
    return det


def jet(im, params):
    params = np.asarray(params, dtype=float).reshape(3)
    if not im.interior(params, 2.0 * im.fd_step):
        raise DomainError(f"parameters {params.tolist()} closer than 2*fd_step to the chart boundary")
    point = im(params)
    d1 = partials(im, params)
    check_rank(d1)
    d2 = second_partials(im, params)
    return Jet2(AmbientPoint.from_vec(point), d1, d2, params, im)


# ---------------------------------------------------------------------------
# rotations used to place the canonical (a, b) at arbitrary unit vectors

def rotation_taking(src, dst):
    """A rotation matrix R with R @ src = dst (both unit 3-vectors)."""
    src = np.asarray(src, float) / np.linalg.norm(src)
    dst = np.asarray(dst, float) / np.linalg.norm(dst)
    axis = np.cross(src, dst)
    s = np.linalg.norm(axis)
    c = float(src.dot(dst))
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        # half turn about any axis orthogonal to src
        perp = np.eye(3)[int(np.argmin(np.abs(src)))]
        perp = perp - perp.dot(src) * src
        perp /= np.linalg.norm(perp)
        return 2.0 * np.outer(perp, perp) - np.eye(3)
    k = axis / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * K @ K


def _unit(x):
    x = np.asarray(x, float)
    n = np.linalg.norm(x)
    if n == 0:
        raise UsageError("zero vector where a unit vector is required")
    return x / n


def _circle(angle):
    return np.stack([np.cos(angle), np.sin(angle), np.zeros_like(angle)], axis=-1)


# ---------------------------------------------------------------------------
# families

def family_Mt(t, fd_step=1e-4, cap=0.1):
    """M_t = {<p, q> = t} in the chart (theta, phi, psi)."""
    t = float(t)
    if not abs(t) < 1.0:
        raise DomainError(f"M_t needs |t| < 1, got {t}")
    w = np.sqrt(1.0 - t * t)

    def func(s):
        th, ph, ps = s[..., 0], s[..., 1], s[..., 2]
        p = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
        e1 = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1)
        e2 = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=-1)
        q = t * p + w * (np.cos(ps)[..., None] * e1 + np.sin(ps)[..., None] * e2)
        return np.concatenate([p, q], axis=-1)

    box = [(cap, np.pi - cap), (-3.0, 3.0), (-3.0, 3.0)]
    return Immersion(func, box, fd_step, name=f"mt(t={t:g})", info={"family": "mt", "t": t})


def _mab_box():
    half = 0.45 * np.pi / SQRT2
    return [(-half, half), (-3.0, 3.0), (-3.0, 3.0)]


def _placed(func, a, b):
    Ra = rotation_taking(E3, _unit(a))
    Rb = rotation_taking(-E3, _unit(b))

    def placed(s):
        x = func(s)
        return np.concatenate([x[..., :3] @ Ra.T, x[..., 3:] @ Rb.T], axis=-1)

    return placed


def family_Mab(a=(0.0, 0.0, 1.0), b=(0.0, 0.0, -1.0), fd_step=1e-4):
    """M_{a,b} = {<p,a> + <q,b> = 0} through the explicit map (t1, t2, t3) -> (p, q).

    Canonical a = (0,0,1), b = (0,0,-1); other (a, b) by factor rotations.
    The normal orientation agrees with N = (dp/dt1, -dq/dt1).
    """

    def canonical(s):
        t1, t2, t3 = s[..., 0], s[..., 1], s[..., 2]
        c, sn = np.cos(t1 / SQRT2)[..., None], np.sin(t1 / SQRT2)[..., None]
        p = c * _circle(t2) + sn * E3
        q = c * _circle(t3) + sn * E3   # -sin(t1/sqrt2) * b with b = -e3
        return np.concatenate([p, q], axis=-1)

    func = _placed(canonical, a, b)
    return Immersion(func, _mab_box(), fd_step, name="mab", normal_sign=_MAB_SIGN,
                     info={"family": "mab", "a": list(map(float, _unit(a))), "b": list(map(float, _unit(b)))})


def family_hatMab(a=(0.0, 0.0, 1.0), b=(0.0, 0.0, -1.0), fd_step=1e-4):
    """hat M_{a,b} = {<p,a>^2 + <q,b>^2 = 1}: the parallel of M_{a,b} at distance pi/(2 sqrt2)."""

    def canonical(s):
        t1, t2, t3 = s[..., 0], s[..., 1], s[..., 2]
        c, sn = np.cos(t1 / SQRT2)[..., None], np.sin(t1 / SQRT2)[..., None]
        minus, plus = (c - sn) / SQRT2, (c + sn) / SQRT2
        p = minus * _circle(t2) + plus * E3
        q = plus * _circle(t3) + minus * (-E3)
        return np.concatenate([p, q], axis=-1)

    func = _placed(canonical, a, b)
    return Immersion(func, _mab_box(), fd_step, name="hat-mab",
                     info={"family": "hat-mab", "a": list(map(float, _unit(a))), "b": list(map(float, _unit(b)))})


# fixed once so that the chart-oriented normal of M_{a,b} is (dp/dt1, -dq/dt1)
_MAB_SIGN = 1.0


# ---------------------------------------------------------------------------
# curves on the sphere

class CurveOnSphere:
    """Arc-length parametrized curve r -> gamma(r) in S^2 with normal N = gamma x gamma'.

    Build with :meth:`latitude` (closed form) or :meth:`from_samples` /
    :meth:`from_csv` (spline fit, then reparametrized by arc length).
    """

    def __init__(self, point, tangent, domain, name="curve", curvature=None):
        self._point = point
        self._tangent = tangent
        self.domain = (float(domain[0]), float(domain[1]))
        self.name = name
        self._curvature = curvature

    def point(self, r):
        return self._point(np.asarray(r, dtype=float))

    def tangent(self, r):
        return self._tangent(np.asarray(r, dtype=float))

    def normal(self, r):
        return np.cross(self.point(r), self.tangent(r))

    def curvature(self, r, dr=1e-5):
        """Geodesic curvature k with gamma'' = -gamma + k N."""
        if self._curvature is not None:
            return self._curvature(np.asarray(r, dtype=float))
        r = np.asarray(r, dtype=float)
        dT = (self.tangent(r + dr) - self.tangent(r - dr)) / (2 * dr)
        return np.sum(dT * self.normal(r), axis=-1)

    @classmethod
    def latitude(cls, polar_angle, domain=(-2.0, 2.0)):
        """Circle at polar angle rho (radius sin rho); geodesic curvature cot rho."""
        rho = float(polar_angle)
        if not 0.0 < rho < np.pi:
            raise DomainError(f"polar angle must be in (0, pi), got {rho}")
        rad, z = np.sin(rho), np.cos(rho)

        def point(r):
            a = r / rad
            return np.stack([rad * np.cos(a), rad * np.sin(a), np.full_like(a, z)], axis=-1)

        def tangent(r):
            a = r / rad
            return np.stack([-np.sin(a), np.cos(a), np.zeros_like(a)], axis=-1)

        lo, hi = domain
        lo, hi = max(lo, -np.pi * rad * 0.99), min(hi, np.pi * rad * 0.99)
        return cls(point, tangent, (lo, hi), name=f"latitude({rho:g})",
                   curvature=lambda r: np.full_like(r, z / rad))

    @classmethod
    def from_samples(cls, s, xyz, name="sampled"):
        """Fit a spline through samples and reparametrize by arc length.

        The arc-length map is obtained from a cumulative trapezoid on a dense grid,
        then polished by integrating ds/dr = 1/|dgamma/ds| to 1e-13.
        """
        s = np.asarray(s, dtype=float)
        xyz = np.asarray(xyz, dtype=float)
        if s.ndim != 1 or xyz.shape != (s.size, 3) or s.size < 4:
            raise UsageError("need at least 4 samples with columns s, x, y, z")
        if np.any(np.diff(s) <= 0):
            raise UsageError("curve parameter must be strictly increasing")
        xyz = xyz / np.linalg.norm(xyz, axis=1, keepdims=True)
        X = CubicSpline(s, xyz)
        dX = X.derivative()

        def unit_tangent_s(si):
            x, dx = X(si), dX(si)
            n = np.linalg.norm(x, axis=-1, keepdims=True)
            c = x / n
            v = dx / n
            v = v - np.sum(v * c, axis=-1, keepdims=True) * c
            return c, v

        def speed(si):
            return np.linalg.norm(unit_tangent_s(si)[1], axis=-1)

        dense = np.linspace(s[0], s[-1], 20 * s.size)
        sp = speed(dense)
        if np.any(sp < 1e-10):
            raise SingularChartError("sampled curve is not regular")
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (sp[1:] + sp[:-1]) * np.diff(dense))])
        length = quad(lambda x: float(speed(x)), s[0], s[-1], points=s[1:-1], limit=4 * s.size, epsabs=1e-12)[0]
        if abs(length - cum[-1]) > 1e-3 * length:
            raise UsageError("arc length integration disagrees; resample the curve more densely")

        sol = solve_ivp(lambda r, y: [1.0 / float(speed(y[0]))], (0.0, length), [s[0]],
                        method="DOP853", rtol=1e-13, atol=1e-13, dense_output=True,
                        max_step=length / (20 * s.size))
        inverse = sol.sol

        def s_of(r):
            r = np.clip(r, 0.0, length)
            return np.clip(inverse(np.ravel(r))[0].reshape(np.shape(r)), s[0], s[-1])

        def point(r):
            c, _ = unit_tangent_s(s_of(r))
            return c

        def tangent(r):
            _, v = unit_tangent_s(s_of(r))
            return v / np.linalg.norm(v, axis=-1, keepdims=True)

        return cls(point, tangent, (0.0, length), name=name)

    @classmethod
    def from_csv(cls, path):
        """Read ``s,x,y,z`` rows (with header) and build an arc-length curve."""
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"s", "x", "y", "z"} - set(reader.fieldnames or [])
            if missing:
                raise UsageError(f"{path}: missing columns {sorted(missing)}")
            rows = [(float(r["s"]), float(r["x"]), float(r["y"]), float(r["z"])) for r in reader]
        data = np.array(rows)
        return cls.from_samples(data[:, 0], data[:, 1:], name=path.stem)


def family_prop61(C, gamma, gamma_t, t_range=(-0.6, 0.6), fd_step=1e-4):
    """Constant-C hypersurfaces with b2 = 0 built from two arc-length curves.

    p(t, r) = cos(a t) gamma(r) + sin(a t) N(r),   a = sqrt((1 - C)/2)
    q(t, s) = cos(b t) gamma~(s) + sin(b t) N~(s), b = sqrt((1 + C)/2)
    """
    C = float(C)
    if not abs(C) < 1.0:
        raise DomainError(f"prop61 family needs |C| < 1, got {C}")
    al, be = np.sqrt((1 - C) / 2), np.sqrt((1 + C) / 2)

    def func(x):
        t, r, s = x[..., 0], x[..., 1], x[..., 2]
        p = np.cos(al * t)[..., None] * gamma.point(r) + np.sin(al * t)[..., None] * gamma.normal(r)
        q = np.cos(be * t)[..., None] * gamma_t.point(s) + np.sin(be * t)[..., None] * gamma_t.normal(s)
        return np.concatenate([p, q], axis=-1)

    def _inner(dom):
        lo, hi = dom
        pad = 0.02 * (hi - lo)
        return (lo + pad, hi - pad)

    box = [t_range, _inner(gamma.domain), _inner(gamma_t.domain)]
    return Immersion(func, box, fd_step, name=f"prop61(C={C:g})",
                     info={"family": "prop61", "C": C, "gamma": gamma.name, "gamma_t": gamma_t.name})


def default_wiggly_curve(n=81):
    """A non-circular regular curve on S^2 used as a default prop61 input."""
    s = np.linspace(-1.2, 1.2, n)
    pol = 1.3 + 0.25 * np.sin(2.0 * s)
    az = s
    xyz = np.stack([np.sin(pol) * np.cos(az), np.sin(pol) * np.sin(az), np.cos(pol)], axis=1)
    return CurveOnSphere.from_samples(s, xyz, name="wiggly")


def default_prop61(C=0.3, fd_step=1e-4):
    return family_prop61(C, CurveOnSphere.latitude(1.2), default_wiggly_curve(), fd_step=fd_step)


def family_by_name(name, **kw):
    """Factory used by the CLI: mt, mab, hat-mab, prop61."""
    fd_step = kw.get("fd_step", 1e-4)
    if name == "mt":
        return family_Mt(kw.get("t", 0.3), fd_step=fd_step)
    if name == "mab":
        return family_Mab(fd_step=fd_step)
    if name == "hat-mab":
        return family_hatMab(fd_step=fd_step)
    if name == "prop61":
        return default_prop61(kw.get("C", 0.3), fd_step=fd_step)
    raise UsageError(f"unknown family {name!r}")
