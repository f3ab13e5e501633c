"""Closed-form geometry of S^2 x S^2.

Points and tangent vectors are embedded in R^6 = R^3 x R^3: a point is (p, q)
with |p| = |q| = 1 and a tangent vector at it is (v, w) with v.p = w.q = 0.
The product metric is then the Euclidean dot product of the 6-vectors.

The array-level helpers (suffix ``6``) broadcast over leading axes and are
what the rest of the package uses; the dataclasses wrap single points for the
public, typed interface.
"""

from dataclasses import dataclass, field

import numpy as np

from prodgeom.config import DEFAULT_TOL
from prodgeom.errors import UsageError


def _split(x):
    x = np.asarray(x, dtype=float)
    return x[..., :3], x[..., 3:]


def _join(a, b):
    return np.concatenate([a, b], axis=-1)


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def project_tangent6(point, x):
    """Remove the components of x along (p, 0) and (0, q)."""
    p, q = _split(point)
    v, w = _split(x)
    v = v - _dot(v, p)[..., None] * p
    w = w - _dot(w, q)[..., None] * q
    return _join(v, w)


def g6(x, y):
    return _dot(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def P6(x):
    v, w = _split(x)
    return _join(v, -w)


def J6(which, point, x):
    """Complex structures J1 = (J, J) and J2 = (J, -J), with J_p v = p x v."""
    p, q = _split(point)
    v, w = _split(x)
    jv = np.cross(p, v)
    jw = np.cross(q, w)
    if which == 1:
        return _join(jv, jw)
    if which == 2:
        return _join(jv, -jw)
    raise UsageError(f"complex structure index must be 1 or 2, got {which!r}")


def R6(U, Y, Z, W):
    """Ambient curvature R(U, Y, Z, W) = g(R(U, Y)Z, W)."""
    PU, PY = P6(U), P6(Y)
    return 0.5 * (
        g6(Y, Z) * g6(U, W)
        - g6(U, Z) * g6(Y, W)
        + g6(PY, Z) * g6(PU, W)
        - g6(PU, Z) * g6(PY, W)
    )


def _factor_exp(p, v, t):
    speed = np.linalg.norm(v, axis=-1)
    angle = (speed * t)[..., None]
    safe = np.where(speed > 0.0, speed, 1.0)[..., None]
    unit = v / safe
    moved = np.cos(angle) * p + np.sin(angle) * unit
    return np.where((speed > 0.0)[..., None], moved, p)


def exp6(point, velocity, t=1.0):
    """Riemannian exponential: great-circle motion in each factor."""
    p, q = _split(point)
    v, w = _split(velocity)
    t = np.asarray(t, dtype=float)
    return _join(_factor_exp(p, v, t), _factor_exp(q, w, t))


def geodesic_velocity6(point, velocity, t):
    """gamma'(t) for gamma(s) = exp6(point, velocity, s)."""
    p, q = _split(point)
    out = []
    for base, vel in ((p, _split(velocity)[0]), (q, _split(velocity)[1])):
        speed = np.linalg.norm(vel, axis=-1)
        angle = (speed * np.asarray(t, dtype=float))[..., None]
        s = speed[..., None]
        safe = np.where(s > 0.0, s, 1.0)
        unit = vel / safe
        d = -s * np.sin(angle) * base + s * np.cos(angle) * unit
        out.append(np.where(s > 0.0, d, 0.0 * base))
    return _join(*out)


def _factor_transport(p, v, y, t):
    speed = np.linalg.norm(v, axis=-1)
    safe = np.where(speed > 0.0, speed, 1.0)[..., None]
    unit = v / safe
    angle = (speed * t)[..., None]
    a = _dot(y, unit)[..., None]
    moved = y - a * unit + a * (-np.sin(angle) * p + np.cos(angle) * unit)
    return np.where((speed > 0.0)[..., None], moved, y)


def transport6(point, velocity, y, t):
    """Parallel transport of y along s -> exp6(point, velocity, s) from 0 to t.

    In each factor this is the rotation of the plane spanned by the factor point
    and its velocity; the orthogonal complement is fixed.
    """
    p, q = _split(point)
    v, w = _split(velocity)
    yv, yw = _split(y)
    t = np.asarray(t, dtype=float)
    return _join(_factor_transport(p, v, yv, t), _factor_transport(q, w, yw, t))


def tangent_basis6(point):
    """An orthonormal basis of the tangent space at point, shape (4, 6)."""
    p, q = _split(point)
    rows = []
    for k, base in enumerate((p, q)):
        seed = np.eye(3)[int(np.argmin(np.abs(base)))]
        e1 = seed - base.dot(seed) * base
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(base, e1)
        for e in (e1, e2):
            row = np.zeros(6)
            row[3 * k:3 * k + 3] = e
            rows.append(row)
    return np.array(rows)


# ---------------------------------------------------------------------------
# typed wrappers


def _frozen(a):
    a = np.array(a, dtype=float).reshape(3)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AmbientPoint:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p, q = _frozen(self.p), _frozen(self.q)
        for name, x in (("p", p), ("q", q)):
            if abs(np.linalg.norm(x) - 1.0) > DEFAULT_TOL.exact:
                raise UsageError(f"factor {name} is not a unit vector: |{name}| = {np.linalg.norm(x)!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def vec(self):
        return np.concatenate([self.p, self.q])

    @classmethod
    def from_vec(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[:3], x[3:])

    def same_as(self, other, atol=0.0):
        return np.allclose(self.vec, other.vec, rtol=0.0, atol=atol)


@dataclass(frozen=True)
class AmbientTangent:
    base: AmbientPoint
    v: np.ndarray
    w: np.ndarray = field(default=None)

    def __post_init__(self):
        w = np.zeros(3) if self.w is None else self.w
        x = project_tangent6(self.base.vec, np.concatenate([np.asarray(self.v, float), np.asarray(w, float)]))
        object.__setattr__(self, "v", _frozen(x[:3]))
        object.__setattr__(self, "w", _frozen(x[3:]))

    @property
    def vec(self):
        return np.concatenate([self.v, self.w])

    @classmethod
    def from_vec(cls, base, x):
        x = np.asarray(x, dtype=float)
        return cls(base, x[:3], x[3:])

    def norm(self):
        return float(np.linalg.norm(self.vec))

    def __add__(self, other):
        _check_base(self, other)
        return AmbientTangent.from_vec(self.base, self.vec + other.vec)

    def __sub__(self, other):
        _check_base(self, other)
        return AmbientTangent.from_vec(self.base, self.vec - other.vec)

    def __neg__(self):
        return AmbientTangent.from_vec(self.base, -self.vec)

    def __mul__(self, s):
        return AmbientTangent.from_vec(self.base, float(s) * self.vec)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Geodesic:
    start: AmbientPoint
    direction: AmbientTangent

    def __post_init__(self):
        _check_base_point(self.start, self.direction)
        n = self.direction.norm()
        if abs(n - 1.0) > 1e-12:
            raise UsageError(f"geodesic direction must have unit length, got {n!r}")

    def point(self, t):
        return geodesic_exp(self.start, self.direction, t)

    def velocity(self, t):
        base = self.point(t)
        return AmbientTangent.from_vec(base, geodesic_velocity6(self.start.vec, self.direction.vec, t))


def _check_base_point(point, *tangents):
    for y in tangents:
        if not y.base.same_as(point, atol=1e-12):
            raise UsageError("tangent vector is not based at the given point")


def _check_base(*tangents):
    first = tangents[0].base
    for y in tangents[1:]:
        if not y.base.same_as(first, atol=1e-12):
            raise UsageError("tangent vectors do not share a base point")


def metric_g(Y, Z):
    _check_base(Y, Z)
    return float(g6(Y.vec, Z.vec))


def product_P(Y):
    return AmbientTangent.from_vec(Y.base, P6(Y.vec))


def complex_J(which, Y):
    return AmbientTangent.from_vec(Y.base, J6(which, Y.base.vec, Y.vec))


def ambient_R(U, Y, Z, W):
    _check_base(U, Y, Z, W)
    return float(R6(U.vec, Y.vec, Z.vec, W.vec))


def ambient_ricci(Y, Z):
    """Ric(Y, Z) = sum_i R(e_i, Y, Z, e_i) over an orthonormal frame."""
    _check_base(Y, Z)
    frame = tangent_basis6(Y.base.vec)
    return float(sum(R6(e, Y.vec, Z.vec, e) for e in frame))


def ambient_scalar(point):
    frame = tangent_basis6(point.vec)
    return float(sum(R6(e, f, f, e) for e in frame for f in frame))


def ambient_sectional(U, Y):
    """Sectional curvature of the plane spanned by U, Y (any basis)."""
    _check_base(U, Y)
    u, y = U.vec, Y.vec
    area = g6(u, u) * g6(y, y) - g6(u, y) ** 2
    if area <= 1e-24:
        raise UsageError("degenerate plane")
    return float(R6(u, y, y, u) / area)


def geodesic_exp(start, direction, t):
    _check_base_point(start, direction)
    return AmbientPoint.from_vec(exp6(start.vec, direction.vec, t))


def transport_frame(geo, Y0, t):
    _check_base_point(geo.start, Y0)
    base = geo.point(t)
    return AmbientTangent.from_vec(base, transport6(geo.start.vec, geo.direction.vec, Y0.vec, t))
