import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prodgeom.errors import DomainError, SingularChartError, UsageError
from prodgeom.immersions import (
    CurveOnSphere,
    Immersion,
    default_prop61,
    default_wiggly_curve,
    family_by_name,
    family_hatMab,
    family_Mab,
    family_Mt,
    jet,
    partials,
    rotation_taking,
    second_partials,
)


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


@pytest.mark.parametrize("t", [0.0, 0.3, -0.5])
def test_Mt_defining_equation(t):
    im = family_Mt(t)
    x = im(im.sample(200, seed=2))
    np.testing.assert_allclose(np.sum(x[:, :3] * x[:, 3:], axis=1), t, atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(x[:, 3:], axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize("a,b", [((0, 0, 1), (0, 0, -1)), ((1, 2, 3), (-1, 0.5, 2))])
def test_Mab_and_hat_defining_equations(a, b):
    a, b = unit(a), unit(b)
    im = family_Mab(a, b)
    x = im(im.sample(200, seed=3))
    np.testing.assert_allclose(x[:, :3] @ a + x[:, 3:] @ b, 0.0, atol=1e-14)
    hat = family_hatMab(a, b)
    y = hat(hat.sample(200, seed=3))
    np.testing.assert_allclose((y[:, :3] @ a) ** 2 + (y[:, 3:] @ b) ** 2, 1.0, atol=1e-14)


def test_partials_against_complex_step():
    im = family_Mt(0.3)
    s = im.sample(5, seed=1)
    d1 = partials(im, s)
    cs = 1e-30
    for i in range(3):
        e = np.zeros(3, dtype=complex)
        e[i] = 1j * cs
        exact = np.imag(im.func(s + e)) / cs
        np.testing.assert_allclose(d1[:, i], exact, atol=1e-8)


def test_second_partials_are_symmetric_and_accurate():
    im = family_Mab(fd_step=1e-3)
    s = im.sample(3, seed=4)
    d2 = second_partials(im, s)
    np.testing.assert_allclose(d2, np.swapaxes(d2, 1, 2), atol=0)
    # p = cos(t1/sqrt2) circle(t2) + sin(t1/sqrt2) e3, so d^2p/dt2^2 = -cos(t1/sqrt2) circle(t2)
    c = np.cos(s[:, 0] / np.sqrt(2))
    expect = -c[:, None] * np.stack([np.cos(s[:, 1]), np.sin(s[:, 1]), 0 * c], axis=1)
    np.testing.assert_allclose(d2[:, 1, 1, :3], expect, atol=1e-6)


def test_jet_boundary_and_rank():
    im = family_Mt(0.3)
    j = jet(im, im.box.mean(axis=1))
    assert j.d1.shape == (3, 6) and j.d2.shape == (3, 3, 6) and j.d2_six.shape == (6, 6)
    assert len(j.tangents) == 3
    with pytest.raises(DomainError):
        jet(im, [im.box[0, 0] + 1e-5, 0.0, 0.0])

    flat = Immersion(lambda s: np.concatenate([np.broadcast_to([1.0, 0, 0], s.shape),
                                               np.broadcast_to([0, 0, 1.0], s.shape)], axis=-1),
                     [(-1, 1)] * 3)
    with pytest.raises(SingularChartError):
        jet(flat, [0.0, 0.0, 0.0])


def test_immersion_validation():
    with pytest.raises(UsageError):
        Immersion(lambda s: s, [(1, 0), (0, 1), (0, 1)])
    with pytest.raises(DomainError):
        family_Mt(1.0)
    with pytest.raises(UsageError):
        family_by_name("torus")


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rotation_taking(seed):
    rng = np.random.default_rng(seed)
    src, dst = unit(rng.normal(size=3)), unit(rng.normal(size=3))
    for d in (dst, src, -src):
        R = rotation_taking(src, d)
        np.testing.assert_allclose(R @ src, d, atol=1e-12)
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) > 0


def test_latitude_curve():
    rho = 1.2
    c = CurveOnSphere.latitude(rho)
    r = np.linspace(*c.domain, 7)[1:-1]
    np.testing.assert_allclose(np.linalg.norm(c.point(r), axis=1), 1.0, atol=1e-15)
    np.testing.assert_allclose(c.curvature(r), 1 / np.tan(rho), atol=1e-15)
    h = 1e-5
    fd = (c.point(r + h) - c.point(r - h)) / (2 * h)
    np.testing.assert_allclose(fd, c.tangent(r), atol=1e-9)
    with pytest.raises(DomainError):
        CurveOnSphere.latitude(0.0)


def test_sampled_curve_has_unit_speed():
    c = default_wiggly_curve()
    r = np.linspace(*c.domain, 41)[1:-1]
    h = 1e-5
    speed = np.linalg.norm((c.point(r + h) - c.point(r - h)) / (2 * h), axis=1)
    assert np.max(np.abs(speed - 1.0)) < 1e-8
    np.testing.assert_allclose(np.sum(c.point(r) * c.tangent(r), axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(c.normal(r), axis=1), 1.0, atol=1e-12)


def test_sampled_latitude_recovers_curvature():
    rho = 1.0
    s = np.linspace(-1.5, 1.5, 121)
    xyz = np.stack([np.sin(rho) * np.cos(s), np.sin(rho) * np.sin(s), np.full_like(s, np.cos(rho))], axis=1)
    c = CurveOnSphere.from_samples(s, xyz)
    assert abs(c.domain[1] - 3.0 * np.sin(rho)) < 1e-8
    r = np.linspace(*c.domain, 9)[2:-2]
    np.testing.assert_allclose(c.curvature(r), 1 / np.tan(rho), atol=1e-4)


def test_curve_from_csv(tmp_path):
    s = np.linspace(-1, 1, 30)
    xyz = np.stack([np.cos(s), np.sin(s), 0 * s], axis=1)
    path = tmp_path / "eq.csv"
    path.write_text("s,x,y,z\n" + "".join(f"{a},{b},{c},{d}\n" for a, (b, c, d) in zip(s, xyz)))
    c = CurveOnSphere.from_csv(path)
    assert abs(c.domain[1] - 2.0) < 1e-8
    (tmp_path / "bad.csv").write_text("s,x,y\n0,1,0\n")
    with pytest.raises(UsageError):
        CurveOnSphere.from_csv(tmp_path / "bad.csv")
    with pytest.raises(UsageError):
        CurveOnSphere.from_samples(s[::-1], xyz)


def test_prop61_points_on_product():
    im = default_prop61(0.3)
    x = im(im.sample(50, seed=0))
    np.testing.assert_allclose(np.linalg.norm(x[:, :3], axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(x[:, 3:], axis=1), 1.0, atol=1e-12)
    with pytest.raises(DomainError):
        default_prop61(1.0)
