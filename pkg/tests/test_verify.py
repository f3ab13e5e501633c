import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prodgeom.ambient import AmbientTangent
from prodgeom.errors import UsageError
from prodgeom.frames import chart_normals, frame_at
from prodgeom.immersions import default_prop61, family_hatMab, family_Mab, family_Mt
from prodgeom.verify import (
    CheckReport,
    classification_probe,
    codazzi_residual,
    constant_c_residual,
    gauss_crosscheck,
    gauss_tensor,
    lemma21_residuals,
    reports_to_csv,
    reports_to_json,
    ricci_from_b,
    ricci_scalar,
    scalar_from_A,
    sectional_curvature,
    tsinghua_check,
    tsinghua_identity,
    tsinghua_terms,
)


def sym(rng, n=3):
    m = rng.normal(size=(n, n))
    return 0.5 * (m + m.T)


def ricci_oracle(R):
    """Ric(b, c) = sum_a R(e_a, e_b, e_c, e_a)."""
    return np.einsum("abca->bc", R)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gauss_tensor_symmetries(seed):
    rng = np.random.default_rng(seed)
    R = gauss_tensor(sym(rng), sym(rng))
    np.testing.assert_allclose(R, -np.swapaxes(R, 0, 1), atol=1e-14)
    np.testing.assert_allclose(R, -np.swapaxes(R, 2, 3), atol=1e-14)
    np.testing.assert_allclose(R, np.transpose(R, (2, 3, 0, 1)), atol=1e-14)
    bianchi = R + np.transpose(R, (1, 2, 0, 3)) + np.transpose(R, (2, 0, 1, 3))
    assert np.max(np.abs(bianchi)) < 1e-13


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tsinghua_identity_is_algebraic(seed):
    rng = np.random.default_rng(seed)
    lhs, rhs = tsinghua_terms(sym(rng), sym(rng))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-0.95, 0.95))
def test_ricci_closed_form_matches_contraction(seed, C):
    rng = np.random.default_rng(seed)
    A = sym(rng)
    T = np.diag([1.0, -1.0, -C])
    b = (A[0, 0], A[0, 1], A[0, 2], A[1, 1], A[1, 2], A[2, 2])
    Ric = ricci_oracle(gauss_tensor(T, A))
    np.testing.assert_allclose(ricci_from_b(b, C), Ric, atol=1e-12)


def test_scalar_formula_on_c_zero_frames():
    rng = np.random.default_rng(0)
    for _ in range(50):
        A = sym(rng)
        R = gauss_tensor(np.diag([1.0, -1.0, 0.0]), A)
        assert abs(np.trace(ricci_oracle(R)) - scalar_from_A(A)) < 1e-12


def test_sectional_curvature_of_hat_is_half():
    im = family_hatMab()
    f = frame_at(im, [0.3, 0.2, -0.4])
    rng = np.random.default_rng(2)
    for _ in range(20):
        c = np.linalg.qr(rng.normal(size=(3, 2)))[0]
        U, Y = (AmbientTangent.from_vec(f.point, f.basis.T @ c[:, k]) for k in range(2))
        assert abs(sectional_curvature(f, U, Y) - 0.5) < 1e-6
    ric, rho = ricci_scalar(f)
    np.testing.assert_allclose(ric, np.eye(3), atol=1e-6)
    assert abs(rho - 3.0) < 1e-6


def test_sectional_curvature_rejects_bad_planes():
    f = frame_at(family_hatMab(), [0.3, 0.2, -0.4])
    U = AmbientTangent.from_vec(f.point, f.basis[0])
    with pytest.raises(UsageError):
        sectional_curvature(f, U, U * 2.0)
    with pytest.raises(UsageError):
        sectional_curvature(f, U, AmbientTangent.from_vec(f.point, f.N.vec))


def test_tsinghua_identity_report():
    f = frame_at(family_hatMab(), [0.3, 0.2, -0.4])
    rep = tsinghua_identity(f)
    assert rep.passed and float(rep.metadata["rhs_max"]) < 1e-5
    rep2 = tsinghua_identity(f, curvature_oracle=lambda fr: gauss_tensor(fr.T, fr.shape_matrix))
    assert rep2.max_residual < 1e-12


FAMILIES = {
    "mt": lambda: family_Mt(0.3),
    "mab": family_Mab,
    "hat-mab": family_hatMab,
    "prop61": lambda: default_prop61(0.3),
}


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_identity_checks_pass(name):
    im = FAMILIES[name]()
    S = im.sample(8, seed=11)
    for rep in (gauss_crosscheck(im, S), codazzi_residual(im, S), lemma21_residuals(im, S),
                constant_c_residual(im, S), tsinghua_check(im, S)):
        assert rep.passed, rep.line()
        assert rep.samples == 8


def test_codazzi_converges_second_order():
    im = family_hatMab()
    S = im.sample(6, seed=5)
    coarse = codazzi_residual(im, S, fd_step=1e-2).max_residual
    fine = codazzi_residual(im, S, fd_step=5e-3).max_residual
    assert 3.0 < coarse / fine < 5.0


def test_checks_detect_a_wrong_normal():
    # a hypersurface whose reported normal is tilted breaks the Gauss cross-check
    im = family_hatMab()

    def tilted(s):
        n = chart_normals(im, s)
        x = im(s)
        t = np.concatenate([-x[..., 1:2], x[..., 0:1], 0 * x[..., 2:3], 0 * x[..., 3:]], axis=-1)
        m = n + 0.3 * np.sin(s[..., :1]) * t
        return m / np.linalg.norm(m, axis=-1, keepdims=True)

    bad = replace(im, normal_field=tilted)
    rep = gauss_crosscheck(bad, im.sample(5, seed=1))
    assert not rep.passed


def test_classification_probe_statistics():
    im = family_hatMab()
    reps = {r.name: r for r in classification_probe(im, 10, seed=3,
                                                    criteria={"sectional": (0.5, 1e-5), "C": (0.0, 1e-8)})}
    assert reps["probe_sectional"].passed and reps["probe_sectional"].samples == 200
    assert reps["probe_C"].passed
    assert reps["probe_H"].tolerance is None and reps["probe_H"].passed
    assert float(reps["probe_H"].metadata["range"]) > 0.05


def test_report_serialization():
    reps = [CheckReport("a", 1e-9, 1e-8, 3, {"k": 1}), CheckReport("b", float("nan"), 1.0, 1),
            CheckReport("c", 2.0, None, 5)]
    assert [r.passed for r in reps] == [True, False, True]
    assert reps[2].line().startswith("INFO")
    doc = json.loads(reports_to_json(reps, config={"seed": 1}))
    assert doc["schema"] == 1 and list(doc) == sorted(doc)
    assert doc["checks"][1]["max_residual"] == "nan"
    assert set(doc["checks"][0]) == {"name", "max_residual", "tolerance", "samples", "skipped", "pass", "metadata"}
    assert reports_to_json(reps) == reports_to_json(reps)
    lines = reports_to_csv(reps).splitlines()
    assert lines[0].startswith("name,max_residual") and len(lines) == 4
