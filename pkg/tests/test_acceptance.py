"""Acceptance suite: one test, and one PASS/FAIL line, per criterion.

Tolerances are pinned as module constants and are not adjusted to make a
criterion pass.
"""

import subprocess
import sys

import numpy as np

from prodgeom import parallel as par
from prodgeom import sinhgordon as sg
from prodgeom.ambient import J6, P6, R6, ambient_scalar, AmbientPoint, project_tangent6
from prodgeom.frames import fields, frames_at, frames_from_fields
from prodgeom.immersions import default_prop61, family_hatMab, family_Mab, family_Mt
from prodgeom.verify import (
    classification_probe,
    codazzi_residual,
    gauss_crosscheck,
    lemma21_residuals,
    scalar_from_A,
    tsinghua_check,
)

SQRT2 = np.sqrt(2.0)
N_AMBIENT = 1000
TOL_AMBIENT = 1e-12
N_SAMPLES = 30
N_PLANES = 20
TOL_KAPPA = 1e-5
TOL_C_ZERO = 1e-8
TOL_DET_HALF = 1e-5
MIN_H_RANGE = 0.05
TOL_H_MINIMAL = 1e-6
MIN_SCALAR_RANGE = 0.05
TOL_B2 = 1e-6
TOL_B1 = 1e-5
TOL_PRINCIPAL_STD = 1e-5
TOL_CODAZZI = 1e-3
TOL_LEMMA21 = 1e-3
TOL_TSINGHUA = 1e-5
MIN_CONVERGENCE_RATIO = 3.0
CONVERGENCE_STEPS = (1e-2, 5e-3)
TOL_RHS_CONSTANT = 1e-5
MIN_RHS_NONCONSTANT = 1e-3
TOL_SG_ZERO = 1e-8
TOL_SG_SOLITON = 1e-6
TOL_SG_INTRINSIC = 1e-4
MIN_SG_CORRUPTED = 1e-2
TOL_DET = 1e-12
TOL_AR = 1e-12
AR_MIN_DET = 0.1
TOL_AR_FD = 1e-4
TOL_H_FD = 1e-4
TOL_MEMBERSHIP = 1e-8

FAMILIES = {
    "mt(0.3)": lambda: family_Mt(0.3),
    "mab": family_Mab,
    "hat-mab": family_hatMab,
    "prop61(0.3)": lambda: default_prop61(0.3),
}


def rk4(f, y0, x1, n):
    y = np.array(y0, dtype=float)
    dx = x1 / n
    out = [y[0]]
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * dx * k1)
        k3 = f(y + 0.5 * dx * k2)
        k4 = f(y + dx * k3)
        y = y + dx / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y[0])
    return np.array(out)


def test_criterion_1_ambient_identities(record):
    rng = np.random.default_rng(20240601)
    p = rng.normal(size=(N_AMBIENT, 3))
    q = rng.normal(size=(N_AMBIENT, 3))
    x = np.concatenate([p / np.linalg.norm(p, axis=1, keepdims=True), q / np.linalg.norm(q, axis=1, keepdims=True)], 1)
    U, Y, Z, W = (project_tangent6(x, rng.normal(size=(N_AMBIENT, 6))) for _ in range(4))
    res = {
        "P^2=Id": np.max(np.abs(P6(P6(Y)) - Y)),
        "P=-J1J2": np.max(np.abs(P6(Y) + J6(1, x, J6(2, x, Y)))),
        "Bianchi": np.max(np.abs(R6(U, Y, Z, W) + R6(Y, Z, U, W) + R6(Z, U, Y, W))),
        "scalar=4": max(abs(ambient_scalar(AmbientPoint.from_vec(xi)) - 4.0) for xi in x),
    }
    u = np.concatenate([U[:, :3], 0 * U[:, 3:]], 1)
    w = np.concatenate([0 * W[:, :3], W[:, 3:]], 1)
    res["mixed K=0"] = np.max(np.abs(R6(u, w, w, u)))
    worst = max(res.values())
    ok = record(1, worst <= TOL_AMBIENT, ", ".join(f"{k} {v:.1e}" for k, v in res.items()) + f" (tol {TOL_AMBIENT})")
    assert ok


def test_criterion_2_hat_mab(record):
    im = family_hatMab()
    probe = {r.name: r for r in classification_probe(im, N_SAMPLES, seed=1, planes=N_PLANES)}
    sec = probe["probe_sectional"].metadata
    kappa_err = max(abs(float(sec["min"]) - 0.5), abs(float(sec["max"]) - 0.5))
    C = probe["probe_C"].metadata
    c_err = max(abs(float(C["min"])), abs(float(C["max"])))
    d = probe["probe_b1b4_minus_b2sq"].metadata
    d_err = max(abs(float(d["min"]) - 0.5), abs(float(d["max"]) - 0.5))
    h_range = float(probe["probe_H"].metadata["range"])
    ok = (kappa_err <= TOL_KAPPA and c_err <= TOL_C_ZERO and d_err <= TOL_DET_HALF and h_range > MIN_H_RANGE
          and probe["probe_sectional"].samples == N_SAMPLES * N_PLANES)
    record(2, ok, f"|K-1/2| {kappa_err:.1e}, |C| {c_err:.1e}, |b1b4-b2^2-1/2| {d_err:.1e}, H range {h_range:.3f}")
    assert ok


def test_criterion_3_mab(record):
    im = family_Mab()
    S = im.sample(N_SAMPLES, seed=2)
    frames = frames_at(im, S)
    H = np.array([np.trace(f.shape_matrix) / 3 for f in frames])
    rho = np.array([scalar_from_A(f.shape_matrix) for f in frames])
    b = np.array([f.b for f in frames])
    b1_err = np.max(np.abs(b[:, 0] - np.tan(S[:, 0] / SQRT2) / SQRT2))
    ok = (np.max(np.abs(H)) <= TOL_H_MINIMAL and np.ptp(rho) > MIN_SCALAR_RANGE
          and np.max(np.abs(b[:, 1])) <= TOL_B2 and b1_err <= TOL_B1)
    record(3, ok, f"max|H| {np.max(np.abs(H)):.1e}, scalar range {np.ptp(rho):.3f}, "
                  f"max|b2| {np.max(np.abs(b[:, 1])):.1e}, b1 err {b1_err:.1e}")
    assert ok


def test_criterion_4_mt(record):
    parts, ok = [], True
    for t in (0.0, 0.3, -0.5):
        im = family_Mt(t)
        frames = frames_at(im, im.sample(N_SAMPLES, seed=3))
        k = np.array([np.linalg.eigvalsh(f.shape_matrix) for f in frames])
        H = k.sum(axis=1) / 3
        std = np.max(np.std(k, axis=0))
        minimal = np.max(np.abs(H)) <= TOL_H_MINIMAL
        ok &= std < TOL_PRINCIPAL_STD and (minimal if t == 0.0 else np.min(np.abs(H)) > TOL_H_MINIMAL)
        parts.append(f"t={t}: std {std:.1e}, |H| in [{np.min(np.abs(H)):.1e}, {np.max(np.abs(H)):.1e}]")
    record(4, ok, "; ".join(parts))
    assert ok


def test_criterion_5_universal_identities(record):
    parts, ok = [], True
    for name, make in FAMILIES.items():
        im = make()
        S = im.sample(N_SAMPLES, seed=5)
        cod = codazzi_residual(im, S).max_residual
        lem = lemma21_residuals(im, S).max_residual
        ts = tsinghua_check(im, S).max_residual
        h1, h2 = CONVERGENCE_STEPS
        rc = codazzi_residual(im, S, h1).max_residual / codazzi_residual(im, S, h2).max_residual
        rg = gauss_crosscheck(im, S, h1).max_residual / gauss_crosscheck(im, S, h2).max_residual
        ok &= (cod <= TOL_CODAZZI and lem <= TOL_LEMMA21 and ts <= TOL_TSINGHUA
               and rc >= MIN_CONVERGENCE_RATIO and rg >= MIN_CONVERGENCE_RATIO)
        parts.append(f"{name}: codazzi {cod:.1e} lemma {lem:.1e} tsinghua {ts:.1e} ratios {rc:.2f}/{rg:.2f}")
    record(5, ok, "; ".join(parts))
    assert ok


def test_criterion_6_tsinghua_detector(record):
    hat = family_hatMab()
    rhs_hat = float(tsinghua_check(hat, hat.sample(N_SAMPLES, seed=6)).metadata["rhs_max"])
    mt = family_Mt(0.3)
    rhs_mt = float(tsinghua_check(mt, mt.sample(N_SAMPLES, seed=6)).metadata["rhs_max"])
    ok = rhs_hat <= TOL_RHS_CONSTANT and rhs_mt >= MIN_RHS_NONCONSTANT
    record(6, ok, f"rhs on hat-mab {rhs_hat:.1e} (<= {TOL_RHS_CONSTANT}), "
                  f"rhs on mt(0.3) {rhs_mt:.1e} (needs >= {MIN_RHS_NONCONSTANT})")
    assert ok


def test_criterion_7_sinh_gordon(record):
    unit = (0.0, 1.0, 0.0, 1.0)
    rng = np.random.default_rng(7)
    zero = sg.solve_sinh_gordon(unit, None, init=rng.normal(size=(128, 128)), inner="direct")
    z = float(np.max(np.abs(zero.h)))

    one_d = sg.solve_sinh_gordon(unit, sg.profile_boundary(0.5, 0.0), shape=(128, 128))
    f = lambda y: np.array([y[1], -np.sinh(SQRT2 * y[0]) / SQRT2])  # noqa: E731
    oracle = rk4(f, [0.5, 0.0], 1.0, 127 * 8)[::8]
    sol_err = float(np.max(np.abs(one_d.h - oracle[:, None])))

    gs = sg.solve_sinh_gordon(unit, sg.profile_boundary(0.5, np.pi / 6), shape=(128, 128), inner="direct")
    reps = sg.intrinsic_checks(gs, 50, seed=7)
    ae = max(r.max_residual for r in reps if r.name[3] in "abcde")

    h = np.array(gs.h)
    h[64, 64] += 0.01
    near = ([64, 63, 65, 64, 64], [64, 64, 64, 63, 65], [0.3] * 5)
    far = ([20, 30, 100], [20, 100, 40], [0.3] * 3)
    e_near = next(r for r in sg.intrinsic_checks(gs.with_h(h), nodes=near) if r.name == "sg_e_frame_equations")
    e_far = next(r for r in sg.intrinsic_checks(gs.with_h(h), nodes=far) if r.name == "sg_e_frame_equations")

    ok = (z < TOL_SG_ZERO and sol_err <= TOL_SG_SOLITON and ae <= TOL_SG_INTRINSIC
          and e_near.max_residual > MIN_SG_CORRUPTED and e_far.max_residual <= TOL_SG_INTRINSIC)
    record(7, ok, f"zero bc |h| {z:.1e}, soliton vs RK4 {sol_err:.1e}, checks (a)-(e) {ae:.1e}, "
                  f"corrupted (e) near {e_near.max_residual:.1e} / far {e_far.max_residual:.1e}")
    assert ok


def test_criterion_8_parallel(record):
    rng = np.random.default_rng(8)
    det_err, ar_err, n_ar = 0.0, 0.0, 0
    while n_ar < 1000:
        pp = par.ParallelParams(rng.uniform(-np.pi, np.pi), *rng.uniform(-1, 1, 3))
        det = np.linalg.det(par.B_matrix(pp))
        det_err = max(det_err, abs(par.det_B(pp) - det))
        if abs(det) >= AR_MIN_DET:
            ar_err = max(ar_err, float(np.max(np.abs(par.A_r(pp) - par.A_r_matrix(pp)))))
            n_ar += 1

    mab = family_Mab()
    S = mab.sample(N_SAMPLES, seed=8)
    fd_err = 0.0
    for r in (0.3, par.R_STAR, -0.5):
        pred = par.A_r(par.source_params(mab, S, r))
        frames = frames_from_fields(fields(par.parallel_immersion(mab, r), S))
        fd_err = max(fd_err, max(float(np.max(np.abs(f.shape_matrix - pred[k]))) for k, f in enumerate(frames)))

    hat = family_hatMab()
    pp_hat = par.source_params(hat, hat.sample(N_SAMPLES, seed=8), par.R_STAR)
    h_formula = float(np.max(np.abs(par.mean_curvature_r(pp_hat))))
    h_fd = par.theorem46_check(hat, N_SAMPLES, seed=8)[0].max_residual

    x = par.parallel_immersion(mab, par.R_STAR)(S)
    member = float(np.max(np.abs(x[:, 2] ** 2 + x[:, 5] ** 2 - 1.0)))
    ricci = tuple(float(v) for v in par.parallel_ricci_minimal(0.3, 0.2, par.R_STAR))

    ok = (det_err <= TOL_DET and ar_err <= TOL_AR and fd_err <= TOL_AR_FD and h_formula == 0.0
          and h_fd <= TOL_H_FD and member <= TOL_MEMBERSHIP and ricci == (1.0, 1.0))
    record(8, ok, f"det {det_err:.1e}, A_r {ar_err:.1e} (|det B| >= {AR_MIN_DET}), A_r vs FD {fd_err:.1e}, "
                  f"H(r*) formula {h_formula!r} FD {h_fd:.1e}, membership {member:.1e}, ricci {ricci}")
    assert ok


def test_criterion_9_determinism(record, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        subprocess.run([sys.executable, "-m", "prodgeom.cli", "verify", "--family", "hat-mab", "--n", "10",
                        "--seed", "9", "--out", str(path)], check=True, capture_output=True)
        outs.append(path.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    record(9, ok, f"two CLI runs, {len(outs[0])} bytes, identical={outs[0] == outs[1]}")
    assert ok


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    def _record(criterion, ok, detail):
        print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
        return ok

    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion_")):
        kwargs = {"record": _record}
        if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
            kwargs["tmp_path"] = Path(tempfile.mkdtemp())
        try:
            fn(**kwargs)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
