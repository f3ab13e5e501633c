"""Command line front end.

    prodgeom verify --family hat-mab --n 30 --seed 7
    prodgeom sg solve --grid 128 --bc soliton --out sol
    prodgeom sg check --in sol
    prodgeom parallel sweep --family mab --r-min 0 --r-max 1.2 --steps 25
    prodgeom parallel check46 --family hat-mab

Exit codes: 0 pass, 1 check failure, 2 usage, 3 solver nonconvergence, 4 focal point.
"""

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from prodgeom import parallel as par
from prodgeom import sinhgordon as sg
from prodgeom.errors import ContractError, DomainError, FocalPointError, NonConvergenceError, UsageError
from prodgeom.frames import FrameTolerance
from prodgeom.immersions import family_by_name
from prodgeom.verify import (
    VERIFY_STEP,
    CheckReport,
    classification_probe,
    codazzi_residual,
    constant_c_residual,
    gauss_crosscheck,
    lemma21_residuals,
    reports_to_csv,
    reports_to_json,
    tsinghua_check,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONV, EXIT_FOCAL = 0, 1, 2, 3, 4
FAMILIES = ("mt", "mab", "hat-mab", "prop61")
KAPPA_TOL = {"hat-mab": 1e-5}


@dataclass(frozen=True)
class RunConfig:
    family: str
    params: dict = field(default_factory=dict)
    n_samples: int = 30
    seed: int = 0
    fd_step: float = VERIFY_STEP
    tolerances: FrameTolerance = FrameTolerance()
    output: str = "-"
    format: str = "json"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"family must be one of {FAMILIES}")
        if self.n_samples < 1:
            raise UsageError("n_samples must be at least 1")
        if not 1e-8 < self.fd_step < 1e-2:
            raise UsageError("fd_step must lie in (1e-8, 1e-2)")
        if not -(2**63) <= self.seed < 2**64:
            raise UsageError("seed must fit in 64 bits")
        if self.format not in ("json", "csv"):
            raise UsageError("format must be json or csv")

    def header(self):
        """Config as written into reports; the output path is left out so reruns compare equal."""
        d = asdict(self)
        d.pop("output")
        d["params"] = {k: repr(float(v)) for k, v in sorted(self.params.items())}
        d["fd_step"] = repr(self.fd_step)
        d["tolerances"] = {k: repr(v) for k, v in sorted(d["tolerances"].items())}
        return d


def worker_count():
    """Number of worker threads; PRODGEOM_THREADS caps it."""
    try:
        cap = int(os.environ.get("PRODGEOM_THREADS", "0"))
    except ValueError:
        cap = 0
    n = os.cpu_count() or 1
    return max(1, min(n, cap) if cap > 0 else n)


def ordered_map(fn, items):
    """map() over a thread pool; results come back in input order whatever the worker count."""
    items = list(items)
    workers = min(worker_count(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _write(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _emit(reports, cfg_header, output, fmt):
    text = reports_to_json(reports, config=cfg_header) if fmt == "json" else reports_to_csv(reports)
    _write(text, output)
    for r in reports:
        print(r.line(), file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _family_params(args):
    params = {}
    if args.family == "mt":
        params["t"] = args.t
    elif args.family == "prop61":
        params["C"] = args.C
    return params


# ---------------------------------------------------------------------------
# verify

def kappa_spread(probe, family):
    """Range of sampled sectional curvatures, asserted only where constancy is expected."""
    sec = next(r for r in probe if r.name == "probe_sectional")
    return CheckReport("kappa_spread", float(sec.metadata["range"]), KAPPA_TOL.get(family), sec.samples,
                       dict(sec.metadata))


def run_verify(cfg):
    im = family_by_name(cfg.family, **cfg.params)
    S = im.sample(cfg.n_samples, cfg.seed)
    h = cfg.fd_step
    jobs = [
        lambda: [codazzi_residual(im, S, h, seed=cfg.seed)],
        lambda: [lemma21_residuals(im, S, h, seed=cfg.seed)],
        lambda: [tsinghua_check(im, S, seed=cfg.seed)],
        lambda: [gauss_crosscheck(im, S, h, seed=cfg.seed)],
        lambda: [constant_c_residual(im, S, h, seed=cfg.seed)],
        lambda: classification_probe(im, cfg.n_samples, cfg.seed),
    ]
    reports = [r for batch in ordered_map(lambda job: job(), jobs) for r in batch]
    probe = [r for r in reports if r.name.startswith("probe_")]
    reports.append(kappa_spread(probe, cfg.family))
    return reports


def cmd_verify(args):
    cfg = RunConfig(args.family, _family_params(args), args.n, args.seed, args.fd_step,
                    FrameTolerance(c_degenerate=args.c_degenerate), args.out, args.format)
    return _emit(run_verify(cfg), cfg.header(), cfg.output, cfg.format)


# ---------------------------------------------------------------------------
# sinh-Gordon

SG_DOMAIN = (0.0, 1.0, 0.0, 1.0)


def _boundary(args):
    """(boundary, shape, domain, label) for --bc zero | soliton | <archive>."""
    n = args.grid
    if args.bc == "zero":
        return None, (n, n), SG_DOMAIN, "zero"
    if args.bc == "soliton":
        return sg.profile_boundary(args.h0, args.angle), (n, n), SG_DOMAIN, "soliton"
    path = Path(args.bc)
    if not path.with_suffix(".json").exists():
        raise UsageError(f"--bc: {args.bc} is neither zero, soliton nor an archive")
    src = sg.load_grid(path)
    return np.array(src.h), src.h.shape, src.domain, f"file:{path.name}"


def cmd_sg_solve(args):
    boundary, shape, domain, label = _boundary(args)
    try:
        gs = sg.solve_sinh_gordon(domain, boundary, shape=shape, max_iter=args.max_iter, tol=args.tol,
                                  inner=args.inner, boundary_label=label)
    except NonConvergenceError as exc:
        print(f"nonconvergence: {exc}", file=sys.stderr)
        for k, r in enumerate(exc.residuals):
            print(f"  iter {k}: residual {r:.6e}", file=sys.stderr)
        return EXIT_NONCONV
    js, cs = sg.save_grid(gs, args.out)
    print(f"wrote {js} and {cs}: residual {gs.residual:.3e} after {gs.iterations} Newton steps, "
          f"max|h| {float(np.max(np.abs(gs.h))):.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_sg_check(args):
    gs = sg.load_grid(args.inp)
    reports = sg.intrinsic_checks(gs, args.n, args.seed, args.tol)
    if args.all_nodes:
        reports += [replace_name(r, r.name + "_all_nodes")
                    for r in sg.intrinsic_checks(gs, seed=args.seed, tol=args.tol, nodes=sg.all_nodes(gs, args.seed))]
    header = {"archive": str(Path(args.inp).name), "n_samples": args.n, "seed": args.seed}
    code = _emit(reports, header, args.out, args.format)
    for r in reports:
        if not r.passed:
            print(f"{r.name} fails at node {r.metadata.get('worst_node')}", file=sys.stderr)
    return code


def replace_name(report, name):
    return CheckReport(name, report.max_residual, report.tolerance, report.samples, dict(report.metadata),
                       report.skipped)


# ---------------------------------------------------------------------------
# parallel

def _sweep_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "H_mean", "H_max", "C_max", "detB_min"])
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def cmd_parallel_sweep(args):
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    im = family_by_name(args.family, **_family_params(args))
    rs = np.linspace(args.r_min, args.r_max, args.steps)
    rows = par.sweep(im, rs, args.n, args.seed, include_r_star=not args.no_r_star)
    _write(_sweep_csv(rows), args.out)
    return EXIT_OK


def cmd_parallel_check46(args):
    im = family_by_name(args.family, **_family_params(args))
    try:
        reports = par.theorem46_check(im, args.n, args.seed, r=args.r, fd_step=args.fd_step)
    except ContractError as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return EXIT_FAIL
    header = {"family": args.family, "n_samples": args.n, "seed": args.seed, "r": repr(float(args.r))}
    return _emit(reports, header, args.out, args.format)


# ---------------------------------------------------------------------------
# parser

def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _family_args(p, default="mab"):
    p.add_argument("--family", choices=FAMILIES, default=default)
    p.add_argument("--t", type=float, default=0.3, help="parameter of the mt family")
    p.add_argument("--C", type=float, default=0.3, help="product angle of the prop61 family")
    p.add_argument("--n", type=_positive_int, default=30, help="number of samples")
    p.add_argument("--seed", type=int, default=0)


def _output_args(p):
    p.add_argument("--out", default="-", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(prog="prodgeom", description="Hypersurfaces of S^2 x S^2: numerical checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity checks on a family")
    _family_args(v)
    v.add_argument("--fd-step", type=float, default=VERIFY_STEP)
    v.add_argument("--c-degenerate", type=float, default=FrameTolerance().c_degenerate)
    _output_args(v)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sg", help="sinh-Gordon solver")
    ssub = s.add_subparsers(dest="sg_command", required=True)
    solve = ssub.add_parser("solve")
    solve.add_argument("--grid", type=int, default=128)
    solve.add_argument("--bc", default="zero", help="zero, soliton, or the base path of an archive")
    solve.add_argument("--h0", type=float, default=0.5, help="soliton peak value")
    solve.add_argument("--angle", type=float, default=np.pi / 6, help="soliton direction in the (u, v) plane")
    solve.add_argument("--inner", choices=("rbsor", "direct"), default="direct")
    solve.add_argument("--max-iter", type=_positive_int, default=50)
    solve.add_argument("--tol", type=float, default=1e-10)
    solve.add_argument("--out", required=True, help="archive base path (writes .json and .csv)")
    solve.set_defaults(func=cmd_sg_solve)
    check = ssub.add_parser("check")
    check.add_argument("--in", dest="inp", required=True, help="archive base path")
    check.add_argument("--n", type=_positive_int, default=50)
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--tol", type=float, default=1e-4)
    check.add_argument("--no-all-nodes", dest="all_nodes", action="store_false",
                       help="skip the scan over every interior node")
    _output_args(check)
    check.set_defaults(func=cmd_sg_check)

    pp = sub.add_parser("parallel", help="parallel hypersurfaces")
    psub = pp.add_subparsers(dest="parallel_command", required=True)
    sw = psub.add_parser("sweep")
    _family_args(sw)
    sw.add_argument("--r-min", type=float, default=0.0)
    sw.add_argument("--r-max", type=float, default=1.2)
    sw.add_argument("--steps", type=int, default=25)
    sw.add_argument("--no-r-star", action="store_true", help="do not insert pi/(2 sqrt2) into the grid")
    sw.add_argument("--out", default="-")
    sw.set_defaults(func=cmd_parallel_sweep)
    c46 = psub.add_parser("check46")
    _family_args(c46, default="hat-mab")
    c46.add_argument("--r", type=float, default=par.R_STAR)
    c46.add_argument("--fd-step", type=float, default=VERIFY_STEP)
    _output_args(c46)
    c46.set_defaults(func=cmd_parallel_check46)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FocalPointError as exc:
        print(f"focal point: {exc}", file=sys.stderr)
        return EXIT_FOCAL
    except NonConvergenceError as exc:
        print(f"nonconvergence: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except (UsageError, DomainError) as exc:
        parser.print_usage(sys.stderr)
        print(f"prodgeom: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
