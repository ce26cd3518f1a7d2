"""``curvlab`` command-line interface."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .acceptance import AcceptanceConfig, run_all
from .errors import (
    CurvlabError,
    DegenerateForm,
    DegenerateHessian,
    InconsistentPermutation,
    SingularMap,
    ValidationError,
)
from .geometry_mf import MfManifold, PolyFunction, mf_alpha, mf_scalar_curvature
from .invariants import block_sectional_curvatures, ricci, scalar_curvature, symmetric_combine
from .structure_group import classify_canonical_member, extract_permutation, is_member
from .tensor_core import CONSTRUCTION_TOL, KERNEL_TOL, MEMBERSHIP_TOL, build_canonical, kernel, signature, validate_curvature

log = logging.getLogger("curvlab")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SINGULAR = 4
EXIT_PERMUTATION = 5
EXIT_DEGENERATE_BLOCK = 6
EXIT_DEGENERATE_HESSIAN = 7

NONCONSTANT_THRESHOLD = 1e-6


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class CliConfig:
    tol_membership: float = MEMBERSHIP_TOL
    tol_kernel: float = KERNEL_TOL
    tol_construction: float = CONSTRUCTION_TOL
    seed: int = 42
    fmt: str | None = None
    out: str | None = None
    verbose: int = 0

    def __post_init__(self):
        for name in ("tol_membership", "tol_kernel", "tol_construction"):
            if not getattr(self, name) > 0:
                raise CommandError(EXIT_PARSE, f"{name.replace('_', '-')} must be positive")


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CommandError(EXIT_PARSE, f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CommandError(EXIT_PARSE, f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _parse(path: str, loader):
    obj = _load_json(path)
    try:
        return loader(obj)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        detail = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
        raise CommandError(EXIT_PARSE, f"{path}: {detail}") from exc


def _emit(text: str, cfg: CliConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return repr(float(x))


# commands ------------------------------------------------------------------

def cmd_build_rphi(args, cfg: CliConfig) -> int:
    def load(obj):
        try:
            return jsonio.form_from_json(obj)
        except ValidationError as exc:
            raise CommandError(EXIT_VALIDATION, f"{args.form}: {exc}") from exc

    phi = _parse(args.form, load)
    t = build_canonical(phi)
    report = validate_curvature(t, cfg.tol_construction)
    if not report.passed:
        raise CommandError(
            EXIT_VALIDATION,
            f"constructed tensor fails curvature identities at tol {cfg.tol_construction:g} "
            f"(antisymmetry {report.antisymmetry:.3g}, pair {report.pair_symmetry:.3g}, bianchi {report.bianchi:.3g})",
        )
    p, q, z = signature(phi, cfg.tol_kernel)
    ker_dim = kernel(t, cfg.tol_kernel).shape[1]
    print(f"signature: ({p}, {q}, {z})")
    print(f"kernel_dim: {ker_dim}")
    out = args.out_file or cfg.out
    text = jsonio.dumps(jsonio.tensor_to_json(t)) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        log.info("wrote %d components to %s", t.dim ** 4, out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check_membership(args, cfg: CliConfig) -> int:
    model = _parse(args.model, jsonio.model_from_json)
    a = _parse(args.matrix, jsonio.matrix_from_json)
    if a.shape[0] != model.dim:
        raise CommandError(EXIT_PARSE, f"matrix is {a.shape[0]}x{a.shape[0]} but the model has dimension {model.dim}")
    try:
        member, residual = is_member(a, model.tensor(), cfg.tol_membership)
    except SingularMap as exc:
        raise CommandError(EXIT_SINGULAR, str(exc)) from exc
    print(f"verdict: {'member' if member else 'non-member'}")
    print(f"residual: {residual:.6e}")
    if model.k == 1:
        v = classify_canonical_member(a, model.forms[0], cfg.tol_membership, cfg.tol_kernel)
        print(f"classification: {v.verdict.value}")
    elif member:
        try:
            sigma = extract_permutation(a, model, cfg.tol_membership)
        except InconsistentPermutation as exc:
            raise CommandError(EXIT_PERMUTATION, str(exc)) from exc
        except DegenerateForm as exc:
            print(f"sigma: undetermined ({exc})")
        else:
            print(f"sigma: {sigma.cycles()}")
    return EXIT_OK if member else EXIT_FAIL


def invariant_profile(model) -> dict:
    for p, (_, _, z) in enumerate(model.signatures()):
        if z:
            raise CommandError(EXIT_DEGENERATE_BLOCK, f"block {p + 1} has a degenerate form")
    phi = model.form()
    t = model.curvature()
    rho = ricci(t, phi).matrix
    eig = np.sort(np.linalg.eigvals(np.linalg.solve(phi, rho)).real)
    kappas = block_sectional_curvatures(np.eye(model.dim), t, model)
    out = {
        "tau": scalar_curvature(t, phi),
        "ricci_eigenvalues": [float(x) for x in eig],
        "kappa": kappas,
        "elementary": [],
        "power_sums": [],
    }
    if kappas:
        profile = symmetric_combine(kappas)
        out["elementary"] = list(profile.elementary)
        out["power_sums"] = list(profile.power_sums)
    return out


def cmd_invariants(args, cfg: CliConfig) -> int:
    model = _parse(args.model, jsonio.model_from_json)
    prof = invariant_profile(model)
    if (cfg.fmt or "json") == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "index", "value"])
        w.writerow(["tau", "", _fmt(prof["tau"])])
        for key in ("ricci_eigenvalues", "kappa", "elementary", "power_sums"):
            for i, v in enumerate(prof[key], start=1):
                w.writerow([key, i, _fmt(v)])
        _emit(buf.getvalue(), cfg)
    else:
        _emit(jsonio.dumps(prof) + "\n", cfg)
    return EXIT_OK


def _load_points(obj) -> np.ndarray:
    pts = np.asarray(obj, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a nonempty list of coordinate lists")
    return pts


def cmd_mf_alpha(args, cfg: CliConfig) -> int:
    f = _parse(args.poly, PolyFunction.from_json)
    pts = _parse(args.points, _load_points)
    try:
        m = MfManifold(f)
    except ValidationError as exc:
        raise CommandError(EXIT_PARSE, f"{args.poly}: {exc}") from exc
    if pts.shape[1] != m.p:
        raise CommandError(EXIT_PARSE, f"{args.points}: points have {pts.shape[1]} coordinates, polynomial has {m.p}")
    rows = []
    for x in pts:
        try:
            alpha = mf_alpha(m, x, tol=cfg.tol_kernel)
        except DegenerateHessian as exc:
            raise CommandError(EXIT_DEGENERATE_HESSIAN, str(exc)) from exc
        rows.append((x, alpha, mf_scalar_curvature(m, x)))
    alphas = [r[1] for r in rows]
    spread = max(alphas) - min(alphas)
    nonconstant = spread > NONCONSTANT_THRESHOLD
    if cfg.fmt == "json":
        doc = {
            "rows": [{"point": [float(v) for v in x], "alpha": a, "tau_ambient": tau} for x, a, tau in rows],
            "alpha_range": spread,
            "nonconstant": nonconstant,
        }
        _emit(jsonio.dumps(doc) + "\n", cfg)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x_{i}" for i in range(1, m.p + 1)] + ["alpha", "tau_ambient"])
        for x, a, tau in rows:
            w.writerow([_fmt(v) for v in x] + [_fmt(a), _fmt(tau)])
        buf.write(f"# nonconstant={'true' if nonconstant else 'false'} alpha_range={spread:.6e}\n")
        _emit(buf.getvalue(), cfg)
    return EXIT_OK


def cmd_selftest(args, cfg: CliConfig) -> int:
    acfg = AcceptanceConfig(
        seed=cfg.seed,
        scale=args.scale,
        tol_membership=cfg.tol_membership,
        tol_kernel=cfg.tol_kernel,
        tol_construction=cfg.tol_construction,
    )
    results = run_all(acfg)
    for r in results:
        print(f"{r.line()} ({r.seconds:.2f}s)")
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if failed:
        print(f"error: criteria {', '.join(map(str, failed))} failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# wiring --------------------------------------------------------------------

class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise CommandError(EXIT_PARSE, f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgParser(add_help=False)
    common.add_argument("--tol-membership", type=float, default=argparse.SUPPRESS)
    common.add_argument("--tol-kernel", type=float, default=argparse.SUPPRESS)
    common.add_argument("--tol-construction", type=float, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="overrides CURVLAB_SEED (default 42)")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default=argparse.SUPPRESS)
    common.add_argument("--out", metavar="FILE", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    parser = _ArgParser(prog="curvlab", parents=[common], description="Canonical curvature tensors and their structure groups.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-rphi", parents=[common], help="build R_phi from a symmetric form")
    p.add_argument("form")
    p.add_argument("out_file", nargs="?")
    p.set_defaults(func=cmd_build_rphi)

    p = sub.add_parser("check-membership", parents=[common], help="test A against the structure group of a block model")
    p.add_argument("model")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_check_membership)

    p = sub.add_parser("invariants", parents=[common], help="curvature invariants of a block model")
    p.add_argument("model")
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("mf-alpha", parents=[common], help="alpha_f and ambient scalar curvature on M_f")
    p.add_argument("poly")
    p.add_argument("points")
    p.set_defaults(func=cmd_mf_alpha)

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance suite at reduced sample counts")
    p.add_argument("--scale", type=float, default=0.2, help="fraction of the full sample counts (default 0.2)")
    p.set_defaults(func=cmd_selftest)
    return parser


def _config(ns: argparse.Namespace, env=os.environ) -> CliConfig:
    seed = getattr(ns, "seed", None)
    if seed is None:
        raw = env.get("CURVLAB_SEED")
        try:
            seed = int(raw) if raw is not None else 42
        except ValueError as exc:
            raise CommandError(EXIT_PARSE, f"CURVLAB_SEED must be an integer, got {raw!r}") from exc
    return CliConfig(
        tol_membership=getattr(ns, "tol_membership", MEMBERSHIP_TOL),
        tol_kernel=getattr(ns, "tol_kernel", KERNEL_TOL),
        tol_construction=getattr(ns, "tol_construction", CONSTRUCTION_TOL),
        seed=seed,
        fmt=getattr(ns, "fmt", None),
        out=getattr(ns, "out", None),
        verbose=getattr(ns, "verbose", 0),
    )


def main(argv: list[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = _config(ns)
        logging.basicConfig(level=logging.WARNING - 10 * min(cfg.verbose, 2), format="%(levelname)s: %(message)s")
        return ns.func(ns, cfg)
    except CommandError as exc:
        code, msg = exc.code, str(exc)
    except CurvlabError as exc:
        code, msg = EXIT_FAIL, f"{type(exc).__name__}: {exc}"
    print("error: " + " ".join(msg.split()), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
