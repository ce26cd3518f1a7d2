"""Acceptance criteria, runnable from pytest and from ``curvlab selftest``.

Each criterion draws its own seeded generator so results do not depend on
execution order. ``scale`` shrinks sample counts for quick self-tests.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import null_space, subspace_angles
from scipy.stats import ortho_group

from .errors import CurvlabError
from .geometry_mf import (
    MfManifold,
    PolyFunction,
    mf_alpha,
    mf_curvature,
    mf_nabla_r,
    mf_scalar_curvature,
    skew_tsankov_check,
    skew_tsankov_decompose,
)
from .invariants import (
    check_invariance,
    elementary_of_block_curvatures,
    ordered_curvature_difference,
    ricci,
    scalar_curvature,
)
from .structure_group import (
    BlockPermutation,
    WreathElement,
    allowed_block_permutations,
    block_transfer,
    classify_canonical_member,
    extract_permutation,
    is_member,
    sample_isometry,
    sample_para_isometry,
    sample_unimodular,
    sample_wreath_element,
    wreath_to_matrix,
)
from .tensor_core import (
    BlockModelSpace,
    build_canonical,
    direct_sum,
    kernel,
    pullback,
    validate_curvature,
)


@dataclass
class AcceptanceConfig:
    seed: int = 42
    scale: float = 1.0
    tol_membership: float = 1e-8
    tol_kernel: float = 1e-10
    tol_construction: float = 1e-12

    def count(self, n: int) -> int:
        return max(1, int(round(n * self.scale)))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  [{self.number:2d}] {self.name}: {self.detail}"


# random inputs -----------------------------------------------------------

def random_form(rng: np.random.Generator, n_plus: int, n_minus: int, n_zero: int = 0) -> np.ndarray:
    """Q diag(lambda) Q^T with |lambda| in [0.5, 2] and the requested inertia."""
    n = n_plus + n_minus + n_zero
    mags = rng.uniform(0.5, 2.0, size=n)
    lam = np.concatenate([mags[:n_plus], -mags[n_plus:n_plus + n_minus], np.zeros(n_zero)])
    q = ortho_group.rvs(n, random_state=rng) if n > 1 else np.ones((1, 1))
    m = q @ np.diag(lam) @ q.T
    return 0.5 * (m + m.T)


def random_signature(rng: np.random.Generator, n: int) -> tuple[int, int]:
    p = int(rng.integers(0, n + 1))
    return p, n - p


def random_model(rng: np.random.Generator, max_blocks: int = 5, dims=(2, 3, 4)) -> BlockModelSpace:
    """Models whose blocks repeat a few types so that nontrivial swaps are common."""
    k = int(rng.integers(1, max_blocks + 1))
    n_types = int(rng.integers(1, 3))
    types = []
    for _ in range(n_types):
        d = int(rng.choice(dims))
        types.append((d, *random_signature(rng, d)))
    forms = []
    for _ in range(k):
        d, p, q = types[int(rng.integers(len(types)))]
        if rng.random() < 0.5:
            p, q = q, p
        forms.append(random_form(rng, p, q))
    return BlockModelSpace(forms)


def _rng(cfg: AcceptanceConfig, number: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, number])


# criteria ----------------------------------------------------------------

def crit_curvature_identities(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 1)
    worst = 0.0
    n_trials = cfg.count(200)
    ok = True
    for _ in range(n_trials):
        n = int(rng.integers(2, 9))
        p, q = random_signature(rng, n)
        z = int(rng.integers(0, 2)) if p + q > 2 else 0
        phi = random_form(rng, p, max(q - z, 0), z + min(q - z, 0))
        rep = validate_curvature(build_canonical(phi), cfg.tol_construction)
        worst = max(worst, max(rep.antisymmetry, rep.pair_symmetry, rep.bianchi) / max(rep.scale, 1e-300))
        ok &= rep.passed
    return ok, f"{n_trials} forms, worst relative residual {worst:.2e} (tol {cfg.tol_construction:g})"


def crit_kernel_law(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 2)
    worst = 0.0
    ok = True
    n_trials = cfg.count(50)
    for _ in range(n_trials):
        n = int(rng.integers(3, 9))
        r = int(rng.integers(2, n))
        p = int(rng.integers(0, r + 1))
        phi = random_form(rng, p, r - p, n - r)
        expected = null_space(phi, rcond=1e-10)
        got = kernel(build_canonical(phi), cfg.tol_kernel)
        if got.shape[1] != expected.shape[1]:
            ok = False
            worst = np.inf
            continue
        ang = float(np.max(subspace_angles(got, expected)))
        worst = max(worst, ang)
        ok &= ang < 1e-8
    return ok, f"{n_trials} degenerate forms, worst principal angle {worst:.2e} (< 1e-8)"


def crit_theorem_classification(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 3)
    tol = cfg.tol_membership
    counts = {"isometry": 0, "para": 0, "non-member": 0}
    agree = 0
    correct = 0
    n_trials = cfg.count(500)
    for trial in range(n_trials):
        n = int(rng.integers(3, 9))
        kind = ("isometry", "para", "non-member")[trial % 3]
        if kind == "para":
            n += n % 2
            p = q = n // 2
        else:
            p, q = random_signature(rng, n)
        phi = random_form(rng, p, q)
        if kind == "isometry":
            a = sample_isometry(phi, rng)
        elif kind == "para":
            a = sample_isometry(phi, rng) @ sample_para_isometry(phi)
        else:
            a = rng.standard_normal((n, n))
        counts[kind] += 1
        member, _ = is_member(a, build_canonical(phi), tol)
        verdict = classify_canonical_member(a, phi, tol)
        agree += member == verdict.is_member
        correct += member == (kind != "non-member")
    rank2_members = rank2_rejects = 0
    n2 = cfg.count(100)
    for _ in range(n2):
        phi = random_form(rng, *random_signature(rng, 2))
        a = sample_unimodular(2, rng)
        m, _ = is_member(a, build_canonical(phi), tol)
        v = classify_canonical_member(a, phi, tol)
        rank2_members += m and v.verdict.value == "UnimodularRank2"
        d = rng.uniform(1.1, 3.0)
        b = sample_unimodular(2, rng) * np.sqrt(d)
        m, _ = is_member(b, build_canonical(phi), tol)
        v = classify_canonical_member(b, phi, tol)
        rank2_rejects += (not m) and not v.is_member
    ok = agree == n_trials and correct == n_trials and rank2_members == n2 and rank2_rejects == n2
    return ok, (
        f"agreement {agree}/{n_trials}, ground truth {correct}/{n_trials} {counts}; "
        f"rank-2 |det|=1 members {rank2_members}/{n2}, |det|>1 rejected {rank2_rejects}/{n2}"
    )


def cyclic_block_member() -> tuple[np.ndarray, BlockModelSpace]:
    """A member on three Euclidean 2-blocks that cycles them 1 -> 2 -> 3 -> 1."""
    model = BlockModelSpace([np.eye(2)] * 3)
    a = np.zeros((6, 6))
    a[0:2, 4:6] = [[0.8, -1.5], [0.6, 0.125]]  # det = 1
    a[2:4, 0:2] = [[0.0, 2.0], [-0.5, 0.7]]  # det = 1, a_31 = 0 so w_1 = 4
    a[4:6, 2:4] = [[1.25, 0.5], [0.5, 1.0]]  # det = 1
    return a, model


def crit_permutation_roundtrip(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 4)
    n_trials = cfg.count(500)
    recovered = 0
    nontrivial = 0
    failures = []
    for _ in range(n_trials):
        model = random_model(rng)
        w = sample_wreath_element(model, rng)
        nontrivial += not w.sigma.is_identity()
        try:
            got = extract_permutation(wreath_to_matrix(w, model), model, cfg.tol_membership)
        except CurvlabError as exc:
            failures.append(type(exc).__name__)
            continue
        recovered += got == w.sigma
    a, model = cyclic_block_member()
    try:
        example = extract_permutation(a, model, cfg.tol_membership).cycles()
    except CurvlabError as exc:
        example = type(exc).__name__
    ok = recovered == n_trials and example == "(1 2 3)"
    detail = f"recovered {recovered}/{n_trials} ({nontrivial} nontrivial); cyclic example sigma = {example}"
    if failures:
        detail += f"; errors {sorted(set(failures))}"
    return ok, detail


def _leakage(a: np.ndarray, model: BlockModelSpace, cls_of: list[int]) -> float:
    worst = 0.0
    for i, j in itertools.product(range(model.k), repeat=2):
        if cls_of[i] != cls_of[j]:
            worst = max(worst, float(np.max(np.abs(a[model.block_slice(i), model.block_slice(j)]))))
    return worst / float(np.max(np.abs(a)))


def crit_obstructions(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 5)
    tol = cfg.tol_membership
    model = BlockModelSpace([random_form(rng, 2, 0), random_form(rng, 1, 1), random_form(rng, 3, 0)])
    classes = allowed_block_permutations(model)
    cls_of = classes.class_split()
    n = cfg.count(200)
    identity = 0
    worst = 0.0
    for _ in range(n):
        a = wreath_to_matrix(sample_wreath_element(model, rng), model)
        try:
            identity += extract_permutation(a, model, tol).is_identity()
        except CurvlabError:
            pass
        worst = max(worst, _leakage(a, model, cls_of))
    # forced exchange of the (2,0) and (1,1) blocks is never a member
    rejected = 0
    n_swaps = cfg.count(50)
    for _ in range(n_swaps):
        g1, g2 = rng.standard_normal((2, 2, 2))
        swap = np.zeros((7, 7))
        swap[0:2, 2:4] = g1
        swap[2:4, 0:2] = g2
        swap[4:7, 4:7] = np.eye(3)
        if abs(np.linalg.det(swap)) > 1e-6:
            rejected += not is_member(swap, model.tensor(), tol)[0]
        else:
            rejected += 1
    flip_model = BlockModelSpace([random_form(rng, 2, 0), random_form(rng, 0, 2)])
    swaps = 0
    for _ in range(n):
        a = wreath_to_matrix(sample_wreath_element(flip_model, rng), flip_model)
        try:
            swaps += not extract_permutation(a, flip_model, tol).is_identity()
        except CurvlabError:
            pass
    ok = identity == n and worst <= 1e-9 and rejected == n_swaps and swaps >= 1 and len(classes.classes) == 3
    return ok, (
        f"identity sigma {identity}/{n}, max cross-class leakage {worst:.1e}, "
        f"forced swaps rejected {rejected}/{n_swaps}; (2,0)+(0,2) swaps seen {swaps}/{n}"
    )


def crit_direct_product_split(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 6)
    models = [
        BlockModelSpace([random_form(rng, 2, 0), random_form(rng, 0, 2), random_form(rng, 2, 1)]),
        BlockModelSpace([random_form(rng, 1, 1), random_form(rng, 2, 0), random_form(rng, 1, 1)]),
        BlockModelSpace([random_form(rng, 2, 2), random_form(rng, 3, 0), random_form(rng, 2, 2), random_form(rng, 0, 3)]),
    ]
    n = cfg.count(200)
    worst = 0.0
    respects = 0
    total = 0
    ok = True
    for model in models:
        classes = allowed_block_permutations(model)
        ok &= len(classes.classes) == 2
        cls_of = classes.class_split()
        for _ in range(n):
            a = wreath_to_matrix(sample_wreath_element(model, rng), model)
            worst = max(worst, _leakage(a, model, cls_of))
            total += 1
            try:
                respects += classes.is_admissible(extract_permutation(a, model, cfg.tol_membership))
            except CurvlabError:
                pass
    ok &= worst <= 1e-9 and respects == total
    return ok, f"{total} members over {len(models)} two-class models, max leakage {worst:.1e}, class-preserving sigma {respects}/{total}"


def brute_force_ricci(t: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """rho_ab = sum_{ij} phi^{ij} R_{a i j b} with explicit loops."""
    n = phi.shape[0]
    inv = np.linalg.inv(phi)
    rho = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            s = 0.0
            for i in range(n):
                for j in range(n):
                    s += inv[i, j] * t[a, i, j, b]
            rho[a, b] = s
    return rho


def crit_ricci_scalar(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 7)
    worst_rho = worst_tau = worst_oracle = 0.0
    n_trials = cfg.count(30)
    for trial in range(n_trials):
        n = 3 + trial % 6
        phi = random_form(rng, *random_signature(rng, n))
        t = build_canonical(phi)
        rho = ricci(t, phi).matrix
        tau = scalar_curvature(t, phi)
        oracle_rho = brute_force_ricci(t.components, phi)
        oracle_tau = float(np.sum(np.linalg.inv(phi) * oracle_rho))
        worst_rho = max(worst_rho, float(np.max(np.abs(rho - (n - 1) * phi))))
        worst_tau = max(worst_tau, abs(tau - n * (n - 1)))
        worst_oracle = max(worst_oracle, float(np.max(np.abs(rho - oracle_rho))), abs(tau - oracle_tau))
    ok = worst_rho <= 1e-9 and worst_tau <= 1e-9 and worst_oracle <= 1e-9
    return ok, f"max|rho-(N-1)phi| {worst_rho:.1e}, max|tau-N(N-1)| {worst_tau:.1e}, vs brute-force oracle {worst_oracle:.1e}"


def crit_symmetric_invariants(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 8)
    model = BlockModelSpace([np.eye(2), np.eye(2)], scales=[2.0, 5.0])
    t = model.curvature()
    n = cfg.count(100)
    elements = [sample_wreath_element(model, rng) for _ in range(n)]
    swaps = sum(not w.sigma.is_identity() for w in elements)
    ref = elementary_of_block_curvatures(np.eye(4), t, model)
    report = check_invariance(elementary_of_block_curvatures, model, t, n, 1e-8, rng, elements=elements)
    swap = WreathElement(
        (block_transfer(model, 1, 0), block_transfer(model, 0, 1)), BlockPermutation((1, 0)), model
    )
    before = ordered_curvature_difference(np.eye(4), t, model)
    after = ordered_curvature_difference(wreath_to_matrix(swap, model), t, model)
    neg = check_invariance(ordered_curvature_difference, model, t, n, 1e-8, rng, elements=elements)
    ok = (
        np.allclose(ref, [7.0, 10.0], atol=1e-12, rtol=0)
        and report.passed
        and swaps >= 1
        and before * after < 0
        and abs(before + after) <= 1e-12
        and not neg.passed
    )
    return ok, (
        f"(e1, e2) = ({ref[0]:g}, {ref[1]:g}), max deviation {report.max_deviation:.1e} over {n} elements "
        f"({swaps} swaps); kappa1-kappa2: {before:g} -> {after:g} under swap, control fails as expected: {not neg.passed}"
    )


def random_poly(rng: np.random.Generator, p: int, degree: int) -> PolyFunction:
    terms = {}
    for exps in itertools.product(range(degree + 1), repeat=p):
        if sum(exps) <= degree and rng.random() < 0.6:
            terms[exps] = float(rng.uniform(-1, 1))
    return PolyFunction(p, terms)


def quadratic_poly(signs) -> PolyFunction:
    p = len(signs)
    return PolyFunction(p, {tuple(2 if j == i else 0 for j in range(p)): 0.5 * s for i, s in enumerate(signs)})


def fd_nabla_r(m: MfManifold, point, h: float = 1e-4) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    out = []
    for n in range(m.p):
        step = np.zeros(m.p)
        step[n] = h
        up = mf_curvature(m, point + step).components
        down = mf_curvature(m, point - step).components
        out.append((up - down) / (2 * h))
    return np.stack(out, axis=-1)


def crit_mf_suite(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 9)
    symmetric = MfManifold(quadratic_poly([-1.0, 1.0, 1.0]))
    pts = rng.uniform(-2, 2, size=(10, 3))
    max_nabla = max(float(np.max(np.abs(mf_nabla_r(symmetric, x)))) for x in pts)
    max_alpha = max(mf_alpha(symmetric, x) for x in pts)
    taus = [abs(mf_scalar_curvature(symmetric, x)) for x in pts]

    cubic = quadratic_poly([1.0, 1.0, 1.0]).terms
    cubic[(3, 0, 0)] = 1.0
    pert = MfManifold(PolyFunction(3, cubic))
    a0 = mf_alpha(pert, [0, 0, 0])
    a1 = mf_alpha(pert, [1, 0, 0])
    taus += [abs(mf_scalar_curvature(pert, x)) for x in ([0, 0, 0], [1, 0, 0])]

    worst_fd = 0.0
    for p, degree in itertools.product((3, 4), (3, 4)):
        m = MfManifold(random_poly(rng, p, degree))
        for _ in range(cfg.count(3)):
            x = rng.uniform(-1, 1, size=p)
            exact = mf_nabla_r(m, x)
            fd = fd_nabla_r(m, x)
            worst_fd = max(worst_fd, float(np.max(np.abs(fd - exact)) / np.max(np.abs(exact))))
            taus.append(abs(mf_scalar_curvature(m, x)))
    ok = max_nabla <= 1e-10 and max_alpha == 0.0 and abs(a0 - a1) > 1e-3 and worst_fd <= 1e-6 and max(taus) <= 1e-9
    return ok, (
        f"symmetric f: max|nabla R| {max_nabla:.1e}, max alpha {max_alpha:g}; cubic: alpha(0)={a0:.6g}, "
        f"alpha(e1)={a1:.6g}; FD relative error {worst_fd:.1e}; max|tau| {max(taus):.1e}"
    )


def crit_skew_tsankov(cfg: AcceptanceConfig) -> tuple[bool, str]:
    rng = _rng(cfg, 10)
    r2 = build_canonical(np.eye(2))
    base = direct_sum([2.0 * r2, 5.0 * r2, np.zeros((1, 1, 1, 1))])
    commute = skew_tsankov_check(np.eye(5), base)
    worst = 0.0
    dims_ok = True
    n_trials = cfg.count(10)
    for trial in range(n_trials):
        if trial % 2 == 0:
            a = ortho_group.rvs(5, random_state=rng)
        else:
            a = rng.standard_normal((5, 5)) + 3 * np.eye(5)
        phi = a.T @ a
        phi = 0.5 * (phi + phi.T)
        t = pullback(a, base)
        dec = skew_tsankov_decompose(phi, t, rng, tol=1e-8)
        dims_ok &= dec.kernel.shape[1] == 1 and len(dec.curvatures) == 2
        if len(dec.curvatures) == 2:
            worst = max(worst, float(np.max(np.abs(np.sort(dec.curvatures) - [2.0, 5.0]))))
        else:
            worst = np.inf
    rejects = not skew_tsankov_check(np.eye(4), build_canonical(np.eye(4)))
    ok = commute and dims_ok and worst <= 1e-8 and rejects
    return ok, (
        f"block sum commutes: {commute}; {n_trials} conjugations recover kernel dim 1 and kappa {{2, 5}} "
        f"to {worst:.1e}; R_I4 rejected: {rejects}"
    )


CRITERIA: list[tuple[int, str, Callable[[AcceptanceConfig], tuple[bool, str]]]] = [
    (1, "curvature identities of R_phi", crit_curvature_identities),
    (2, "ker R_phi = ker phi", crit_kernel_law),
    (3, "canonical structure group classification", crit_theorem_classification),
    (4, "block permutation round trip", crit_permutation_roundtrip),
    (5, "dimension and signature obstructions", crit_obstructions),
    (6, "direct product split across classes", crit_direct_product_split),
    (7, "Ricci and scalar curvature oracle", crit_ricci_scalar),
    (8, "symmetric functions of block curvatures", crit_symmetric_invariants),
    (9, "M_f suite", crit_mf_suite),
    (10, "skew-Tsankov check and decomposition", crit_skew_tsankov),
]


def run_criterion(number: int, cfg: AcceptanceConfig) -> CriterionResult:
    num, name, fn = next(c for c in CRITERIA if c[0] == number)
    start = time.perf_counter()
    try:
        passed, detail = fn(cfg)
    except CurvlabError as exc:
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(num, name, bool(passed), detail, time.perf_counter() - start)


def run_all(cfg: AcceptanceConfig | None = None) -> list[CriterionResult]:
    cfg = cfg or AcceptanceConfig()
    return [run_criterion(n, cfg) for n, _, _ in CRITERIA]
