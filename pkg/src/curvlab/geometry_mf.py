"""The pseudo-Riemannian family M_f on R^{2p} and skew-Tsankov models.

M_f has coordinates (x_1..x_p, y_1..y_p) and metric
g(dx_i, dx_j) = f_i f_j, g(dx_i, dy_i) = 1 for a polynomial f(x). Its
curvature is R_H (H the Hessian of f) on the x-directions and vanishes on
the y-directions, so everything except the ambient scalar curvature is
computed on the p-dimensional x-block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.linalg import null_space

from .errors import DegenerateForm, DegenerateHessian, DegenerateSpectrum, NotSkewTsankov, ValidationError
from .invariants import covariant_norm
from .tensor_core import (
    KERNEL_TOL,
    CurvTensor,
    PseudoONBasis,
    SymForm,
    as_components,
    as_matrix,
    build_canonical,
    direct_sum,
    kernel,
    pseudo_orthonormalize,
    pullback,
    signature,
)


class PolyFunction:
    """A real polynomial in p variables, stored as {exponent tuple: coefficient}.

    Variable indices are 0-based.
    """

    __slots__ = ("p", "terms", "_partials")

    def __init__(self, p: int, terms: Mapping[tuple[int, ...], float]):
        if p < 1:
            raise ValidationError("a polynomial needs at least one variable")
        clean: dict[tuple[int, ...], float] = {}
        for exp, coef in terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != p or any(e < 0 for e in exp):
                raise ValidationError(f"bad exponent {exp} for {p} variables")
            coef = float(coef)
            if coef != 0.0:
                clean[exp] = clean.get(exp, 0.0) + coef
        self.p = p
        self.terms = {e: c for e, c in sorted(clean.items()) if c != 0.0}
        self._partials: dict[int, PolyFunction] = {}

    @classmethod
    def from_json(cls, obj: dict) -> "PolyFunction":
        p = int(obj["p"])
        terms: dict[tuple[int, ...], float] = {}
        for t in obj["terms"]:
            exp = tuple(int(e) for e in t["exp"])
            terms[exp] = terms.get(exp, 0.0) + float(t["coef"])
        return cls(p, terms)

    def to_json(self) -> dict:
        return {"p": self.p, "terms": [{"exp": list(e), "coef": c} for e, c in self.terms.items()]}

    def partial(self, var: int) -> "PolyFunction":
        if not 0 <= var < self.p:
            raise IndexError(f"variable index {var} out of range for p = {self.p}")
        if var not in self._partials:
            out: dict[tuple[int, ...], float] = {}
            for exp, coef in self.terms.items():
                if exp[var]:
                    e = list(exp)
                    e[var] -= 1
                    out[tuple(e)] = coef * exp[var]
            self._partials[var] = PolyFunction(self.p, out)
        return self._partials[var]

    def __call__(self, point) -> float:
        x = np.asarray(point, dtype=float)[: self.p]
        return math.fsum(c * float(np.prod(x ** np.array(e))) for e, c in self.terms.items())

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyFunction) and self.p == other.p and self.terms == other.terms

    __hash__ = None

    def __repr__(self) -> str:
        return f"PolyFunction(p={self.p}, terms={self.terms})"


def poly_partial(f: PolyFunction, var: int) -> PolyFunction:
    return f.partial(var)


def gradient(f: PolyFunction, point) -> np.ndarray:
    return np.array([f.partial(i)(point) for i in range(f.p)])


def hessian_matrix(f: PolyFunction, point) -> np.ndarray:
    p = f.p
    h = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            h[i, j] = h[j, i] = f.partial(i).partial(j)(point)
    return h


def hessian(f: PolyFunction, point) -> SymForm:
    return SymForm(hessian_matrix(f, point))


def third_derivatives(f: PolyFunction, point) -> np.ndarray:
    p = f.p
    out = np.empty((p, p, p))
    for i in range(p):
        for j in range(i, p):
            fij = f.partial(i).partial(j)
            for n in range(j, p):
                v = fij.partial(n)(point)
                for a, b, c in {(i, j, n), (i, n, j), (j, i, n), (j, n, i), (n, i, j), (n, j, i)}:
                    out[a, b, c] = v
    return out


@dataclass(frozen=True)
class MfManifold:
    f: PolyFunction

    def __post_init__(self):
        if self.f.p < 3:
            raise ValidationError(f"M_f needs p >= 3, got p = {self.f.p}")

    @property
    def p(self) -> int:
        return self.f.p


def mf_metric(m: MfManifold, point) -> np.ndarray:
    """2p x 2p metric in (x, y) coordinates."""
    p = m.p
    df = gradient(m.f, point)
    g = np.zeros((2 * p, 2 * p))
    g[:p, :p] = np.outer(df, df)
    g[:p, p:] = np.eye(p)
    g[p:, :p] = np.eye(p)
    return g


def mf_curvature(m: MfManifold, point) -> CurvTensor:
    return build_canonical(hessian(m.f, point))


def mf_nabla_r(m: MfManifold, point) -> np.ndarray:
    """Components nabla R(d_i, d_j, d_k, d_l; d_n) on the x coordinate fields, last index n.

    nabla R = d_n(H_il H_jk - H_ik H_jl), expanded with exact polynomial
    third derivatives.
    """
    h = hessian_matrix(m.f, point)
    f3 = third_derivatives(m.f, point)
    return (
        np.einsum("iln,jk->ijkln", f3, h)
        + np.einsum("il,jkn->ijkln", h, f3)
        - np.einsum("ikn,jl->ijkln", f3, h)
        - np.einsum("ik,jln->ijkln", h, f3)
    )


def mf_alpha(m: MfManifold, point, basis: PseudoONBasis | None = None, tol: float = KERNEL_TOL) -> float:
    """alpha_f: absolute squared length of nabla R measured with the Hessian form."""
    h = hessian(m.f, point)
    if signature(h, tol)[2] > 0:
        raise DegenerateHessian(f"Hessian has rank < {m.p} at {np.asarray(point, dtype=float).tolist()}")
    return covariant_norm(h, mf_nabla_r(m, point), basis)


def mf_full_curvature(m: MfManifold, point) -> np.ndarray:
    """Ambient 2p-dimensional curvature: R_H on x-slots, zero on anything touching y."""
    p = m.p
    full = np.zeros((2 * p,) * 4)
    full[:p, :p, :p, :p] = mf_curvature(m, point).components
    return full


def mf_scalar_curvature(m: MfManifold, point) -> float:
    ginv = np.linalg.inv(mf_metric(m, point))
    return float(np.einsum("il,jk,ijkl->", ginv, ginv, mf_full_curvature(m, point), optimize=True))


def skew_operators(phi, t) -> np.ndarray:
    """ops[i, j] is the matrix of the skew curvature operator R(e_i, e_j).

    R(x, y, z, w) = phi(R(x, y) z, w), so ops[i, j][m, k] = sum_l phi^{ml} T_ijkl.
    """
    phinv = np.linalg.inv(as_matrix(phi))
    return np.einsum("ml,ijkl->ijmk", phinv, as_components(t))


def _commutator_defect(ops: np.ndarray) -> tuple[float, float]:
    n = ops.shape[0]
    iu = np.triu_indices(n, 1)
    stack = ops[iu]
    scale = max((np.linalg.norm(o, 2) for o in stack), default=0.0)
    comm = np.einsum("amk,bkn->abmn", stack, stack)
    comm = comm - np.swapaxes(comm, 0, 1)
    return float(np.max(np.abs(comm), initial=0.0)), float(scale)


def skew_tsankov_check(phi, t, tol: float = KERNEL_TOL) -> bool:
    """True iff all skew curvature operators pairwise commute.

    Commutator entries are compared with ``tol`` times the squared largest
    operator norm, which keeps the test invariant under scaling T.
    """
    phi_m = as_matrix(phi)
    if signature(phi_m)[2]:
        raise DegenerateForm("skew-Tsankov check needs a nondegenerate form")
    defect, scale = _commutator_defect(skew_operators(phi_m, t))
    if scale == 0.0:
        return True
    return defect <= tol * scale * scale


@dataclass(frozen=True)
class SkewTsankovDecomposition:
    planes: tuple[np.ndarray, ...]  # each (N, 2), phi-orthonormal columns
    kernel: np.ndarray  # (N, m), phi-orthonormal basis of ker R
    curvatures: tuple[float, ...]
    residual: float

    @property
    def adapted_basis(self) -> np.ndarray:
        return np.hstack(list(self.planes) + [self.kernel])


def _pair_spectrum(mu: np.ndarray, gap: float) -> bool:
    scale = float(mu.max())
    if scale <= 0.0 or mu.size % 2:
        return False
    pairs_ok = np.all(np.abs(mu[0::2] - mu[1::2]) <= gap * scale)
    separated = np.all(np.diff(mu)[1::2] > gap * scale) if mu.size > 2 else True
    return bool(pairs_ok and separated and mu[0] > gap * scale)


def skew_tsankov_decompose(
    phi, t, rng: np.random.Generator, tol: float = 1e-8, retries: int = 5, kernel_tol: float = KERNEL_TOL
) -> SkewTsankovDecomposition:
    """Split a Riemannian skew-Tsankov model into invariant 2-planes plus the kernel.

    A random combination S of the commuting skew operators is taken on the
    complement of ker R; the eigenspaces of S^2 are the invariant planes when
    their eigenvalues are simple pairs. Spectral collisions trigger up to
    ``retries`` redraws; after that any split passing the reconstruction
    check is accepted.
    """
    b = pseudo_orthonormalize(phi)
    if np.any(b.signs < 0):
        raise ValidationError("skew-Tsankov decomposition needs a positive definite form")
    if not skew_tsankov_check(phi, t, kernel_tol):
        raise NotSkewTsankov("skew curvature operators do not commute")
    e = b.vectors
    tp = pullback(e, t).components
    n = tp.shape[0]
    ker = kernel(tp, kernel_tol)
    comp = null_space(ker.T) if ker.shape[1] else np.eye(n)
    if comp.shape[1] == 0:
        return SkewTsankovDecomposition((), e @ ker, (), 0.0)
    if comp.shape[1] % 2:
        raise NotSkewTsankov("complement of the kernel has odd dimension")
    ops = np.einsum("ijkm->ijmk", tp)
    scale = float(np.max(np.abs(tp)))
    last_residual = math.inf
    for attempt in range(retries + 1):
        c = rng.standard_normal((n, n))
        s = comp.T @ np.einsum("ij,ijmk->mk", c, ops) @ comp
        mu, vecs = np.linalg.eigh(-(s @ s))
        clean = _pair_spectrum(mu, 1e-6)
        if not clean and attempt < retries:
            continue
        planes = [comp @ vecs[:, 2 * a : 2 * a + 2] for a in range(mu.size // 2)]
        kappas = [float(np.einsum("ijkl,i,j,k,l->", tp, x, y, y, x)) for x, y in (pl.T for pl in planes)]
        adapted = np.hstack(planes + [ker])
        rebuilt = direct_sum([kap * build_canonical(np.eye(2)) for kap in kappas] + ([np.zeros((ker.shape[1],) * 4)] if ker.shape[1] else []))
        residual = float(np.max(np.abs(pullback(adapted, tp).components - rebuilt.components)))
        if residual <= tol * scale:
            return SkewTsankovDecomposition(
                tuple(e @ pl for pl in planes), e @ ker, tuple(kappas), residual / scale
            )
        last_residual = residual
    raise DegenerateSpectrum(
        f"no invariant 2-plane split found after {retries} redraws (reconstruction residual {last_residual:.3g})"
    )
