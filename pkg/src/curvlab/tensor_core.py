"""Symmetric forms, algebraic curvature tensors and the linear algebra around them.

Tensors are stored densely as ``(N, N, N, N)`` float arrays. Index order
follows the slot order, so ``T[i, j, k, l] = R(e_i, e_j, e_k, e_l)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateForm, InvalidSplit, ValidationError

CONSTRUCTION_TOL = 1e-12
KERNEL_TOL = 1e-10
MEMBERSHIP_TOL = 1e-8


class SymForm:
    """A symmetric bilinear form on R^N, stored as its Gram matrix."""

    __slots__ = ("_matrix",)

    def __init__(self, entries):
        m = np.array(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValidationError(f"form must be a nonempty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("form has non-finite entries")
        if not np.array_equal(m, m.T):
            raise ValidationError("form is not symmetric")
        m.setflags(write=False)
        self._matrix = m

    @classmethod
    def from_matrix(cls, m) -> "SymForm":
        """Build from a matrix that is symmetric up to rounding (symmetrizes)."""
        m = np.asarray(m, dtype=float)
        return cls(0.5 * (m + m.T))

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    def __call__(self, x, y) -> float:
        return float(np.asarray(x) @ self._matrix @ np.asarray(y))

    def __neg__(self) -> "SymForm":
        return SymForm(-self._matrix)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._matrix, dtype=dtype)

    def __repr__(self) -> str:
        return f"SymForm(dim={self.dim})"


def as_matrix(phi) -> np.ndarray:
    if isinstance(phi, SymForm):
        return phi.matrix
    return SymForm(phi).matrix


@dataclass(frozen=True)
class ValidationReport:
    antisymmetry: float
    pair_symmetry: float
    bianchi: float
    scale: float
    tol: float

    @property
    def passed(self) -> bool:
        limit = self.tol * self.scale
        return max(self.antisymmetry, self.pair_symmetry, self.bianchi) <= limit

    def __bool__(self) -> bool:
        return self.passed


def _residuals(t: np.ndarray) -> tuple[float, float, float]:
    if t.size == 0:
        return 0.0, 0.0, 0.0
    anti = np.max(np.abs(t + np.einsum("jikl->ijkl", t)))
    pair = np.max(np.abs(t - np.einsum("klij->ijkl", t)))
    bianchi = np.max(np.abs(t + np.einsum("iklj->ijkl", t) + np.einsum("iljk->ijkl", t)))
    return float(anti), float(pair), float(bianchi)


class CurvTensor:
    """A covariant 4-tensor satisfying the curvature identities.

    Construction checks antisymmetry in the first pair, pair interchange
    symmetry and the first Bianchi identity, each to ``tol * max|T|``.
    Nothing is symmetrized; failing input raises :class:`ValidationError`.
    """

    __slots__ = ("_c",)

    def __init__(self, components, tol: float = CONSTRUCTION_TOL):
        c = np.array(components, dtype=float)
        if c.ndim == 1:
            n = round(c.size ** 0.25)
            if n ** 4 != c.size:
                raise ValidationError(f"flat component array of length {c.size} is not N^4")
            c = c.reshape((n, n, n, n))
        if c.ndim != 4 or len(set(c.shape)) != 1 or c.shape[0] < 1:
            raise ValidationError(f"components must have shape (N, N, N, N), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValidationError("tensor has non-finite components")
        report = validate_curvature(c, tol)
        if not report.passed:
            raise ValidationError(
                "curvature identities fail: antisymmetry=%.3g pair=%.3g bianchi=%.3g (scale %.3g)"
                % (report.antisymmetry, report.pair_symmetry, report.bianchi, report.scale)
            )
        c.setflags(write=False)
        self._c = c

    @classmethod
    def _trusted(cls, components: np.ndarray) -> "CurvTensor":
        # for results of operations that preserve the identities exactly in exact arithmetic
        obj = cls.__new__(cls)
        c = np.array(components, dtype=float)
        c.setflags(write=False)
        obj._c = c
        return obj

    @classmethod
    def zeros(cls, dim: int) -> "CurvTensor":
        return cls._trusted(np.zeros((dim,) * 4))

    @property
    def components(self) -> np.ndarray:
        return self._c

    @property
    def dim(self) -> int:
        return self._c.shape[0]

    def __call__(self, x, y, z, w) -> float:
        return float(np.einsum("ijkl,i,j,k,l->", self._c, x, y, z, w))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._c)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._c, dtype=dtype)

    def __add__(self, other):
        return CurvTensor._trusted(self._c + as_components(other))

    def __sub__(self, other):
        return CurvTensor._trusted(self._c - as_components(other))

    def __neg__(self):
        return CurvTensor._trusted(-self._c)

    def __mul__(self, c):
        return CurvTensor._trusted(float(c) * self._c)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"CurvTensor(dim={self.dim})"


def as_components(t) -> np.ndarray:
    if isinstance(t, CurvTensor):
        return t.components
    c = np.asarray(t, dtype=float)
    if c.ndim != 4:
        raise ValidationError(f"expected a rank-4 array, got shape {c.shape}")
    return c


def validate_curvature(t, tol: float = CONSTRUCTION_TOL) -> ValidationReport:
    """Report the worst residual of each curvature identity.

    Residuals are absolute; ``passed`` compares them with ``tol * max|T|``.
    """
    c = np.asarray(t.components if isinstance(t, CurvTensor) else t, dtype=float)
    anti, pair, bianchi = _residuals(c)
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    return ValidationReport(anti, pair, bianchi, scale, tol)


def build_canonical(phi) -> CurvTensor:
    """R_phi(x, y, z, w) = phi(x, w) phi(y, z) - phi(x, z) phi(y, w)."""
    p = as_matrix(phi)
    c = np.einsum("il,jk->ijkl", p, p) - np.einsum("ik,jl->ijkl", p, p)
    return CurvTensor._trusted(c)


def direct_sum(parts: Sequence) -> CurvTensor:
    """Block-diagonal embedding of curvature tensors on consecutive coordinate blocks."""
    comps = [as_components(p) for p in parts]
    if not comps:
        raise ValueError("direct_sum needs at least one part")
    n = sum(c.shape[0] for c in comps)
    out = np.zeros((n,) * 4)
    a = 0
    for c in comps:
        d = c.shape[0]
        s = slice(a, a + d)
        out[s, s, s, s] = c
        a += d
    return CurvTensor._trusted(out)


def pullback(a, t) -> CurvTensor:
    """(A^* T)(x, y, z, w) = T(Ax, Ay, Az, Aw)."""
    a = np.asarray(a, dtype=float)
    c = as_components(t)
    if a.shape != (c.shape[0], c.shape[0]):
        raise ValueError(f"map of shape {a.shape} does not match tensor dimension {c.shape[0]}")
    out = np.einsum("pqrs,pi,qj,rk,sl->ijkl", c, a, a, a, a, optimize=True)
    return CurvTensor._trusted(out)


def pullback_form(a, phi) -> np.ndarray:
    """Gram matrix of A^* phi, i.e. A^T phi A (symmetrized against rounding)."""
    a = np.asarray(a, dtype=float)
    m = a.T @ as_matrix(phi) @ a
    return 0.5 * (m + m.T)


def _null_space_of_rows(flat: np.ndarray, tol: float) -> np.ndarray:
    # left null space of an (N, M) matrix: vectors v with v @ flat = 0
    n = flat.shape[0]
    u, s, _ = np.linalg.svd(flat, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n)
    rank = int(np.sum(s > tol * s[0]))
    return u[:, rank:]


def kernel(t, tol: float = KERNEL_TOL, slot: int = 0) -> np.ndarray:
    """Euclidean-orthonormal basis (as columns) of ker R.

    The kernel is the left null space of the N x N^3 flattening that keeps
    ``slot`` as the row index. All four slots give the same subspace for a
    valid curvature tensor.
    """
    c = as_components(t)
    n = c.shape[0]
    flat = np.moveaxis(c, slot, 0).reshape(n, -1)
    return _null_space_of_rows(flat, tol)


def signature(phi, tol: float = KERNEL_TOL) -> tuple[int, int, int]:
    """(n_plus, n_minus, n_zero), thresholding eigenvalues at tol * max|eigenvalue|."""
    ev = np.linalg.eigvalsh(as_matrix(phi))
    s = float(np.max(np.abs(ev)))
    if s == 0.0:
        return 0, 0, len(ev)
    cut = tol * s
    plus = int(np.sum(ev > cut))
    minus = int(np.sum(ev < -cut))
    return plus, minus, len(ev) - plus - minus


def rank(phi, tol: float = KERNEL_TOL) -> int:
    p, q, _ = signature(phi, tol)
    return p + q


@dataclass(frozen=True)
class PseudoONBasis:
    """Columns of ``vectors`` satisfy phi(e_i, e_j) = signs[i] * delta_ij."""

    vectors: np.ndarray
    signs: np.ndarray

    @property
    def eta(self) -> np.ndarray:
        return np.diag(self.signs)

    @property
    def n_plus(self) -> int:
        return int(np.sum(self.signs > 0))

    @property
    def n_minus(self) -> int:
        return int(np.sum(self.signs < 0))

    def gram(self, phi) -> np.ndarray:
        return self.vectors.T @ as_matrix(phi) @ self.vectors


def pseudo_orthonormalize(phi, tol: float = KERNEL_TOL) -> PseudoONBasis:
    """Pseudo-orthonormal basis of a nondegenerate form, positive vectors first.

    Uses the symmetric eigendecomposition and rescales each eigenvector by
    ``|lambda|^-1/2``; no Gram-Schmidt pivoting, so null vectors cannot cause
    breakdown. Each vector is sign-normalized so its largest entry is positive.
    """
    m = as_matrix(phi)
    if signature(m, tol)[2] > 0:
        raise DegenerateForm("form is degenerate; no pseudo-orthonormal basis exists")
    ev, vecs = np.linalg.eigh(m)
    order = np.concatenate([np.flatnonzero(ev > 0), np.flatnonzero(ev < 0)])
    ev, vecs = ev[order], vecs[:, order]
    pivots = np.argmax(np.abs(vecs), axis=0)
    flip = np.sign(vecs[pivots, np.arange(vecs.shape[1])])
    vecs = vecs * flip / np.sqrt(np.abs(ev))
    return PseudoONBasis(vecs, np.sign(ev))


def is_decomposable_wrt(t, basis1, basis2, tol: float = KERNEL_TOL) -> bool:
    """True iff every component touching both subspaces vanishes.

    ``basis1`` and ``basis2`` hold basis vectors as columns and must together
    form a basis of V.
    """
    c = as_components(t)
    n = c.shape[0]
    b1 = np.atleast_2d(np.asarray(basis1, dtype=float).reshape(n, -1))
    b2 = np.atleast_2d(np.asarray(basis2, dtype=float).reshape(n, -1))
    if b1.shape[1] < 1 or b2.shape[1] < 1:
        raise InvalidSplit("both subspaces must be nonzero")
    b = np.hstack([b1, b2])
    if b.shape[1] != n or np.linalg.matrix_rank(b) < n:
        raise InvalidSplit("the two bases do not form a direct-sum decomposition of V")
    tb = pullback(b, c).components
    scale = float(np.max(np.abs(tb)))
    if scale == 0.0:
        return True
    first = np.arange(n) < b1.shape[1]
    # a component is "pure" if all four indices lie in the same part
    in1 = first[:, None, None, None] & first[None, :, None, None] & first[None, None, :, None] & first[None, None, None, :]
    sec = ~first
    in2 = sec[:, None, None, None] & sec[None, :, None, None] & sec[None, None, :, None] & sec[None, None, None, :]
    mixed = ~(in1 | in2)
    return bool(np.max(np.abs(tb[mixed]), initial=0.0) <= tol * scale)


class BlockModelSpace:
    """An ordered direct sum V = V_1 + ... + V_k carrying one form per block.

    ``offsets[p]`` is the (0-based) index of the first basis vector of block
    ``p`` and ``block_of[i]`` the block containing basis vector ``i``.
    ``scales`` multiply the per-block canonical tensors in :meth:`curvature`;
    the structure tensor :meth:`tensor` always uses the unscaled forms.
    """

    def __init__(self, forms: Sequence, scales: Sequence[float] | None = None):
        self.forms: tuple[SymForm, ...] = tuple(
            f if isinstance(f, SymForm) else SymForm(f) for f in forms
        )
        if not self.forms:
            raise ValueError("a block model needs at least one block")
        if scales is None:
            scales = [1.0] * len(self.forms)
        if len(scales) != len(self.forms):
            raise ValueError("one scale per block required")
        self.scales: tuple[float, ...] = tuple(float(s) for s in scales)
        self.dims: tuple[int, ...] = tuple(f.dim for f in self.forms)
        self.offsets: tuple[int, ...] = tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.dims)[:-1]]))
        self.block_of: np.ndarray = np.repeat(np.arange(self.k), self.dims)
        self.block_of.setflags(write=False)

    @property
    def k(self) -> int:
        return len(self.forms)

    @property
    def dim(self) -> int:
        return int(sum(self.dims))

    def block_slice(self, p: int) -> slice:
        return slice(self.offsets[p], self.offsets[p] + self.dims[p])

    def form(self) -> np.ndarray:
        """Block-diagonal Gram matrix of the direct-sum form."""
        out = np.zeros((self.dim, self.dim))
        for p, f in enumerate(self.forms):
            s = self.block_slice(p)
            out[s, s] = f.matrix
        return out

    def tensor(self) -> CurvTensor:
        return direct_sum([build_canonical(f) for f in self.forms])

    def curvature(self) -> CurvTensor:
        return direct_sum([c * build_canonical(f) for c, f in zip(self.scales, self.forms)])

    def signatures(self, tol: float = KERNEL_TOL) -> list[tuple[int, int, int]]:
        return [signature(f, tol) for f in self.forms]

    def __eq__(self, other) -> bool:
        if not isinstance(other, BlockModelSpace):
            return NotImplemented
        return self.scales == other.scales and len(self.forms) == len(other.forms) and all(
            np.array_equal(a.matrix, b.matrix) for a, b in zip(self.forms, other.forms)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"BlockModelSpace(dims={self.dims})"
