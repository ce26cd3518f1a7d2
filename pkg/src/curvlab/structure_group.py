"""Structure groups of canonical curvature tensors and their direct sums.

Block permutations are stored 0-based internally (``image[i]`` is where
block ``i`` goes); the JSON and CLI layers convert to 1-based indices and
cycle notation.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import (
    DegenerateForm,
    IncompatibleBlocks,
    InconsistentPermutation,
    ModelMismatch,
    NotAMember,
    NotBalanced,
    SingularMap,
)
from .tensor_core import (
    KERNEL_TOL,
    MEMBERSHIP_TOL,
    BlockModelSpace,
    as_components,
    as_matrix,
    pseudo_orthonormalize,
    pullback,
    pullback_form,
    signature,
)

LIE_SCALE = 0.5
SINGULAR_DET = 1e-12


def _check_invertible(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or abs(np.linalg.det(a)) <= SINGULAR_DET:
        raise SingularMap("linear map is singular")


def membership_residual(a, t) -> float:
    """max|A^*T - T| / max|T| (0 for the zero tensor)."""
    c = as_components(t)
    scale = float(np.max(np.abs(c)))
    diff = float(np.max(np.abs(pullback(a, c).components - c)))
    if scale == 0.0:
        return diff
    return diff / scale


def is_member(a, t, tol: float = MEMBERSHIP_TOL) -> tuple[bool, float]:
    """Return ``(member, relative residual)`` for A in the structure group of T."""
    a = np.asarray(a, dtype=float)
    _check_invertible(a)
    if a.shape[0] != as_components(t).shape[0]:
        raise ValueError("map and tensor dimensions differ")
    res = membership_residual(a, t)
    return res <= tol, res


class Verdict(enum.Enum):
    ISOMETRY = "Isometry"
    PARA_ISOMETRY = "ParaIsometry"
    UNIMODULAR_RANK2 = "UnimodularRank2"
    # rank <= 1: R_phi = 0 and every invertible map is a member
    UNCONSTRAINED = "Unconstrained"
    NON_MEMBER = "NonMember"


@dataclass(frozen=True)
class MembershipVerdict:
    verdict: Verdict
    residual: float

    @property
    def is_member(self) -> bool:
        return self.verdict is not Verdict.NON_MEMBER

    def to_json(self) -> dict:
        return {"verdict": self.verdict.value, "residual": float(self.residual)}


def _form_residual(a: np.ndarray, phi: np.ndarray, sign: float) -> float:
    return float(np.max(np.abs(pullback_form(a, phi) - sign * phi)) / np.max(np.abs(phi)))


def classify_canonical_member(a, phi, tol: float = MEMBERSHIP_TOL, rank_tol: float = KERNEL_TOL) -> MembershipVerdict:
    """Classify A against the structure group of R_phi.

    Rank >= 3: A must satisfy A^*phi = +phi or -phi. Rank 2: A must preserve
    ker(phi) and the induced map on V/ker(phi) must have |det| = 1. Rank <= 1
    puts no constraint on A.
    """
    a = np.asarray(a, dtype=float)
    phi = as_matrix(phi)
    _check_invertible(a)
    if a.shape != phi.shape:
        raise ValueError("map and form dimensions differ")
    p, q, _ = signature(phi, rank_tol)
    r = p + q
    if r <= 1:
        return MembershipVerdict(Verdict.UNCONSTRAINED, 0.0)
    if r >= 3:
        plus = _form_residual(a, phi, 1.0)
        if plus <= tol:
            return MembershipVerdict(Verdict.ISOMETRY, plus)
        minus = _form_residual(a, phi, -1.0)
        if minus <= tol:
            return MembershipVerdict(Verdict.PARA_ISOMETRY, minus)
        return MembershipVerdict(Verdict.NON_MEMBER, min(plus, minus))
    # rank 2: pass to the quotient by the kernel
    ev, vecs = np.linalg.eigh(phi)
    cut = rank_tol * np.max(np.abs(ev))
    live = np.abs(ev) > cut
    basis = np.hstack([vecs[:, live], vecs[:, ~live]])
    m = np.linalg.solve(basis, a @ basis)
    leak = float(np.max(np.abs(m[:2, 2:]), initial=0.0) / np.max(np.abs(m)))
    det_bar = float(np.linalg.det(m[:2, :2]))
    res = max(leak, abs(det_bar * det_bar - 1.0))
    if res <= tol:
        return MembershipVerdict(Verdict.UNIMODULAR_RANK2, res)
    return MembershipVerdict(Verdict.NON_MEMBER, res)


def sample_isometry(phi, rng: np.random.Generator) -> np.ndarray:
    """Random A with A^*phi = phi.

    In a pseudo-orthonormal basis with Gram matrix eta, exp(eta S) with S
    antisymmetric lies in O(eta); a random diagonal sign matrix reaches the
    other connected components.
    """
    phi = as_matrix(phi)
    basis = pseudo_orthonormalize(phi)
    n = phi.shape[0]
    g = LIE_SCALE * rng.standard_normal((n, n))
    x = basis.eta @ (g - g.T)
    lam = np.diag(rng.choice([-1.0, 1.0], size=n)) @ expm(x)
    e = basis.vectors
    return e @ lam @ np.linalg.inv(e)


def sample_para_isometry(phi) -> np.ndarray:
    """A with A^*phi = -phi, swapping positive and negative basis vectors pairwise."""
    phi = as_matrix(phi)
    p, q, z = signature(phi)
    if z:
        raise DegenerateForm("form is degenerate")
    if p != q:
        raise NotBalanced(f"para-isometries need balanced signature, got ({p}, {q})")
    basis = pseudo_orthonormalize(phi)
    swap = np.zeros((p + q, p + q))
    swap[:p, p:] = np.eye(p)
    swap[p:, :p] = np.eye(p)
    e = basis.vectors
    return e @ swap @ np.linalg.inv(e)


def sample_unimodular(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random map with |det| = 1: exp of a traceless matrix, reflected half the time."""
    g = LIE_SCALE * rng.standard_normal((dim, dim))
    g -= np.trace(g) / dim * np.eye(dim)
    a = expm(g)
    if rng.random() < 0.5:
        a[:, 0] *= -1.0
    return a


def sample_canonical_member(phi, rng: np.random.Generator) -> np.ndarray:
    """Random element of the structure group of R_phi for nondegenerate phi."""
    phi = as_matrix(phi)
    p, q, z = signature(phi)
    if z:
        raise DegenerateForm("form is degenerate")
    n = p + q
    if n == 2:
        return sample_unimodular(2, rng)
    if n < 2:
        raise DegenerateForm("blocks of dimension 1 carry the zero tensor")
    a = sample_isometry(phi, rng)
    if p == q and rng.random() < 0.5:
        a = a @ sample_para_isometry(phi)
    return a


@dataclass(frozen=True)
class BlockPermutation:
    """A permutation of block indices; ``image[i]`` is the 0-based image of block i."""

    image: tuple[int, ...]

    def __post_init__(self):
        img = tuple(int(i) for i in self.image)
        if sorted(img) != list(range(len(img))):
            raise ValueError(f"{img} is not a permutation of 0..{len(img) - 1}")
        object.__setattr__(self, "image", img)

    @classmethod
    def identity(cls, k: int) -> "BlockPermutation":
        return cls(tuple(range(k)))

    @classmethod
    def from_one_based(cls, images: Sequence[int]) -> "BlockPermutation":
        return cls(tuple(int(i) - 1 for i in images))

    @property
    def k(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i]

    def __mul__(self, other: "BlockPermutation") -> "BlockPermutation":
        # (self * other)(i) = self(other(i))
        if self.k != other.k:
            raise ValueError("permutations act on different numbers of blocks")
        return BlockPermutation(tuple(self.image[j] for j in other.image))

    def inverse(self) -> "BlockPermutation":
        inv = [0] * self.k
        for i, j in enumerate(self.image):
            inv[j] = i
        return BlockPermutation(tuple(inv))

    def is_identity(self) -> bool:
        return self.image == tuple(range(self.k))

    def one_based(self) -> list[int]:
        return [i + 1 for i in self.image]

    def cycles(self) -> str:
        """Cycle notation with 1-based labels, e.g. ``(1 2 3)``; ``()`` for the identity."""
        seen = set()
        parts = []
        for start in range(self.k):
            if start in seen or self.image[start] == start:
                continue
            cyc = [start]
            seen.add(start)
            j = self.image[start]
            while j != start:
                cyc.append(j)
                seen.add(j)
                j = self.image[j]
            parts.append("(" + " ".join(str(c + 1) for c in cyc) + ")")
        return "".join(parts) or "()"


def _require_analyzable(model: BlockModelSpace) -> None:
    for p, (d, (_, _, z)) in enumerate(zip(model.dims, model.signatures())):
        if z:
            raise DegenerateForm(f"block {p + 1} has a degenerate form")
        if d < 2:
            raise DegenerateForm(f"block {p + 1} has dimension 1, so ker R != 0")


def block_pseudo_on_basis(model: BlockModelSpace) -> np.ndarray:
    """Block-diagonal matrix whose columns concatenate per-block pseudo-orthonormal bases."""
    e = np.zeros((model.dim, model.dim))
    for p, f in enumerate(model.forms):
        s = model.block_slice(p)
        e[s, s] = pseudo_orthonormalize(f).vectors
    return e


def extract_permutation(a, model: BlockModelSpace, tol: float = MEMBERSHIP_TOL) -> BlockPermutation:
    """Recover the block permutation sigma with A(V_i) = V_sigma(i).

    Works column by column in the concatenated pseudo-orthonormal block
    basis: the first row index ``w`` whose entry exceeds ``tol * max|column|``
    fixes sigma(block of column) = block of w. The result is then checked for
    consistency within each block, bijectivity and full block support.
    """
    a = np.asarray(a, dtype=float)
    _require_analyzable(model)
    _check_invertible(a)
    if a.shape[0] != model.dim:
        raise ModelMismatch("map dimension differs from the model dimension")
    ok, res = is_member(a, model.tensor(), tol)
    if not ok:
        raise NotAMember(f"map is not in the structure group (residual {res:.3g})")
    e = block_pseudo_on_basis(model)
    m = np.linalg.solve(e, a @ e)
    n_of = model.block_of
    sigma: dict[int, int] = {}
    for i in range(model.dim):
        col = np.abs(m[:, i])
        w = int(np.argmax(col > tol * col.max()))
        target = int(n_of[w])
        src = int(n_of[i])
        if sigma.setdefault(src, target) != target:
            raise InconsistentPermutation(
                f"columns of block {src + 1} point to blocks {sigma[src] + 1} and {target + 1}"
            )
    image = tuple(sigma[p] for p in range(model.k))
    if sorted(image) != list(range(model.k)):
        raise InconsistentPermutation(f"block assignment {[i + 1 for i in image]} is not a bijection")
    scale = np.max(np.abs(m))
    for i in range(model.dim):
        outside = n_of != image[n_of[i]]
        leak = np.max(np.abs(m[outside, i]), initial=0.0)
        if leak > tol * scale:
            raise InconsistentPermutation(f"column {i + 1} leaks {leak:.3g} outside its target block")
    return BlockPermutation(image)


@dataclass(frozen=True)
class BlockClasses:
    """Blocks grouped by (dimension, unordered signature); only class-preserving permutations are admissible."""

    classes: tuple[tuple[int, ...], ...]
    keys: tuple[tuple[int, tuple[int, int]], ...]
    k: int

    def describe(self) -> str:
        return " x ".join(f"S{len(c)}" for c in self.classes)

    def order(self) -> int:
        out = 1
        for c in self.classes:
            for j in range(2, len(c) + 1):
                out *= j
        return out

    def is_admissible(self, sigma: BlockPermutation) -> bool:
        cls_of = {b: n for n, c in enumerate(self.classes) for b in c}
        return all(cls_of[i] == cls_of[sigma(i)] for i in range(self.k))

    def class_split(self) -> list[int]:
        cls_of = [0] * self.k
        for n, c in enumerate(self.classes):
            for b in c:
                cls_of[b] = n
        return cls_of

    def generators(self) -> list[BlockPermutation]:
        """Adjacent transpositions inside each class; they generate the admissible group."""
        gens = []
        for c in self.classes:
            for a, b in zip(c, c[1:]):
                img = list(range(self.k))
                img[a], img[b] = b, a
                gens.append(BlockPermutation(tuple(img)))
        return gens

    def all_permutations(self):
        per_class = [list(itertools.permutations(c)) for c in self.classes]
        for choice in itertools.product(*per_class):
            img = list(range(self.k))
            for c, perm in zip(self.classes, choice):
                for src, dst in zip(c, perm):
                    img[src] = dst
            yield BlockPermutation(tuple(img))

    def random_permutation(self, rng: np.random.Generator) -> BlockPermutation:
        img = list(range(self.k))
        for c in self.classes:
            perm = rng.permutation(len(c))
            for src, j in zip(c, perm):
                img[src] = c[j]
        return BlockPermutation(tuple(img))


def allowed_block_permutations(model: BlockModelSpace) -> BlockClasses:
    """Partition blocks into classes that structure-group elements may permute.

    Blocks can only be exchanged when their dimensions agree and their
    signatures agree up to reversal, since R_phi = R_{-phi}.
    """
    sigs = model.signatures()
    for p, (_, _, z) in enumerate(sigs):
        if z:
            raise DegenerateForm(f"block {p + 1} has a degenerate form")
    keys = [(d, (min(p, q), max(p, q))) for d, (p, q, _) in zip(model.dims, sigs)]
    order: dict = {}
    for b, key in enumerate(keys):
        order.setdefault(key, []).append(b)
    classes = tuple(tuple(v) for v in order.values())
    return BlockClasses(classes, tuple(order.keys()), model.k)


def canonical_block_basis(phi) -> np.ndarray:
    """Pseudo-orthonormal basis E with E^T phi E = s * eta, eta shared by the whole class.

    ``s`` flips phi so that it has no more positive than negative directions,
    which makes eta depend only on the unordered signature.
    """
    phi = as_matrix(phi)
    p, q, _ = signature(phi)
    sign = -1.0 if p > q else 1.0
    return pseudo_orthonormalize(sign * phi).vectors


def block_transfer(model: BlockModelSpace, src: int, dst: int) -> np.ndarray:
    """Map C: V_src -> V_dst with C^* R_{phi_dst} = R_{phi_src} (blocks of one class)."""
    if model.dims[src] != model.dims[dst]:
        raise IncompatibleBlocks(f"blocks {src + 1} and {dst + 1} have different dimensions")
    e_src = canonical_block_basis(model.forms[src])
    e_dst = canonical_block_basis(model.forms[dst])
    return e_dst @ np.linalg.inv(e_src)


@dataclass(frozen=True)
class WreathElement:
    """(g_1, ..., g_k; sigma), where g_i maps block sigma^-1(i) onto block i."""

    components: tuple[np.ndarray, ...]
    sigma: BlockPermutation
    model: BlockModelSpace | None = None

    def __post_init__(self):
        comps = tuple(np.asarray(g, dtype=float) for g in self.components)
        if len(comps) != self.sigma.k:
            raise ModelMismatch("number of components differs from the permutation size")
        object.__setattr__(self, "components", comps)

    @classmethod
    def identity(cls, model: BlockModelSpace) -> "WreathElement":
        return cls(tuple(np.eye(d) for d in model.dims), BlockPermutation.identity(model.k), model)

    @property
    def k(self) -> int:
        return self.sigma.k

    def to_json(self) -> dict:
        return {
            "sigma": self.sigma.one_based(),
            "components": [[[float(x) for x in row] for row in g] for g in self.components],
        }

    @classmethod
    def from_json(cls, obj: dict, model: BlockModelSpace | None = None) -> "WreathElement":
        sigma = BlockPermutation.from_one_based(obj["sigma"])
        return cls(tuple(np.array(g, dtype=float) for g in obj["components"]), sigma, model)


def wreath_compose(a: WreathElement, b: WreathElement) -> WreathElement:
    """(h; tau)(g; sigma) = (h_1 g_{tau^-1(1)}, ..., h_k g_{tau^-1(k)}; tau sigma)."""
    if a.k != b.k:
        raise ModelMismatch("elements have different numbers of blocks")
    if a.model is not None and b.model is not None and a.model != b.model:
        raise ModelMismatch("elements live over different block models")
    tau_inv = a.sigma.inverse()
    comps = []
    for i in range(a.k):
        h, g = a.components[i], b.components[tau_inv(i)]
        if h.shape[1] != g.shape[0]:
            raise ModelMismatch(f"component shapes {h.shape} and {g.shape} cannot compose")
        comps.append(h @ g)
    return WreathElement(tuple(comps), a.sigma * b.sigma, a.model if a.model is not None else b.model)


def wreath_to_matrix(w: WreathElement, model: BlockModelSpace) -> np.ndarray:
    """The block matrix sending v in V_{sigma^-1(i)} to g_i v in V_i."""
    if w.k != model.k:
        raise IncompatibleBlocks("element and model have different numbers of blocks")
    out = np.zeros((model.dim, model.dim))
    inv = w.sigma.inverse()
    for i, g in enumerate(w.components):
        src = inv(i)
        if g.shape != (model.dims[i], model.dims[src]) or model.dims[i] != model.dims[src]:
            raise IncompatibleBlocks(
                f"component {i + 1} of shape {g.shape} cannot map block {src + 1} onto block {i + 1}"
            )
        out[model.block_slice(i), model.block_slice(src)] = g
    _check_invertible(out)
    return out


def matrix_to_wreath(a, model: BlockModelSpace, tol: float = MEMBERSHIP_TOL) -> WreathElement:
    """Inverse of :func:`wreath_to_matrix` on structure-group members."""
    a = np.asarray(a, dtype=float)
    sigma = extract_permutation(a, model, tol)
    inv = sigma.inverse()
    comps = tuple(a[model.block_slice(i), model.block_slice(inv(i))].copy() for i in range(model.k))
    return WreathElement(comps, sigma, model)


def sample_wreath_element(
    model: BlockModelSpace, rng: np.random.Generator, sigma: BlockPermutation | None = None
) -> WreathElement:
    """Random structure-group element in wreath form.

    sigma is uniform over the class-preserving permutations unless given;
    each block map is a transfer between canonical bases composed with a
    random member of the source block's own structure group.
    """
    _require_analyzable(model)
    classes = allowed_block_permutations(model)
    if sigma is None:
        sigma = classes.random_permutation(rng)
    elif not classes.is_admissible(sigma):
        raise IncompatibleBlocks(f"permutation {sigma.cycles()} crosses admissibility classes")
    inv = sigma.inverse()
    comps = []
    for i in range(model.k):
        src = inv(i)
        h = sample_canonical_member(model.forms[src], rng)
        comps.append(block_transfer(model, src, i) @ h)
    return WreathElement(tuple(comps), sigma, model)


def sample_structure_group_element(model: BlockModelSpace, rng: np.random.Generator) -> np.ndarray:
    return wreath_to_matrix(sample_wreath_element(model, rng), model)
