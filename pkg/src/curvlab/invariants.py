"""Model-space invariants and a harness that checks invariance under sampled structure-group elements."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegeneratePlane
from .structure_group import WreathElement, sample_structure_group_element, wreath_to_matrix
from .tensor_core import (
    BlockModelSpace,
    PseudoONBasis,
    SymForm,
    as_components,
    as_matrix,
    pseudo_orthonormalize,
    pullback,
    pullback_form,
)


def _basis_for(phi, basis: PseudoONBasis | None) -> PseudoONBasis:
    return pseudo_orthonormalize(phi) if basis is None else basis


def ricci(t, phi, basis: PseudoONBasis | None = None) -> SymForm:
    """rho(x, y) = sum_i eps_i R(x, e_i, e_i, y) over a pseudo-orthonormal basis of phi."""
    b = _basis_for(phi, basis)
    e = b.vectors
    rho = np.einsum("apqb,pi,qi,i->ab", as_components(t), e, e, b.signs, optimize=True)
    return SymForm.from_matrix(rho)


def scalar_curvature(t, phi, basis: PseudoONBasis | None = None) -> float:
    """tau = sum_j eps_j rho(e_j, e_j)."""
    b = _basis_for(phi, basis)
    rho = ricci(t, phi, b).matrix
    e = b.vectors
    return float(np.einsum("pj,pq,qj,j->", e, rho, e, b.signs))


def sectional_curvature(t, phi, x, y, min_denominator: float = 1e-12) -> float:
    """kappa(x, y) = R(x, y, y, x) / (phi(x, x) phi(y, y) - phi(x, y)^2)."""
    m = as_matrix(phi)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    den = (x @ m @ x) * (y @ m @ y) - (x @ m @ y) ** 2
    if abs(den) <= min_denominator:
        raise DegeneratePlane(f"plane is degenerate for the form (denominator {den:.3g})")
    num = np.einsum("ijkl,i,j,k,l->", as_components(t), x, y, y, x)
    return float(num / den)


@dataclass(frozen=True)
class InvariantProfile:
    per_block: tuple[float, ...]
    elementary: tuple[float, ...] = ()
    power_sums: tuple[float, ...] = ()
    sorted_values: tuple[float, ...] = ()

    def to_json(self) -> dict:
        return {
            "per_block": list(self.per_block),
            "elementary": list(self.elementary),
            "power_sums": list(self.power_sums),
        }


def elementary_symmetric(values: Sequence[float]) -> tuple[float, ...]:
    """(e_1, ..., e_s) of the values, evaluated on the sorted list."""
    coeffs = [1.0]
    for v in sorted(float(x) for x in values):
        nxt = coeffs + [0.0]
        for j in range(len(coeffs), 0, -1):
            nxt[j] += v * coeffs[j - 1]
        coeffs = nxt
    return tuple(coeffs[1:])


def power_sums(values: Sequence[float]) -> tuple[float, ...]:
    vals = sorted(float(x) for x in values)
    return tuple(math.fsum(v ** j for v in vals) for j in range(1, len(vals) + 1))


def symmetric_combine(values: Sequence[float], kinds: Sequence[str] = ("elementary", "power_sum", "sorted_tuple")) -> InvariantProfile:
    """Symmetric functions of per-block invariants.

    Every output is computed from the sorted input, so any reordering of
    ``values`` produces bitwise identical results.
    """
    vals = tuple(float(v) for v in values)
    if not vals:
        raise ValueError("symmetric_combine needs at least one value")
    unknown = set(kinds) - {"elementary", "power_sum", "sorted_tuple"}
    if unknown:
        raise ValueError(f"unknown symmetric function kinds: {sorted(unknown)}")
    return InvariantProfile(
        per_block=vals,
        elementary=elementary_symmetric(vals) if "elementary" in kinds else (),
        power_sums=power_sums(vals) if "power_sum" in kinds else (),
        sorted_values=tuple(sorted(vals)) if "sorted_tuple" in kinds else (),
    )


# Value functions for the invariance harness take (basis, T, model) where the
# columns of ``basis`` are the basis vectors, ordered block by block.

def scalar_curvature_in_basis(basis: np.ndarray, t, model: BlockModelSpace) -> float:
    tb = pullback(basis, t)
    return scalar_curvature(tb, SymForm.from_matrix(pullback_form(basis, model.form())))


def block_sectional_curvatures(basis: np.ndarray, t, model: BlockModelSpace) -> list[float]:
    """Sectional curvature of each 2-dimensional block, from that block's own basis vectors."""
    phi = model.form()
    out = []
    for p, d in enumerate(model.dims):
        if d != 2:
            continue
        s = model.block_slice(p)
        x, y = basis[:, s].T
        out.append(sectional_curvature(t, phi, x, y))
    return out


def elementary_of_block_curvatures(basis: np.ndarray, t, model: BlockModelSpace) -> np.ndarray:
    return np.array(symmetric_combine(block_sectional_curvatures(basis, t, model)).elementary)


def ordered_curvature_difference(basis: np.ndarray, t, model: BlockModelSpace) -> float:
    """kappa_1 - kappa_2: not symmetric, so not an invariant once blocks can swap."""
    k = block_sectional_curvatures(basis, t, model)
    return k[0] - k[1]


@dataclass
class InvarianceReport:
    max_deviation: float
    tol: float
    n_samples: int
    deviations: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


def check_invariance(
    value_fn: Callable,
    model: BlockModelSpace,
    t,
    n_samples: int,
    tol: float,
    rng: np.random.Generator,
    basis: np.ndarray | None = None,
    elements: Sequence | None = None,
) -> InvarianceReport:
    """Compare ``value_fn`` on a basis and on its images under structure-group elements.

    Elements are drawn with :func:`sample_structure_group_element` unless
    ``elements`` (matrices or wreath elements) are supplied. ``value_fn`` is
    called as ``value_fn(basis, t, model)`` and may return a scalar or array.
    """
    if basis is None:
        basis = np.eye(model.dim)
    ref = np.asarray(value_fn(basis, t, model), dtype=float)
    if elements is None:
        elements = [sample_structure_group_element(model, rng) for _ in range(n_samples)]
    devs = []
    for g in elements:
        a = wreath_to_matrix(g, model) if isinstance(g, WreathElement) else np.asarray(g, dtype=float)
        val = np.asarray(value_fn(a @ basis, t, model), dtype=float)
        devs.append(float(np.max(np.abs(val - ref), initial=0.0)))
    return InvarianceReport(max(devs, default=0.0), tol, len(devs), devs)


def covariant_norm(phi, a5, basis: PseudoONBasis | None = None) -> float:
    """|sum eps_i eps_j eps_k eps_l eps_n A(X_i, X_j, X_k, X_l; X_n)^2| over a pseudo-orthonormal basis."""
    b = _basis_for(phi, basis)
    e = b.vectors
    a5 = np.asarray(a5, dtype=float)
    n = e.shape[0]
    if a5.shape != (n,) * 5:
        raise ValueError(f"expected a ({n},)*5 tensor, got {a5.shape}")
    abar = np.einsum("pqrst,pi,qj,rk,sl,tm->ijklm", a5, e, e, e, e, e, optimize=True)
    eps = b.signs
    w = np.einsum("i,j,k,l,m->ijklm", eps, eps, eps, eps, eps)
    return float(abs(np.sum(w * abar * abar)))
