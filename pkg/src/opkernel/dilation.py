"""Dilation constructions built on kernel factorizations.

Two classical examples are realized on finite index windows. First, the
powers of a Hilbert-space contraction A are reproduced as A^n = V* U^n V,
where U shifts the factor images of a power kernel along a truncated index
window. Second, a discrete positive operator valued measure (POVM) is
written as the compression Q = V* P V of a projection valued measure (PVM)
acting on the factor space of its atom kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .factorization import (
    DilationFactorization,
    FactorizationError,
    factorize,
)
from .kernel import IndexSet, OperatorKernel, ValidationError, block_gram

__all__ = [
    "CONTRACTION_TOL",
    "DEFAULT_POVM_TOL",
    "DEFAULT_POWER_TOL",
    "ContractionModel",
    "DiscretePOVM",
    "NaimarkDilation",
    "ShiftDilation",
    "contraction_kernel",
    "gram_quadratic",
    "naimark_dilate",
    "povm_compress",
    "power_dilation",
    "telescoping_quadratic",
]

# Slack on the spectral-norm contraction test.
CONTRACTION_TOL = 1e-12
# Certification tolerance for the power identity A^n = V* U^n V.
DEFAULT_POWER_TOL = 1e-8
# POVM validation and Naimark invariant tolerance.
DEFAULT_POVM_TOL = 1e-10


def _check_contraction(a) -> np.ndarray:
    mat = linalg.as_matrix(a)
    if mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"expected a square operator, got shape {mat.shape}")
    nrm = linalg.op_norm(mat)
    if nrm > 1.0 + CONTRACTION_TOL:
        raise ValidationError(f"operator is not a contraction (spectral norm {nrm:.6g})")
    return mat


@dataclass(frozen=True)
class ContractionModel:
    """A contraction together with the index window of its power kernel."""

    operator: np.ndarray
    dim: int
    window: int


def contraction_kernel(a, window: int) -> OperatorKernel:
    """Power kernel of a contraction on the labels 0, ..., window.

    Block (m, n) is A^(n-m) above the diagonal and the adjoint power
    (A*)^(m-n) below it; the diagonal blocks are the identity. The kernel
    is positive definite whenever the spectral norm of A is at most one.
    """
    mat = _check_contraction(a)
    window = int(window)
    if window < 1:
        raise ValidationError("window must be at least 1")
    d = mat.shape[0]
    powers = [np.eye(d, dtype=np.complex128)]
    for _ in range(window):
        powers.append(powers[-1] @ mat)
    m = window + 1
    blocks = np.empty((m, m, d, d), dtype=np.complex128)
    for i in range(m):
        for j in range(m):
            blocks[i, j] = powers[j - i] if j >= i else powers[i - j].conj().T
    labels = [str(k) for k in range(m)]
    return OperatorKernel(labels, d, blocks)


def telescoping_quadratic(a, vectors) -> float:
    """Quadratic form sum_{m,n} <h_m, A^(n-m) h_n> via telescoping.

    With tails t_k = h_k + A t_{k+1} (t past the last vector being zero),
    the form equals sum_k (||t_k||^2 - ||A t_{k+1}||^2). Each difference of
    squares cancels against the next level, which makes nonnegativity
    manifest for contractions: the value is bounded below by ||t_1||^2
    plus (1 - ||A||^2) times the sum of the remaining ||t_k||^2.
    """
    mat = _check_contraction(a)
    hs = [linalg.as_vector(h) for h in vectors]
    if not hs:
        raise ValidationError("at least one vector is required")
    d = mat.shape[0]
    if any(h.shape[0] != d for h in hs):
        raise ValidationError("all vectors must match the operator dimension")
    total = 0.0
    tail = np.zeros(d, dtype=np.complex128)
    for h in reversed(hs):
        shifted = mat @ tail
        tail = h + shifted
        total += float(np.vdot(tail, tail).real - np.vdot(shifted, shifted).real)
    return total


def gram_quadratic(a, vectors) -> float:
    """The same quadratic form evaluated directly through the block Gram matrix."""
    mat = _check_contraction(a)
    hs = [linalg.as_vector(h) for h in vectors]
    if not hs:
        raise ValidationError("at least one vector is required")
    if any(h.shape[0] != mat.shape[0] for h in hs):
        raise ValidationError("all vectors must match the operator dimension")
    if len(hs) == 1:
        return float(np.vdot(hs[0], hs[0]).real)
    g = block_gram(contraction_kernel(mat, len(hs) - 1))
    h = np.concatenate(hs)
    return float(np.vdot(h, g @ h).real)


@dataclass(frozen=True)
class ShiftDilation:
    """Power dilation A^n = V* U^n V certified on a finite window.

    ``shift`` is the r x r operator advancing factor images by one index;
    it is exact on the span of the images of indices 0, ..., window - 1
    and recorded as-is beyond it. ``max_power`` is the largest n such that
    all residuals ||A^k - V* U^k V||_F for k <= n stay within tolerance;
    ``power_residuals[n - 1]`` holds the residual for power n up to the
    full window.
    """

    model: ContractionModel
    fact: DilationFactorization
    shift: np.ndarray
    embedding: np.ndarray
    max_power: int
    power_residuals: tuple[float, ...]
    polar: bool


def _polar_unitary(u: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(u)
    return w @ vh


def power_dilation(
    a, window: int, tol: float = DEFAULT_POWER_TOL, polar: bool = False
) -> ShiftDilation:
    """Build the shift dilation of a contraction on the window 0, ..., window.

    The power kernel is factorized, the shift U is the minimum-norm least
    squares solution mapping each factor V_m onto V_{m+1} for m < window,
    and V is the factor at index 0. With ``polar`` set, U is replaced by
    the unitary factor of its polar decomposition; this preserves its
    action on the certified span.
    """
    mat = _check_contraction(a)
    window = int(window)
    if window < 2:
        raise ValidationError("window must be at least 2")
    kernel = contraction_kernel(mat, window)
    fact = factorize(kernel)
    x = np.hstack(fact.factors[:window])
    y = np.hstack(fact.factors[1:])
    u = linalg.lstsq(x.T, y.T).T
    if polar:
        u = _polar_unitary(u)
    d = mat.shape[0]
    v = fact.factors[0]
    residuals = []
    a_pow = np.eye(d, dtype=np.complex128)
    u_pow = np.eye(fact.rank, dtype=np.complex128)
    for _ in range(window):
        a_pow = a_pow @ mat
        u_pow = u_pow @ u
        residuals.append(linalg.norm_fro(a_pow - v.conj().T @ (u_pow @ v)))
    max_power = 0
    for n, res in enumerate(residuals, start=1):
        if res > tol:
            break
        max_power = n
    if max_power < 1:
        raise FactorizationError(
            f"shift failed to reproduce the first power (residual {residuals[0]:.3e})"
        )
    u.setflags(write=False)
    return ShiftDilation(
        model=ContractionModel(operator=_frozen(mat), dim=d, window=window),
        fact=fact,
        shift=u,
        embedding=v,
        max_power=max_power,
        power_residuals=tuple(residuals),
        polar=bool(polar),
    )


def _frozen(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=np.complex128)
    out.setflags(write=False)
    return out


class DiscretePOVM:
    """Finite-outcome positive operator valued measure.

    Effects are d x d positive semidefinite matrices, one per atom, that
    sum to the identity. Both conditions are validated at construction
    within ``tol``: every effect must have smallest eigenvalue at least
    ``-tol`` and the completeness defect ||sum Q - I||_F must not exceed
    ``tol``. Stored effects are Hermitian-symmetrized.
    """

    def __init__(self, atoms, effects, tol: float = DEFAULT_POVM_TOL):
        index = atoms if isinstance(atoms, IndexSet) else IndexSet(atoms)
        mats = [linalg.as_matrix(q) for q in effects]
        if len(mats) != len(index):
            raise ValidationError(
                f"expected {len(index)} effects, got {len(mats)}"
            )
        d = mats[0].shape[0]
        if any(q.shape != (d, d) for q in mats):
            raise ValidationError("all effects must be square matrices of one size")
        symmetrized = []
        for atom, q in zip(index.labels, mats):
            herm_defect = linalg.norm_fro(q - q.conj().T)
            if herm_defect > tol * (1.0 + linalg.norm_fro(q)):
                raise ValidationError(
                    f"effect for atom {atom!r} is not Hermitian (defect {herm_defect:.3e})"
                )
            sym = 0.5 * (q + q.conj().T)
            min_eig = float(np.linalg.eigvalsh(sym)[0])
            if min_eig < -tol:
                raise ValidationError(
                    f"effect for atom {atom!r} is not positive semidefinite "
                    f"(min eigenvalue {min_eig:.3e})"
                )
            symmetrized.append(sym)
        completeness = linalg.norm_fro(sum(symmetrized) - np.eye(d))
        if completeness > tol:
            raise ValidationError(
                f"effects do not sum to the identity (defect {completeness:.3e})"
            )
        self.atom_set = index
        self.dim = d
        self.effects = tuple(_frozen(q) for q in symmetrized)

    @property
    def atoms(self) -> tuple[str, ...]:
        return self.atom_set.labels

    def effect(self, atom) -> np.ndarray:
        return self.effects[self.atom_set.index(atom) if isinstance(atom, str) else int(atom)]


@dataclass(frozen=True)
class NaimarkDilation:
    """A POVM as the compression Q = V* P V of a PVM on the factor space.

    ``projections[j]`` is the orthogonal projection of the factor space
    onto the coordinate block carrying atom j; the projections are
    mutually orthogonal and sum to the identity. ``embedding`` is the
    isometry V. The recorded defects quantify how well the construction
    met its invariants.
    """

    povm: DiscretePOVM
    fact: DilationFactorization
    embedding: np.ndarray
    projections: tuple[np.ndarray, ...]
    isometry_defect: float
    projection_defect: float
    projection_sum_defect: float
    compression_errors: tuple[float, ...]


def naimark_dilate(povm: DiscretePOVM, tol: float = DEFAULT_POVM_TOL) -> NaimarkDilation:
    """Dilate a discrete POVM to a PVM on the factor space of its atom kernel.

    The atom kernel has blocks K(i, j) = delta_ij Q_i (atoms are disjoint,
    so only diagonal blocks survive). Its block Gram matrix is block
    diagonal, so each effect is factorized separately and the factor
    blocks occupy disjoint coordinate ranges of the factor space; the PVM
    projections are then exactly the coordinate projections onto those
    ranges. The embedding V, the image of the full outcome set, is the sum
    of the per-atom factors, and its isometry defect ||V* V - I||_F is
    required to stay within ``tol``.
    """
    if tol < 0:
        raise ValidationError("tolerance must be nonnegative")
    d = povm.dim
    p = len(povm.atoms)
    eigs = [linalg.herm_eig(q) for q in povm.effects]
    lam_max = max(float(e.eigenvalues[0]) for e in eigs)
    cut = tol * lam_max
    blocks_b = []
    for e in eigs:
        keep = e.eigenvalues > cut
        blocks_b.append(
            np.sqrt(e.eigenvalues[keep])[:, None] * e.eigenvectors[:, keep].conj().T
        )
    ranks = [b.shape[0] for b in blocks_b]
    offsets = np.concatenate([[0], np.cumsum(ranks)])
    r = int(offsets[-1])

    factors = []
    for j, b in enumerate(blocks_b):
        v = np.zeros((r, d), dtype=np.complex128)
        v[offsets[j] : offsets[j + 1], :] = b
        factors.append(v)

    blocks = np.zeros((p, p, d, d), dtype=np.complex128)
    for j in range(p):
        blocks[j, j] = povm.effects[j]
    kernel = OperatorKernel(povm.atom_set, d, blocks)
    fact = DilationFactorization.from_factors(kernel, factors, tol)

    embedding = np.sum(fact.factors, axis=0) if p > 1 else np.array(fact.factors[0])
    projections = []
    for j in range(p):
        proj = np.zeros((r, r), dtype=np.complex128)
        idx = np.arange(offsets[j], offsets[j + 1])
        proj[idx, idx] = 1.0
        projections.append(proj)

    iso_defect = linalg.norm_fro(embedding.conj().T @ embedding - np.eye(d))
    if iso_defect > tol:
        raise ValidationError(
            f"embedding is not isometric (defect {iso_defect:.3e}); "
            "the POVM is too far from complete at this tolerance"
        )
    proj_defect = 0.0
    sum_proj = np.zeros((r, r), dtype=np.complex128)
    for proj in projections:
        proj_defect = max(
            proj_defect,
            linalg.norm_fro(proj - proj.conj().T),
            linalg.norm_fro(proj - proj @ proj),
        )
        sum_proj += proj
    sum_defect = linalg.norm_fro(sum_proj - np.eye(r))
    compression = tuple(
        linalg.norm_fro(
            povm.effects[j] - embedding.conj().T @ (projections[j] @ embedding)
        )
        for j in range(p)
    )
    return NaimarkDilation(
        povm=povm,
        fact=fact,
        embedding=_frozen(embedding),
        projections=tuple(_frozen(proj) for proj in projections),
        isometry_defect=iso_defect,
        projection_defect=proj_defect,
        projection_sum_defect=sum_defect,
        compression_errors=compression,
    )


def povm_compress(dilation: NaimarkDilation, subset) -> np.ndarray:
    """Compress the PVM of a subset of atoms: V* (sum_j P_j) V.

    Equals the summed effects Q(subset) up to the dilation's recorded
    defects; the empty subset gives the zero operator and the full atom
    set the identity.
    """
    atoms = set(subset)
    indices = [dilation.povm.atom_set.index(atom) for atom in atoms]
    r = dilation.fact.rank
    proj = np.zeros((r, r), dtype=np.complex128)
    for j in indices:
        proj += dilation.projections[j]
    v = dilation.embedding
    return v.conj().T @ (proj @ v)
