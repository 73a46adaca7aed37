"""Minimal factorizations K(s, t) = V_s* V_t of positive definite kernels.

The block Gram matrix of a kernel is decomposed spectrally; eigenvalues
above a relative cutoff fix the rank r of the factor space, and each index
label receives an r x d factor matrix mapping the model space into C^r.
The resulting factor space is minimal: the stacked factor columns span all
of C^r. The operator identities tying factors, kernel blocks, and kernel
sections together are exposed as standalone operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .kernel import (
    KernelSection,
    LiftedPoint,
    NotPositiveDefiniteError,
    OperatorKernel,
    ValidationError,
    block_gram,
)

__all__ = [
    "DEFAULT_TRUNCATION_TOL",
    "RESIDUAL_RTOL",
    "DilationFactorization",
    "FactorizationError",
    "apply_factor",
    "apply_factor_adjoint",
    "apply_projection",
    "chain_product",
    "factorize",
    "frame_reconstruct",
    "isometry_defect",
    "reconstruct",
]

# Eigenvalues above tol * lambda_max survive rank truncation.
DEFAULT_TRUNCATION_TOL = 1e-10
# Reconstruction residual bound, relative to 1 + ||G||_F.
RESIDUAL_RTOL = 1e-9


class FactorizationError(ValidationError):
    """A factor family is numerically inconsistent with its kernel."""


@dataclass(frozen=True)
class DilationFactorization:
    """Factor family {V_s} with K(s_i, s_j) = V_i* V_j and minimal rank.

    ``factors[i]`` is the rank x dim matrix of V_{s_i}; ``residual`` is the
    largest Frobenius deviation of V_i* V_j from the kernel block over all
    index pairs.
    """

    kernel: OperatorKernel
    rank: int
    factors: tuple[np.ndarray, ...]
    truncation_tol: float
    residual: float

    @classmethod
    def from_factors(
        cls,
        kernel: OperatorKernel,
        factors,
        truncation_tol: float = DEFAULT_TRUNCATION_TOL,
    ) -> "DilationFactorization":
        """Wrap an externally built factor family after validating it.

        The family must reproduce every kernel block within the residual
        bound and its stacked matrix must have full row rank (minimality).
        """
        mats = [linalg.as_matrix(f) for f in factors]
        if len(mats) != kernel.size:
            raise ValidationError(
                f"expected {kernel.size} factors, got {len(mats)}"
            )
        if any(f.shape != mats[0].shape for f in mats):
            raise ValidationError("factor matrices must share a common shape")
        r, d = mats[0].shape
        if d != kernel.dim:
            raise ValidationError(
                f"factor column count {d} does not match kernel dimension {kernel.dim}"
            )
        residual = _max_block_residual(kernel, mats)
        bound = RESIDUAL_RTOL * (1.0 + linalg.norm_fro(block_gram(kernel)))
        if residual > bound:
            raise FactorizationError(
                f"factor family misses kernel blocks by {residual:.3e} "
                f"(bound {bound:.3e})"
            )
        if r > 0:
            stacked = np.hstack(mats)
            if np.linalg.matrix_rank(stacked) != r:
                raise FactorizationError(
                    "factor rows are linearly dependent; the factor space is not minimal"
                )
        mats = tuple(_frozen(f) for f in mats)
        return cls(kernel, r, mats, float(truncation_tol), residual)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def _max_block_residual(kernel: OperatorKernel, factors) -> float:
    worst = 0.0
    for i in range(kernel.size):
        for j in range(i, kernel.size):
            delta = kernel.block(i, j) - factors[i].conj().T @ factors[j]
            worst = max(worst, linalg.norm_fro(delta))
    return worst


def factorize(
    kernel: OperatorKernel, tol: float = DEFAULT_TRUNCATION_TOL
) -> DilationFactorization:
    """Compute the minimal factorization of a positive definite kernel.

    The block Gram matrix G is decomposed as U diag(w) U*; the rank is the
    number of eigenvalues above ``tol * max(w)``, and the stacked factor
    matrix is sqrt(w_+) U_+*. Raises ``NotPositiveDefiniteError`` when the
    smallest eigenvalue of G falls below ``-tol * (1 + ||G||_F)``, and
    ``FactorizationError`` when the reconstruction residual exceeds its
    bound (a numerically inconsistent input).
    """
    if tol < 0:
        raise ValidationError("tolerance must be nonnegative")
    g = block_gram(kernel)
    eig = linalg.herm_eig(g)
    g_norm = linalg.norm_fro(g)
    min_eig = float(eig.eigenvalues[-1])
    if min_eig < -tol * (1.0 + g_norm):
        raise NotPositiveDefiniteError(
            f"kernel is not positive definite (min eigenvalue {min_eig:.6e})",
            min_eig,
        )
    w = eig.eigenvalues
    lam_max = float(w[0])
    if lam_max <= 0.0:
        keep = np.zeros_like(w, dtype=bool)
    else:
        keep = w > tol * lam_max
    stacked = np.sqrt(w[keep])[:, None] * eig.eigenvectors[:, keep].conj().T
    r = int(stacked.shape[0])
    d = kernel.dim
    factors = [stacked[:, i * d : (i + 1) * d] for i in range(kernel.size)]
    residual = _max_block_residual(kernel, factors)
    bound = RESIDUAL_RTOL * (1.0 + g_norm)
    if residual > bound:
        raise FactorizationError(
            f"factorization residual {residual:.3e} exceeds bound {bound:.3e}"
        )
    return DilationFactorization(
        kernel=kernel,
        rank=r,
        factors=tuple(_frozen(f) for f in factors),
        truncation_tol=float(tol),
        residual=residual,
    )


def reconstruct(fact: DilationFactorization, i, j) -> np.ndarray:
    """Reassemble the kernel block at (i, j) as V_i* V_j."""
    vi = fact.factors[fact.kernel.index(i)]
    vj = fact.factors[fact.kernel.index(j)]
    return vi.conj().T @ vj


def apply_factor(fact: DilationFactorization, i, a) -> np.ndarray:
    """Map a model-space vector into the factor space: a -> V_i a."""
    v = fact.factors[fact.kernel.index(i)]
    av = linalg.as_vector(a)
    if av.shape[0] != fact.kernel.dim:
        raise ValidationError(
            f"vector has dimension {av.shape[0]}, expected {fact.kernel.dim}"
        )
    return v @ av


def apply_factor_adjoint(fact: DilationFactorization, i, x) -> np.ndarray:
    """Map a factor-space vector back to the model space: x -> V_i* x."""
    v = fact.factors[fact.kernel.index(i)]
    xv = linalg.as_vector(x)
    if xv.shape[0] != fact.rank:
        raise ValidationError(
            f"vector has dimension {xv.shape[0]}, expected rank {fact.rank}"
        )
    return v.conj().T @ xv


def chain_product(fact: DilationFactorization, pairs, b) -> np.ndarray:
    """Apply the alternating chain (V_s1* V_t1) ... (V_sn* V_tn) to b.

    Rightmost pair acts first; the result equals the product of the kernel
    blocks K(s_1, t_1) ... K(s_n, t_n) applied to b, up to accumulated
    rounding.
    """
    y = linalg.as_vector(b)
    if y.shape[0] != fact.kernel.dim:
        raise ValidationError(
            f"vector has dimension {y.shape[0]}, expected {fact.kernel.dim}"
        )
    resolved = [(fact.kernel.index(s), fact.kernel.index(t)) for s, t in pairs]
    for s, t in reversed(resolved):
        y = fact.factors[s].conj().T @ (fact.factors[t] @ y)
    return y


def apply_projection(
    fact: DilationFactorization, s, section: KernelSection
) -> KernelSection:
    """Action of V_s V_s* on a finite combination of kernel sections.

    Each generator K~(., (t, b)) maps to K~(., (s, K(s, t) b)). When the
    diagonal block K(s, s) is the identity this operation is idempotent.
    """
    if section.kernel is not fact.kernel:
        raise ValidationError("section is owned by a different kernel")
    i = fact.kernel.index(s)
    label = fact.kernel.labels[i]
    terms = []
    for c, point in section.terms:
        j = fact.kernel.index(point.label)
        mapped = fact.kernel.block(i, j) @ point.vector
        terms.append((c, LiftedPoint(label, mapped)))
    return KernelSection(fact.kernel, terms)


def frame_reconstruct(fact: DilationFactorization, i, j) -> np.ndarray:
    """Reassemble K(s_i, s_j) as a sum of rank-one frame operators.

    Running k over the standard basis of the factor space, the sum of
    |V_i* e_k><V_j* e_k| reproduces the kernel block.
    """
    vi = fact.factors[fact.kernel.index(i)]
    vj = fact.factors[fact.kernel.index(j)]
    d = fact.kernel.dim
    acc = np.zeros((d, d), dtype=np.complex128)
    for k in range(fact.rank):
        acc += np.outer(vi[k].conj(), vj[k])
    return acc


def isometry_defect(fact: DilationFactorization, i) -> float:
    """Frobenius distance of V_i* V_i from the identity.

    Zero (up to rounding) exactly when the diagonal block K(s_i, s_i) is
    the identity, in which case V_i is an isometry.
    """
    v = fact.factors[fact.kernel.index(i)]
    d = fact.kernel.dim
    return linalg.norm_fro(v.conj().T @ v - np.eye(d))
