"""Dense complex linear-algebra helpers shared by the rest of the package.

Everything operates on numpy arrays of dtype complex128; vectors are 1-d,
matrices 2-d. ``herm_eig`` symmetrizes its input and orders eigenvalues
descending so that rank truncation downstream is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HERMITICITY_RTOL",
    "HermEig",
    "adjoint",
    "as_matrix",
    "as_vector",
    "herm_eig",
    "inner",
    "lstsq",
    "norm_fro",
    "op_norm",
]

# herm_eig rejects inputs whose anti-Hermitian part exceeds this,
# relative to 1 + ||M||_F.
HERMITICITY_RTOL = 1e-8


def as_vector(x) -> np.ndarray:
    """Coerce ``x`` to a fresh 1-d complex128 array."""
    v = np.array(x, dtype=np.complex128)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got array of shape {v.shape}")
    return v


def as_matrix(x) -> np.ndarray:
    """Coerce ``x`` to a fresh 2-d complex128 array."""
    m = np.array(x, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {m.shape}")
    return m


def adjoint(m) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(m).conj().T


def inner(a, b) -> complex:
    """Inner product, conjugate-linear in the first argument."""
    av = as_vector(a)
    bv = as_vector(b)
    if av.shape != bv.shape:
        raise ValueError(f"dimension mismatch: {av.shape[0]} vs {bv.shape[0]}")
    return complex(np.vdot(av, bv))


def norm_fro(m) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(m, dtype=np.complex128)))


def op_norm(m) -> float:
    """Spectral norm (largest singular value)."""
    mm = as_matrix(m)
    if mm.size == 0:
        return 0.0
    return float(np.linalg.norm(mm, 2))


@dataclass(frozen=True)
class HermEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    ``eigenvectors`` holds the eigenvectors as columns, in the order of
    ``eigenvalues``, and is unitary up to rounding.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """Reassemble U diag(w) U*."""
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def herm_eig(m) -> HermEig:
    """Decompose a Hermitian matrix as U diag(w) U*, eigenvalues descending.

    The input is symmetrized as (M + M*)/2 before decomposition; anything
    farther than ``HERMITICITY_RTOL`` from Hermitian is rejected.
    """
    mm = as_matrix(m)
    if mm.shape[0] != mm.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mm.shape}")
    defect = norm_fro(mm - mm.conj().T)
    if defect > HERMITICITY_RTOL * (1.0 + norm_fro(mm)):
        raise ValueError(f"matrix is not Hermitian (anti-Hermitian part {defect:.3e})")
    sym = 0.5 * (mm + mm.conj().T)
    w, u = np.linalg.eigh(sym)
    return HermEig(eigenvalues=w[::-1].copy(), eigenvectors=u[:, ::-1].copy())


def lstsq(a, b) -> np.ndarray:
    """Minimum-norm least-squares solution X of A X = B."""
    am = as_matrix(a)
    bm = as_matrix(b)
    if am.shape[0] != bm.shape[0]:
        raise ValueError(f"row mismatch: A has {am.shape[0]} rows, B has {bm.shape[0]}")
    x, _, _, _ = np.linalg.lstsq(am, bm, rcond=None)
    return x
