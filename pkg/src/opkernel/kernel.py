"""Operator-valued positive definite kernels on a finite index set.

An ``OperatorKernel`` stores an m x m table of d x d complex blocks over an
ordered list of labels, Hermitian in the sense that the (t, s) block is the
adjoint of the (s, t) block. Pairing a label with a vector in C^d
(``LiftedPoint``) turns the kernel into a scalar-valued one via
``lift(K, (s, a), (t, b)) = <a, K(s, t) b>``, and finite combinations of the
scalar kernel's sections (``KernelSection``) carry pointwise evaluation and
the induced inner product in closed form. Positive definiteness is an
eigenvalue condition on the stacked block Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import linalg

__all__ = [
    "DEFAULT_PD_TOL",
    "HERMITIAN_RTOL",
    "IndexSet",
    "KernelSection",
    "LiftedPoint",
    "NotPositiveDefiniteError",
    "OperatorKernel",
    "PdCheck",
    "ValidationError",
    "block_gram",
    "is_positive_definite",
    "lift",
    "section_evaluate",
    "section_inner",
]

# Mirror-block consistency at construction, relative to 1 + max |entry|.
HERMITIAN_RTOL = 1e-12
# Eigenvalue slack of the positive definiteness test, relative to
# 1 + ||G||_F for the block Gram matrix G.
DEFAULT_PD_TOL = 1e-10


class ValidationError(ValueError):
    """Invalid domain input: bad shapes, unknown labels, broken symmetry."""


class NotPositiveDefiniteError(ValidationError):
    """A kernel failed the positive definiteness gate."""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = float(min_eigenvalue)


class IndexSet:
    """Ordered finite set of distinct string labels."""

    def __init__(self, labels: Iterable[str]):
        labels = tuple(str(x) for x in labels)
        if not labels:
            raise ValidationError("index set must be non-empty")
        if len(set(labels)) != len(labels):
            raise ValidationError("index labels must be pairwise distinct")
        self.labels = labels
        self._positions = {lab: i for i, lab in enumerate(labels)}

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label) -> bool:
        return label in self._positions

    def __eq__(self, other) -> bool:
        return isinstance(other, IndexSet) and self.labels == other.labels

    def __repr__(self) -> str:
        return f"IndexSet({list(self.labels)!r})"

    def index(self, label: str) -> int:
        try:
            return self._positions[label]
        except KeyError:
            raise ValidationError(f"unknown index label {label!r}") from None


@dataclass(frozen=True)
class LiftedPoint:
    """A label paired with a vector in the model space C^d."""

    label: str
    vector: np.ndarray

    def __post_init__(self):
        v = linalg.as_vector(self.vector)
        v.setflags(write=False)
        object.__setattr__(self, "label", str(self.label))
        object.__setattr__(self, "vector", v)


class OperatorKernel:
    """Hermitian table of d x d operator blocks over a finite index set.

    Construction validates that every mirror pair of blocks is adjoint to
    each other within ``HERMITIAN_RTOL`` (relative to the entry scale) and
    then canonicalizes the table so the symmetry holds exactly: diagonal
    blocks are averaged with their adjoints and lower blocks are replaced
    by the adjoints of the upper ones.
    """

    def __init__(self, labels, dim: int, blocks):
        index_set = labels if isinstance(labels, IndexSet) else IndexSet(labels)
        dim = int(dim)
        if dim < 1:
            raise ValidationError("dim must be a positive integer")
        arr = np.array(blocks, dtype=np.complex128)
        m = len(index_set)
        if arr.shape != (m, m, dim, dim):
            raise ValidationError(
                f"blocks must form an {m}x{m} table of {dim}x{dim} matrices, "
                f"got array of shape {arr.shape}"
            )
        mirror = arr.transpose(1, 0, 3, 2).conj()
        scale = 1.0 + (float(np.abs(arr).max()) if arr.size else 0.0)
        asym = float(np.abs(arr - mirror).max()) if arr.size else 0.0
        if asym > HERMITIAN_RTOL * scale:
            raise ValidationError(
                f"kernel blocks are not Hermitian-symmetric (defect {asym:.3e})"
            )
        arr = 0.5 * (arr + mirror)
        for i in range(m):
            for j in range(i + 1, m):
                arr[j, i] = arr[i, j].conj().T
        arr.setflags(write=False)
        self.index_set = index_set
        self.dim = dim
        self._blocks = arr

    @property
    def labels(self) -> tuple[str, ...]:
        return self.index_set.labels

    @property
    def size(self) -> int:
        return len(self.index_set)

    def index(self, key) -> int:
        """Resolve a label or integer position to an integer position."""
        if isinstance(key, (int, np.integer)):
            i = int(key)
            if not 0 <= i < self.size:
                raise ValidationError(f"index {i} out of range for {self.size} labels")
            return i
        return self.index_set.index(key)

    def block(self, s, t) -> np.ndarray:
        """The operator block at (s, t); read-only view."""
        return self._blocks[self.index(s), self.index(t)]

    @classmethod
    def identity(cls, labels, dim: int) -> "OperatorKernel":
        """Constant kernel whose every block is the identity."""
        index_set = labels if isinstance(labels, IndexSet) else IndexSet(labels)
        m = len(index_set)
        blocks = np.tile(np.eye(dim, dtype=np.complex128), (m, m, 1, 1))
        return cls(index_set, dim, blocks)

    @classmethod
    def zero(cls, labels, dim: int) -> "OperatorKernel":
        index_set = labels if isinstance(labels, IndexSet) else IndexSet(labels)
        m = len(index_set)
        return cls(index_set, dim, np.zeros((m, m, dim, dim), dtype=np.complex128))

    @classmethod
    def from_factors(cls, labels, factors: Sequence) -> "OperatorKernel":
        """Kernel with blocks V_s* V_t built from per-label factor matrices.

        Each factor must be an r x d matrix with a common r and d; the
        resulting kernel is positive definite by construction.
        """
        index_set = labels if isinstance(labels, IndexSet) else IndexSet(labels)
        mats = [linalg.as_matrix(f) for f in factors]
        if len(mats) != len(index_set):
            raise ValidationError(
                f"expected {len(index_set)} factors, got {len(mats)}"
            )
        shape = mats[0].shape
        if any(f.shape != shape for f in mats):
            raise ValidationError("factor matrices must share a common shape")
        d = shape[1]
        m = len(mats)
        blocks = np.empty((m, m, d, d), dtype=np.complex128)
        for i in range(m):
            for j in range(m):
                blocks[i, j] = mats[i].conj().T @ mats[j]
        return cls(index_set, d, blocks)


class PdCheck(NamedTuple):
    """Outcome of a positive definiteness test."""

    is_pd: bool
    min_eigenvalue: float


def lift(kernel: OperatorKernel, p: LiftedPoint, q: LiftedPoint) -> complex:
    """Scalar kernel value <a, K(s, t) b> at p = (s, a), q = (t, b).

    Conjugate-linear in the vector of ``p`` and linear in the vector of
    ``q``; Hermitian under swapping the two points.
    """
    i = kernel.index(p.label)
    j = kernel.index(q.label)
    if p.vector.shape[0] != kernel.dim or q.vector.shape[0] != kernel.dim:
        raise ValidationError(
            f"lifted vectors must have dimension {kernel.dim}, got "
            f"{p.vector.shape[0]} and {q.vector.shape[0]}"
        )
    return complex(p.vector.conj() @ (kernel._blocks[i, j] @ q.vector))


def block_gram(kernel: OperatorKernel) -> np.ndarray:
    """The (m d) x (m d) Hermitian matrix whose (i, j) block is K(s_i, s_j)."""
    m, d = kernel.size, kernel.dim
    return np.ascontiguousarray(
        kernel._blocks.transpose(0, 2, 1, 3).reshape(m * d, m * d)
    )


def is_positive_definite(kernel: OperatorKernel, tol: float = DEFAULT_PD_TOL) -> PdCheck:
    """Test the kernel's quadratic form for nonnegativity.

    Returns the verdict together with the smallest eigenvalue of the block
    Gram matrix; the verdict is true when that eigenvalue is at least
    ``-tol * (1 + ||G||_F)``.
    """
    if tol < 0:
        raise ValidationError("tolerance must be nonnegative")
    g = block_gram(kernel)
    eigenvalues = np.linalg.eigvalsh(g)
    min_eig = float(eigenvalues[0])
    return PdCheck(min_eig >= -tol * (1.0 + linalg.norm_fro(g)), min_eig)


class KernelSection:
    """Finite combination sum_i c_i K~(., (s_i, a_i)) of lifted-kernel sections.

    Sections support pointwise evaluation, the inner product induced by the
    lifted kernel, and linear combination. All terms must reference the
    owning kernel's labels and dimension.
    """

    def __init__(self, kernel: OperatorKernel, terms: Iterable):
        norm_terms = []
        for coeff, point in terms:
            if not isinstance(point, LiftedPoint):
                point = LiftedPoint(*point)
            kernel.index(point.label)
            if point.vector.shape[0] != kernel.dim:
                raise ValidationError(
                    f"section term vector has dimension {point.vector.shape[0]}, "
                    f"expected {kernel.dim}"
                )
            norm_terms.append((complex(coeff), point))
        self.kernel = kernel
        self.terms = tuple(norm_terms)

    @classmethod
    def generator(cls, kernel: OperatorKernel, point) -> "KernelSection":
        """The single section K~(., point)."""
        return cls(kernel, [(1.0, point)])

    def evaluate(self, q) -> complex:
        return section_evaluate(self, q)

    def inner(self, other: "KernelSection") -> complex:
        return section_inner(self, other)

    def norm(self) -> float:
        return float(np.sqrt(max(section_inner(self, self).real, 0.0)))

    def __add__(self, other: "KernelSection") -> "KernelSection":
        if self.kernel is not other.kernel:
            raise ValidationError("cannot combine sections of different kernels")
        return KernelSection(self.kernel, self.terms + other.terms)

    def __neg__(self) -> "KernelSection":
        return KernelSection(self.kernel, [(-c, p) for c, p in self.terms])

    def __sub__(self, other: "KernelSection") -> "KernelSection":
        return self + (-other)

    def __mul__(self, scalar) -> "KernelSection":
        return KernelSection(self.kernel, [(complex(scalar) * c, p) for c, p in self.terms])

    __rmul__ = __mul__


def section_evaluate(section: KernelSection, q) -> complex:
    """Evaluate the section at a lifted point.

    For F = sum_i c_i K~(., (s_i, a_i)) this is sum_i c_i <b, K(t, s_i) a_i>
    with q = (t, b): linear in the coefficients, conjugate-linear in b, and
    exactly zero when b is the zero vector.
    """
    if not isinstance(q, LiftedPoint):
        q = LiftedPoint(*q)
    return complex(
        sum(c * lift(section.kernel, q, p) for c, p in section.terms)
    )


def section_inner(f: KernelSection, g: KernelSection) -> complex:
    """Inner product of two sections induced by the lifted kernel.

    Hermitian: swapping the arguments conjugates the result.
    """
    if f.kernel is not g.kernel:
        raise ValidationError("sections are owned by different kernels")
    acc = 0.0 + 0.0j
    for ci, pi in f.terms:
        for dj, qj in g.terms:
            acc += np.conj(ci) * dj * lift(f.kernel, pi, qj)
    return complex(acc)
