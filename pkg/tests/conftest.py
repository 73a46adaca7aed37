import numpy as np
import pytest

from opkernel import DiscretePOVM, OperatorKernel


def complex_randn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_gram_kernel(rng, m, d, r):
    """Kernel built as W_i* W_j from random r x d factors; returns (kernel, factors)."""
    factors = [complex_randn(rng, r, d) for _ in range(m)]
    labels = [f"s{i}" for i in range(m)]
    return OperatorKernel.from_factors(labels, factors), factors


def random_contraction(rng, d, norm=None):
    """Random operator rescaled to the given spectral norm (default in (0.3, 1))."""
    a = complex_randn(rng, d, d)
    if norm is None:
        norm = 0.3 + 0.7 * rng.uniform()
    return a * (norm / np.linalg.norm(a, 2))


def random_povm(rng, d, p):
    """Random POVM from Gram positives renormalized to sum to the identity."""
    positives = []
    for _ in range(p):
        g = complex_randn(rng, d, d)
        positives.append(g.conj().T @ g)
    total = sum(positives)
    w, u = np.linalg.eigh(total)
    inv_sqrt = (u / np.sqrt(w)) @ u.conj().T
    return DiscretePOVM(
        [f"a{j}" for j in range(p)],
        [inv_sqrt @ q @ inv_sqrt for q in positives],
    )


def diagonal_qubit_povm():
    return DiscretePOVM(
        ["1", "2"], [np.diag([0.75, 0.25]), np.diag([0.25, 0.75])]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
