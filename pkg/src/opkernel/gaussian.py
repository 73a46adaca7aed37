"""Seeded sampling of vector-valued Gaussian families driven by a kernel.

A factorization K(s, t) = V_s* V_t turns r independent real standard
normals z into a joint family W_s = V_s* z whose covariance reproduces the
kernel: E[<a, W_s><W_t, b>] = <a, K(s, t) b>. This module provides the
deterministic normal stream, the sampler, and Monte Carlo estimators for
checking the covariance identity.

Randomness layout. The scalar normals for a seed form one canonical
sequence, cut into fixed blocks of ``SCALAR_BLOCK`` values; block c is
generated by an independent PCG64 generator keyed by (seed, c). Draw m
consumes scalars [m r, (m + 1) r) of that sequence, so any chunked or
parallel traversal of a draw range sees exactly the same numbers, and the
estimators depend only on (seed, number of draws). Estimates are
accumulated over fixed chunks of ``DRAW_CHUNK`` draws in index order,
which keeps them reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factorization import DilationFactorization
from .kernel import ValidationError
from . import linalg

__all__ = [
    "DRAW_CHUNK",
    "NORMAL_ALGORITHM",
    "SCALAR_BLOCK",
    "CovarianceEstimate",
    "GaussianSampler",
    "NormalStream",
    "build_sampler",
    "draw",
    "draw_batches",
    "estimate_covariance",
    "estimate_covariance_table",
    "estimate_operator_covariance",
    "normal_stream",
    "normals_range",
]

SCALAR_BLOCK = 1 << 16
DRAW_CHUNK = 8192
NORMAL_ALGORITHM = (
    f"pcg64[seedseq(seed,block)]:standard_normal:block={SCALAR_BLOCK}"
)


def _block_normals(seed: int, block_index: int) -> np.ndarray:
    bit_gen = np.random.PCG64(np.random.SeedSequence((seed, block_index)))
    return np.random.Generator(bit_gen).standard_normal(SCALAR_BLOCK)


def _check_seed(seed) -> int:
    seed = int(seed)
    if seed < 0:
        raise ValidationError("seed must be a nonnegative integer")
    return seed


def normals_range(seed, start: int, stop: int) -> np.ndarray:
    """Scalars [start, stop) of the canonical normal sequence for ``seed``."""
    seed = _check_seed(seed)
    start, stop = int(start), int(stop)
    if start < 0 or stop < start:
        raise ValidationError("invalid scalar range")
    out = np.empty(stop - start, dtype=np.float64)
    pos = start
    while pos < stop:
        block_index, offset = divmod(pos, SCALAR_BLOCK)
        take = min(SCALAR_BLOCK - offset, stop - pos)
        out[pos - start : pos - start + take] = _block_normals(seed, block_index)[
            offset : offset + take
        ]
        pos += take
    return out


class NormalStream:
    """Deterministic stream of i.i.d. standard normal scalars.

    Two streams with the same seed produce identical sequences, whatever
    granularity ``take`` is called with. ``algorithm`` names the generator
    and normal transform pinned by this build.
    """

    algorithm = NORMAL_ALGORITHM

    def __init__(self, seed):
        self.seed = _check_seed(seed)
        self._position = 0
        self._block_index = -1
        self._block: np.ndarray | None = None

    @property
    def position(self) -> int:
        return self._position

    def take(self, count: int) -> np.ndarray:
        """The next ``count`` scalars, advancing the stream."""
        count = int(count)
        if count < 0:
            raise ValidationError("count must be nonnegative")
        out = np.empty(count, dtype=np.float64)
        filled = 0
        while filled < count:
            block_index, offset = divmod(self._position, SCALAR_BLOCK)
            if block_index != self._block_index:
                self._block = _block_normals(self.seed, block_index)
                self._block_index = block_index
            take = min(SCALAR_BLOCK - offset, count - filled)
            out[filled : filled + take] = self._block[offset : offset + take]
            filled += take
            self._position += take
        return out


def normal_stream(seed) -> NormalStream:
    """A fresh scalar normal stream for ``seed``."""
    return NormalStream(seed)


class GaussianSampler:
    """Joint sampler of the family {W_s} with covariance given by the kernel.

    One joint draw consumes exactly ``rank`` scalars z from the stream and
    returns W_s = V_s* z for every label s, sharing the same z across the
    family. The sampler's stream is a single-consumer cursor; the
    estimators below do not touch it and always read the canonical
    sequence from draw zero.
    """

    def __init__(self, fact: DilationFactorization, seed):
        self.fact = fact
        self.seed = _check_seed(seed)
        adjoints = []
        for v in fact.factors:
            adj = v.conj().T.copy()
            adj.setflags(write=False)
            adjoints.append(adj)
        self.adjoints = tuple(adjoints)
        self.stream = NormalStream(self.seed)
        self.last_coefficients: np.ndarray | None = None

    @property
    def labels(self) -> tuple[str, ...]:
        return self.fact.kernel.labels

    @property
    def rank(self) -> int:
        return self.fact.rank

    @property
    def dim(self) -> int:
        return self.fact.kernel.dim


def build_sampler(fact: DilationFactorization, seed) -> GaussianSampler:
    """Sampler for a factorization with precomputed factor adjoints."""
    return GaussianSampler(fact, seed)


def draw(sampler: GaussianSampler) -> dict[str, np.ndarray]:
    """One joint draw {label: W_s}, advancing the stream by ``rank`` scalars.

    The shared coefficient vector z is recorded on the sampler as
    ``last_coefficients`` so the draw can be recomputed.
    """
    z = sampler.stream.take(sampler.rank).astype(np.complex128)
    z.setflags(write=False)
    sampler.last_coefficients = z
    return {
        label: sampler.adjoints[i] @ z for i, label in enumerate(sampler.labels)
    }


def draw_batches(
    fact: DilationFactorization,
    seed,
    count: int,
    labels=None,
    start: int = 0,
    chunk: int = DRAW_CHUNK,
):
    """Yield (first_draw_index, {label: rows}) for draws [start, start + count).

    Rows of each array are consecutive draws of W_label. Batches are cut
    from the canonical sequence by absolute draw index, so any partition
    of the range produces the same values.
    """
    seed = _check_seed(seed)
    count, start, chunk = int(count), int(start), int(chunk)
    if count < 0 or start < 0 or chunk < 1:
        raise ValidationError("invalid draw range")
    kernel = fact.kernel
    if labels is None:
        labels = kernel.labels
    wanted = []
    for label in labels:
        i = kernel.index(label)
        wanted.append((kernel.labels[i], fact.factors[i].conj()))
    r = fact.rank
    for m0 in range(start, start + count, chunk):
        mm = min(chunk, start + count - m0)
        z = normals_range(seed, m0 * r, (m0 + mm) * r).reshape(mm, r)
        yield m0, {label: z @ vconj for label, vconj in wanted}


@dataclass(frozen=True)
class CovarianceEstimate:
    """Empirical covariance block (1/M) sum_m |W_s><W_t| with diagnostics.

    ``max_abs_error`` is the largest entrywise deviation from the kernel
    block K(s, t); ``std_error`` is the largest entrywise proxy
    sqrt(second moment)/sqrt(M), reported to judge tolerance breaches.
    """

    s: str
    t: str
    sample_count: int
    matrix: np.ndarray
    max_abs_error: float
    std_error: float


def _pair_sums(fact, seed, count, label_s, label_t):
    d = fact.kernel.dim
    s1 = np.zeros((d, d), dtype=np.complex128)
    s2 = np.zeros((d, d), dtype=np.float64)
    for _, ws in draw_batches(fact, seed, count, labels=(label_s, label_t)):
        a = ws[label_s]
        b = ws[label_t]
        s1 += a.T @ b.conj()
        s2 += (np.abs(a) ** 2).T @ (np.abs(b) ** 2)
    return s1, s2


def estimate_operator_covariance(
    sampler: GaussianSampler, count: int, s, t
) -> CovarianceEstimate:
    """Empirical covariance block over the first ``count`` joint draws.

    The estimate is always accumulated for the index-ordered pair and
    adjointed if the arguments arrive swapped, so the estimates of (s, t)
    and (t, s) are exact adjoints of each other.
    """
    count = int(count)
    if count < 1:
        raise ValidationError("sample count must be at least 1")
    kernel = sampler.fact.kernel
    i, j = kernel.index(s), kernel.index(t)
    swapped = i > j
    if swapped:
        i, j = j, i
    label_i, label_j = kernel.labels[i], kernel.labels[j]
    s1, s2 = _pair_sums(sampler.fact, sampler.seed, count, label_i, label_j)
    matrix = s1 / count
    std_error = float(np.sqrt(s2.max() / count) / np.sqrt(count)) if s2.size else 0.0
    if swapped:
        matrix = matrix.conj().T
    block = kernel.block(kernel.labels[kernel.index(s)], kernel.labels[kernel.index(t)])
    max_err = float(np.abs(matrix - block).max()) if matrix.size else 0.0
    matrix.setflags(write=False)
    return CovarianceEstimate(
        s=kernel.labels[kernel.index(s)],
        t=kernel.labels[kernel.index(t)],
        sample_count=count,
        matrix=matrix,
        max_abs_error=max_err,
        std_error=std_error,
    )


def estimate_covariance(sampler: GaussianSampler, count: int, s, t, a, b) -> complex:
    """Monte Carlo average of <a, W_s><W_t, b> over the first ``count`` draws.

    Converges to <a, K(s, t) b> at the usual 1/sqrt(M) rate. The average
    is a pure function of (seed, count, s, t, a, b); it does not advance
    the sampler's stream.
    """
    count = int(count)
    if count < 1:
        raise ValidationError("sample count must be at least 1")
    kernel = sampler.fact.kernel
    label_s = kernel.labels[kernel.index(s)]
    label_t = kernel.labels[kernel.index(t)]
    av = linalg.as_vector(a)
    bv = linalg.as_vector(b)
    if av.shape[0] != kernel.dim or bv.shape[0] != kernel.dim:
        raise ValidationError(
            f"probe vectors must have dimension {kernel.dim}, got "
            f"{av.shape[0]} and {bv.shape[0]}"
        )
    # Split real/imag arithmetic keeps the pairing identity
    # estimate(s, t, a, b) == conj(estimate(t, s, b, a)) exact: every term
    # of the swapped call is assembled from the same real products.
    acc_re = 0.0
    acc_im = 0.0
    ar, ai = av.real.copy(), av.imag.copy()
    br, bi = bv.real.copy(), bv.imag.copy()
    for _, ws in draw_batches(sampler.fact, sampler.seed, count, labels=(label_s, label_t)):
        wsr, wsi = ws[label_s].real, ws[label_s].imag
        wtr, wti = ws[label_t].real, ws[label_t].imag
        lr = wsr @ ar + wsi @ ai  # re <a, W_s>
        li = wsi @ ar - wsr @ ai  # im <a, W_s>
        rr = wtr @ br + wti @ bi  # re <W_t, b>
        ri = wtr @ bi - wti @ br  # im <W_t, b>
        acc_re += float(np.sum(lr * rr) - np.sum(li * ri))
        acc_im += float(np.sum(lr * ri) + np.sum(li * rr))
    return complex(acc_re / count, acc_im / count)


def estimate_covariance_table(
    sampler: GaussianSampler, count: int
) -> dict[tuple[str, str], CovarianceEstimate]:
    """Covariance estimates for every index-ordered label pair in one pass."""
    count = int(count)
    if count < 1:
        raise ValidationError("sample count must be at least 1")
    kernel = sampler.fact.kernel
    labels = kernel.labels
    d = kernel.dim
    pairs = [(i, j) for i in range(len(labels)) for j in range(i, len(labels))]
    sums1 = {p: np.zeros((d, d), dtype=np.complex128) for p in pairs}
    sums2 = {p: np.zeros((d, d), dtype=np.float64) for p in pairs}
    for _, ws in draw_batches(sampler.fact, sampler.seed, count):
        mags = {label: np.abs(w) ** 2 for label, w in ws.items()}
        for i, j in pairs:
            wi, wj = ws[labels[i]], ws[labels[j]]
            sums1[(i, j)] += wi.T @ wj.conj()
            sums2[(i, j)] += mags[labels[i]].T @ mags[labels[j]]
    table = {}
    for i, j in pairs:
        matrix = sums1[(i, j)] / count
        matrix.setflags(write=False)
        block = kernel.block(i, j)
        s2 = sums2[(i, j)]
        table[(labels[i], labels[j])] = CovarianceEstimate(
            s=labels[i],
            t=labels[j],
            sample_count=count,
            matrix=matrix,
            max_abs_error=float(np.abs(matrix - block).max()) if matrix.size else 0.0,
            std_error=float(np.sqrt(s2.max() / count) / np.sqrt(count)) if s2.size else 0.0,
        )
    return table
