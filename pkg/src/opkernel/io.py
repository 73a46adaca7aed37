"""File formats used by the command line.

Structured inputs and outputs are JSON with every complex scalar encoded
as a two-element [re, im] array; bulk draws are CSV. A kernel file stores
only index-ordered block pairs (s, t) with s at or before t; the mirror
blocks are synthesized by adjoint. If a file stores both orientations of
a pair they must agree within the kernel's Hermitian tolerance.

Structural problems (unreadable JSON, missing keys, malformed matrices,
unknown labels) raise ``SchemaError``; mathematically invalid content
(broken Hermitian symmetry, invalid POVMs) raises ``ValidationError``
from the library.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .dilation import DiscretePOVM
from .factorization import DilationFactorization
from .gaussian import GaussianSampler, draw_batches
from .kernel import HERMITIAN_RTOL, OperatorKernel, ValidationError

__all__ = [
    "SchemaError",
    "complex_matrix_to_pairs",
    "dump_factors",
    "dump_kernel",
    "file_digest",
    "load_factors",
    "load_kernel",
    "load_matrix",
    "load_povm",
    "matrix_from_pairs",
    "write_draws_csv",
]


class SchemaError(ValueError):
    """Malformed input file content."""


def file_digest(path) -> str:
    """Hex SHA-256 of the file bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: expected a JSON object at top level")
    return data


def _require(data: dict, key: str, path) -> object:
    if key not in data:
        raise SchemaError(f"{path}: missing required key {key!r}")
    return data[key]


def matrix_from_pairs(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Decode a nested list of [re, im] pairs into a complex matrix."""
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise SchemaError("matrix must be a non-empty list of rows")
    ncols = len(data[0])
    out = np.empty((len(data), ncols), dtype=np.complex128)
    for i, row in enumerate(data):
        if len(row) != ncols:
            raise SchemaError("matrix rows must all have the same length")
        for j, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) for x in entry)
            ):
                raise SchemaError(
                    f"matrix entry ({i}, {j}) must be a [re, im] pair of numbers"
                )
            out[i, j] = complex(entry[0], entry[1])
    if rows is not None and out.shape[0] != rows:
        raise SchemaError(f"matrix must have {rows} rows, got {out.shape[0]}")
    if cols is not None and out.shape[1] != cols:
        raise SchemaError(f"matrix must have {cols} columns, got {out.shape[1]}")
    return out


def complex_matrix_to_pairs(matrix) -> list:
    """Encode a complex matrix as nested [re, im] pairs."""
    m = np.asarray(matrix, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _check_labels(labels, path) -> list[str]:
    if (
        not isinstance(labels, list)
        or not labels
        or not all(isinstance(lab, str) for lab in labels)
    ):
        raise SchemaError(f"{path}: 'labels' must be a non-empty list of strings")
    if any("|" in lab for lab in labels):
        raise SchemaError(f"{path}: labels must not contain '|'")
    if len(set(labels)) != len(labels):
        raise SchemaError(f"{path}: labels must be pairwise distinct")
    return labels


def load_kernel(path) -> OperatorKernel:
    """Read a kernel file.

    Schema: ``{"dim": d, "labels": [...], "blocks": {"s|t": matrix}}``.
    Diagonal blocks are required; missing off-diagonal pairs default to
    zero blocks, and mirrors are filled by adjoint.
    """
    data = _load_json(path)
    dim = _require(data, "dim", path)
    if not isinstance(dim, int) or dim < 1:
        raise SchemaError(f"{path}: 'dim' must be a positive integer")
    labels = _check_labels(_require(data, "labels", path), path)
    raw_blocks = _require(data, "blocks", path)
    if not isinstance(raw_blocks, dict):
        raise SchemaError(f"{path}: 'blocks' must be an object keyed by 's|t'")
    positions = {lab: i for i, lab in enumerate(labels)}
    m = len(labels)
    blocks = np.zeros((m, m, dim, dim), dtype=np.complex128)
    given = np.zeros((m, m), dtype=bool)
    for key, value in raw_blocks.items():
        parts = key.split("|")
        if len(parts) != 2:
            raise SchemaError(f"{path}: block key {key!r} is not of the form 's|t'")
        s, t = parts
        if s not in positions or t not in positions:
            raise SchemaError(f"{path}: block key {key!r} references an undeclared label")
        i, j = positions[s], positions[t]
        if given[i, j]:
            raise SchemaError(f"{path}: duplicate block for pair {key!r}")
        try:
            blocks[i, j] = matrix_from_pairs(value, dim, dim)
        except SchemaError as exc:
            raise SchemaError(f"{path}: block {key!r}: {exc}") from None
        given[i, j] = True
    for i, lab in enumerate(labels):
        if not given[i, i]:
            raise SchemaError(f"{path}: missing diagonal block '{lab}|{lab}'")
    for i in range(m):
        for j in range(i + 1, m):
            if given[i, j] and given[j, i]:
                upper = blocks[i, j]
                lower = blocks[j, i]
                scale = 1.0 + max(np.abs(upper).max(), np.abs(lower).max())
                if np.abs(lower - upper.conj().T).max() > HERMITIAN_RTOL * scale:
                    raise ValidationError(
                        f"{path}: blocks '{labels[i]}|{labels[j]}' and "
                        f"'{labels[j]}|{labels[i]}' are not mutually adjoint"
                    )
            elif given[i, j]:
                blocks[j, i] = blocks[i, j].conj().T
            elif given[j, i]:
                blocks[i, j] = blocks[j, i].conj().T
    return OperatorKernel(labels, dim, blocks)


def dump_kernel(kernel: OperatorKernel, path) -> None:
    """Write a kernel file storing only index-ordered pairs."""
    blocks = {}
    for i, s in enumerate(kernel.labels):
        for j in range(i, kernel.size):
            t = kernel.labels[j]
            blocks[f"{s}|{t}"] = complex_matrix_to_pairs(kernel.block(i, j))
    payload = {"dim": kernel.dim, "labels": list(kernel.labels), "blocks": blocks}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def load_povm(path) -> DiscretePOVM:
    """Read a POVM file: ``{"dim": d, "atoms": [...], "effects": {atom: matrix}}``."""
    data = _load_json(path)
    dim = _require(data, "dim", path)
    if not isinstance(dim, int) or dim < 1:
        raise SchemaError(f"{path}: 'dim' must be a positive integer")
    atoms = _check_labels(_require(data, "atoms", path), path)
    raw = _require(data, "effects", path)
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: 'effects' must be an object keyed by atom")
    unknown = set(raw) - set(atoms)
    if unknown:
        raise SchemaError(f"{path}: effects reference undeclared atoms {sorted(unknown)}")
    effects = []
    for atom in atoms:
        if atom not in raw:
            raise SchemaError(f"{path}: missing effect for atom {atom!r}")
        try:
            effects.append(matrix_from_pairs(raw[atom], dim, dim))
        except SchemaError as exc:
            raise SchemaError(f"{path}: effect {atom!r}: {exc}") from None
    return DiscretePOVM(atoms, effects)


def load_matrix(path) -> np.ndarray:
    """Read a bare operator file: ``{"matrix": [[pair, ...], ...]}``."""
    data = _load_json(path)
    try:
        return matrix_from_pairs(_require(data, "matrix", path))
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def dump_factors(fact: DilationFactorization, path) -> None:
    """Write a factor family: rank, residual, and one r x d matrix per label."""
    payload = {
        "dim": fact.kernel.dim,
        "rank": fact.rank,
        "labels": list(fact.kernel.labels),
        "residual": fact.residual,
        "factors": {
            label: complex_matrix_to_pairs(fact.factors[i])
            for i, label in enumerate(fact.kernel.labels)
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def load_factors(path) -> tuple[list[str], int, int, dict[str, np.ndarray]]:
    """Read a factor family file; returns (labels, dim, rank, factors)."""
    data = _load_json(path)
    dim = _require(data, "dim", path)
    rank = _require(data, "rank", path)
    if not isinstance(dim, int) or dim < 1:
        raise SchemaError(f"{path}: 'dim' must be a positive integer")
    if not isinstance(rank, int) or rank < 0:
        raise SchemaError(f"{path}: 'rank' must be a nonnegative integer")
    labels = _check_labels(_require(data, "labels", path), path)
    raw = _require(data, "factors", path)
    if not isinstance(raw, dict) or set(raw) != set(labels):
        raise SchemaError(f"{path}: 'factors' must hold exactly one matrix per label")
    factors = {}
    for label in labels:
        value = raw[label]
        if rank == 0:
            if value not in ([], [[]]):
                raise SchemaError(f"{path}: factor {label!r} must be empty at rank 0")
            factors[label] = np.zeros((0, dim), dtype=np.complex128)
        else:
            try:
                factors[label] = matrix_from_pairs(value, rank, dim)
            except SchemaError as exc:
                raise SchemaError(f"{path}: factor {label!r}: {exc}") from None
    return labels, dim, rank, factors


def write_draws_csv(path, sampler: GaussianSampler, count: int) -> None:
    """Export the first ``count`` joint draws, one row per (draw, label).

    Columns are the draw index, the label, and re/im for each of the d
    coordinates. The rows contain exactly the draws the estimators see
    for the same seed and count.
    """
    labels = sampler.labels
    d = sampler.dim
    header = ["draw", "label"]
    for k in range(d):
        header += [f"re{k}", f"im{k}"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for m0, ws in draw_batches(sampler.fact, sampler.seed, count):
            batch = {label: ws[label] for label in labels}
            rows = next(iter(batch.values())).shape[0] if labels else 0
            for offset in range(rows):
                for label in labels:
                    w = batch[label][offset]
                    row = [m0 + offset, label]
                    for k in range(d):
                        row += [repr(float(w[k].real)), repr(float(w[k].imag))]
                    writer.writerow(row)
