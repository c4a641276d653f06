"""LIBSVM-format ingestion and dataset handling.

Format: one sample per line, ``<label> <index>:<value> ...`` with 1-based,
strictly increasing indices; ``#`` starts a comment running to end of line.
Binary labels are coerced to {-1, +1}: files already in {-1, +1} are kept,
{0, 1} and {1, 2} encodings map their smaller label to -1.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import IO, Iterable

import numpy as np
import scipy.sparse as sp

from .linalg import as_csr


class ParseError(ValueError):
    """A LIBSVM line could not be parsed; the message names the line number."""


@dataclass
class Dataset:
    """Sparse samples with binary labels.

    Attributes:
        features: n x d CSR matrix, one sample per row.
        labels: length-n integer array with entries in {-1, +1}.
        name: free-form tag used in reports.
    """

    features: sp.csr_array
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"dataset '{self.name}': {self.features.shape[0]} feature rows "
                f"vs {self.labels.shape[0]} labels"
            )
        bad = set(np.unique(self.labels)) - {-1, 1}
        if bad:
            raise ValueError(f"dataset '{self.name}': labels outside {{-1,+1}}: {sorted(bad)}")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def row_norms(self) -> np.ndarray:
        squared = self.features.multiply(self.features).sum(axis=1)
        return np.sqrt(np.asarray(squared).ravel())


def _coerce_labels(raw: np.ndarray, name: str) -> np.ndarray:
    distinct = set(np.unique(raw).tolist())
    if distinct <= {-1.0, 1.0}:
        mapped = raw
    elif distinct <= {0.0, 1.0}:
        mapped = np.where(raw == 0.0, -1.0, 1.0)
    elif distinct <= {1.0, 2.0}:
        mapped = np.where(raw == 1.0, -1.0, 1.0)
    else:
        raise ParseError(
            f"dataset '{name}': labels {sorted(distinct)} are not a recognized "
            "binary encoding ({-1,+1}, {0,1} or {1,2})"
        )
    return mapped.astype(np.int64)


def parse_libsvm(
    lines: Iterable[str] | IO[str],
    expected_dim: int | None = None,
    name: str = "",
) -> Dataset:
    """Parse LIBSVM-format text into a :class:`Dataset`.

    ``expected_dim`` fixes the feature count; indices beyond it are a parse
    error, never silent truncation.  Without it the dimension is one plus the
    largest index seen.
    """
    raw_labels: list[float] = []
    indptr = [0]
    col_indices: list[int] = []
    values: list[float] = []
    max_index = -1  # 0-based

    for line_no, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(f"line {line_no}: label {tokens[0]!r} is not numeric") from None
        raw_labels.append(label)

        prev_index = 0  # 1-based indices must be strictly increasing
        for token in tokens[1:]:
            idx_text, _, val_text = token.partition(":")
            try:
                index = int(idx_text)
                value = float(val_text)
            except ValueError:
                raise ParseError(f"line {line_no}: bad feature token {token!r}") from None
            if index <= 0:
                raise ParseError(f"line {line_no}: index {index} is not positive")
            if index <= prev_index:
                raise ParseError(
                    f"line {line_no}: index {index} does not increase (previous {prev_index})"
                )
            if expected_dim is not None and index > expected_dim:
                raise ParseError(
                    f"line {line_no}: index {index} exceeds expected dimension {expected_dim}"
                )
            prev_index = index
            max_index = max(max_index, index - 1)
            if value != 0.0:
                col_indices.append(index - 1)
                values.append(value)
        indptr.append(len(col_indices))

    dim = expected_dim if expected_dim is not None else max_index + 1
    n = len(raw_labels)
    features = sp.csr_array(
        (np.asarray(values, dtype=float), np.asarray(col_indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(n, dim),
    )
    labels = _coerce_labels(np.asarray(raw_labels, dtype=float), name) if n else np.zeros(0, dtype=np.int64)
    return Dataset(features=as_csr(features), labels=labels, name=name)


def load_libsvm(path: str | os.PathLike, expected_dim: int | None = None) -> Dataset:
    name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    with open(path, "r", encoding="utf-8") as handle:
        return parse_libsvm(handle, expected_dim=expected_dim, name=name)


def dump_libsvm(dataset: Dataset, target: IO[str]) -> None:
    """Write a dataset back out in LIBSVM format (values via repr, lossless)."""
    features = dataset.features
    for i in range(dataset.n_samples):
        start, stop = features.indptr[i], features.indptr[i + 1]
        pairs = (
            f"{features.indices[k] + 1}:{float(features.data[k])!r}" for k in range(start, stop)
        )
        label = "+1" if dataset.labels[i] > 0 else "-1"
        target.write(" ".join([label, *pairs]).rstrip() + "\n")


def normalize_rows(dataset: Dataset) -> Dataset:
    """Scale every sample with Euclidean norm above 1 back onto the unit ball.

    Rows already inside the ball are untouched (bit-for-bit), so the map is
    idempotent.  Rescaling repeats if round-off leaves a norm a few ulp above
    1, guaranteeing norm <= 1 exactly.
    """
    features = dataset.features.copy()
    for _ in range(5):
        squared = features.multiply(features).sum(axis=1)
        norms = np.sqrt(np.asarray(squared).ravel())
        over = norms > 1.0
        if not np.any(over):
            break
        scale = np.where(over, 1.0 / np.maximum(norms, 1.0), 1.0)
        features = as_csr(sp.diags_array(scale) @ features)
    return replace(dataset, features=features)


def split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled train/test split.

    The seeded permutation is fixed by (n, seed); the first
    ``ceil(n * (1 - test_fraction))`` shuffled samples form the training set.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"split: test_fraction {test_fraction} outside (0, 1)")
    n = dataset.n_samples
    order = np.random.default_rng(seed).permutation(n)
    n_train = math.ceil(n * (1.0 - test_fraction))
    train_idx, test_idx = order[:n_train], order[n_train:]
    train = Dataset(
        features=as_csr(dataset.features[train_idx]),
        labels=dataset.labels[train_idx],
        name=f"{dataset.name}:train" if dataset.name else "train",
    )
    test = Dataset(
        features=as_csr(dataset.features[test_idx]),
        labels=dataset.labels[test_idx],
        name=f"{dataset.name}:test" if dataset.name else "test",
    )
    return train, test
