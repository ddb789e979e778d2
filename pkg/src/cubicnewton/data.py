"""LIBSVM text I/O, seeded splits, classification error and synthetic datasets."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, ContractViolation, ParseError

log = logging.getLogger(__name__)

# label token value -> class; 0/2 are common alternative encodings
LABEL_MAP = {1.0: 1, -1.0: -1, 0.0: -1, 2.0: 1}


@dataclass(frozen=True)
class SparseSample:
    indices: Tuple[int, ...]
    values: Tuple[float, ...]
    label: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        vals = tuple(float(v) for v in self.values)
        if len(idx) != len(vals):
            raise ContractViolation("indices and values differ in length")
        if idx and idx[0] < 1:
            raise ContractViolation("feature indices are 1-based")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ContractViolation("feature indices must increase strictly")
        if self.label not in (-1, 1):
            raise ContractViolation("label must be -1 or +1")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @property
    def max_index(self):
        return self.indices[-1] if self.indices else 0


@dataclass(frozen=True)
class Dataset:
    samples: Tuple[SparseSample, ...]
    dim: int
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        top = max((s.max_index for s in self.samples), default=0)
        if top > self.dim:
            raise ContractViolation(f"sample index {top} exceeds dim {self.dim}")

    @classmethod
    def from_samples(cls, samples: Iterable[SparseSample], dim: Optional[int] = None, name=""):
        samples = tuple(samples)
        if dim is None:
            dim = max((s.max_index for s in samples), default=0)
        return cls(samples, dim, name)

    @classmethod
    def from_arrays(cls, X, y, name=""):
        """Build from a dense or sparse (m, n) matrix and labels in {-1, +1}."""
        X = sparse.csr_matrix(X, dtype=float)
        X.sort_indices()
        X.eliminate_zeros()
        samples = []
        for i in range(X.shape[0]):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            samples.append(SparseSample(tuple(X.indices[lo:hi] + 1), tuple(X.data[lo:hi]), int(y[i])))
        return cls(tuple(samples), X.shape[1], name)

    def __len__(self):
        return len(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=float)

    def matrix(self, dim: Optional[int] = None) -> sparse.csr_matrix:
        dim = self.dim if dim is None else dim
        if dim < self.dim:
            raise ContractViolation(f"dim {dim} is smaller than the dataset's {self.dim}")
        indptr = np.cumsum([0] + [len(s.indices) for s in self.samples])
        cols = np.fromiter((i - 1 for s in self.samples for i in s.indices), dtype=np.int64, count=indptr[-1])
        vals = np.fromiter((v for s in self.samples for v in s.values), dtype=float, count=indptr[-1])
        return sparse.csr_matrix((vals, cols, indptr), shape=(len(self.samples), dim))

    def subset(self, rows: Sequence[int], name=None) -> "Dataset":
        return Dataset(tuple(self.samples[i] for i in rows), self.dim, self.name if name is None else name)


def _parse_label(token, lineno):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad label {token!r}", lineno) from None
    if value not in LABEL_MAP:
        raise ParseError(f"unsupported label {token!r}", lineno)
    return LABEL_MAP[value], value not in (1.0, -1.0)


def parse_libsvm(stream: Union[str, Path, io.TextIOBase], dim: Optional[int] = None, name: str = "") -> Dataset:
    """Read ``<label> <idx>:<val> ...`` lines; ``#`` starts a comment.

    ``stream`` is an open text stream or a path. Labels 0 and 2 are mapped to
    -1 and +1 with a logged notice.
    """
    if isinstance(stream, (str, Path)):
        path = Path(stream)
        with path.open(encoding="utf-8") as fh:
            return parse_libsvm(fh, dim=dim, name=name or path.stem)
    samples = []
    remapped = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label, mapped = _parse_label(tokens[0], lineno)
        remapped += mapped
        indices, values = [], []
        for tok in tokens[1:]:
            key, sep, val = tok.partition(":")
            if not sep:
                raise ParseError(f"expected idx:val, got {tok!r}", lineno)
            try:
                i, v = int(key), float(val)
            except ValueError:
                raise ParseError(f"non-numeric entry {tok!r}", lineno) from None
            if i < 1:
                raise ParseError(f"index {i} is not positive", lineno)
            if indices and i <= indices[-1]:
                raise ParseError(f"indices not increasing at {i}", lineno)
            indices.append(i)
            values.append(v)
        samples.append(SparseSample(tuple(indices), tuple(values), label))
    if remapped:
        log.warning("mapped %d labels from {0, 2} to {-1, +1}", remapped)
    return Dataset.from_samples(samples, dim, name)


def format_libsvm(dataset: Dataset) -> str:
    lines = []
    for s in dataset.samples:
        entries = " ".join(f"{i}:{v!r}" for i, v in zip(s.indices, s.values))
        lines.append(f"{s.label:+d} {entries}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def write_libsvm(dataset: Dataset, target) -> None:
    Path(target).write_text(format_libsvm(dataset), encoding="utf-8")


def split_train_test(dataset: Dataset, test_fraction: float, seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first round(test_fraction m) samples form the test set."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError("test_fraction must lie in (0, 1)")
    m = len(dataset)
    n_test = int(np.floor(test_fraction * m + 0.5))
    perm = np.random.default_rng(seed).permutation(m)
    test, train = perm[:n_test], perm[n_test:]
    base = dataset.name or "data"
    return dataset.subset(np.sort(train), f"{base}-train"), dataset.subset(np.sort(test), f"{base}-test")


def misclassification_error(x, dataset: Dataset) -> float:
    """Fraction of samples with sign(<u, x>) != label, where sign(0) = +1."""
    x = np.asarray(x, dtype=float)
    if len(dataset) == 0:
        return 0.0
    return _error_rate(dataset.matrix(x.size), dataset.labels, x)


def _error_rate(U, labels, x):
    pred = np.where(U @ x >= 0.0, 1.0, -1.0)
    return float(np.mean(pred != labels))


def error_monitor(train: Dataset, test: Optional[Dataset] = None):
    """Callback for solver recorders returning (train_err, test_err).

    Design matrices are built on the first call and reused.
    """
    cache = {}

    def rate(key, ds, x):
        if len(ds) == 0:
            return 0.0
        if key not in cache:
            cache[key] = (ds.matrix(x.size), ds.labels)
        return _error_rate(*cache[key], x)

    def monitor(x):
        x = np.asarray(x, dtype=float)
        te = rate("test", test, x) if test is not None else float("nan")
        return rate("train", train, x), te
    return monitor


# Category counts of 22 one-hot attributes, 112 features in total.
MUSHROOM_LEVELS = (6, 4, 10, 2, 9, 2, 2, 2, 12, 2, 4, 4, 4, 9, 9, 1, 4, 3, 5, 9, 6, 3)
MUSHROOM_SIZES = (6499, 1625)


def synthetic_mushrooms(seed: int = 0, m: int = sum(MUSHROOM_SIZES), concentration: float = 0.7,
                        informative: float = 0.35) -> Dataset:
    """Mushrooms-shaped categorical data: 22 one-hot attributes, n = 112, binary labels.

    Each attribute draws its category from a class-conditional distribution.
    A fraction ``1 - informative`` of the attributes share the same
    distribution across both classes; the rest differ, so the classes
    overlap but are well separated overall.
    """
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random(m) < 0.518, 1, -1)
    offsets = np.concatenate([[0], np.cumsum(MUSHROOM_LEVELS)[:-1]])
    cols = np.empty((m, len(MUSHROOM_LEVELS)), dtype=np.int64)
    for a, (k, off) in enumerate(zip(MUSHROOM_LEVELS, offsets)):
        shared = rng.dirichlet(np.full(k, concentration))
        if rng.random() < informative:
            pos, neg = rng.dirichlet(np.full(k, concentration)), rng.dirichlet(np.full(k, concentration))
        else:
            pos = neg = shared
        pick = np.where(labels > 0, _draw(rng, pos, m), _draw(rng, neg, m))
        cols[:, a] = off + pick
    X = sparse.csr_matrix((np.ones(cols.size), cols.ravel(), np.arange(0, cols.size + 1, cols.shape[1])),
                          shape=(m, sum(MUSHROOM_LEVELS)))
    return Dataset.from_arrays(X, labels, name="mushrooms-synthetic")


def _draw(rng, p, m):
    return rng.choice(p.size, size=m, p=p)


def mushrooms_split(seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Synthetic Mushrooms-like train/test pair with 6499/1625 samples."""
    data = synthetic_mushrooms(seed)
    return split_train_test(data, MUSHROOM_SIZES[1] / len(data), seed)


def logistic_toy(m: int, n: int, seed: int = 0, flip: float = 0.1, scale: float = 1.0, density: float = 1.0) -> Dataset:
    """Gaussian features with labels from a noisy linear rule.

    Flipping a fraction ``flip`` of the labels keeps the classes overlapping,
    so the unregularised loss has a finite minimiser for moderate m/n.
    """
    rng = np.random.default_rng(seed)
    X = scale * rng.standard_normal((m, n)) / np.sqrt(n)
    if density < 1.0:
        X *= rng.random((m, n)) < density
    w = rng.standard_normal(n)
    y = np.where(X @ w >= 0.0, 1, -1)
    y = np.where(rng.random(m) < flip, -y, y)
    return Dataset.from_arrays(X, y, name=f"toy-{m}x{n}")
