"""Sparse document vectors, inverted-file postings, and memory accounting.

Feature vectors live on the unit hypersphere and are stored sparsely as
sorted (term_id, value) pairs with 1-based term ids.  The inverted file is
the transpose layout: one postings list per term, holding (owner_id, value)
pairs sorted by owner.  Both layouts are backed by flat CSR-style arrays so
the assignment kernels can walk them without indirection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

#: Bytes of one stored (id, value) pair: a 4-byte id plus an 8-byte value,
#: kept in parallel arrays (no struct padding).
TUPLE_BYTES = 12

#: Decimal megabyte, the unit used in footprint summaries.
MB = 10**6


class CorruptionError(RuntimeError):
    """An id inside a postings list points outside its owner range."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _rows_strictly_increasing(arr: np.ndarray, indptr: np.ndarray) -> bool:
    """True when arr is strictly increasing inside every CSR row."""
    if arr.size < 2:
        return True
    inner = np.ones(arr.size, dtype=bool)
    starts = indptr[1:-1]
    inner[starts[starts < arr.size]] = False  # row starts may decrease
    return not np.any((np.diff(arr) <= 0) & inner[1:])


@dataclass(frozen=True)
class SparseVector:
    """A sparse unit-hypersphere point: parallel arrays of term ids and values.

    ``term_ids`` are 1-based and strictly increasing; ``values`` are finite
    and nonzero.  Instances are immutable and safe to share across threads.
    """

    term_ids: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.term_ids, dtype=np.int32)
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if t.ndim != 1 or v.ndim != 1 or t.shape != v.shape:
            raise ValueError("term_ids and values must be 1-D and parallel")
        if t.size:
            if t[0] < 1:
                raise ValueError("term ids are 1-based")
            if np.any(np.diff(t) <= 0):
                raise ValueError("term ids must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if np.any(v == 0.0):
            raise ValueError("stored values must be nonzero")
        object.__setattr__(self, "term_ids", _frozen(t))
        object.__setattr__(self, "values", _frozen(v))

    @property
    def nnz(self) -> int:
        return int(self.term_ids.size)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.term_ids.tolist(), self.values.tolist()))

    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.values * self.values)))

    def to_dense(self, dim: int) -> np.ndarray:
        """Expand to a length-``dim`` dense array; slot ``t - 1`` holds term t."""
        if self.term_ids.size and int(self.term_ids[-1]) > dim:
            raise ValueError(f"term id {int(self.term_ids[-1])} exceeds dim {dim}")
        out = np.zeros(dim, dtype=np.float64)
        out[self.term_ids - 1] = self.values
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.term_ids, other.term_ids) and np.array_equal(
            self.values, other.values
        )


def sparse_dot(a: SparseVector, b: SparseVector) -> float:
    """Inner product of two sorted sparse vectors via a two-pointer merge."""
    ta, va = a.term_ids, a.values
    tb, vb = b.term_ids, b.values
    i = j = 0
    na, nb = ta.size, tb.size
    acc = 0.0
    while i < na and j < nb:
        x, y = ta[i], tb[j]
        if x < y:
            i += 1
        elif y < x:
            j += 1
        else:
            acc += va[i] * vb[j]
            i += 1
            j += 1
    return float(acc)


def sparsity(v: SparseVector, dim: int) -> float:
    """Nonzero count over dimensionality, in [0, 1]."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if v.term_ids.size and int(v.term_ids[-1]) > dim:
        raise ValueError("vector has term ids beyond dim")
    return v.nnz / dim


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of sparse vectors in CSR layout.

    ``indptr`` has length n + 1; row i occupies ``term_ids[indptr[i]:indptr[i+1]]``
    with strictly increasing 1-based term ids.  ``normalized`` asserts every
    row has unit L2 norm (within 1e-12).
    """

    dim: int
    indptr: np.ndarray
    term_ids: np.ndarray
    values: np.ndarray
    normalized: bool = False
    dropped_docs: tuple[int, ...] = ()

    _NORM_TOL = 1e-12

    def __post_init__(self):
        ip = np.ascontiguousarray(self.indptr, dtype=np.int64)
        t = np.ascontiguousarray(self.term_ids, dtype=np.int32)
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if ip.ndim != 1 or ip.size < 1 or ip[0] != 0 or ip[-1] != t.size:
            raise ValueError("malformed indptr")
        if np.any(np.diff(ip) < 0):
            raise ValueError("indptr must be non-decreasing")
        if t.shape != v.shape:
            raise ValueError("term_ids and values must be parallel")
        if t.size:
            if t.min() < 1 or t.max() > self.dim:
                raise ValueError("term ids must lie in 1..dim")
            if not _rows_strictly_increasing(t, ip):
                raise ValueError("term ids must be strictly increasing per row")
        if not np.all(np.isfinite(v)) or np.any(v == 0.0):
            raise ValueError("values must be finite and nonzero")
        if self.normalized and ip.size > 1:
            sq = np.bincount(
                np.repeat(np.arange(ip.size - 1), np.diff(ip)),
                weights=v * v,
                minlength=ip.size - 1,
            )
            if np.any(np.abs(np.sqrt(sq) - 1.0) > self._NORM_TOL):
                raise ValueError("normalized dataset has a non-unit row")
        object.__setattr__(self, "indptr", _frozen(ip))
        object.__setattr__(self, "term_ids", _frozen(t))
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_vectors(
        cls,
        vectors: Sequence[SparseVector],
        dim: int,
        normalized: bool = False,
        dropped_docs: Iterable[int] = (),
    ) -> "Dataset":
        counts = np.array([v.nnz for v in vectors], dtype=np.int64)
        indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        if vectors:
            term_ids = np.concatenate([v.term_ids for v in vectors])
            values = np.concatenate([v.values for v in vectors])
        else:
            term_ids = np.empty(0, dtype=np.int32)
            values = np.empty(0, dtype=np.float64)
        return cls(dim, indptr, term_ids, values, normalized, tuple(dropped_docs))

    @property
    def n(self) -> int:
        return int(self.indptr.size - 1)

    @property
    def sum_nnz(self) -> int:
        return int(self.term_ids.size)

    @cached_property
    def nnz_per_doc(self) -> np.ndarray:
        return _frozen(np.diff(self.indptr))

    @cached_property
    def doc_freq(self) -> np.ndarray:
        """Per-term document frequencies; slot ``p - 1`` counts term p."""
        return _frozen(np.bincount(self.term_ids, minlength=self.dim + 1)[1:])

    def vector(self, i: int) -> SparseVector:
        s, e = int(self.indptr[i]), int(self.indptr[i + 1])
        return SparseVector(self.term_ids[s:e].copy(), self.values[s:e].copy())

    @cached_property
    def vectors(self) -> tuple[SparseVector, ...]:
        return tuple(self.vector(i) for i in range(self.n))

    @cached_property
    def dense(self) -> np.ndarray:
        """Dense (n, dim) expansion; column ``t - 1`` holds term t."""
        out = np.zeros((self.n, self.dim), dtype=np.float64)
        rows = np.repeat(np.arange(self.n), self.nnz_per_doc)
        out[rows, self.term_ids - 1] = self.values
        return _frozen(out)


def avg_sparsity(ds: Dataset) -> float:
    """Mean of per-vector sparsity over the whole set."""
    if ds.n < 1:
        raise ValueError("dataset is empty")
    return float(np.mean(ds.nnz_per_doc / ds.dim))


@dataclass(frozen=True)
class InvertedFile:
    """Per-term postings of (owner_id, value), owners strictly increasing.

    The postings of term t (1-based) occupy the half-open CSR slice
    ``owner_ids[indptr[t-1]:indptr[t]]``.  ``owner_kind`` records whether the
    owners are data objects or means.
    """

    dim: int
    n_owners: int
    owner_kind: str  # "objects" | "means"
    indptr: np.ndarray
    owner_ids: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.owner_kind not in ("objects", "means"):
            raise ValueError("owner_kind must be 'objects' or 'means'")
        ip = np.ascontiguousarray(self.indptr, dtype=np.int64)
        o = np.ascontiguousarray(self.owner_ids, dtype=np.int32)
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if ip.size != self.dim + 1 or ip[0] != 0 or ip[-1] != o.size:
            raise ValueError("malformed indptr")
        if o.size and (o.min() < 1 or o.max() > self.n_owners):
            raise CorruptionError("posting owner id outside 1..n_owners")
        if not _rows_strictly_increasing(o, ip):
            raise ValueError("owner ids must be strictly increasing per term")
        object.__setattr__(self, "indptr", _frozen(ip))
        object.__setattr__(self, "owner_ids", _frozen(o))
        object.__setattr__(self, "values", _frozen(v))

    @property
    def sum_postings(self) -> int:
        return int(self.owner_ids.size)

    @cached_property
    def posting_counts(self) -> np.ndarray:
        """Postings-list lengths per term: (no)_p for objects, (nc)_p for means."""
        return _frozen(np.diff(self.indptr))

    def postings(self, term_id: int) -> list[tuple[int, float]]:
        if not 1 <= term_id <= self.dim:
            raise ValueError(f"term id {term_id} outside 1..{self.dim}")
        s, e = int(self.indptr[term_id - 1]), int(self.indptr[term_id])
        return list(zip(self.owner_ids[s:e].tolist(), self.values[s:e].tolist()))

    def to_vectors(self) -> list[SparseVector]:
        """Invert back to the standard per-owner layout (the round trip)."""
        terms = np.repeat(np.arange(1, self.dim + 1, dtype=np.int32), self.posting_counts)
        order = np.argsort(self.owner_ids, kind="stable")
        owners = self.owner_ids[order]
        counts = np.bincount(owners, minlength=self.n_owners + 1)[1:]
        indptr = np.zeros(self.n_owners + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        t_sorted = terms[order]
        v_sorted = self.values[order]
        return [
            SparseVector(
                t_sorted[indptr[i] : indptr[i + 1]].copy(),
                v_sorted[indptr[i] : indptr[i + 1]].copy(),
            )
            for i in range(self.n_owners)
        ]


def build_inverted_file(
    source: Dataset | Sequence[SparseVector],
    dim: int | None = None,
    owner_kind: str = "objects",
) -> InvertedFile:
    """Transpose a vector set into per-term postings sorted by owner id."""
    if isinstance(source, Dataset):
        dim = source.dim if dim is None else dim
        n = source.n
        counts = source.nnz_per_doc
        terms = source.term_ids
        values = source.values
    else:
        if dim is None:
            raise ValueError("dim is required when passing raw vectors")
        n = len(source)
        counts = np.array([v.nnz for v in source], dtype=np.int64)
        terms = (
            np.concatenate([v.term_ids for v in source])
            if n
            else np.empty(0, dtype=np.int32)
        )
        values = (
            np.concatenate([v.values for v in source])
            if n
            else np.empty(0, dtype=np.float64)
        )
    if terms.size and int(terms.max()) > dim:
        raise ValueError(f"term id {int(terms.max())} exceeds dim {dim}")
    owners = np.repeat(np.arange(1, n + 1, dtype=np.int32), counts)
    # Stable sort by term keeps owners ascending inside each postings list.
    order = np.argsort(terms, kind="stable")
    per_term = np.bincount(terms, minlength=dim + 1)[1:]
    indptr = np.zeros(dim + 1, dtype=np.int64)
    np.cumsum(per_term, out=indptr[1:])
    return InvertedFile(dim, n, owner_kind, indptr, owners[order], values[order])


@dataclass(frozen=True)
class FootprintReport:
    """Byte accounting for one dataset / mean-set pairing."""

    object_bytes: int
    mean_bytes: int
    tuple_bytes: int = TUPLE_BYTES

    def __post_init__(self):
        if self.object_bytes < 0 or self.mean_bytes < 0:
            raise ValueError("byte counts must be nonnegative")

    @property
    def total_bytes(self) -> int:
        return self.object_bytes + self.mean_bytes

    @property
    def object_mb(self) -> float:
        return self.object_bytes / MB

    @property
    def mean_mb(self) -> float:
        return self.mean_bytes / MB

    @property
    def total_mb(self) -> float:
        return self.total_bytes / MB


def object_bytes(sum_nnz: int, duplicate: bool = False) -> int:
    """Bytes held by the object vectors; doubled when both the standard and
    inverted layouts are kept resident (the data-inverted variant does)."""
    b = sum_nnz * TUPLE_BYTES
    return 2 * b if duplicate else b


def mean_bytes(representation: str, k: int, dim: int, sum_mean_terms: int) -> int:
    """Bytes held by the mean set under the given representation."""
    if representation in ("dense", "dense_inverted"):
        return k * dim * 8
    if representation in ("sparse_inverted", "sparse_standard"):
        return sum_mean_terms * TUPLE_BYTES
    raise ValueError(f"unknown representation {representation!r}")


def footprint(ds: Dataset, means, duplicate_objects: bool = False) -> FootprintReport:
    """Exact integer byte counts for a dataset plus a mean set.

    ``duplicate_objects`` doubles the object side, matching a run that keeps
    both the standard and the inverted object layout in memory.
    """
    return FootprintReport(
        object_bytes=object_bytes(ds.sum_nnz, duplicate_objects),
        mean_bytes=mean_bytes(means.representation, means.k, means.dim, means.sum_terms),
    )
