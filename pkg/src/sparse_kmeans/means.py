"""Mean (centroid) sets in their four interchangeable representations.

A mean set is canonically stored as a mean-major CSR (one sorted sparse row
per mean) plus a representation tag.  The tag records which layout the
algorithm variant nominally holds in memory, which is what the footprint
accounting charges for; the other layouts are derived on demand and cached.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .data import InvertedFile, SparseVector, _frozen, _rows_strictly_increasing

REPRESENTATIONS = ("dense", "dense_inverted", "sparse_inverted", "sparse_standard")

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class MeanSet:
    """k unit-norm mean vectors over a dim-sized term space.

    ``retained`` flags means carried over unchanged from an empty cluster.
    All representations are losslessly interconvertible (zero padding aside).
    """

    k: int
    dim: int
    representation: str
    indptr: np.ndarray
    term_ids: np.ndarray
    values: np.ndarray
    retained: np.ndarray

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        ip = np.ascontiguousarray(self.indptr, dtype=np.int64)
        t = np.ascontiguousarray(self.term_ids, dtype=np.int32)
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        r = np.ascontiguousarray(self.retained, dtype=bool)
        if ip.size != self.k + 1 or ip[0] != 0 or ip[-1] != t.size:
            raise ValueError("malformed indptr")
        if r.size != self.k:
            raise ValueError("retained flags must have length k")
        if t.size and (t.min() < 1 or t.max() > self.dim):
            raise ValueError("term ids must lie in 1..dim")
        counts = np.diff(ip)
        if not _rows_strictly_increasing(t, ip):
            raise ValueError("term ids must be strictly increasing per mean")
        sq = np.bincount(
            np.repeat(np.arange(self.k), counts), weights=v * v, minlength=self.k
        )
        if np.any(np.abs(np.sqrt(sq) - 1.0) > _NORM_TOL):
            raise ValueError("every mean must have unit L2 norm")
        object.__setattr__(self, "indptr", _frozen(ip))
        object.__setattr__(self, "term_ids", _frozen(t))
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "retained", _frozen(r))

    # -- construction ------------------------------------------------------

    @classmethod
    def from_csr(
        cls,
        indptr: np.ndarray,
        term_ids: np.ndarray,
        values: np.ndarray,
        dim: int,
        representation: str = "sparse_standard",
        retained: np.ndarray | None = None,
    ) -> "MeanSet":
        k = int(indptr.size - 1)
        if retained is None:
            retained = np.zeros(k, dtype=bool)
        return cls(k, dim, representation, indptr, term_ids, values, retained)

    @classmethod
    def from_vectors(
        cls,
        vectors: Sequence[SparseVector],
        dim: int,
        representation: str = "sparse_standard",
    ) -> "MeanSet":
        counts = np.array([v.nnz for v in vectors], dtype=np.int64)
        indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        terms = (
            np.concatenate([v.term_ids for v in vectors])
            if vectors
            else np.empty(0, dtype=np.int32)
        )
        values = (
            np.concatenate([v.values for v in vectors])
            if vectors
            else np.empty(0, dtype=np.float64)
        )
        return cls.from_csr(indptr, terms, values, dim, representation)

    @classmethod
    def from_dense(
        cls, matrix: np.ndarray, representation: str = "dense"
    ) -> "MeanSet":
        """Extract the nonzero pattern of a (k, dim) matrix; values are kept
        bit-for-bit, so dense round trips are exact."""
        k, dim = matrix.shape
        rows, cols = np.nonzero(matrix)
        counts = np.bincount(rows, minlength=k)
        indptr = np.zeros(k + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls.from_csr(
            indptr,
            (cols + 1).astype(np.int32),
            matrix[rows, cols].astype(np.float64),
            dim,
            representation,
        )

    def with_representation(self, representation: str) -> "MeanSet":
        if representation == self.representation:
            return self
        return MeanSet(
            self.k,
            self.dim,
            representation,
            self.indptr,
            self.term_ids,
            self.values,
            self.retained,
        )

    # -- statistics --------------------------------------------------------

    @cached_property
    def term_counts(self) -> np.ndarray:
        """Distinct terms per mean, (ntm)_j."""
        return _frozen(np.diff(self.indptr))

    @cached_property
    def centroid_freq(self) -> np.ndarray:
        """Means containing each term, (nc)_p; slot ``p - 1`` holds term p."""
        return _frozen(np.bincount(self.term_ids, minlength=self.dim + 1)[1:])

    @property
    def sum_terms(self) -> int:
        """Total stored tuples, equal whether counted per mean or per term."""
        return int(self.term_ids.size)

    # -- derived layouts (cached, all views read-only) ----------------------

    @cached_property
    def dense(self) -> np.ndarray:
        """Row-major (k, dim) matrix; column ``t - 1`` holds term t."""
        out = np.zeros((self.k, self.dim), dtype=np.float64)
        rows = np.repeat(np.arange(self.k), self.term_counts)
        out[rows, self.term_ids - 1] = self.values
        return _frozen(out)

    @cached_property
    def dense_inverted(self) -> np.ndarray:
        """Term-major (dim, k) matrix, the transpose layout of ``dense``."""
        return _frozen(np.ascontiguousarray(self.dense.T))

    @cached_property
    def inverted(self) -> InvertedFile:
        """Per-term postings of (mean_id, value) sorted by mean id."""
        owners = np.repeat(np.arange(1, self.k + 1, dtype=np.int32), self.term_counts)
        order = np.argsort(self.term_ids, kind="stable")
        per_term = np.bincount(self.term_ids, minlength=self.dim + 1)[1:]
        indptr = np.zeros(self.dim + 1, dtype=np.int64)
        np.cumsum(per_term, out=indptr[1:])
        return InvertedFile(
            self.dim, self.k, "means", indptr, owners[order], self.values[order]
        )

    def vectors(self) -> list[SparseVector]:
        return [
            SparseVector(
                self.term_ids[self.indptr[j] : self.indptr[j + 1]].copy(),
                self.values[self.indptr[j] : self.indptr[j + 1]].copy(),
            )
            for j in range(self.k)
        ]
