"""The algorithm variants: assignment steps over their mean representations
plus the shared sparse update step.

Every variant assigns each object to the mean of highest cosine similarity
under one canonical tie rule (smallest index among maximizers), so all of
them reproduce the dense reference solution whenever no similarities tie.
They differ only in the data structure walked by the inner loop, which is
exactly what the operation counters record.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .counters import OpCounters, COUNTER_FIELDS
from .data import CorruptionError, Dataset, InvertedFile, build_inverted_file
from .means import MeanSet

VARIANTS = ("REF", "IVF", "MFN", "IFN", "IFB", "TWM", "IVFD")

#: Mean representation each variant holds in memory.
MEAN_REPRESENTATION = {
    "REF": "dense",
    "MFN": "dense",
    "IFN": "dense_inverted",
    "IFB": "dense_inverted",
    "IVF": "sparse_inverted",
    "TWM": "sparse_standard",
    "IVFD": "sparse_standard",
}


@dataclass(frozen=True)
class Assignment:
    """Per-object cluster labels (1-based) and per-cluster member counts."""

    labels: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        sizes = np.ascontiguousarray(self.sizes, dtype=np.int64)
        if labels.size and (labels.min() < 1 or labels.max() > sizes.size):
            raise ValueError("labels must lie in 1..k")
        if int(sizes.sum()) != labels.size:
            raise ValueError("sizes must sum to the number of objects")
        labels.setflags(write=False)
        sizes.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def from_labels(cls, labels: np.ndarray, k: int) -> "Assignment":
        labels = np.ascontiguousarray(labels, dtype=np.int32)
        return cls(labels, np.bincount(labels - 1, minlength=k).astype(np.int64))

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def k(self) -> int:
        return int(self.sizes.size)

    def digest(self) -> int:
        return fnv1a64(self.labels.astype("<i4").tobytes())


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over raw bytes (labels are hashed as little-endian int32)."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


class Workspace:
    """Per-run scratch buffers, allocated once and reused every iteration."""

    def __init__(self):
        self._rho_k: np.ndarray | None = None
        self._rho_n: np.ndarray | None = None
        self._rho_max: np.ndarray | None = None

    def rho_k(self, k: int) -> np.ndarray:
        if self._rho_k is None or self._rho_k.size != k:
            self._rho_k = np.zeros(k, dtype=np.float64)
        return self._rho_k

    def rho_n(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if self._rho_n is None or self._rho_n.size != n:
            self._rho_n = np.zeros(n, dtype=np.float64)
            self._rho_max = np.zeros(n, dtype=np.float64)
        return self._rho_n, self._rho_max


def _finish(labels, k, counters, ctr_arr):
    if counters is not None:
        counters.add_array(ctr_arr)
    return Assignment.from_labels(labels, k)


def _require(means: MeanSet, representation: str, variant: str) -> None:
    if means.representation != representation:
        raise ValueError(
            f"{variant} needs means in {representation!r} form, "
            f"got {means.representation!r}"
        )


def _prep(ds: Dataset, means: MeanSet, backend):
    if ds.dim != means.dim:
        raise ValueError("dataset and means disagree on dim")
    if means.k < 1:
        raise ValueError("mean set is empty")
    mod = kernels.backend_module(backend)
    labels = np.empty(ds.n, dtype=np.int32)
    ctr = np.zeros(len(COUNTER_FIELDS), dtype=np.int64)
    return mod, labels, ctr


def assign_mfn(ds, means, counters=None, backend=None, workspace=None) -> Assignment:
    """Full-expression scan of row-major dense means (zeros multiplied)."""
    _require(means, "dense", "MFN")
    mod, labels, ctr = _prep(ds, means, backend)
    rho = (workspace or Workspace()).rho_k(means.k)
    mod.assign_mfn(ds.indptr, ds.term_ids, ds.values, means.dense, rho, labels, ctr)
    return _finish(labels, means.k, counters, ctr)


def assign_ifn(ds, means, counters=None, backend=None, workspace=None) -> Assignment:
    """Full-expression scan of the term-major dense matrix (zeros multiplied)."""
    _require(means, "dense_inverted", "IFN")
    mod, labels, ctr = _prep(ds, means, backend)
    rho = (workspace or Workspace()).rho_k(means.k)
    mod.assign_ifn(
        ds.indptr, ds.term_ids, ds.values, means.dense_inverted, rho, labels, ctr
    )
    return _finish(labels, means.k, counters, ctr)


def assign_ifb(ds, means, counters=None, backend=None, workspace=None) -> Assignment:
    """Term-major scan with a conditional branch skipping zero entries."""
    _require(means, "dense_inverted", "IFB")
    mod, labels, ctr = _prep(ds, means, backend)
    rho = (workspace or Workspace()).rho_k(means.k)
    mod.assign_ifb(
        ds.indptr, ds.term_ids, ds.values, means.dense_inverted, rho, labels, ctr
    )
    return _finish(labels, means.k, counters, ctr)


def assign_ivf(ds, means, counters=None, backend=None, workspace=None) -> Assignment:
    """Scan of the means' per-term postings (the inverted mean file)."""
    _require(means, "sparse_inverted", "IVF")
    mod, labels, ctr = _prep(ds, means, backend)
    inv = means.inverted
    if inv.n_owners != means.k:
        raise CorruptionError("mean postings reference owners beyond k")
    rho = (workspace or Workspace()).rho_k(means.k)
    mod.assign_ivf(
        ds.indptr, ds.term_ids, ds.values,
        inv.indptr, inv.owner_ids, inv.values, rho, labels, ctr,
    )
    return _finish(labels, means.k, counters, ctr)


def assign_twm(ds, means, counters=None, backend=None, workspace=None) -> Assignment:
    """Per-pair two-way merge over both sparse-standard layouts."""
    _require(means, "sparse_standard", "TWM")
    mod, labels, ctr = _prep(ds, means, backend)
    mod.assign_twm(
        ds.indptr, ds.term_ids, ds.values,
        means.indptr, means.term_ids, means.values, ds.dim, labels, ctr,
    )
    return _finish(labels, means.k, counters, ctr)


def assign_ivfd(
    ds, means, counters=None, backend=None, workspace=None, obj_inverted=None
) -> Assignment:
    """Scan of the objects' per-term postings, means taken as queries.

    Needs the object inverted file alongside the standard layout; it is built
    on the fly when not supplied.
    """
    _require(means, "sparse_standard", "IVFD")
    mod, labels, ctr = _prep(ds, means, backend)
    if obj_inverted is None:
        obj_inverted = build_inverted_file(ds)
    if obj_inverted.n_owners != ds.n or obj_inverted.dim != ds.dim:
        raise CorruptionError("object postings do not match the dataset")
    rho, rho_max = (workspace or Workspace()).rho_n(ds.n)
    mod.assign_ivfd(
        obj_inverted.indptr, obj_inverted.owner_ids, obj_inverted.values,
        means.indptr, means.term_ids, means.values, rho, rho_max, labels, ctr,
    )
    return _finish(labels, means.k, counters, ctr)


_ASSIGN: dict[str, Callable] = {
    "MFN": assign_mfn,
    "IFN": assign_ifn,
    "IFB": assign_ifb,
    "IVF": assign_ivf,
    "TWM": assign_twm,
}


def assign_step(
    variant: str,
    ds: Dataset,
    means: MeanSet,
    counters: OpCounters | None = None,
    backend: str | None = None,
    workspace: Workspace | None = None,
    obj_inverted: InvertedFile | None = None,
) -> Assignment:
    if variant == "IVFD":
        return assign_ivfd(ds, means, counters, backend, workspace, obj_inverted)
    try:
        fn = _ASSIGN[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}") from None
    return fn(ds, means, counters, backend, workspace)


# -- update step -------------------------------------------------------------


def _member_entry_order(ds: Dataset, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entry indices grouped cluster-major, objects ascending inside a cluster."""
    order = np.argsort(labels, kind="stable")
    lens = ds.nnz_per_doc[order]
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), order
    ends = np.cumsum(lens)
    seq = np.arange(total, dtype=np.int64)
    member = np.searchsorted(ends, seq, side="right")
    entry = seq - (ends[member] - lens[member]) + ds.indptr[order[member]]
    return entry, order


def update_means(
    ds: Dataset,
    asg: Assignment,
    prev: MeanSet,
    representation: str | None = None,
) -> MeanSet:
    """Average each cluster's members, L2-normalize, and emit sparsely.

    Per cluster: member values accumulate into a dense scratch in ascending
    object order, the scratch is divided by the member count and then by its
    L2 norm, and the nonzero slots are emitted in term order.  Empty clusters
    re-emit the previous mean unchanged and are flagged retained.
    """
    k = prev.k
    if asg.k != k or asg.n != ds.n:
        raise ValueError("assignment does not match dataset and means")
    representation = representation or prev.representation
    labels = asg.labels
    entry, order = _member_entry_order(ds, labels)
    tsub = ds.term_ids[entry]
    vsub = ds.values[entry]
    ent_counts = np.bincount(labels - 1, weights=ds.nnz_per_doc, minlength=k).astype(
        np.int64
    )
    bounds = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(ent_counts, out=bounds[1:])

    out_terms: list[np.ndarray] = []
    out_vals: list[np.ndarray] = []
    counts = np.empty(k, dtype=np.int64)
    retained = np.zeros(k, dtype=bool)
    for j in range(k):
        size = int(asg.sizes[j])
        if size == 0:
            s, e = int(prev.indptr[j]), int(prev.indptr[j + 1])
            out_terms.append(prev.term_ids[s:e])
            out_vals.append(prev.values[s:e])
            counts[j] = e - s
            retained[j] = True
            continue
        s, e = int(bounds[j]), int(bounds[j + 1])
        w = np.bincount(tsub[s:e] - 1, weights=vsub[s:e], minlength=ds.dim)
        w /= size
        nrm = np.sqrt(np.sum(w * w))
        nz = np.flatnonzero(w)
        out_terms.append((nz + 1).astype(np.int32))
        out_vals.append(w[nz] / nrm)
        counts[j] = nz.size

    indptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    terms = np.concatenate(out_terms) if out_terms else np.empty(0, dtype=np.int32)
    values = np.concatenate(out_vals) if out_vals else np.empty(0, dtype=np.float64)
    return MeanSet(k, ds.dim, representation, indptr, terms, values, retained)


def update_ivf(ds: Dataset, asg: Assignment, prev: MeanSet) -> MeanSet:
    """Update step emitting the means as per-term postings."""
    return update_means(ds, asg, prev, representation="sparse_inverted")


def update_sparse_standard(ds: Dataset, asg: Assignment, prev: MeanSet) -> MeanSet:
    """Update step emitting the means as per-mean sorted sparse vectors."""
    return update_means(ds, asg, prev, representation="sparse_standard")


def update_dense(ds: Dataset, asg: Assignment, prev: MeanSet) -> MeanSet:
    """Update step for the dense row-major mean matrix."""
    return update_means(ds, asg, prev, representation="dense")


def update_dense_inverted(ds: Dataset, asg: Assignment, prev: MeanSet) -> MeanSet:
    """Update step for the dense term-major mean matrix."""
    return update_means(ds, asg, prev, representation="dense_inverted")


_UPDATE: dict[str, Callable] = {
    "MFN": update_dense,
    "IFN": update_dense_inverted,
    "IFB": update_dense_inverted,
    "IVF": update_ivf,
    "TWM": update_sparse_standard,
    "IVFD": update_sparse_standard,
}


def update_step(variant: str, ds: Dataset, asg: Assignment, prev: MeanSet) -> MeanSet:
    try:
        fn = _UPDATE[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}") from None
    return fn(ds, asg, prev)
