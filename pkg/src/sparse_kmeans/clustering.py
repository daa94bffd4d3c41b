"""Seeding, objective, the dense reference iteration, and the run driver.

The reference path works on fully dense matrices and serves as the oracle the
sparse variants are checked against: same seeding, same canonical tie rule,
same update arithmetic.  run() drives any variant from a seeded initial state
to convergence, recording the objective, the operation tallies, and the
analytic loop volumes at every iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .counters import OpCounters, mult_volume_ifn, mult_volume_ivf
from .data import Dataset, build_inverted_file
from .means import MeanSet
from .variants import (
    MEAN_REPRESENTATION,
    VARIANTS,
    Assignment,
    Workspace,
    assign_step,
    update_step,
)

__all__ = [
    "SplitMix64",
    "init_means",
    "objective_cosine",
    "reference_iterate",
    "IterationRecord",
    "RunResult",
    "run",
]


class SplitMix64:
    """SplitMix64 PRNG (Steele, Lea, Flood 2014), with the published constants
    0x9E3779B97F4A7C15 / 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB.

    Chosen so that seeds are portable: any implementation of this generator
    plus the partial Fisher-Yates draw below selects identical means.
    """

    _MASK = 0xFFFFFFFFFFFFFFFF

    def __init__(self, seed: int):
        self._state = seed & self._MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & self._MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n


def sample_without_replacement(n: int, k: int, seed: int) -> np.ndarray:
    """First k slots of a partial Fisher-Yates shuffle of 0..n-1."""
    rng = SplitMix64(seed)
    idx = np.arange(n, dtype=np.int64)
    for i in range(k):
        j = i + rng.below(n - i)
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k]


def init_means(
    ds: Dataset, k: int, seed: int, representation: str = "dense"
) -> MeanSet:
    """Seeded selection of k distinct object vectors as the initial means.

    Identical (ds, k, seed) always selects identical objects, bit for bit,
    whatever representation is requested.
    """
    if k < 1 or k > ds.n:
        raise ValueError(f"k must lie in 1..{ds.n}, got {k}")
    if not ds.normalized:
        raise ValueError("means must be drawn from a normalized dataset")
    chosen = sample_without_replacement(ds.n, k, seed)
    counts = ds.nnz_per_doc[chosen]
    indptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    parts_t = [ds.term_ids[ds.indptr[i] : ds.indptr[i + 1]] for i in chosen]
    parts_v = [ds.values[ds.indptr[i] : ds.indptr[i + 1]] for i in chosen]
    terms = np.concatenate(parts_t) if parts_t else np.empty(0, dtype=np.int32)
    values = np.concatenate(parts_v) if parts_v else np.empty(0, dtype=np.float64)
    return MeanSet.from_csr(indptr, terms, values, ds.dim, representation)


def objective_cosine(ds: Dataset, asg: Assignment, means: MeanSet) -> float:
    """Summed cosine similarity of every object to its assigned mean.

    The per-object similarities are totaled with exact summation (fsum) so
    the recorded objective sequence is noise-free at the 1e-12 scale.
    """
    if asg.n != ds.n:
        raise ValueError("assignment length does not match the dataset")
    if asg.labels.size and int(asg.labels.max()) > means.k:
        raise ValueError("assignment references a mean the set does not hold")
    owners = np.repeat(np.arange(ds.n), ds.nnz_per_doc)
    rows = (asg.labels - 1)[owners]
    contrib = ds.values * means.dense[rows, ds.term_ids - 1]
    sims = np.bincount(owners, weights=contrib, minlength=ds.n)
    return math.fsum(sims.tolist())


def _ref_assign(ds: Dataset, means: MeanSet) -> Assignment:
    sims = ds.dense @ means.dense.T
    labels = (np.argmax(sims, axis=1) + 1).astype(np.int32)
    return Assignment.from_labels(labels, means.k)


def _ref_update(ds: Dataset, asg: Assignment, prev: MeanSet) -> MeanSet:
    k, dim = prev.k, prev.dim
    acc = np.zeros((k, dim), dtype=np.float64)
    owners = np.repeat(np.arange(ds.n), ds.nnz_per_doc)
    np.add.at(acc, ((asg.labels - 1)[owners], ds.term_ids - 1), ds.values)
    retained = np.asarray(asg.sizes == 0)
    live = ~retained
    acc[live] /= asg.sizes[live, None]
    norms = np.sqrt((acc[live] * acc[live]).sum(axis=1))
    acc[live] /= norms[:, None]
    if retained.any():
        acc[retained] = prev.dense[retained]
    out = MeanSet.from_dense(acc, "dense")
    return MeanSet(
        out.k, out.dim, "dense", out.indptr, out.term_ids, out.values, retained
    )


def reference_iterate(ds: Dataset, means: MeanSet) -> tuple[Assignment, MeanSet]:
    """One dense assignment + update pass, the oracle for every variant."""
    if means.representation != "dense":
        raise ValueError("the reference iteration takes dense means")
    asg = _ref_assign(ds, means)
    return asg, _ref_update(ds, asg, means)


@dataclass(frozen=True)
class IterationRecord:
    """One iteration: objective and tallies under the means that produced it."""

    index: int
    objective: float
    assignment_digest: int
    counters: OpCounters
    mean_terms_total: int
    volume_ifn: int
    volume_ivf: int
    labels: np.ndarray = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "iter": self.index,
            "objective": self.objective,
            "assignment_digest": f"0x{self.assignment_digest:016x}",
            "counters": self.counters.to_dict(),
            "mean_terms_total": self.mean_terms_total,
            "volume_ifn": self.volume_ifn,
            "volume_ivf": self.volume_ivf,
        }


@dataclass
class RunResult:
    """Everything one clustering run produced, per iteration and final."""

    variant: str
    k: int
    seed: int
    max_iter: int
    backend: str
    n: int
    dim: int
    sum_nnz: int
    records: list[IterationRecord]
    final_assignment: Assignment
    final_means: MeanSet
    converged: bool
    epsilon: float | None = None
    history_means: list[MeanSet] | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def objectives(self) -> list[float]:
        return [r.objective for r in self.records]

    def to_json_dict(self) -> dict:
        return {
            "meta": {
                "variant": self.variant,
                "k": self.k,
                "seed": self.seed,
                "max_iter": self.max_iter,
                "epsilon": self.epsilon,
                "backend": self.backend,
                "dataset": {"N": self.n, "D": self.dim, "sum_nnz": self.sum_nnz},
            },
            "converged": self.converged,
            "iterations": self.iterations,
            "per_iteration": [r.to_json_dict() for r in self.records],
            "final": {
                "assignment_digest": f"0x{self.final_assignment.digest():016x}",
                "sizes": self.final_assignment.sizes.tolist(),
                "mean_terms_total": self.final_means.sum_terms,
                "mean_representation": self.final_means.representation,
            },
        }


def run(
    variant: str,
    ds: Dataset,
    k: int,
    seed: int,
    max_iter: int = 50,
    epsilon: float | None = None,
    keep_history: bool = False,
    backend: str | None = None,
) -> RunResult:
    """Iterate one variant from its seeded initial state until the assignment
    repeats, or the optional objective-delta threshold is met, or max_iter.

    Each record holds the objective and tallies computed under the means the
    iteration assigned against (the previous iteration's update).
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choices: {', '.join(VARIANTS)}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    backend_name = backend or kernels.default_backend()
    means = init_means(ds, k, seed, representation=MEAN_REPRESENTATION[variant])
    obj_inverted = build_inverted_file(ds) if variant == "IVFD" else None
    workspace = Workspace()
    vol_ifn = mult_volume_ifn(ds, k)

    records: list[IterationRecord] = []
    history: list[MeanSet] = []
    prev_labels: np.ndarray | None = None
    prev_obj: float | None = None
    asg: Assignment | None = None
    converged = False

    for r in range(1, max_iter + 1):
        ctr = OpCounters()
        if variant == "REF":
            asg = _ref_assign(ds, means)
        else:
            asg = assign_step(
                variant, ds, means, ctr,
                backend=backend_name, workspace=workspace, obj_inverted=obj_inverted,
            )
        obj = objective_cosine(ds, asg, means)
        records.append(
            IterationRecord(
                index=r,
                objective=obj,
                assignment_digest=asg.digest(),
                counters=ctr,
                mean_terms_total=means.sum_terms,
                volume_ifn=vol_ifn,
                volume_ivf=mult_volume_ivf(ds, means),
                labels=asg.labels,
            )
        )
        if keep_history:
            history.append(means)
        if prev_labels is not None and np.array_equal(asg.labels, prev_labels):
            converged = True
            break
        if epsilon is not None and prev_obj is not None and obj - prev_obj <= epsilon:
            converged = True
            break
        if variant == "REF":
            new_means = _ref_update(ds, asg, means)
        else:
            new_means = update_step(variant, ds, asg, means)
        prev_labels = asg.labels
        prev_obj = obj
        means = new_means

    return RunResult(
        variant=variant,
        k=k,
        seed=seed,
        max_iter=max_iter,
        backend=backend_name if variant != "REF" else "reference",
        n=ds.n,
        dim=ds.dim,
        sum_nnz=ds.sum_nnz,
        records=records,
        final_assignment=asg,
        final_means=means,
        converged=converged,
        epsilon=epsilon,
        history_means=history if keep_history else None,
    )
