"""Operation tallies and the analytic instruction / multiplication models.

The assignment kernels report exact integer tallies of the work they did.
This module holds the tally container plus the closed-form volumes the
tallies must reproduce: the full-expression inner loop runs k times per
stored object term, while the postings-based inner loops run once per
(object term, mean posting) pair.  Scaling each volume by the per-entry
instruction cost of its loop body gives the modeled instruction counts and
the crossover condition between the two loop shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .means import MeanSet

#: Kernel counter slots, in the order the kernels write them.
COUNTER_FIELDS = ("mults", "adds", "inner_entries", "branch_checks", "merge_steps")


@dataclass
class OpCounters:
    """Nonnegative 64-bit tallies of one assignment pass (or one iteration)."""

    mults: int = 0
    adds: int = 0
    inner_entries: int = 0
    branch_checks: int = 0
    merge_steps: int = 0

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "OpCounters":
        return cls(*(int(x) for x in arr))

    def to_dict(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in COUNTER_FIELDS}

    def add_array(self, arr: np.ndarray) -> None:
        for name, x in zip(COUNTER_FIELDS, arr):
            setattr(self, name, getattr(self, name) + int(x))


@dataclass(frozen=True)
class InstModelParams:
    """Instructions per inner-loop entry: ``alpha`` for the full-expression
    loop, ``beta`` for the postings loop (it also loads the owner id).

    Both are architecture constants; the defaults were measured on the
    reference machine.
    """

    alpha: float = 28.0
    beta: float = 40.0

    def __post_init__(self):
        if not (self.beta > self.alpha > 0):
            raise ValueError("require beta > alpha > 0")


def mult_volume_ifn(ds: Dataset, k: int) -> int:
    """Inner-loop multiplications of the full-expression scan: k * sum_i (nt)_i."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return k * ds.sum_nnz


def mult_volume_ivf(ds: Dataset, means: MeanSet) -> int:
    """Inner-loop multiplications of the postings scan: sum_p (no)_p * (nc)_p.

    Summed term-wise, which must agree exactly with the object-wise tally
    sum_i sum_h (nc)_{t_(i,h)} the kernel accumulates.
    """
    if ds.dim != means.dim:
        raise ValueError("dataset and means disagree on dim")
    no = ds.doc_freq.astype(np.int64)
    nc = means.centroid_freq.astype(np.int64)
    return int(np.dot(no, nc))


def modeled_instructions(variant: str, volume: int, params: InstModelParams) -> float:
    """Modeled triple-loop instructions: per-entry cost times loop volume."""
    if variant == "IFN":
        return params.alpha * volume
    if variant == "IVF":
        return params.beta * volume
    raise ValueError(f"no instruction model for variant {variant!r}")


@dataclass(frozen=True)
class CrossoverCheck:
    """Outcome of the loop-shape crossover test.

    ``ivf_faster`` is True when the architecture ratio alpha/beta exceeds the
    data ratio (1/k) * sum_p (nc)_p (no)_p / sum_p (no)_p, i.e. when the
    postings loop is predicted to execute fewer instructions.
    """

    ivf_faster: bool
    arch_ratio: float
    data_ratio: float


def ivf_beats_ifn(ds: Dataset, means: MeanSet, params: InstModelParams) -> CrossoverCheck:
    """Compare alpha/beta against the mean postings length per object term,
    normalized by k.  Both sides of the inequality are reported."""
    k = means.k
    if k < 1:
        raise ValueError("k must be >= 1")
    total_no = int(ds.doc_freq.sum())
    if total_no == 0:
        raise ValueError("dataset has no stored terms")
    arch_ratio = params.alpha / params.beta
    data_ratio = mult_volume_ivf(ds, means) / (k * total_no)
    return CrossoverCheck(arch_ratio > data_ratio, arch_ratio, data_ratio)
