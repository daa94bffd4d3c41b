"""Clock-cycles-per-instruction model: degradation ratios, staged fitting,
and fit-error metrics.

The model is linear in three per-instruction degradation ratios,

    cpi = w0 + w1 * phi1 + w2 * phi2 + w3 * phi3,

with phi1 = (l1cm - llcm) / inst (L1 misses that still hit the last level),
phi2 = llcm / inst (misses that reach main memory), and phi3 = bm / inst
(branch mispredictions).  w0 is the base CPI with no stalls; the remaining
weights are per-ratio stall penalties, so all weights are nonnegative.

Weights are fitted per algorithm in five stages under sharing constraints:
MFN and IFN share w0 (identical triple-loop bodies), IFB and IFN share
w1 and w2 (they differ only by the inserted branch), and all four algorithms
share one w3.  Each stage is ordinary least squares over its stated free
parameters, clamped at zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

import numpy as np

FIT_ALGOS = ("MFN", "IFN", "IFB", "IVF")


class FitError(ValueError):
    """A fitting stage cannot proceed (missing series, misaligned k grids,
    or a rank-deficient design)."""


@dataclass(frozen=True)
class DfSample:
    """Hardware-counter totals for one (algorithm, k) run."""

    k: int
    inst: int
    l1cm: int
    llcm: int
    bm: int
    cycles: int

    def __post_init__(self):
        if self.inst <= 0:
            raise ValueError("inst must be positive")
        if not (self.l1cm >= self.llcm >= 0):
            raise ValueError("require l1cm >= llcm >= 0")
        if self.bm < 0 or self.cycles < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def cpi(self) -> float:
        return self.cycles / self.inst


@dataclass(frozen=True)
class PhiVector:
    """The three degradation ratios of one sample."""

    phi1: float
    phi2: float
    phi3: float

    def __post_init__(self):
        if min(self.phi1, self.phi2, self.phi3) < 0:
            raise ValueError("degradation ratios are nonnegative")


@dataclass(frozen=True)
class CpiWeights:
    """Fitted model weights; all are physical penalties, hence nonnegative."""

    w0: float
    w1: float
    w2: float
    w3: float

    def __post_init__(self):
        if min(self.w0, self.w1, self.w2, self.w3) < 0:
            raise ValueError("weights are nonnegative")


def phi(sample: DfSample) -> PhiVector:
    """Degradation ratios of one sample (validated on construction)."""
    return PhiVector(
        phi1=(sample.l1cm - sample.llcm) / sample.inst,
        phi2=sample.llcm / sample.inst,
        phi3=sample.bm / sample.inst,
    )


def cpi_predict(w: CpiWeights, p: PhiVector) -> float:
    return w.w0 + w.w1 * p.phi1 + w.w2 * p.phi2 + w.w3 * p.phi3


@dataclass(frozen=True)
class FitErrors:
    """Model-vs-actual errors: RMS in CPI units and max relative deviation,
    plus the percentage forms reported in summaries (RMS is scaled by the
    mean actual CPI)."""

    avg_err: float
    max_err: float
    avg_err_pct: float
    max_err_pct: float


def fit_errors(samples: Sequence[DfSample], weights: CpiWeights) -> FitErrors:
    if not samples:
        raise ValueError("need at least one sample")
    actual = np.array([s.cpi for s in samples])
    if np.any(actual == 0):
        raise ValueError("actual CPI of zero")
    model = np.array([cpi_predict(weights, phi(s)) for s in samples])
    avg = math.sqrt(float(np.mean((actual - model) ** 2)))
    mx = float(np.max(np.abs(model / actual - 1.0)))
    return FitErrors(
        avg_err=avg,
        max_err=mx,
        avg_err_pct=100.0 * avg / float(np.mean(actual)),
        max_err_pct=100.0 * mx,
    )


def _ols(X: np.ndarray, y: np.ndarray, stage: str) -> np.ndarray:
    """Least squares with a rank check; solutions are clamped at zero."""
    sol, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise FitError(f"{stage}: design is rank-deficient (collinear columns)")
    return np.maximum(sol, 0.0)


def _series(samples: Mapping[str, Sequence[DfSample]], algo: str):
    try:
        rows = samples[algo]
    except KeyError:
        raise FitError(f"missing sample series for {algo}") from None
    ks = [s.k for s in rows]
    if len(set(ks)) < 4:
        raise FitError(f"{algo}: need samples at >= 4 distinct k values")
    order = np.argsort(ks)
    rows = [rows[i] for i in order]
    phis = [phi(s) for s in rows]
    return (
        np.array([s.k for s in rows]),
        np.array([s.cpi for s in rows]),
        np.array([[p.phi1, p.phi2, p.phi3] for p in phis]),
    )


def fit_staged(samples: Mapping[str, Sequence[DfSample]]) -> dict[str, CpiWeights]:
    """Five-stage constrained fit over the MFN, IFN, IFB, and IVF series.

    1. MFN w1, w2 from the MFN-minus-IFN differences of cpi, phi1, phi2
       (the shared w0 cancels; no intercept, w3 = 0).
    2. MFN w0 from MFN's data with w1, w2 fixed and w3 = 0.
    3. IFN w1, w2 from IFN's data with w0 fixed to MFN's and w3 = 0.
    4. IFB w0, w3 from IFB's data with w1, w2 fixed to IFN's.  This stage
       produces the single w3 every algorithm shares.
    5. IVF w0, w1, w2 from IVF's data with w3 fixed to the shared value.
    """
    k_mfn, cpi_mfn, phi_mfn = _series(samples, "MFN")
    k_ifn, cpi_ifn, phi_ifn = _series(samples, "IFN")
    k_ifb, cpi_ifb, phi_ifb = _series(samples, "IFB")
    _, cpi_ivf, phi_ivf = _series(samples, "IVF")
    if not np.array_equal(k_mfn, k_ifn):
        raise FitError("stage 1: MFN and IFN must cover identical k grids")

    # stage 1: regress the pairwise differences, no intercept
    d_cpi = cpi_mfn - cpi_ifn
    d_phi = phi_mfn[:, :2] - phi_ifn[:, :2]
    w1_mfn, w2_mfn = _ols(d_phi, d_cpi, "stage 1 (MFN w1, w2)")

    # stage 2: MFN's intercept with its slopes pinned
    resid = cpi_mfn - phi_mfn[:, 0] * w1_mfn - phi_mfn[:, 1] * w2_mfn
    (w0_shared,) = _ols(np.ones((resid.size, 1)), resid, "stage 2 (MFN w0)")

    # stage 3: IFN's slopes with the shared intercept pinned
    w1_ifn, w2_ifn = _ols(
        phi_ifn[:, :2], cpi_ifn - w0_shared, "stage 3 (IFN w1, w2)"
    )

    # stage 4: IFB's intercept and the shared branch penalty
    resid = cpi_ifb - phi_ifb[:, 0] * w1_ifn - phi_ifb[:, 1] * w2_ifn
    X = np.column_stack([np.ones(resid.size), phi_ifb[:, 2]])
    w0_ifb, w3_shared = _ols(X, resid, "stage 4 (IFB w0, w3)")

    # stage 5: IVF with the shared branch penalty pinned
    resid = cpi_ivf - phi_ivf[:, 2] * w3_shared
    X = np.column_stack([np.ones(resid.size), phi_ivf[:, 0], phi_ivf[:, 1]])
    w0_ivf, w1_ivf, w2_ivf = _ols(X, resid, "stage 5 (IVF w0, w1, w2)")

    return {
        "MFN": CpiWeights(w0_shared, w1_mfn, w2_mfn, w3_shared),
        "IFN": CpiWeights(w0_shared, w1_ifn, w2_ifn, w3_shared),
        "IFB": CpiWeights(w0_ifb, w1_ifn, w2_ifn, w3_shared),
        "IVF": CpiWeights(w0_ivf, w1_ivf, w2_ivf, w3_shared),
    }


def load_samples_csv(source: str | IO[str]) -> dict[str, list[DfSample]]:
    """Read "algo,k,inst,l1cm,llcm,bm,cycles" rows grouped by algorithm.

    Validation failures carry the 1-based CSV row number.
    """
    own = isinstance(source, str)
    fh = open(source, "r", encoding="utf-8", newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["algo", "k", "inst", "l1cm", "llcm", "bm", "cycles"]
        if header is None:
            raise ValueError("empty samples CSV")
        if [h.strip().lower() for h in header] != expected:
            raise ValueError(f"samples CSV must start with header {','.join(expected)}")
        out: dict[str, list[DfSample]] = {}
        for rowno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 7:
                raise ValueError(f"row {rowno}: expected 7 fields, got {len(row)}")
            algo = row[0].strip()
            try:
                sample = DfSample(*(int(x) for x in row[1:]))
            except ValueError as exc:
                raise ValueError(f"row {rowno}: {exc}") from None
            out.setdefault(algo, []).append(sample)
        return out
    finally:
        if own:
            fh.close()


def fit_report(samples: Mapping[str, Sequence[DfSample]]) -> dict:
    """Weights plus error metrics per algorithm, with the shared w3 surfaced."""
    weights = fit_staged(samples)
    report: dict = {"algorithms": {}, "shared_w3": weights["IVF"].w3}
    for algo in FIT_ALGOS:
        w = weights[algo]
        err = fit_errors(samples[algo], w)
        report["algorithms"][algo] = {
            "w0": w.w0,
            "w1": w.w1,
            "w2": w.w2,
            "w3": w.w3,
            "avg_err": err.avg_err,
            "avg_err_pct": err.avg_err_pct,
            "max_err": err.max_err,
            "max_err_pct": err.max_err_pct,
        }
    return report
