"""Closed-form last-level-cache occupancy and miss models for the two
postings-based variants, under an idealized fully associative LRU cache.

A postings tuple costs tuple_bytes, so touching a term's postings list pulls
ceil(len * gamma) cache blocks, gamma being tuple_bytes / block_bytes.  When
the means are inverted, one object's scan touches each term's mean postings
with probability (no)_p / N; when the objects are inverted, one mean's scan
touches each term's object postings with probability (nc)_p / k.  Everything
else follows from those two expectations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from .counters import InstModelParams
from .data import TUPLE_BYTES


@dataclass(frozen=True)
class CacheParams:
    """Last-level cache geometry.  Defaults describe the reference machine:
    a 35 MiB cache in 64-byte blocks, of which 5e5 blocks (32 MB) are assumed
    usable by postings."""

    cache_bytes: int = 36_700_160
    block_bytes: int = 64
    tuple_bytes: int = TUPLE_BYTES
    nb_llc: int = 500_000

    def __post_init__(self):
        if not 0 < self.tuple_bytes <= self.block_bytes:
            raise ValueError("require 0 < tuple_bytes <= block_bytes")
        if self.nb_llc < 0 or self.nb_llc > self.cache_bytes // self.block_bytes:
            raise ValueError("nb_llc must lie in 0..cache_bytes/block_bytes")

    @property
    def gamma(self) -> float:
        """Blocks per stored tuple, 3/16 for 12-byte tuples in 64-byte blocks."""
        return self.tuple_bytes / self.block_bytes


@dataclass(frozen=True)
class FreqProfile:
    """Per-term document frequencies (no)_p and mean frequencies (nc)_p.

    Profiles can come from a real dataset plus a run's means at any iteration,
    or from a synthetic generator; the models only see these counts.
    """

    no: np.ndarray
    nc: np.ndarray
    n: int
    k: int

    def __post_init__(self):
        no = np.ascontiguousarray(self.no, dtype=np.int64)
        nc = np.ascontiguousarray(self.nc, dtype=np.int64)
        if no.shape != nc.shape or no.ndim != 1:
            raise ValueError("no and nc must be parallel 1-D arrays")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        if no.size and (no.min() < 0 or no.max() > self.n):
            raise ValueError("(no)_p must lie in 0..n")
        if nc.size and (nc.min() < 0 or nc.max() > self.k):
            raise ValueError("(nc)_p must lie in 0..k")
        no.setflags(write=False)
        nc.setflags(write=False)
        object.__setattr__(self, "no", no)
        object.__setattr__(self, "nc", nc)

    @property
    def dim(self) -> int:
        return int(self.no.size)

    @property
    def mult_volume(self) -> int:
        """sum_p (no)_p (nc)_p, the shared inner-loop volume of both variants."""
        return int(np.dot(self.no, self.nc))


def expected_blocks_ivf(profile: FreqProfile, params: CacheParams) -> float:
    """Expected blocks pulled while scanning one object's term postings:
    sum_p ((no)_p / N) * ceil((nc)_p * gamma)."""
    blocks = np.ceil(profile.nc * params.gamma)
    return float(np.dot(profile.no / profile.n, blocks))


def expected_blocks_ivfd(profile: FreqProfile, params: CacheParams) -> float:
    """Expected blocks pulled while scanning one mean's term postings:
    sum_p ((nc)_p / k) * ceil((no)_p * gamma)."""
    if profile.k < 1:
        raise ValueError("k must be >= 1")
    blocks = np.ceil(profile.no * params.gamma)
    return float(np.dot(profile.nc / profile.k, blocks))


def expected_blocks_ivf_window(
    profile: FreqProfile, params: CacheParams, z
) -> float:
    """Expected distinct blocks touched by z consecutive object scans:
    sum_p (1 - (1 - (no)_p / N)^z) * ceil((nc)_p * gamma).

    z = 1 reduces exactly to expected_blocks_ivf; z may be math.inf, meaning
    every term with (no)_p > 0 is eventually touched.
    """
    if z == 0:
        return 0.0
    if z == 1:
        return expected_blocks_ivf(profile, params)
    if z < 0:
        raise ValueError("z must be nonnegative")
    blocks = np.ceil(profile.nc * params.gamma)
    touch = 1.0 - (1.0 - profile.no / profile.n) ** z
    return float(np.dot(touch, blocks))


def find_z_star(profile: FreqProfile, params: CacheParams):
    """Largest integer z whose touched-block expectation fits in nb_llc.

    Returns math.inf when the whole reachable index fits (the expectation's
    supremum is within nb_llc); returns 0 when even a single scan overflows.
    Found by exponential doubling then bisection; the expectation is
    monotone in z.
    """
    blocks = np.ceil(profile.nc * params.gamma)
    supremum = float(blocks[profile.no > 0].sum())
    if supremum <= params.nb_llc:
        return math.inf
    if expected_blocks_ivf(profile, params) > params.nb_llc:
        return 0
    hi = 1
    while expected_blocks_ivf_window(profile, params, hi) <= params.nb_llc:
        hi *= 2
    lo = hi // 2  # e(lo) fits, e(hi) does not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if expected_blocks_ivf_window(profile, params, mid) <= params.nb_llc:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class LlcmReport:
    """Modeled last-level-cache misses of one iteration's triple loop.

    ``rate`` divides the exact miss count by the modeled instruction count
    (beta per inner-loop entry); ``approx_rate`` is the closed-form shortcut
    for the same ratio.
    """

    exact: float
    approx: float
    rate: float
    approx_rate: float


def llcm_ivfd(
    profile: FreqProfile,
    params: CacheParams,
    inst: InstModelParams = InstModelParams(),
) -> LlcmReport:
    """Misses with the objects inverted: the object postings overflow the
    cache, so every mean's scan re-pulls them like cold starts.

    exact = sum_p (nc)_p * ceil((no)_p * gamma), approximately
    gamma * sum_p (no)_p (nc)_p, giving the constant rate gamma / beta.
    """
    exact = float(np.dot(profile.nc, np.ceil(profile.no * params.gamma)))
    volume = profile.mult_volume
    approx = params.gamma * volume
    rate = exact / (inst.beta * volume) if volume else 0.0
    return LlcmReport(exact, approx, rate, params.gamma / inst.beta)


def llcm_ivf(
    profile: FreqProfile,
    params: CacheParams,
    inst: InstModelParams = InstModelParams(),
    z_star=None,
) -> LlcmReport:
    """Misses with the means inverted: after z* consecutive objects the cache
    holds their mean postings, so a miss needs a term unseen for z* objects.

    exact = N * sum_p ((no)_p / N) (1 - (no)_p / N)^z* ceil((nc)_p gamma);
    the rate tends to gamma / beta as k grows toward N and (nc) toward (no).
    """
    if z_star is None:
        z_star = find_z_star(profile, params)
    frac = profile.no / profile.n
    if math.isinf(z_star):
        stale = np.where(frac > 0, 0.0, 1.0)
    else:
        stale = (1.0 - frac) ** z_star
    blocks = np.ceil(profile.nc * params.gamma)
    exact = profile.n * float(np.dot(frac * stale, blocks))
    approx = params.gamma * float(np.dot(profile.no * stale, profile.nc))
    volume = profile.mult_volume
    rate = exact / (inst.beta * volume) if volume else 0.0
    approx_rate = (
        (params.gamma / inst.beta)
        * float(np.dot(profile.no * stale, profile.nc)) / volume
        if volume
        else 0.0
    )
    return LlcmReport(exact, approx, rate, approx_rate)


def load_profile_csv(source: str | IO[str]) -> FreqProfile:
    """Read a profile CSV: an "N,k,D" header line, one line of their values,
    a "term_id,no,nc" header line, then one row per term (terms absent from
    the rows get zero counts)."""
    own = isinstance(source, str)
    fh = open(source, "r", encoding="utf-8", newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["n", "k", "d"]:
            raise ValueError("profile CSV must start with the header N,k,D")
        values = next(reader, None)
        if values is None or len(values) != 3:
            raise ValueError("profile CSV is missing the N,k,D value line")
        n, k, dim = (int(x) for x in values)
        cols = next(reader, None)
        if cols is None or [c.strip().lower() for c in cols] != ["term_id", "no", "nc"]:
            raise ValueError("profile CSV must carry the header term_id,no,nc")
        no = np.zeros(dim, dtype=np.int64)
        nc = np.zeros(dim, dtype=np.int64)
        for rowno, row in enumerate(reader, start=4):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 3:
                raise ValueError(f"row {rowno}: expected 3 fields")
            t, o, c = (int(x) for x in row)
            if not 1 <= t <= dim:
                raise ValueError(f"row {rowno}: term id {t} outside 1..{dim}")
            no[t - 1] = o
            nc[t - 1] = c
        return FreqProfile(no, nc, n, k)
    finally:
        if own:
            fh.close()


def write_profile_csv(profile: FreqProfile, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "k", "D"])
        writer.writerow([profile.n, profile.k, profile.dim])
        writer.writerow(["term_id", "no", "nc"])
        for t in range(profile.dim):
            writer.writerow([t + 1, int(profile.no[t]), int(profile.nc[t])])


def model_report(
    profile: FreqProfile,
    params: CacheParams,
    inst: InstModelParams = InstModelParams(),
) -> dict:
    """All cache-model quantities for one profile, JSON-ready."""
    z_star = find_z_star(profile, params)
    ivf = llcm_ivf(profile, params, inst, z_star=z_star)
    ivfd = llcm_ivfd(profile, params, inst)
    return {
        "params": {
            "cache_bytes": params.cache_bytes,
            "block_bytes": params.block_bytes,
            "tuple_bytes": params.tuple_bytes,
            "gamma": params.gamma,
            "nb_llc": params.nb_llc,
            "alpha": inst.alpha,
            "beta": inst.beta,
        },
        "profile": {
            "N": profile.n,
            "k": profile.k,
            "D": profile.dim,
            "mult_volume": profile.mult_volume,
        },
        "expected_blocks": {
            "ivf": expected_blocks_ivf(profile, params),
            "ivfd": expected_blocks_ivfd(profile, params),
        },
        "z_star": "inf" if math.isinf(z_star) else z_star,
        "llcm_ivf": ivf.__dict__.copy(),
        "llcm_ivfd": ivfd.__dict__.copy(),
    }
