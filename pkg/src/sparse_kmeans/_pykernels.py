"""Pure-Python (numpy) assignment kernels, the fallback backend.

These mirror the compiled kernels' signatures and loop semantics: identical
argmax tie handling (smallest index wins), identical exact operation tallies,
and floating-point results equal up to summation-order rounding.  Counter
slots follow counters.COUNTER_FIELDS: mults, adds, inner_entries,
branch_checks, merge_steps.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _gathered_rows(rows: np.ndarray, terms: np.ndarray, vals: np.ndarray, rho):
    """Accumulate vals[h] * rows[terms[h] - 1, :] over h into rho."""
    sub = rows[terms - 1, :]
    np.sum(vals[:, None] * sub, axis=0, out=rho)
    return sub


def assign_mfn(indptr, terms, vals, means, rho, labels, ctr):
    """Full-expression scan over row-major means; zero entries are multiplied."""
    # Walking the transpose layout keeps the arithmetic identical to the
    # term-major kernel, entry for entry.
    rows = np.ascontiguousarray(means.T)
    _scan_full(indptr, terms, vals, rows, rho, labels, ctr)


def assign_ifn(indptr, terms, vals, means_inv, rho, labels, ctr):
    """Full-expression scan over the term-major mean matrix."""
    _scan_full(indptr, terms, vals, means_inv, rho, labels, ctr)


def _scan_full(indptr, terms, vals, rows, rho, labels, ctr):
    n = indptr.size - 1
    k = rows.shape[1]
    total = 0
    for i in range(n):
        s, e = indptr[i], indptr[i + 1]
        if e > s:
            _gathered_rows(rows, terms[s:e], vals[s:e], rho)
            total += (e - s) * k
        else:
            rho[:] = 0.0
        labels[i] = int(np.argmax(rho)) + 1
    ctr[0] += total
    ctr[1] += total
    ctr[2] += total


def assign_ifb(indptr, terms, vals, means_inv, rho, labels, ctr):
    """Like assign_ifn but multiply-adds are skipped at zero mean entries.

    Skipping an exact zero never changes the accumulated sum, so assignments
    match assign_ifn bit for bit; only the tallies differ.
    """
    n = indptr.size - 1
    k = means_inv.shape[1]
    checks = 0
    taken = 0
    for i in range(n):
        s, e = indptr[i], indptr[i + 1]
        if e > s:
            sub = _gathered_rows(means_inv, terms[s:e], vals[s:e], rho)
            checks += sub.size
            taken += int(np.count_nonzero(sub))
        else:
            rho[:] = 0.0
        labels[i] = int(np.argmax(rho)) + 1
    ctr[0] += taken
    ctr[1] += taken
    ctr[2] += checks
    ctr[3] += checks


def assign_ivf(indptr, terms, vals, m_indptr, m_cids, m_vals, rho, labels, ctr):
    """Scan the mean postings of each object term, scattering into per-mean
    partial similarities."""
    n = indptr.size - 1
    k = rho.shape[0]
    total = 0
    for i in range(n):
        idx_parts = []
        w_parts = []
        for h in range(indptr[i], indptr[i + 1]):
            t = terms[h] - 1
            a, b = m_indptr[t], m_indptr[t + 1]
            if b > a:
                idx_parts.append(m_cids[a:b])
                w_parts.append(vals[h] * m_vals[a:b])
        if idx_parts:
            cids = np.concatenate(idx_parts)
            contrib = np.concatenate(w_parts)
            # bincount accumulates sequentially in posting order
            acc = np.bincount(cids - 1, weights=contrib, minlength=k)
            labels[i] = int(np.argmax(acc)) + 1
            total += cids.size
        else:
            labels[i] = 1
    ctr[0] += total
    ctr[1] += total
    ctr[2] += total


def assign_twm(indptr, terms, vals, m_indptr, m_terms, m_vals, dim, labels, ctr):
    """Per-pair two-way merges, evaluated in closed form.

    The accumulated products equal the literal merge's (matched products in
    term order; skipped terms add exact zeros), and the pointer-advance count
    per pair is #{a <= max(B)} + #{b <= max(A)}, which is what the literal
    merge executes before one side is exhausted.
    """
    n = indptr.size - 1
    k = m_indptr.size - 1
    dense = np.zeros((dim, k), dtype=np.float64)
    for j in range(k):
        s, e = m_indptr[j], m_indptr[j + 1]
        dense[m_terms[s:e] - 1, j] = m_vals[s:e]
    # sentinel 0 for empty rows: no term id is <= 0, so it contributes nothing
    mean_max = np.zeros(k, dtype=np.int64)
    nonempty = np.flatnonzero(np.diff(m_indptr) > 0)
    mean_max[nonempty] = m_terms[m_indptr[nonempty + 1] - 1]

    obj_max = np.zeros(n, dtype=np.int64)
    ne_obj = np.flatnonzero(np.diff(indptr) > 0)
    obj_max[ne_obj] = terms[indptr[ne_obj + 1] - 1]
    # advances of the mean-side pointer, per (mean, object)
    c2 = np.empty((k, n), dtype=np.int64)
    for j in range(k):
        s, e = m_indptr[j], m_indptr[j + 1]
        c2[j] = np.searchsorted(m_terms[s:e], obj_max, side="right")

    rho = np.empty(k, dtype=np.float64)
    steps = 0
    matches = 0
    for i in range(n):
        s, e = indptr[i], indptr[i + 1]
        if e > s:
            ti = terms[s:e]
            sub = _gathered_rows(dense, ti, vals[s:e], rho)
            m = int(np.count_nonzero(sub))
            c1 = np.searchsorted(ti, mean_max, side="right")
            steps += int(c1.sum()) + int(c2[:, i].sum())
            matches += m
        else:
            rho[:] = 0.0
        labels[i] = int(np.argmax(rho)) + 1
    ctr[0] += matches
    ctr[1] += matches
    ctr[2] += steps - matches  # merge iterations: equal-term steps advance twice
    ctr[4] += steps


def assign_ivfd(x_indptr, x_oids, x_vals, m_indptr, m_terms, m_vals, rho, rho_max, labels, ctr):
    """Scan the object postings of each mean's terms, keeping per-object
    running maxima across means.  The similarity buffer is reset per mean."""
    n = rho.shape[0]
    k = m_indptr.size - 1
    rho_max[:] = 0.0
    labels[:] = 1
    total = 0
    for j in range(k):
        idx_parts = []
        w_parts = []
        for h in range(m_indptr[j], m_indptr[j + 1]):
            t = m_terms[h] - 1
            a, b = x_indptr[t], x_indptr[t + 1]
            if b > a:
                idx_parts.append(x_oids[a:b])
                w_parts.append(m_vals[h] * x_vals[a:b])
        if not idx_parts:
            continue
        oids = np.concatenate(idx_parts)
        contrib = np.concatenate(w_parts)
        acc = np.bincount(oids - 1, weights=contrib, minlength=n)
        total += oids.size
        better = acc > rho_max
        labels[better] = j + 1
        np.maximum(rho_max, acc, out=rho_max)
    ctr[0] += total
    ctr[1] += total
    ctr[2] += total
