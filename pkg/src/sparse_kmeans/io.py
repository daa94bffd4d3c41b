"""Dataset ingestion: UCI bag-of-words, weighted CSV, and the native format.

The UCI bag-of-words format has three header lines (document count, vocabulary
size, total entry count) followed by one "doc term count" triple per line,
all ids 1-based.  The native format is a CSV of "doc_id,term_id,value" rows
holding already-weighted, L2-normalized vectors, written next to a JSON
sidecar with the basic corpus statistics.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .data import Dataset, avg_sparsity

SIDECAR_SUFFIX = ".meta.json"


class ParseError(ValueError):
    """Malformed input; ``line`` is the 1-based offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class RawCounts:
    """Parsed bag-of-words triples, grouped by document and sorted by term."""

    n_docs: int
    dim: int
    triples: tuple[tuple[int, int, int], ...]


def _lines(source: str | Path | IO[str] | Iterable[str]) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def parse_uci_bow_header(source) -> tuple[int, int, int]:
    """Read only the three header integers (doc count, dim, entry count)."""
    it = _lines(source)
    header = []
    for lineno in (1, 2, 3):
        try:
            raw = next(it)
        except StopIteration:
            raise ParseError("empty input" if lineno == 1 else "truncated header", lineno)
        text = raw.strip()
        if not text.lstrip("-").isdigit():
            raise ParseError(f"expected a single integer, got {text!r}", lineno)
        value = int(text)
        if value < 0:
            raise ParseError("header counts must be nonnegative", lineno)
        header.append(value)
    return header[0], header[1], header[2]


def parse_uci_bow(source) -> RawCounts:
    """Parse a UCI bag-of-words stream into grouped, validated triples.

    Raises ParseError (with the offending line number) on malformed lines,
    out-of-range ids, duplicate (doc, term) pairs, or an entry-count mismatch.
    """
    it = _lines(source)
    header = []
    lineno = 0
    for raw in it:
        lineno += 1
        text = raw.strip()
        if not text.lstrip("-").isdigit():
            raise ParseError(f"expected a single integer, got {text!r}", lineno)
        value = int(text)
        if value < 0:
            raise ParseError("header counts must be nonnegative", lineno)
        header.append(value)
        if lineno == 3:
            break
    if lineno == 0:
        raise ParseError("empty input", 1)
    if lineno < 3:
        raise ParseError("truncated header", lineno + 1)
    n_docs, dim, nnz = header

    triples: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int]] = set()
    for raw in it:
        lineno += 1
        text = raw.strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'doc term count', got {text!r}", lineno)
        try:
            doc, term, count = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise ParseError(f"non-integer field in {text!r}", lineno)
        if not 1 <= doc <= n_docs:
            raise ParseError(f"doc id {doc} outside 1..{n_docs}", lineno)
        if not 1 <= term <= dim:
            raise ParseError(f"term id {term} outside 1..{dim}", lineno)
        if count <= 0:
            raise ParseError(f"count must be positive, got {count}", lineno)
        if (doc, term) in seen:
            raise ParseError(f"duplicate (doc, term) pair ({doc}, {term})", lineno)
        seen.add((doc, term))
        triples.append((doc, term, count))
    if len(triples) != nnz:
        raise ParseError(
            f"header declares {nnz} entries but {len(triples)} were read", lineno
        )
    triples.sort()
    return RawCounts(n_docs, dim, tuple(triples))


def tfidf_normalize(raw: RawCounts) -> Dataset:
    """Weight raw counts by tf-idf and project onto the unit hypersphere.

    tf is the raw count and idf is ln(n_docs / df).  Terms appearing in every
    document weight to zero and are dropped; documents left empty by that are
    dropped too (with a warning) and the document count shrinks accordingly.
    """
    if raw.n_docs < 1:
        if raw.triples:
            raise ValueError("triples present but document count is zero")
        return Dataset.from_vectors([], raw.dim, normalized=True)

    docs = np.array([t[0] for t in raw.triples], dtype=np.int64)
    terms = np.array([t[1] for t in raw.triples], dtype=np.int32)
    counts = np.array([t[2] for t in raw.triples], dtype=np.float64)

    df = np.bincount(terms, minlength=raw.dim + 1)[1:]
    # df counts documents, not occurrences, because (doc, term) pairs are unique
    idf = np.zeros(raw.dim, dtype=np.float64)
    nz = df > 0
    idf[nz] = np.log(raw.n_docs / df[nz])
    weights = counts * idf[terms - 1]

    keep = weights != 0.0
    docs, terms, weights = docs[keep], terms[keep], weights[keep]

    indptr = np.zeros(raw.n_docs + 1, dtype=np.int64)
    np.cumsum(np.bincount(docs, minlength=raw.n_docs + 1)[1:], out=indptr[1:])
    survivors = np.flatnonzero(np.diff(indptr) > 0)
    dropped = tuple(int(d) + 1 for d in np.flatnonzero(np.diff(indptr) == 0))
    if dropped:
        warnings.warn(
            f"dropped {len(dropped)} document(s) with no nonzero tf-idf weight",
            stacklevel=2,
        )

    sq = np.bincount(docs - 1, weights=weights * weights, minlength=raw.n_docs)
    norms = np.sqrt(sq)
    values = weights / norms[docs - 1]

    new_indptr = np.zeros(survivors.size + 1, dtype=np.int64)
    np.cumsum(np.diff(indptr)[survivors], out=new_indptr[1:])
    return Dataset(
        raw.dim, new_indptr, terms, values, normalized=True, dropped_docs=dropped
    )


def parse_value_csv(source) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse "doc_id,term_id,value" rows into (docs, terms, values) arrays.

    Rows must be grouped by document with nondecreasing doc ids and strictly
    increasing term ids within a document.
    """
    docs: list[int] = []
    terms: list[int] = []
    values: list[float] = []
    lineno = 0
    for raw in _lines(source):
        lineno += 1
        text = raw.strip()
        if not text:
            continue
        if lineno == 1 and text.lower().startswith("doc_id"):
            continue
        parts = text.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 'doc_id,term_id,value', got {text!r}", lineno)
        try:
            doc, term, value = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"malformed field in {text!r}", lineno)
        if doc < 1 or term < 1:
            raise ParseError("ids are 1-based", lineno)
        if docs and doc < docs[-1]:
            raise ParseError("doc ids must be nondecreasing", lineno)
        if docs and doc == docs[-1] and term <= terms[-1]:
            raise ParseError("term ids must be strictly increasing per doc", lineno)
        if not math.isfinite(value) or value == 0.0:
            raise ParseError("values must be finite and nonzero", lineno)
        docs.append(doc)
        terms.append(term)
        values.append(value)
    if not docs:
        raise ParseError("empty input", 1)
    return (
        np.array(docs, dtype=np.int64),
        np.array(terms, dtype=np.int32),
        np.array(values, dtype=np.float64),
    )


def dataset_from_values(
    docs: np.ndarray, terms: np.ndarray, values: np.ndarray, dim: int | None = None
) -> Dataset:
    """Build a normalized Dataset from already-weighted entries.

    Documents are renumbered densely in first-appearance order; each vector
    is divided by its L2 norm.
    """
    if dim is None:
        dim = int(terms.max()) if terms.size else 0
    uniq, row = np.unique(docs, return_inverse=True)
    n = uniq.size
    counts = np.bincount(row, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    sq = np.bincount(row, weights=values * values, minlength=n)
    normed = values / np.sqrt(sq)[row]
    return Dataset(dim, indptr, terms, normed, normalized=True)


def write_native_csv(ds: Dataset, path: str | Path) -> dict:
    """Write the native CSV plus its JSON sidecar; returns the sidecar dict."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("doc_id,term_id,value\n")
        for i in range(ds.n):
            s, e = int(ds.indptr[i]), int(ds.indptr[i + 1])
            for t, v in zip(ds.term_ids[s:e].tolist(), ds.values[s:e].tolist()):
                fh.write(f"{i + 1},{t},{v!r}\n")
    sidecar = {
        "N": ds.n,
        "D": ds.dim,
        "sum_nnz": ds.sum_nnz,
        "avg_nnz": ds.sum_nnz / ds.n if ds.n else 0.0,
        "avg_sparsity": avg_sparsity(ds) if ds.n else 0.0,
        "dropped_docs": list(ds.dropped_docs),
    }
    with open(str(path) + SIDECAR_SUFFIX, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar


def load_native_dataset(path: str | Path) -> Dataset:
    """Load a native CSV, taking the dimensionality from the sidecar if present."""
    path = Path(path)
    docs, terms, values = parse_value_csv(path)
    dim = None
    sidecar = Path(str(path) + SIDECAR_SUFFIX)
    if sidecar.exists():
        with open(sidecar, "r", encoding="utf-8") as fh:
            dim = int(json.load(fh)["D"])
    return dataset_from_values(docs, terms, values, dim=dim)
