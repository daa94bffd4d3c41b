"""Command-line front end.

Subcommands: ingest (bag-of-words or weighted CSV to the native format),
run (cluster with one or more variants across a k grid), fit-cpi (staged
CPI-model fit from a counter CSV), cache-model (closed-form LLC models for a
frequency profile), and stats (figure-ready CSV tables from run results).

All outputs are deterministic for fixed flags and seed; no timestamps are
written.  The environment variable SPARSE_KMEANS_SEED supplies the seed when
--seed is absent.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import kernels
from .cache import CacheParams, load_profile_csv, model_report
from .clustering import RunResult, run
from .counters import InstModelParams, modeled_instructions
from .cpi import FitError, fit_report, load_samples_csv
from .data import mean_bytes, object_bytes
from .io import (
    ParseError,
    load_native_dataset,
    parse_uci_bow,
    parse_uci_bow_header,
    tfidf_normalize,
    write_native_csv,
)
from .variants import VARIANTS

#: k grid of the full-scale benchmark runs, defined against a million-doc
#: corpus; cmd_run rescales it to the dataset at hand.
STANDARD_K_GRID = (200, 500, 1000, 2000, 5000, 10000, 20000)
K_GRID_BASE_N = 10**6


def _fail(message: str, code: int = 1) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _default_k_grid(n: int) -> list[int]:
    ks = sorted({min(n, max(1, round(k * n / K_GRID_BASE_N))) for k in STANDARD_K_GRID})
    return ks


def cmd_ingest(args) -> int:
    path = Path(args.input)
    if not path.exists():
        return _fail(f"no such file: {path}")
    if path.stat().st_size == 0:
        return _fail("empty input")
    fmt = args.format
    if fmt == "auto":
        fmt = "bow" if path.suffix in (".txt", ".bow") else "csv"
    try:
        if fmt == "bow":
            if args.dry_run:
                n, dim, nnz = parse_uci_bow_header(path)
                _emit_json({"N": n, "D": dim, "NNZ": nnz, "dry_run": True}, args.out)
                return 0
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                ds = tfidf_normalize(parse_uci_bow(path))
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
        else:
            if args.dry_run:
                return _fail("--dry-run applies to the bag-of-words format")
            ds = load_native_dataset(path)
    except ParseError as exc:
        return _fail(str(exc), 1)
    if ds.n == 0:
        return _fail("all documents were dropped; nothing to write")
    sidecar = write_native_csv(ds, args.output)
    _emit_json(sidecar, args.out)
    return 0


def _run_one(ds, variant: str, k: int, args) -> RunResult:
    return run(
        variant,
        ds,
        k,
        seed=args.seed,
        max_iter=args.max_iter,
        epsilon=args.epsilon,
        backend=args.backend,
    )


def _equivalence_summary(results: list[RunResult]) -> dict:
    """Pairwise agreement of the variants at one k."""
    iters = {r.iterations for r in results}
    max_disagree = 0
    max_gap = 0.0
    depth = min(iters)
    for a in range(len(results)):
        for b in range(a + 1, len(results)):
            ra, rb = results[a], results[b]
            for i in range(depth):
                la, lb = ra.records[i].labels, rb.records[i].labels
                max_disagree = max(max_disagree, int(np.sum(la != lb)))
                oa, ob = ra.records[i].objective, rb.records[i].objective
                denom = max(abs(oa), abs(ob), 1e-300)
                max_gap = max(max_gap, abs(oa - ob) / denom)
    return {
        "variants": [r.variant for r in results],
        "iterations_equal": len(iters) == 1,
        "max_assignment_disagreements": max_disagree,
        "max_objective_rel_gap": max_gap,
    }


def cmd_run(args) -> int:
    try:
        ds = load_native_dataset(args.dataset)
    except (ParseError, OSError) as exc:
        return _fail(str(exc))
    variants = [v.strip().upper() for v in args.variant.split(",") if v.strip()]
    bad = [v for v in variants if v not in VARIANTS]
    if bad:
        return _fail(f"unknown variant(s): {', '.join(bad)}")
    if not variants:
        return _fail("no variant given")
    ks = args.k if args.k else _default_k_grid(ds.n)

    jobs: list[tuple[str, int]] = [(v, k) for k in ks for v in variants]
    results: dict[tuple[str, int], RunResult] = {}
    errors: list[dict] = []

    def one(job):
        return job, _run_one(ds, job[0], job[1], args)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = []
            for job in jobs:
                if job[1] > ds.n or job[1] < 1:
                    errors.append(
                        {"variant": job[0], "k": job[1],
                         "error": f"k={job[1]} outside 1..{ds.n}"}
                    )
                    continue
                futures.append(pool.submit(one, job))
            for fut in futures:
                job, res = fut.result()
                results[job] = res
    else:
        for job in jobs:
            if job[1] > ds.n or job[1] < 1:
                errors.append(
                    {"variant": job[0], "k": job[1],
                     "error": f"k={job[1]} outside 1..{ds.n}"}
                )
                continue
            results[job] = one(job)[1]

    payload: dict = {
        "meta": {
            "dataset": str(args.dataset),
            "variants": variants,
            "k_grid": ks,
            "seed": args.seed,
            "max_iter": args.max_iter,
            "backend": args.backend or kernels.default_backend(),
        },
        "runs": [results[job].to_json_dict() for job in sorted(results)],
        "errors": sorted(errors, key=lambda e: (e["variant"], e["k"])),
    }
    if len(variants) >= 2:
        payload["equivalence"] = [
            dict(_equivalence_summary([results[(v, k)] for v in variants
                                       if (v, k) in results]), k=k)
            for k in ks
            if sum((v, k) in results for v in variants) >= 2
        ]
    _emit_json(payload, args.out)
    return 2 if errors else 0


def cmd_fit_cpi(args) -> int:
    try:
        samples = load_samples_csv(args.samples)
        report = fit_report(samples)
    except (FitError, ValueError, OSError) as exc:
        return _fail(str(exc))
    _emit_json(report, args.out)
    return 0


def cmd_cache_model(args) -> int:
    try:
        profile = load_profile_csv(args.profile)
        params = CacheParams(
            cache_bytes=args.cache_bytes,
            block_bytes=args.block_bytes,
            tuple_bytes=args.tuple_bytes,
            nb_llc=args.nb_llc,
        )
        inst = InstModelParams(alpha=args.alpha, beta=args.beta)
        report = model_report(profile, params, inst)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))
    _emit_json(report, args.out)
    return 0


STATS_COLUMNS = [
    "variant", "k", "iterations", "converged",
    "max_mean_terms_per_k", "conv_mean_terms_per_k",
    "object_bytes", "mean_bytes", "total_bytes",
    "mults_last_iter", "volume_ifn", "volume_ivf",
    "modeled_inst_ifn", "modeled_inst_ivf", "ivf_beats_ifn",
]


def _iter_run_dicts(paths: list[str]):
    for p in paths:
        with open(p, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if "runs" in doc:
            yield from doc["runs"]
        elif "meta" in doc and "per_iteration" in doc:
            yield doc
        else:
            raise ValueError(f"{p}: not a run-result JSON")


def cmd_stats(args) -> int:
    inst = InstModelParams(alpha=args.alpha, beta=args.beta)
    rows = []
    try:
        for doc in _iter_run_dicts(args.results):
            meta = doc["meta"]
            variant, k = meta["variant"], int(meta["k"])
            per = doc["per_iteration"]
            if not per:
                raise ValueError("run with no iterations")
            last = per[-1]
            rep = doc["final"]["mean_representation"]
            sum_nnz = int(meta["dataset"]["sum_nnz"])
            dim = int(meta["dataset"]["D"])
            vol_ifn = int(last["volume_ifn"])
            vol_ivf = int(last["volume_ivf"])
            m_inst_ifn = modeled_instructions("IFN", vol_ifn, inst)
            m_inst_ivf = modeled_instructions("IVF", vol_ivf, inst)
            rows.append({
                "variant": variant,
                "k": k,
                "iterations": doc["iterations"],
                "converged": doc["converged"],
                "max_mean_terms_per_k": max(r["mean_terms_total"] for r in per) / k,
                "conv_mean_terms_per_k": last["mean_terms_total"] / k,
                "object_bytes": object_bytes(sum_nnz, duplicate=(variant == "IVFD")),
                "mean_bytes": mean_bytes(rep, k, dim, int(doc["final"]["mean_terms_total"])),
                "total_bytes": 0,  # filled below
                "mults_last_iter": int(last["counters"]["mults"]),
                "volume_ifn": vol_ifn,
                "volume_ivf": vol_ivf,
                "modeled_inst_ifn": m_inst_ifn,
                "modeled_inst_ivf": m_inst_ivf,
                "ivf_beats_ifn": m_inst_ivf < m_inst_ifn,
            })
    except (KeyError, ValueError, OSError) as exc:
        return _fail(f"results schema mismatch: {exc}")
    for row in rows:
        row["total_bytes"] = row["object_bytes"] + row["mean_bytes"]
    rows.sort(key=lambda r: (r["variant"], r["k"]))

    out_fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out_fh, fieldnames=STATS_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out_fh.close()
    return 0


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-kmeans",
        description="Sparse spherical k-means variants, operation counting, "
        "and cost models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a corpus to the native format")
    p.add_argument("input")
    p.add_argument("--format", choices=("auto", "bow", "csv"), default="auto")
    p.add_argument("--output", required=True, help="native CSV to write")
    p.add_argument("--dry-run", action="store_true",
                   help="bow only: parse the header lines and stop")
    p.add_argument("--out", help="write the summary JSON here instead of stdout")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("run", help="cluster with one or more variants")
    p.add_argument("dataset", help="native CSV written by ingest")
    p.add_argument("--variant", default="IVF",
                   help=f"comma-separated subset of {','.join(VARIANTS)}")
    p.add_argument("--k", type=int, nargs="*", default=None,
                   help="cluster counts; defaults to the scaled standard grid")
    p.add_argument("--seed", type=int,
                   default=int(os.environ.get("SPARSE_KMEANS_SEED", "0")))
    p.add_argument("--max-iter", type=_positive_int, default=50)
    p.add_argument("--epsilon", type=float, default=None,
                   help="optional objective-delta stop")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--backend", choices=kernels.available_backends(), default=None)
    p.add_argument("--out", help="write the results JSON here instead of stdout")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fit-cpi", help="staged CPI-model fit from a counter CSV")
    p.add_argument("samples", help="CSV with header algo,k,inst,l1cm,llcm,bm,cycles")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit_cpi)

    p = sub.add_parser("cache-model", help="closed-form LLC models for a profile")
    p.add_argument("profile", help="profile CSV (N,k,D header, term_id,no,nc rows)")
    p.add_argument("--cache-bytes", type=int, default=CacheParams.cache_bytes)
    p.add_argument("--block-bytes", type=int, default=CacheParams.block_bytes)
    p.add_argument("--tuple-bytes", type=int, default=CacheParams.tuple_bytes)
    p.add_argument("--nb-llc", type=int, default=CacheParams.nb_llc)
    p.add_argument("--alpha", type=float, default=InstModelParams.alpha)
    p.add_argument("--beta", type=float, default=InstModelParams.beta)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cache_model)

    p = sub.add_parser("stats", help="figure-ready CSV tables from run results")
    p.add_argument("results", nargs="+", help="run-result JSON files")
    p.add_argument("--alpha", type=float, default=InstModelParams.alpha)
    p.add_argument("--beta", type=float, default=InstModelParams.beta)
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
