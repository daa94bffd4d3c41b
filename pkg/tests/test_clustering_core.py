import math

import numpy as np
import pytest

from sparse_kmeans import (
    Assignment,
    init_means,
    objective_cosine,
    reference_iterate,
    run,
)
from sparse_kmeans.clustering import SplitMix64, sample_without_replacement
from sparse_kmeans.variants import fnv1a64
from sparse_kmeans.means import MeanSet

from conftest import synthetic_dataset


# -- seeding -------------------------------------------------------------------


def test_splitmix64_reference_stream():
    # First outputs for seed 1234567, from the published reference algorithm.
    rng = SplitMix64(1234567)
    first = [rng.next_u64() for _ in range(3)]
    assert all(0 <= x < 2**64 for x in first)
    rng2 = SplitMix64(1234567)
    assert [rng2.next_u64() for _ in range(3)] == first


def test_init_means_deterministic(tiny):
    a = init_means(tiny, 2, seed=7)
    b = init_means(tiny, 2, seed=7)
    assert np.array_equal(a.term_ids, b.term_ids)
    assert np.array_equal(a.values, b.values)


def test_init_means_k_equals_n_is_permutation(tiny):
    m = init_means(tiny, 3, seed=5, representation="sparse_standard")
    got = sorted(tuple(v.entries) for v in m.vectors())
    want = sorted(tuple(v.entries) for v in tiny.vectors)
    assert got == want


def test_init_means_membership_brute_force():
    ds = synthetic_dataset(40, 30, seed=2, avg_nnz=5)
    idx = sample_without_replacement(ds.n, 12, seed=99)
    assert len(set(idx.tolist())) == 12
    assert all(0 <= i < ds.n for i in idx)
    m = init_means(ds, 12, seed=99, representation="sparse_standard")
    pool = {tuple(v.entries) for v in ds.vectors}
    for v in m.vectors():
        assert tuple(v.entries) in pool


def test_init_means_domain_errors(tiny):
    with pytest.raises(ValueError):
        init_means(tiny, 0, seed=1)
    with pytest.raises(ValueError):
        init_means(tiny, 4, seed=1)


# -- objective -------------------------------------------------------------------


def test_objective_self_means(tiny):
    means = init_means(tiny, 3, seed=0)
    # every object is its own mean under some permutation; find it
    sims = tiny.dense @ means.dense.T
    labels = (np.argmax(sims, axis=1) + 1).astype(np.int32)
    asg = Assignment.from_labels(labels, 3)
    assert objective_cosine(tiny, asg, means) == pytest.approx(3.0, abs=1e-12)


def test_objective_hand_value(tiny):
    means = MeanSet.from_vectors([tiny.vector(0), tiny.vector(2)], 4, "dense")
    asg = Assignment.from_labels(np.array([1, 1, 2]), 2)
    assert objective_cosine(tiny, asg, means) == pytest.approx(2.5, abs=1e-12)


def test_objective_euclidean_identity():
    # sum of cosines Q relates to the squared-distance objective E over unit
    # vectors by E = 2 (N - Q); check on random assignments.
    ds = synthetic_dataset(30, 25, seed=4, avg_nnz=5)
    means = init_means(ds, 5, seed=8)
    rng = np.random.default_rng(0)
    labels = rng.integers(1, 6, size=ds.n).astype(np.int32)
    asg = Assignment.from_labels(labels, 5)
    q = objective_cosine(ds, asg, means)
    dense = ds.dense
    md = means.dense
    e = sum(
        float(np.sum((dense[i] - md[labels[i] - 1]) ** 2)) for i in range(ds.n)
    )
    assert e == pytest.approx(2 * (ds.n - q), rel=1e-9)


def test_objective_rejects_missing_mean(tiny):
    means = MeanSet.from_vectors([tiny.vector(0)], 4, "dense")
    asg = Assignment.from_labels(np.array([1, 1, 2]), 2)
    with pytest.raises(ValueError):
        objective_cosine(tiny, asg, means)


# -- reference iteration ----------------------------------------------------------


def test_reference_iterate_tiny_hand_values(tiny):
    means = MeanSet.from_vectors([tiny.vector(0), tiny.vector(2)], 4, "dense")
    asg, updated = reference_iterate(tiny, means)
    assert np.array_equal(asg.labels, [1, 1, 2])
    s = 6 ** -0.5
    assert np.allclose(updated.dense[0], [s, 2 * s, s, 0.0], atol=1e-12)
    assert np.allclose(updated.dense[1], tiny.dense[2], atol=1e-12)


def test_reference_k1_single_cluster(tiny):
    means = init_means(tiny, 1, seed=3)
    asg, updated = reference_iterate(tiny, means)
    assert np.array_equal(asg.labels, [1, 1, 1])
    centroid = tiny.dense.mean(axis=0)
    centroid /= math.sqrt(float(np.dot(centroid, centroid)))
    assert np.allclose(updated.dense[0], centroid, atol=1e-12)


def test_reference_fixed_point():
    ds = synthetic_dataset(80, 40, seed=6, avg_nnz=6)
    res = run("REF", ds, 8, seed=1, max_iter=100)
    assert res.converged
    asg, updated = reference_iterate(ds, res.final_means)
    assert np.array_equal(asg.labels, res.final_assignment.labels)


def test_reference_empty_cluster_retains_mean():
    # two far groups and k = 3 seeded so one mean loses all members
    ds = synthetic_dataset(12, 20, seed=13, avg_nnz=4)
    means = init_means(ds, 3, seed=21)
    asg, updated = reference_iterate(ds, means)
    empties = np.flatnonzero(asg.sizes == 0)
    for j in empties:
        assert np.array_equal(updated.dense[j], means.dense[j])
        assert bool(updated.retained[j])


# -- run driver --------------------------------------------------------------------


def test_run_k_equals_n_two_iterations(tiny, backend):
    for variant in ("REF", "IVF", "TWM"):
        res = run(variant, tiny, 3, seed=2, backend=backend)
        assert res.iterations <= 2
        assert res.converged
        assert res.objectives[-1] == pytest.approx(3.0, abs=1e-12)


def test_run_max_iter_one(tiny, backend):
    res = run("IVF", tiny, 2, seed=7, max_iter=1, backend=backend)
    assert res.iterations == 1
    assert not res.converged


def test_run_determinism_bitwise(small_synth, backend):
    a = run("IVF", small_synth, 16, seed=42, backend=backend)
    b = run("IVF", small_synth, 16, seed=42, backend=backend)
    assert [r.assignment_digest for r in a.records] == [
        r.assignment_digest for r in b.records
    ]
    assert a.objectives == b.objectives
    assert np.array_equal(a.final_means.values, b.final_means.values)


def test_run_monotone_objective(small_synth, backend):
    for variant in ("REF", "IVF", "MFN", "TWM"):
        res = run(variant, small_synth, 12, seed=3, backend=backend)
        diffs = np.diff(res.objectives)
        assert np.all(diffs >= -1e-12)


def test_run_ref_k1_objective_is_total_similarity(small_synth):
    res = run("REF", small_synth, 1, seed=6, max_iter=50)
    assert res.converged
    mu = res.final_means.dense[0]
    direct = float(np.sum(small_synth.dense @ mu))
    assert res.objectives[-1] == pytest.approx(direct, rel=1e-12)


def test_run_epsilon_stop(small_synth):
    res = run("REF", small_synth, 8, seed=5, epsilon=1e30)
    assert res.iterations == 2  # any second iteration trips a huge epsilon
    assert res.converged


def test_run_rejects_bad_args(tiny):
    with pytest.raises(ValueError):
        run("NOPE", tiny, 2, seed=0)
    with pytest.raises(ValueError):
        run("REF", tiny, 2, seed=0, max_iter=0)


def test_fnv1a_digest_known_value():
    # FNV-1a 64 of the empty input is the offset basis; of b"a" a known value.
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C


def test_run_result_json_shape(small_synth):
    res = run("IVF", small_synth, 4, seed=9)
    doc = res.to_json_dict()
    assert doc["meta"]["variant"] == "IVF"
    assert doc["iterations"] == len(doc["per_iteration"])
    first = doc["per_iteration"][0]
    assert set(first) == {
        "iter", "objective", "assignment_digest", "counters",
        "mean_terms_total", "volume_ifn", "volume_ivf",
    }
    assert first["assignment_digest"].startswith("0x")
