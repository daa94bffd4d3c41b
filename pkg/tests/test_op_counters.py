import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_kmeans import (
    InstModelParams,
    OpCounters,
    init_means,
    ivf_beats_ifn,
    modeled_instructions,
    mult_volume_ifn,
    mult_volume_ivf,
    run,
)
from sparse_kmeans.means import MeanSet


def test_inst_params_validation():
    with pytest.raises(ValueError):
        InstModelParams(alpha=40, beta=28)
    with pytest.raises(ValueError):
        InstModelParams(alpha=0, beta=10)


def test_mult_volume_ifn_tiny(tiny):
    assert mult_volume_ifn(tiny, 2) == 12
    assert mult_volume_ifn(tiny, 0) == 0


def test_mult_volume_ivf_tiny(tiny, tiny_means):
    assert mult_volume_ivf(tiny, tiny_means) == 8
    one = MeanSet.from_vectors([tiny.vector(0)], 4)
    assert mult_volume_ivf(tiny, one) == int(tiny.doc_freq[0] + tiny.doc_freq[1])


def test_volumes_match_measured_counters(small_synth, backend):
    k = 7
    for variant, law in (("IFN", "ifn"), ("MFN", "ifn"), ("IVF", "ivf"), ("IVFD", "ivf")):
        res = run(variant, small_synth, k, seed=31, max_iter=12,
                  backend=backend, keep_history=True)
        for rec, means in zip(res.records, res.history_means):
            if law == "ifn":
                assert rec.counters.mults == mult_volume_ifn(small_synth, k)
            else:
                assert rec.counters.mults == mult_volume_ivf(small_synth, means)


def test_object_wise_equals_term_wise(small_synth):
    means = init_means(small_synth, 6, seed=77)
    term_wise = mult_volume_ivf(small_synth, means)
    nc = means.centroid_freq
    object_wise = int(sum(int(nc[t - 1]) for t in small_synth.term_ids))
    assert term_wise == object_wise


def test_modeled_instructions_tiny(tiny, tiny_means):
    params = InstModelParams()
    assert modeled_instructions("IFN", mult_volume_ifn(tiny, 2), params) == 336
    assert modeled_instructions("IVF", mult_volume_ivf(tiny, tiny_means), params) == 320
    with pytest.raises(ValueError):
        modeled_instructions("TWM", 10, params)


def test_modeled_instructions_symmetry():
    # per-entry costs approaching each other give equal counts at equal volume
    p = InstModelParams(alpha=3.0, beta=3.0000001)
    assert modeled_instructions("IFN", 100, p) == pytest.approx(
        modeled_instructions("IVF", 100, p), rel=1e-6
    )


def test_crossover_tiny(tiny, tiny_means):
    check = ivf_beats_ifn(tiny, tiny_means, InstModelParams(alpha=28, beta=40))
    assert check.data_ratio == pytest.approx((1 / 2) * (8 / 6), rel=1e-12)
    assert check.arch_ratio == pytest.approx(0.7, rel=1e-12)
    assert check.ivf_faster  # 0.7 > 0.6667


def test_crossover_dense_limit(tiny):
    # fully dense means: (nc)_p = k everywhere, so the data ratio is 1
    full = np.full((2, 4), 0.5)
    means = MeanSet.from_dense(full, "dense")
    check = ivf_beats_ifn(tiny, means, InstModelParams())
    assert check.data_ratio == pytest.approx(1.0, rel=1e-12)
    assert not check.ivf_faster


def test_crossover_zero_term_dataset_errors():
    from sparse_kmeans import Dataset

    ds = Dataset.from_vectors([], dim=3)
    means = MeanSet.from_csr(
        np.array([0, 1], dtype=np.int64),
        np.array([1], dtype=np.int32),
        np.array([1.0]),
        3,
    )
    with pytest.raises(ValueError):
        ivf_beats_ifn(ds, means, InstModelParams())


def test_crossover_agrees_with_instruction_ordering():
    rng = np.random.default_rng(123)
    agree = 0
    for trial in range(1000):
        dim = int(rng.integers(2, 12))
        n = int(rng.integers(2, 30))
        k = int(rng.integers(1, 8))
        no = rng.integers(0, n + 1, size=dim)
        nc = rng.integers(0, k + 1, size=dim)
        no[rng.integers(0, dim)] = max(1, no.max())  # keep sum(no) positive
        vol_ifn = k * int(no.sum())
        vol_ivf = int(np.dot(no, nc))
        alpha = float(rng.integers(10, 40))
        beta = alpha + float(rng.integers(1, 30))
        params = InstModelParams(alpha=alpha, beta=beta)
        predicted = (alpha / beta) > (vol_ivf / vol_ifn)
        ordered = modeled_instructions("IVF", vol_ivf, params) < modeled_instructions(
            "IFN", vol_ifn, params
        )
        agree += predicted == ordered
    assert agree == 1000


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_crossover_rhs_monotone_in_nc(data):
    dim = data.draw(st.integers(1, 10))
    n = data.draw(st.integers(1, 40))
    k = data.draw(st.integers(1, 9))
    no = np.array(
        data.draw(st.lists(st.integers(0, n), min_size=dim, max_size=dim))
    )
    if no.sum() == 0:
        no[0] = 1
    nc_hi = np.array(
        data.draw(st.lists(st.integers(0, k), min_size=dim, max_size=dim))
    )
    drop = np.array(
        data.draw(st.lists(st.integers(0, k), min_size=dim, max_size=dim))
    )
    nc_lo = np.maximum(nc_hi - drop, 0)
    rhs_hi = float(np.dot(no, nc_hi)) / (k * no.sum())
    rhs_lo = float(np.dot(no, nc_lo)) / (k * no.sum())
    assert rhs_lo <= rhs_hi + 1e-15


def test_ifb_counter_relations(small_synth, backend):
    k = 9
    res_ifn = run("IFN", small_synth, k, seed=41, max_iter=8, backend=backend)
    res_ifb = run("IFB", small_synth, k, seed=41, max_iter=8, backend=backend)
    res_ivf = run("IVF", small_synth, k, seed=41, max_iter=8, backend=backend)
    assert res_ifn.iterations == res_ifb.iterations == res_ivf.iterations
    for a, b, c in zip(res_ifn.records, res_ifb.records, res_ivf.records):
        assert b.counters.branch_checks == a.counters.mults
        assert b.counters.mults == c.counters.mults  # skips leave the postings volume
        skips = b.counters.branch_checks - b.counters.mults
        assert b.counters.mults + skips == a.counters.mults


def test_counters_serialization_roundtrip():
    c = OpCounters(mults=3, adds=3, inner_entries=5, branch_checks=2, merge_steps=7)
    assert OpCounters(**c.to_dict()) == c
