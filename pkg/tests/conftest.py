import numpy as np
import pytest

from sparse_kmeans import Dataset, SparseVector, available_backends
from sparse_kmeans.means import MeanSet

R = 2 ** -0.5


@pytest.fixture
def tiny():
    """Three unit vectors over four terms; the worked example set."""
    x1 = SparseVector([1, 2], [R, R])
    x2 = SparseVector([2, 3], [R, R])
    x3 = SparseVector([3, 4], [R, R])
    return Dataset.from_vectors([x1, x2, x3], dim=4, normalized=True)


@pytest.fixture
def tiny_means(tiny):
    """Means {mu1 = normalized(x1 + x2), mu2 = x3} used by the hand examples."""
    s = 6 ** -0.5
    mu1 = SparseVector([1, 2, 3], [s, 2 * s, s])
    mu2 = SparseVector([3, 4], [R, R])
    return MeanSet.from_vectors([mu1, mu2], dim=4)


def synthetic_dataset(n, dim, seed, avg_nnz=10, max_nnz=50):
    """Random sparse unit vectors with Zipf-ish nonzero counts and Zipf-ish
    term popularity; all values positive."""
    rng = np.random.default_rng(seed)
    sizes = np.arange(1, max_nnz + 1, dtype=np.float64)
    weights = sizes ** -1.08
    weights /= weights.sum()
    mean_now = float(np.dot(sizes, weights))
    # scale the support so the expected nonzero count lands near avg_nnz
    nnz = np.minimum(
        np.maximum(1, np.round(rng.choice(sizes, size=n, p=weights) * avg_nnz / mean_now)),
        min(max_nnz * 4, dim),
    ).astype(np.int64)
    term_pop = np.arange(1, dim + 1, dtype=np.float64) ** -0.8
    term_pop /= term_pop.sum()
    vectors = []
    for i in range(n):
        terms = np.sort(rng.choice(dim, size=nnz[i], replace=False, p=term_pop)) + 1
        vals = rng.random(nnz[i]) + 0.1
        vals /= np.sqrt(np.sum(vals * vals))
        vectors.append(SparseVector(terms.astype(np.int32), vals))
    return Dataset.from_vectors(vectors, dim, normalized=True)


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


@pytest.fixture
def small_synth():
    return synthetic_dataset(200, 80, seed=11, avg_nnz=8)
