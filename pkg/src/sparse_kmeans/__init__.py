"""Sparse spherical k-means over inverted-file postings.

Seven interchangeable clustering variants (a dense reference plus six sparse
data-structure variants) that keep identical solutions while differing in the
work their inner loops perform, together with exact operation counting and
closed-form CPI and last-level-cache cost models.
"""

from .cache import (
    CacheParams,
    FreqProfile,
    LlcmReport,
    expected_blocks_ivf,
    expected_blocks_ivf_window,
    expected_blocks_ivfd,
    find_z_star,
    llcm_ivf,
    llcm_ivfd,
)
from .clustering import (
    RunResult,
    SplitMix64,
    init_means,
    objective_cosine,
    reference_iterate,
    run,
)
from .counters import (
    CrossoverCheck,
    InstModelParams,
    OpCounters,
    ivf_beats_ifn,
    modeled_instructions,
    mult_volume_ifn,
    mult_volume_ivf,
)
from .cpi import (
    CpiWeights,
    DfSample,
    FitError,
    PhiVector,
    cpi_predict,
    fit_errors,
    fit_staged,
    phi,
)
from .data import (
    CorruptionError,
    Dataset,
    FootprintReport,
    InvertedFile,
    SparseVector,
    avg_sparsity,
    build_inverted_file,
    footprint,
    sparse_dot,
    sparsity,
)
from .io import ParseError, parse_uci_bow, tfidf_normalize
from .kernels import available_backends, default_backend
from .means import MeanSet
from .variants import (
    VARIANTS,
    Assignment,
    assign_ifb,
    assign_ifn,
    assign_ivf,
    assign_ivfd,
    assign_mfn,
    assign_twm,
    update_dense,
    update_ivf,
    update_sparse_standard,
)

__version__ = "0.1.0"
