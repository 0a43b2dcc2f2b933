"""Noisy Boolean matrix factorisation by Gibbs sampling.

Data X (N rows by D features, binary) is modelled as the Boolean product
of two binary factors, Z (N x L) selecting codes per row and U (D x L)
defining the codes, observed through a symmetric bit-flip channel.  The
finite sampler fixes L; the nonparametric one infers it by placing an
Indian Buffet Process prior on Z.
"""

import os as _os

# Honour BOOLMF_THREADS before numba fixes its pool size at import.
if "NUMBA_NUM_THREADS" not in _os.environ:
    _requested = _os.environ.get("BOOLMF_THREADS", "")
    if _requested.isdigit() and int(_requested) >= 1:
        _os.environ["NUMBA_NUM_THREADS"] = _requested
del _os

from .bitmat import (
    BinaryMatrix,
    PredictionCounts,
    boolean_product,
    prediction_counts,
    row_negative_counts,
)
from .likelihood import (
    LAMBDA_MAX,
    lambda_mle,
    log_likelihood,
    log_likelihood_from_counts,
    log_sigmoid,
    logit,
    sigmoid,
)
from .finite_sampler import (
    FiniteConfig,
    ModelState,
    conditional_prob_one,
    gibbs_step,
    run_finite,
    sweep_u,
    sweep_z,
)
from .ibp_sampler import (
    BracketTable,
    IbpConfig,
    build_bracket_table,
    column_counts,
    existing_code_prob_one,
    ibp_sweep,
    new_dish_log_weights,
    prune_singletons,
    run_ibp,
    sample_ibp_prior,
    sample_new_dishes,
)
from .posterior import (
    Chain,
    ChainSample,
    FactorMatch,
    LSummary,
    l_summary,
    marginal_mean_z,
    match_factors,
    reconstruction_error,
)
from .synthgen import (
    SyntheticDataset,
    add_noise,
    balanced_factor_density,
    factor_density_for_target,
    generate,
)
from . import dataio
from .dataio import (
    FORMATS,
    DataFormatError,
    DatasetSpec,
    export_heatmap,
    load,
    load_chain,
    save_chain,
    save_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMatrix",
    "PredictionCounts",
    "boolean_product",
    "prediction_counts",
    "row_negative_counts",
    "LAMBDA_MAX",
    "sigmoid",
    "log_sigmoid",
    "logit",
    "log_likelihood",
    "log_likelihood_from_counts",
    "lambda_mle",
    "FiniteConfig",
    "ModelState",
    "conditional_prob_one",
    "sweep_z",
    "sweep_u",
    "gibbs_step",
    "run_finite",
    "IbpConfig",
    "BracketTable",
    "column_counts",
    "existing_code_prob_one",
    "prune_singletons",
    "build_bracket_table",
    "new_dish_log_weights",
    "sample_new_dishes",
    "ibp_sweep",
    "run_ibp",
    "sample_ibp_prior",
    "Chain",
    "ChainSample",
    "LSummary",
    "FactorMatch",
    "l_summary",
    "marginal_mean_z",
    "reconstruction_error",
    "match_factors",
    "SyntheticDataset",
    "balanced_factor_density",
    "factor_density_for_target",
    "generate",
    "add_noise",
    "dataio",
    "FORMATS",
    "DataFormatError",
    "DatasetSpec",
    "load",
    "save_matrix",
    "save_chain",
    "load_chain",
    "export_heatmap",
]
