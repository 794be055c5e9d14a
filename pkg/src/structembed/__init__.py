"""Structured random matrices for fast nonlinear embeddings and kernel estimation."""

from .errors import DataError, InvalidArgument, ResourceLimit
from .transforms import (RandomnessBudget, SignDiagonal, fwht, pad_pow2, preprocess,
                         sample_gaussian, sample_signs)
from .structured import (StructuredFamily, StructuredMatrix, build, circular_convolve,
                         materialize, matvec, p_matrix, row)
from .diagnostics import (CoherenceGraph, PModelStats, check_normalized, check_orthogonality,
                          coherence_graph, exact_chromatic, gram_schmidt_perturb, greedy_coloring,
                          is_balanced, model_stats, s_vector, sigma, verify_s_identities)
from .kernels import (EmbeddingPipeline, EstimateReport, Nonlinearity, embed, error_sweep,
                      estimate_pair, estimate_tuple, exact_kernel, make_pipeline, mc_oracle)
from .bounds import (Theorem1Params, azuma_bound, cor1_tail, cor1_threshold, cor2_tail,
                     cor2_threshold, delta_psi_mean, lipschitz_lambda, mcdiarmid_bound,
                     p0_eps_angular, theorem1_bound)

__version__ = "0.1.0"
