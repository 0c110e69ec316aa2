"""Error-floor analysis for LDPC codes: impulse search for trapping sets,
error-boundary ranking, and Monte Carlo / importance-sampling estimation."""

__version__ = "0.1.0"

from .code import (ACYCLIC, AlistError, BitPattern, NeighborTree, TannerCode, TsClass, build_neighbor_tree,
                   classify_pattern, compute_girth, load_alist, parse_alist, search_order, syndrome, write_alist)
from .decoder import (ChannelModel, DecodeOutcome, DecoderConfig, channel_llr, check_update, decode,
                      decode_batch, extract_trapping_set, marginal, variable_update)
from .search import (ImpulsePattern, SearchParams, TsCatalog, enumerate_impulses, impulse_to_received,
                     run_search, search_cost)
from .boundary import (BoundaryProbe, BoundaryResult, probe_boundary, q_contribution, rank_catalog,
                       select_shift_points)
from .sampling import (ISDensity, ISEstimate, MCEstimate, NoiseSource, adapt_density, is_estimate, log_weights,
                       mc_estimate, run_importance_sampling, run_monte_carlo, sample_biased, sample_nominal,
                       weight)
