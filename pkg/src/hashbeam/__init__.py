"""Hash-based beam training for large uniform linear arrays."""

__version__ = "0.1.0"

from .arraychan import (ArrayConfig, ChannelPath, Multipath, OnGridLoS, beam_rsrp,
                        dft_beam, steering_vector, synthesize_channel)
from .codebook import (CodebookFamily, HashCodebook, Provenance, gen_existing_random,
                       gen_hierarchical, gen_proposed_random, gen_sweeping, load, save,
                       search_fixed, stats)
from .trainer import (NoiseModel, measure, run_campaign, snr_to_sigma2, training_beam,
                      vote_and_select)
from .analysis import (PairwiseContext, optimize_l, p_tilde_existing, p_tilde_proposed,
                       pairwise_win_prob, success_probability)
