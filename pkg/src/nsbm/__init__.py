"""Nested stochastic block model: simultaneous clustering of networks and
their nodes via Gibbs sampling."""

from .metrics import mean_xi_nmi, min_vi_partition, nmi, summarize_min_vi, vi
from .model import (
    EtaLogs,
    Hyper,
    ModelState,
    NetworkCollection,
    PosteriorSamples,
    TraceRow,
    collapsed_log_joint,
    estimate_eta,
    log_joint,
)
from .netcore import (
    Adjacency,
    BlockStats,
    DeltaStats,
    NeighborCounts,
    canonical_relabel,
    compute_block_sums,
    delta_block_sums,
    label_counts,
    neighbor_counts,
    network_move_deltas,
)
from .numerics import (
    BetaRatioTable,
    derive_rng,
    derive_seed,
    log_beta_ratio,
    log_rising_factorial,
    sample_beta,
    sample_categorical_logits,
    stick_break,
    sym_prod_logs,
)
from .samplers import SAMPLERS, ChainOptions, SuffStats, dpsbm_init, run_chain
from .simgen import SimConfig, SimOutput, ead, gen_collection, gen_eta, personality_benchmark

__version__ = "0.1.0"
