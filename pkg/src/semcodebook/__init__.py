"""Entropy-regularized, channel-aware VQ codebooks and index-transmission link simulation."""

from .analytics import (
    DistortionReport,
    SweepResult,
    bit_rate,
    channel_distortion,
    mean_pairwise_sq,
    optimal_codebook_size,
    payload_bits,
    total_semantic_distortion,
)
from .channel import (
    BitLabeling,
    ChannelSpec,
    SnrSpec,
    bits_per_index,
    confusion_matrix,
    confusion_probability,
    error_weight_pmf,
    index_error_probability,
    snr_to_flip_probability,
    transmit_indices,
)
from .codebook import (
    Codebook,
    FeatureSet,
    IndexSequence,
    UsageStats,
    empirical_entropy,
    is_in_cell,
    mutual_information_estimate,
    quantize,
    quantize_batch,
    reconstruct,
    usage_frequencies,
)
from .losses import (
    LossWeights,
    channel_loss,
    codeword_gradients,
    entropy_grad_wrt_pi,
    quantization_loss,
    regularized_loss,
    total_codebook_loss,
)
from .mixture import MixtureSpec, generate_mixture
from .simulation import LinkSimReport, simulate_link
from .training import TrainConfig, TrainReport, train_codebook

__version__ = "0.1.0"
