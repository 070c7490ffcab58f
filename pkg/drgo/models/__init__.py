"""Recommendation backbone, variational graph autoencoder and latent diffusion
"""
from .diffusion import (
    DenoiserParams,
    DiffusionSchedule,
    corrupt_and_denoise,
    denoiser_predict,
    make_schedule,
    q_sample,
    reverse_denoise,
    sample_loss,
)
from .exceptions import ModelError, NegativeSamplingError, NodeIndexError, ScheduleError, TimestepError
from .lightgcn import (
    BackboneModel,
    Propagated,
    TripletBatch,
    bpr_loss,
    bpr_terms,
    pair_scores,
    propagate,
    sample_triplets,
    score,
    score_all,
)
from .vgae import (
    EncoderParams,
    LatentState,
    decode,
    encode,
    kl_term,
    node_features,
    pair_logits,
    reconstruction_loss,
    reparameterize,
    sample_latent,
    vgae_loss,
)

__all__ = [
    "BackboneModel",
    "DenoiserParams",
    "DiffusionSchedule",
    "EncoderParams",
    "LatentState",
    "ModelError",
    "NegativeSamplingError",
    "NodeIndexError",
    "Propagated",
    "ScheduleError",
    "TimestepError",
    "TripletBatch",
    "bpr_loss",
    "bpr_terms",
    "corrupt_and_denoise",
    "decode",
    "denoiser_predict",
    "encode",
    "kl_term",
    "make_schedule",
    "node_features",
    "pair_logits",
    "pair_scores",
    "propagate",
    "q_sample",
    "reconstruction_loss",
    "reparameterize",
    "reverse_denoise",
    "sample_latent",
    "sample_loss",
    "sample_triplets",
    "score",
    "score_all",
    "vgae_loss",
]
