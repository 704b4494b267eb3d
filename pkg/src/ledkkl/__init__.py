"""LED underwater optical link model with a learned KKL observer."""

from .channel import ChannelParams, GaussianGainParams, NoiseConfig, measure_pair, step
from .kkl_core import LatentConfig, contraction_check, default_latent_config, series_oracle_T
from .training import TrainConfig, TrainedMaps, train

__all__ = [
    "ChannelParams", "GaussianGainParams", "NoiseConfig", "measure_pair", "step",
    "LatentConfig", "contraction_check", "default_latent_config", "series_oracle_T",
    "TrainConfig", "TrainedMaps", "train",
]
