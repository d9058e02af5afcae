"""LTE downlink simulation, CIR image extraction, and learned range estimation."""

from .channel import (
    SPEED_OF_LIGHT_M_S,
    ChannelRealization,
    ScenarioConfig,
    apply_channel,
    path_loss_db,
    sample_channel,
    true_cfr,
)
from .errors import ConfigError, ShapeError, TrainingError
from .lte import (
    CrsReference,
    Numerology,
    ResourceGrid,
    build_crs_reference,
    build_frame_grid,
    build_numerology,
    ofdm_modulate,
)
from .receiver import (
    CfrEstimate,
    CirImage,
    CirProfile,
    assemble_cir_image,
    compute_cir,
    compute_rssi,
    estimate_cfo,
    ls_channel_estimate,
    ofdm_demodulate,
    process_frame,
    remove_cfo,
)

__version__ = "0.1.0"

__all__ = [
    "SPEED_OF_LIGHT_M_S",
    "ChannelRealization",
    "ScenarioConfig",
    "apply_channel",
    "path_loss_db",
    "sample_channel",
    "true_cfr",
    "ConfigError",
    "ShapeError",
    "TrainingError",
    "CrsReference",
    "Numerology",
    "ResourceGrid",
    "build_crs_reference",
    "build_frame_grid",
    "build_numerology",
    "ofdm_modulate",
    "CfrEstimate",
    "CirImage",
    "CirProfile",
    "assemble_cir_image",
    "compute_cir",
    "compute_rssi",
    "estimate_cfo",
    "ls_channel_estimate",
    "ofdm_demodulate",
    "process_frame",
    "remove_cfo",
]
