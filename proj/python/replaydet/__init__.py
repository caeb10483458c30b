"""Replay-attack detection with codec and vocoder residual features."""

from ._core import (
    SAMPLE_RATE,
    SUPPORTED_BITRATES,
    Config,
    ReplayDetError,
    build_corpus,
    codec_roundtrip,
    compute_eer,
    evaluate,
    extract,
    extract_features,
    generate_bonafide,
    load_wav,
    replay,
    save_wav,
    score,
    train,
)

__all__ = [
    "SAMPLE_RATE",
    "SUPPORTED_BITRATES",
    "Config",
    "ReplayDetError",
    "build_corpus",
    "codec_roundtrip",
    "compute_eer",
    "evaluate",
    "extract",
    "extract_features",
    "generate_bonafide",
    "load_wav",
    "replay",
    "save_wav",
    "score",
    "train",
]
