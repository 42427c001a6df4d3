"""Pitch-height and chroma RSA for audio representations."""

from ._core import (
    ChromaRsaError,
    ErrorCode,
    compare,
    compute_rdm,
    frontend,
    midi_to_freq,
    model_rdm,
    noise_ceiling,
    one_sample_ttest,
    read_embeddings,
    spearman,
    synthesize_note,
    write_embeddings,
)

__all__ = [
    "ChromaRsaError",
    "ErrorCode",
    "compare",
    "compute_rdm",
    "frontend",
    "midi_to_freq",
    "model_rdm",
    "noise_ceiling",
    "one_sample_ttest",
    "read_embeddings",
    "spearman",
    "synthesize_note",
    "write_embeddings",
]
