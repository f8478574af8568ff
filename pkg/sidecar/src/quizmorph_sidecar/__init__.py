"""Inference sidecar: embeddings and well-formedness scores over newline JSON."""

__version__ = "0.1.0"
