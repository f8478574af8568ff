"""Sentence encoders backing the embed operation."""

import hashlib
import math
import re

_TOKEN_RE = re.compile(r"\w+")
_IDENTIFIER_RE = re.compile(r"^hashed-ngram-(\d+)$")


class ModelLoadError(Exception):
    """Raised when a model identifier cannot be resolved to a usable model."""


class HashedNgramEncoder:
    """Deterministic signed feature hashing over word unigrams and bigrams."""

    def __init__(self, dim):
        if dim < 2:
            raise ModelLoadError(f"encoder dimension must be at least 2, got {dim}")
        self.dim = dim

    def encode(self, texts):
        return [self._vector(text) for text in texts]

    def _vector(self, text):
        tokens = [token.lower() for token in _TOKEN_RE.findall(text)]
        grams = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        vector = [0.0] * self.dim
        for gram in grams:
            digest = hashlib.sha256(gram.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "big") % self.dim
            sign = 1.0 if digest[4] & 1 else -1.0
            vector[bucket] += sign
        norm = math.sqrt(sum(value * value for value in vector))
        if norm > 0.0:
            vector = [value / norm for value in vector]
        return vector


def build_encoder(identifier):
    """Resolve an encoder identifier such as hashed-ngram-64."""
    match = _IDENTIFIER_RE.match(identifier)
    if not match:
        raise ModelLoadError(f"unknown encoder: {identifier}")
    return HashedNgramEncoder(int(match.group(1)))
