"""Well-formedness classifier: order-sensitive features with logistic weights."""

import json
import math
import re
from dataclasses import dataclass
from importlib import resources

from .encoders import ModelLoadError

_TOKEN_RE = re.compile(r"\w+")

_WH_WORDS = frozenset(
    ["who", "whom", "whose", "what", "which", "where", "when", "why", "how"]
)
_AUX_WORDS = frozenset(
    ["is", "are", "was", "were", "am", "be", "been", "do", "does", "did",
     "has", "have", "had", "can", "could", "will", "would", "should", "name"]
)
_ARTICLES = frozenset(["a", "an", "the"])
_LINK_WORDS = frozenset(
    ["a", "an", "the", "and", "or", "but", "nor", "so", "yet",
     "of", "in", "on", "at", "by", "to", "for", "with", "from", "as"]
)

FEATURE_NAMES = (
    "leading_wh",
    "wh_aux_bigram",
    "ends_question_mark",
    "stray_wh",
    "article_flow",
    "article_jam",
    "dangling_tail",
    "repeat_jam",
    "length_band",
    "punct_start",
)


def features(text):
    """Map a question to fixed-order feature values in [0, 1]."""
    words = [token.lower() for token in _TOKEN_RE.findall(text)]
    stripped = text.strip()
    pairs = list(zip(words, words[1:]))
    article_flow = sum(
        1 for a, b in pairs if a in _ARTICLES and b not in _LINK_WORDS
    )
    article_jam = sum(1 for a, b in pairs if a in _ARTICLES and b in _LINK_WORDS)
    if words and words[-1] in _ARTICLES:
        article_jam += 1
    return [
        1.0 if words and words[0] in _WH_WORDS else 0.0,
        1.0 if any(a in _WH_WORDS and b in _AUX_WORDS for a, b in pairs) else 0.0,
        1.0 if stripped.endswith("?") else 0.0,
        1.0 if any(word in _WH_WORDS for word in words[1:]) and
        (not words or words[0] not in _WH_WORDS) else 0.0,
        min(article_flow / 4.0, 1.0),
        min(article_jam / 4.0, 1.0),
        1.0 if words and words[-1] in _LINK_WORDS else 0.0,
        min(sum(1 for a, b in pairs if a == b) / 4.0, 1.0),
        1.0 if 3 <= len(words) <= 24 else 0.0,
        1.0 if stripped and not stripped[0].isalnum() and stripped[0] != '"' else 0.0,
    ]


@dataclass(frozen=True)
class WellformedModel:
    """Logistic scorer over the fixed feature set."""

    weights: tuple
    bias: float

    def score(self, texts):
        return [self._score_one(text) for text in texts]

    def _score_one(self, text):
        value = self.bias
        for weight, feature in zip(self.weights, features(text)):
            value += weight * feature
        value = max(-60.0, min(60.0, value))
        return 1.0 / (1.0 + math.exp(-value))


def load_checkpoint(path):
    """Load a trained checkpoint, validating its feature layout."""
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("model") != "wellformed-logistic":
        raise ModelLoadError(f"unsupported checkpoint model in {path}")
    names = tuple(payload.get("feature_names", ()))
    weights = payload.get("weights", [])
    if names != FEATURE_NAMES or len(weights) != len(FEATURE_NAMES):
        raise ModelLoadError(f"checkpoint features do not match scorer: {path}")
    return WellformedModel(tuple(float(w) for w in weights), float(payload["bias"]))


def build_classifier(identifier):
    """Resolve a classifier identifier to a loaded model."""
    if identifier == "wellformed-logistic-v1":
        path = resources.files("quizmorph_sidecar").joinpath(
            "data/wellformed_checkpoint.json"
        )
        return load_checkpoint(str(path))
    if identifier.endswith(".json"):
        try:
            return load_checkpoint(identifier)
        except OSError as exc:
            raise ModelLoadError(f"cannot read checkpoint {identifier}: {exc}")
    raise ModelLoadError(f"unknown classifier: {identifier}")
