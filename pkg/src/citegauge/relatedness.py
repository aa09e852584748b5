"""Semantic relatedness between a citation's context and the paper abstract.

Embeddings come from a pluggable provider: an HTTP embedding service, a
precomputed-vector file, or a deterministic hashing stub for tests and
offline runs. Scores are cosine similarities mapped affinely into [0, 1]
via (cos + 1) / 2.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import CitegaugeError

logger = logging.getLogger(__name__)


class ProviderError(CitegaugeError):
    """The embedding provider failed (network, timeout, malformed payload)."""


class MissingVectorError(CitegaugeError):
    """A precomputed-vector file has no entry for the requested text."""


class EmptyTextError(CitegaugeError):
    """Text is empty after whitespace trimming; nothing to embed."""


class DimensionMismatchError(CitegaugeError):
    """Vectors of different dimensions cannot be compared."""


class ZeroVectorError(CitegaugeError):
    """Cosine similarity is undefined for an all-zero vector."""


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.values)

    def __post_init__(self):
        if not self.values:
            raise ProviderError("embedding vector must have dimension >= 1")
        if not all(math.isfinite(v) for v in self.values):
            raise ProviderError("embedding vector contains non-finite values")


@dataclass(frozen=True)
class RelatednessScore:
    """Raw cosine plus its affine normalization into [0, 1]."""

    raw_cosine: float
    normalized: float

    @classmethod
    def from_cosine(cls, raw: float) -> "RelatednessScore":
        return cls(raw_cosine=raw, normalized=(raw + 1.0) / 2.0)


def collapse_whitespace(text: str) -> str:
    return " ".join(text.split())


def text_key(text: str) -> str:
    """Stable lookup key for a text: sha256 hex of its whitespace-collapsed form."""
    return hashlib.sha256(collapse_whitespace(text).encode("utf-8")).hexdigest()


class EmbeddingProvider(ABC):
    """Shareable across threads; dimension must stay constant per session."""

    max_text_length: int | None = None

    @abstractmethod
    def embed_batch(self, texts: list[str]) -> list[list[float]]:
        """Embed already-preprocessed texts, preserving order."""


class HttpEmbeddingProvider(EmbeddingProvider):
    """POST {"texts": [...]} -> {"vectors": [[...]]} against an embedding service."""

    def __init__(self, url: str, session=None, timeout: float = 30.0,
                 max_text_length: int | None = 8192):
        self.url = url
        self.session = session or requests.Session()
        self.timeout = timeout
        self.max_text_length = max_text_length
        self._dimension: int | None = None
        self._lock = threading.Lock()

    def embed_batch(self, texts: list[str]) -> list[list[float]]:
        try:
            response = self.session.post(self.url, json={"texts": texts},
                                         timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(f"embedding service returned HTTP {response.status_code}")
        try:
            vectors = response.json()["vectors"]
        except (ValueError, KeyError) as exc:
            raise ProviderError(f"malformed embedding response: {exc}") from exc
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError("embedding response count does not match request")
        with self._lock:
            for vector in vectors:
                if self._dimension is None:
                    self._dimension = len(vector)
                elif len(vector) != self._dimension:
                    raise ProviderError("embedding dimension changed within session")
        return vectors


class PrecomputedEmbeddingProvider(EmbeddingProvider):
    """Vectors from a JSONL file of {"sha256": hex, "vector": [float]} rows."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._vectors: dict[str, list[float]] = {}
        dimension = None
        with open(self.path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    key, vector = row["sha256"], row["vector"]
                except (ValueError, KeyError) as exc:
                    raise ProviderError(
                        f"{self.path}: bad vector row at line {lineno}: {exc}") from exc
                if dimension is None:
                    dimension = len(vector)
                elif len(vector) != dimension:
                    raise ProviderError(
                        f"{self.path}: inconsistent vector dimension at line {lineno}")
                self._vectors[key] = [float(v) for v in vector]

    def embed_batch(self, texts: list[str]) -> list[list[float]]:
        out = []
        for text in texts:
            key = text_key(text)
            if key not in self._vectors:
                raise MissingVectorError(f"no precomputed vector for sha256 {key}")
            out.append(self._vectors[key])
        return out


class HashingStubProvider(EmbeddingProvider):
    """Deterministic pseudo-embeddings for tests; same text -> same vector."""

    def __init__(self, dimension: int = 64):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension

    def embed_batch(self, texts: list[str]) -> list[list[float]]:
        out = []
        for text in texts:
            seed = int.from_bytes(
                hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
            rng = random.Random(seed)
            vector = [rng.uniform(-1.0, 1.0) for _ in range(self.dimension)]
            if all(v == 0.0 for v in vector):
                vector[0] = 1.0
            out.append(vector)
        return out


def embed(text: str, provider: EmbeddingProvider) -> EmbeddingVector:
    """Embed one text. Preprocessing is whitespace collapse only; texts longer
    than the provider's declared limit are truncated with a logged warning."""
    collapsed = collapse_whitespace(text)
    if not collapsed:
        raise EmptyTextError("cannot embed empty text")
    limit = provider.max_text_length
    if limit is not None and len(collapsed) > limit:
        logger.warning("truncating text of length %d to provider limit %d",
                       len(collapsed), limit)
        collapsed = collapsed[:limit]
    vector = provider.embed_batch([collapsed])[0]
    return EmbeddingVector(values=tuple(float(v) for v in vector))


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Cosine similarity, clamped to [-1, 1] against floating-point drift."""
    if u.dimension != v.dimension:
        raise DimensionMismatchError(
            f"dimension mismatch: {u.dimension} vs {v.dimension}")
    dot = sum(a * b for a, b in zip(u.values, v.values))
    norm_u = math.sqrt(sum(a * a for a in u.values))
    norm_v = math.sqrt(sum(b * b for b in v.values))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ZeroVectorError("cosine undefined for an all-zero vector")
    return max(-1.0, min(1.0, dot / (norm_u * norm_v)))


class EmbeddingCache:
    """Per-run cache of embeddings keyed by collapsed text; thread-safe."""

    def __init__(self):
        self._vectors: dict[str, EmbeddingVector] = {}
        self._lock = threading.Lock()

    def get_or_embed(self, text: str, provider: EmbeddingProvider) -> EmbeddingVector:
        key = text_key(text)
        with self._lock:
            cached = self._vectors.get(key)
        if cached is not None:
            return cached
        vector = embed(text, provider)
        with self._lock:
            return self._vectors.setdefault(key, vector)


def relatedness(citation, provider: EmbeddingProvider,
                cache: EmbeddingCache | None = None) -> RelatednessScore:
    """Normalized cosine between a citation's context paragraph and abstract."""
    cache = cache if cache is not None else EmbeddingCache()
    try:
        context_vec = cache.get_or_embed(citation.context_paragraph, provider)
        abstract_vec = cache.get_or_embed(citation.abstract, provider)
        return RelatednessScore.from_cosine(cosine(context_vec, abstract_vec))
    except CitegaugeError as exc:
        raise type(exc)(f"{citation.item_id}: {exc}") from exc


def relatedness_batch(citations, provider: EmbeddingProvider) -> list[RelatednessScore]:
    """Score many citations with a shared per-run embedding cache."""
    cache = EmbeddingCache()
    return [relatedness(citation, provider, cache) for citation in citations]


def grouped_score_summary(scores_by_group: dict[str, list[float]]) -> dict:
    """Five-number summaries per group plus box plot-data for the figure path."""
    rows = []
    values = []
    summary_rows = []
    for group in sorted(scores_by_group):
        scores = sorted(scores_by_group[group])
        if not scores:
            continue
        rows.append(group)
        values.append(scores)
        summary_rows.append({
            "group": group,
            "n": len(scores),
            "min": scores[0],
            "q1": _quantile(scores, 0.25),
            "median": _quantile(scores, 0.5),
            "q3": _quantile(scores, 0.75),
            "max": scores[-1],
        })
    return {
        "summary": summary_rows,
        "plot_data": {"kind": "box", "rows": rows, "cols": ["normalized_relatedness"],
                      "values": values},
    }


def _quantile(sorted_values: list[float], q: float) -> float:
    # linear interpolation between closest ranks (matches numpy's default)
    if len(sorted_values) == 1:
        return sorted_values[0]
    position = q * (len(sorted_values) - 1)
    lower = math.floor(position)
    upper = math.ceil(position)
    if lower == upper:
        return sorted_values[lower]
    fraction = position - lower
    return sorted_values[lower] * (1 - fraction) + sorted_values[upper] * fraction
