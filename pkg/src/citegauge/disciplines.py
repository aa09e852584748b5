"""Field-of-study resolution for reference entries.

Each reference is resolved against a scholarly-metadata HTTP API (a
Semantic-Scholar-compatible title search) behind a persistent JSONL cache,
with a venue-keyword lexicon as the offline fallback. A citation is
out-of-discipline when the resolved primary field lies outside the
configured in-discipline set ({Computer Science, Linguistics} by default).

The cache is append-only and keyed by normalized title; the last entry for
a key wins, so corrections are plain appends and the file stays
diff-friendly. Resolution failures are never raised to callers: they
produce ``unresolved`` records and a logged error.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import requests

from .corpus import Document, ReferenceEntry
from .linking import LinkedCitation

logger = logging.getLogger(__name__)

API_URL_ENV = "CITEGAUGE_METADATA_API_URL"
API_KEY_ENV = "CITEGAUGE_METADATA_API_KEY"
DEFAULT_API_URL = "https://api.semanticscholar.org/graph/v1"

# Venue-keyword fallback lexicon; first match on the lowercased venue wins.
VENUE_FIELD_LEXICON: tuple[tuple[str, str], ...] = (
    ("psycholog", "Psychology"),
    ("comput", "Computer Science"),
    ("linguist", "Linguistics"),
    ("sociol", "Sociology"),
    ("econom", "Economics"),
    ("politic", "Political Science"),
    ("medic", "Medicine"),
    ("biolog", "Biology"),
    ("mathemat", "Mathematics"),
    ("physic", "Physics"),
    ("histor", "History"),
    ("philosoph", "Philosophy"),
    ("anthropol", "Anthropology"),
    ("educat", "Education"),
    ("communicat", "Communication"),
    ("geograph", "Geography"),
    ("law", "Law"),
)


class FieldSource(str, Enum):
    API = "api"
    STRING_MATCH = "string_match"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class FieldRecord:
    """Fields of study for one reference, in provider rank order."""

    reference_key: str
    fields_of_study: tuple[str, ...]
    source: FieldSource
    fetched_at: str

    def to_dict(self) -> dict:
        return {"reference_key": self.reference_key,
                "fields_of_study": list(self.fields_of_study),
                "source": self.source.value,
                "fetched_at": self.fetched_at}


@dataclass
class DisciplineConfig:
    in_discipline_fields: frozenset[str] = frozenset({"Computer Science", "Linguistics"})
    request_timeout: float = 10.0
    max_retries: int = 2
    cache_path: Path | None = None
    base_url: str | None = None       # falls back to env, then the public API
    requests_per_second: float = 1.0
    backoff_base: float = 0.5
    offline: bool = False

    def __post_init__(self):
        if not self.in_discipline_fields:
            raise ValueError("in_discipline_fields must be nonempty")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def resolved_base_url(self) -> str:
        return self.base_url or os.environ.get(API_URL_ENV, DEFAULT_API_URL)


def normalize_title(title: str) -> str:
    return " ".join(title.lower().split())


class FieldCache:
    """Append-only JSONL cache keyed by normalized title; last entry wins.

    Reads are served from memory; writes append under a lock, so concurrent
    readers never observe torn lines.
    """

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    try:
                        entry = json.loads(line)
                        self._entries[entry["key"]] = entry
                    except (ValueError, KeyError):
                        logger.warning("skipping malformed cache line in %s", self.path)

    def get(self, key: str) -> dict | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, record: FieldRecord) -> None:
        entry = {"key": key, **record.to_dict()}
        with self._lock:
            self._entries[key] = entry
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as handle:
                    handle.write(json.dumps(entry, ensure_ascii=False) + "\n")


class DisciplineResolver:
    """Resolves references to fields of study; shareable across threads."""

    def __init__(self, config: DisciplineConfig, session=None):
        self.config = config
        self.session = session or requests.Session()
        self.cache = FieldCache(config.cache_path)
        self.request_count = 0
        # One in-flight request at a time per resolver (one provider host),
        # paced at the configured requests/second.
        self._request_lock = threading.Lock()
        self._next_allowed = 0.0

    def resolve_fields(self, reference: ReferenceEntry) -> FieldRecord:
        """Cache, then API title search with retries, then venue lexicon."""
        lookup = reference.title.strip() or reference.raw_text.strip()
        key = normalize_title(lookup)
        cached = self.cache.get(key)
        if cached is not None:
            return FieldRecord(
                reference_key=reference.key,
                fields_of_study=tuple(cached["fields_of_study"]),
                source=FieldSource(cached["source"]),
                fetched_at=cached["fetched_at"],
            )

        fields: tuple[str, ...] = ()
        source = FieldSource.UNRESOLVED
        if not self.config.offline:
            fields = self._query_api(lookup)
            if fields:
                source = FieldSource.API
        if not fields:
            fallback = _venue_lexicon_lookup(reference.venue)
            if fallback is not None:
                fields = (fallback,)
                source = FieldSource.STRING_MATCH
        if source is FieldSource.UNRESOLVED:
            logger.error("could not resolve field of study for reference %r (%s)",
                         reference.key, lookup[:80])

        record = FieldRecord(
            reference_key=reference.key,
            fields_of_study=fields,
            source=source,
            fetched_at=datetime.now(timezone.utc).isoformat(),
        )
        self.cache.put(key, record)
        return record

    def _query_api(self, title: str) -> tuple[str, ...]:
        url = f"{self.config.resolved_base_url().rstrip('/')}/paper/search"
        params = {"query": title, "fields": "title,fieldsOfStudy", "limit": "1"}
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["x-api-key"] = api_key

        delay = self.config.backoff_base
        for attempt in range(self.config.max_retries + 1):
            if attempt > 0:
                time.sleep(delay)
                delay *= 2  # nondecreasing backoff
            try:
                response = self._rate_limited_get(url, params, headers)
            except requests.RequestException as exc:
                logger.warning("metadata API request failed (attempt %d): %s",
                               attempt + 1, exc)
                continue
            if response.status_code in (429,) or response.status_code >= 500:
                logger.warning("metadata API returned HTTP %d (attempt %d)",
                               response.status_code, attempt + 1)
                continue
            if response.status_code != 200:
                logger.warning("metadata API returned HTTP %d; not retrying",
                               response.status_code)
                return ()
            try:
                results = response.json().get("data", [])
            except ValueError:
                logger.warning("metadata API returned non-JSON body")
                return ()
            if not results:
                return ()
            fields = results[0].get("fieldsOfStudy") or []
            return tuple(str(f) for f in fields)
        return ()

    def _rate_limited_get(self, url: str, params: dict, headers: dict):
        with self._request_lock:
            now = time.monotonic()
            if now < self._next_allowed:
                time.sleep(self._next_allowed - now)
            self.request_count += 1
            try:
                return self.session.get(url, params=params, headers=headers,
                                        timeout=self.config.request_timeout)
            finally:
                if self.config.requests_per_second > 0:
                    self._next_allowed = (time.monotonic()
                                          + 1.0 / self.config.requests_per_second)


def _venue_lexicon_lookup(venue: str | None) -> str | None:
    if not venue:
        return None
    lowered = venue.lower()
    for keyword, field_name in VENUE_FIELD_LEXICON:
        if keyword in lowered:
            return field_name
    return None


def is_out_of_discipline(record: FieldRecord, config: DisciplineConfig) -> bool | None:
    """True when the primary (first-ranked) field lies outside the
    in-discipline set; None when the record is unresolved."""
    if record.source is FieldSource.UNRESOLVED:
        return None
    if not record.fields_of_study:
        return None
    return record.fields_of_study[0] not in config.in_discipline_fields


@dataclass
class DisciplineCounts:
    in_discipline: int = 0
    out_of_discipline: int = 0
    unresolved: int = 0

    def to_dict(self) -> dict:
        return {"in": self.in_discipline, "out": self.out_of_discipline,
                "unresolved": self.unresolved}


def annotate_corpus_disciplines(citations: Sequence[LinkedCitation],
                                documents: Iterable[Document],
                                config: DisciplineConfig,
                                resolver: DisciplineResolver | None = None,
                                ) -> tuple[list[LinkedCitation], DisciplineCounts]:
    """Fill every citation's out_of_discipline flag and tally the outcome."""
    resolver = resolver or DisciplineResolver(config)
    docs_by_id = {doc.id: doc for doc in documents}
    counts = DisciplineCounts()
    annotated: list[LinkedCitation] = []
    for citation in citations:
        document = docs_by_id.get(citation.document_id)
        reference = document.reference_by_key(citation.reference_key) if document else None
        if reference is None:
            flag = None
        else:
            flag = is_out_of_discipline(resolver.resolve_fields(reference), config)
        if flag is None:
            counts.unresolved += 1
        elif flag:
            counts.out_of_discipline += 1
        else:
            counts.in_discipline += 1
        annotated.append(replace(citation, out_of_discipline=flag))
    return annotated, counts
