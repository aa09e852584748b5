"""Structured document model, JSON ingestion, and section canonicalization.

Documents arrive as pre-structured JSON (one object per file, or JSON-Lines
for a corpus); PDF-to-structure conversion happens upstream. Every raw
section header is mapped to a canonical section at ingest time, and the
ingested document is immutable afterwards.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from .errors import SchemaError, ValidationError

YEAR_MIN = 1900
YEAR_MAX = 2100


class CanonicalSection(Enum):
    INTRODUCTION = "Introduction"
    RELATED_WORK = "Related Work"
    METHOD = "Method"
    EXPERIMENTS = "Experiments"
    CONCLUSION = "Conclusion"
    REFERENCES = "References"
    APPENDIX = "Appendix"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


# Header-to-section keyword rules. First matching rule wins; matching is a
# substring test on the lowercased header. Unmatched headers become UNKNOWN
# and are excluded from section-dependent statistics rather than guessed.
_SECTION_RULES: list[tuple[CanonicalSection, tuple[str, ...]]] = [
    (CanonicalSection.INTRODUCTION, ("introduction", "motivation")),
    (CanonicalSection.RELATED_WORK, ("related work", "background", "prior work", "literature")),
    (CanonicalSection.METHOD, ("method", "methodology", "approach", "model", "framework",
                               "system", "taxonomy", "data", "dataset", "corpus")),
    (CanonicalSection.EXPERIMENTS, ("experiment", "evaluation", "results", "analysis",
                                    "discussion", "setup")),
    (CanonicalSection.CONCLUSION, ("conclusion", "future work", "limitations", "summary")),
    (CanonicalSection.REFERENCES, ("references", "bibliography")),
    (CanonicalSection.APPENDIX, ("appendix", "supplementary")),
]


def canonicalize_section(raw_name: str) -> CanonicalSection:
    """Map a raw section header to its canonical section.

    Total and deterministic: any string is accepted, unknown headers map to
    ``CanonicalSection.UNKNOWN``. Case-insensitive, and idempotent on the
    canonical section names themselves.
    """
    lowered = raw_name.lower()
    for section, keywords in _SECTION_RULES:
        if any(keyword in lowered for keyword in keywords):
            return section
    return CanonicalSection.UNKNOWN


@dataclass(frozen=True)
class ReferenceEntry:
    """One entry of a document's reference list."""

    key: str
    title: str
    author_surnames: tuple[str, ...]
    year: int | None = None
    venue: str | None = None
    raw_text: str = ""


@dataclass(frozen=True)
class RawSection:
    """A section as parsed from the source, plus its canonical assignment."""

    raw_name: str
    paragraphs: tuple[str, ...]
    canonical: CanonicalSection


@dataclass(frozen=True)
class Document:
    """A structured paper. Immutable after ingestion; safe to share across threads."""

    id: str
    title: str
    abstract: str
    venue: str
    year: int
    is_css: bool
    sections: tuple[RawSection, ...]
    references: tuple[ReferenceEntry, ...]

    def reference_by_key(self, key: str) -> ReferenceEntry | None:
        for ref in self.references:
            if ref.key == key:
                return ref
        return None


def _require(obj: dict, key: str, types: type | tuple, path: str) -> Any:
    if key not in obj:
        raise SchemaError(f"missing field '{key}'", f"{path}.{key}")
    value = obj[key]
    if not isinstance(value, types) or isinstance(value, bool) and types is int:
        raise SchemaError(f"field '{key}' has wrong type {type(value).__name__}", f"{path}.{key}")
    return value


def _optional(obj: dict, key: str, types: type | tuple, path: str) -> Any:
    if key not in obj or obj[key] is None:
        return None
    value = obj[key]
    if not isinstance(value, types) or (isinstance(value, bool) and types is int):
        raise SchemaError(f"field '{key}' has wrong type {type(value).__name__}", f"{path}.{key}")
    return value


def _string_list(obj: dict, key: str, path: str) -> list[str]:
    value = _require(obj, key, list, path)
    for i, item in enumerate(value):
        if not isinstance(item, str):
            raise SchemaError(f"expected string, got {type(item).__name__}", f"{path}.{key}[{i}]")
    return value


def _reject_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict:
    keys = [k for k, _ in pairs]
    if len(keys) != len(set(keys)):
        duplicate = next(k for k, c in Counter(keys).items() if c > 1)
        raise SchemaError(f"duplicate field '{duplicate}'", "$")
    return dict(pairs)


def ingest_document(blob: bytes | str) -> Document:
    """Parse and validate one document from its canonical JSON form.

    Raises :class:`SchemaError` with a JSON-path location for structural
    problems and :class:`ValidationError` naming the violated invariant.
    Every section's canonical field is assigned via
    :func:`canonicalize_section`.
    """
    if isinstance(blob, bytes):
        try:
            blob = blob.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"input is not valid UTF-8: {exc}", "$") from exc
    try:
        data = json.loads(blob, object_pairs_hook=_reject_duplicate_keys)
    except SchemaError:
        raise
    except json.JSONDecodeError as exc:
        raise SchemaError(f"input is not valid JSON: {exc.msg}", "$") from exc
    if not isinstance(data, dict):
        raise SchemaError("document must be a JSON object", "$")
    return document_from_dict(data)


def document_from_dict(data: dict) -> Document:
    doc_id = _require(data, "id", str, "$")
    title = _require(data, "title", str, "$")
    abstract = _require(data, "abstract", str, "$")
    venue = _require(data, "venue", str, "$")
    year = _require(data, "year", int, "$")
    is_css = _require(data, "is_css", bool, "$")

    raw_sections = _require(data, "sections", list, "$")
    sections = []
    for i, sec in enumerate(raw_sections):
        path = f"$.sections[{i}]"
        if not isinstance(sec, dict):
            raise SchemaError("section must be an object", path)
        raw_name = _require(sec, "raw_name", str, path)
        paragraphs = _string_list(sec, "paragraphs", path)
        for j, paragraph in enumerate(paragraphs):
            if not paragraph.strip():
                raise ValidationError(
                    f"paragraphs must be nonempty strings ({path}.paragraphs[{j}])")
        sections.append(RawSection(raw_name=raw_name, paragraphs=tuple(paragraphs),
                                   canonical=canonicalize_section(raw_name)))

    raw_references = _require(data, "references", list, "$")
    references = []
    for i, ref in enumerate(raw_references):
        path = f"$.references[{i}]"
        if not isinstance(ref, dict):
            raise SchemaError("reference must be an object", path)
        key = _require(ref, "key", str, path)
        ref_title = _require(ref, "title", str, path)
        authors = _string_list(ref, "authors", path)
        ref_year = _optional(ref, "year", int, path)
        ref_venue = _optional(ref, "venue", str, path)
        raw_text = _require(ref, "raw_text", str, path)
        if not key:
            raise ValidationError(f"reference key must be nonempty ({path}.key)")
        if not ref_title.strip() and not raw_text.strip():
            raise ValidationError(
                f"reference needs a nonempty title or raw_text ({path})")
        references.append(ReferenceEntry(key=key, title=ref_title,
                                         author_surnames=tuple(authors),
                                         year=ref_year, venue=ref_venue,
                                         raw_text=raw_text))

    if not abstract.strip():
        raise ValidationError("abstract must be nonempty")
    if not YEAR_MIN <= year <= YEAR_MAX:
        raise ValidationError(f"year {year} outside [{YEAR_MIN}, {YEAR_MAX}]")
    key_counts = Counter(ref.key for ref in references)
    duplicates = sorted(k for k, c in key_counts.items() if c > 1)
    if duplicates:
        raise ValidationError(f"duplicate reference keys: {', '.join(duplicates)}")

    return Document(id=doc_id, title=title, abstract=abstract, venue=venue,
                    year=year, is_css=is_css, sections=tuple(sections),
                    references=tuple(references))


def document_to_dict(doc: Document) -> dict:
    """Serialize back to the canonical JSON schema (canonical labels are derived, not stored)."""
    return {
        "id": doc.id,
        "title": doc.title,
        "abstract": doc.abstract,
        "venue": doc.venue,
        "year": doc.year,
        "is_css": doc.is_css,
        "sections": [
            {"raw_name": s.raw_name, "paragraphs": list(s.paragraphs)} for s in doc.sections
        ],
        "references": [
            {"key": r.key, "title": r.title, "authors": list(r.author_surnames),
             "year": r.year, "venue": r.venue, "raw_text": r.raw_text}
            for r in doc.references
        ],
    }


def document_to_json(doc: Document) -> str:
    return json.dumps(document_to_dict(doc), ensure_ascii=False)


def read_corpus(path: str | Path) -> list[Document]:
    """Read documents from a JSON file (single object) or JSON-Lines corpus."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{") and "\n{" not in text.strip():
        return [ingest_document(text)]
    documents = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            documents.append(ingest_document(line))
        except SchemaError as exc:
            raise SchemaError(f"line {lineno}: {exc}") from exc
    return documents


def write_corpus(documents: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in documents:
            handle.write(document_to_json(doc) + "\n")


@dataclass
class CorpusReport:
    """Summary counts plus validation warnings for a document collection."""

    n_documents: int = 0
    by_year: dict[int, int] = field(default_factory=dict)
    by_venue: dict[str, int] = field(default_factory=dict)
    css_count: int = 0
    non_css_count: int = 0
    warnings: list[str] = field(default_factory=list)


def validate_corpus(documents: list[Document]) -> CorpusReport:
    """Summarize a corpus; problems are reported as warnings, never raised."""
    report = CorpusReport(n_documents=len(documents))
    seen_ids: set[str] = set()
    for doc in documents:
        if doc.id in seen_ids:
            report.warnings.append(f"duplicate id: {doc.id}")
        seen_ids.add(doc.id)
        if not YEAR_MIN <= doc.year <= YEAR_MAX:
            report.warnings.append(f"document {doc.id}: year {doc.year} outside "
                                   f"[{YEAR_MIN}, {YEAR_MAX}]")
        report.by_year[doc.year] = report.by_year.get(doc.year, 0) + 1
        report.by_venue[doc.venue] = report.by_venue.get(doc.venue, 0) + 1
        if doc.is_css:
            report.css_count += 1
        else:
            report.non_css_count += 1
    report.by_year = dict(sorted(report.by_year.items()))
    report.by_venue = dict(sorted(report.by_venue.items()))
    return report
