"""Author-year citation marker detection and reference linking.

Two marker styles are recognized:

* parenthetical -- ``(Surname[, Surname | and Surname][ et al.], YEAR[a-z]?)``
  where one parenthesis may hold several citations separated by ``;``
* narrative -- ``Surname [and Surname | et al.] (YEAR[a-z]?)``

Numeric styles (``[12]``) are out of scope. Unparseable parenthetical
segments that still contain a year are counted as skipped candidates so
extraction quality stays observable.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .corpus import CanonicalSection, Document, ReferenceEntry
from .errors import SchemaError

YEAR_MIN = 1900
YEAR_MAX = 2100

# Surname grammar: one or more capitalized tokens, optionally preceded or
# joined by lowercase particles ("van der Berg", "Da San Martino"). Tokens
# may carry internal hyphens/apostrophes ("Barrón-Cedeño", "O'Connor").
_PARTICLES = ("van", "von", "der", "den", "de", "del", "della", "di", "da",
              "dos", "do", "du", "la", "le", "ter", "ten")
_PARTICLE_RE = "|".join(_PARTICLES)
_NAME_TOKEN = r"[A-ZÀ-ÖØ-ÞĀ-Ž][^\W\d_]*(?:[-'’][^\W\d_]+)*"
_SURNAME = rf"(?:(?:{_PARTICLE_RE})\s+)*{_NAME_TOKEN}(?:\s+(?:(?:{_PARTICLE_RE})|{_NAME_TOKEN}))*"

_NARRATIVE_RE = re.compile(
    rf"(?P<authors>{_SURNAME}(?:\s+and\s+{_SURNAME})?)(?P<etal>\s+et\s+al\.?)?"
    rf"\s*\((?P<year>\d{{4}})(?P<suffix>[a-z])?\)",
    re.UNICODE,
)
_PAREN_RE = re.compile(r"\(([^()]*)\)")
_CONJUNCT_RE = re.compile(r"^(?P<authors>.+?),\s*(?P<year>\d{4})(?P<suffix>[a-z])?$")
_ETAL_RE = re.compile(r"\s+et\s+al\.?$")
_YEAR_RE = re.compile(r"\d{4}")

# Capitalized words that start ordinary sentences or name artifacts; they are
# trimmed off the front of narrative matches and rejected as lead surnames.
_LEAD_STOPWORDS = {
    "A", "An", "The", "In", "On", "As", "At", "By", "For", "From", "If", "It",
    "Of", "Our", "She", "He", "They", "We", "This", "These", "Those", "That",
    "Table", "Figure", "Section", "Appendix", "Equation", "Algorithm", "See",
    "Since", "While", "When", "With", "Although", "However", "Finally",
    "Following", "Using", "Like", "Unlike", "Both", "Recently", "Despite",
    "Given", "Moreover", "Further", "Inspired", "Building", "Similarly",
    "First", "Second", "Third", "Prior", "Previous", "Many", "Several",
    "Most", "Other", "Others", "Some", "Such", "According", "Compared",
}


@dataclass(frozen=True)
class CitationMarker:
    """One detected in-text citation occurrence."""

    surface: str
    lead_surname: str
    extra_surnames: tuple[str, ...]
    year: int
    span: tuple[int, int, int]  # (paragraph_index, char_start, char_end)


@dataclass(frozen=True)
class LinkedCitation:
    """A marker tied to its reference entry and annotation context."""

    item_id: str
    document_id: str
    marker: CitationMarker
    reference_key: str
    section: CanonicalSection
    context_paragraph: str
    abstract: str
    out_of_discipline: bool | None = None


@dataclass(frozen=True)
class AmbiguityWarning:
    document_id: str
    surface: str
    candidate_keys: tuple[str, ...]


@dataclass(frozen=True)
class UnlinkedMarker:
    document_id: str
    section: CanonicalSection
    marker: CitationMarker


@dataclass
class UnlinkedReport:
    """Markers that could not be linked, plus extraction diagnostics."""

    unlinked: list[UnlinkedMarker] = field(default_factory=list)
    ambiguities: list[AmbiguityWarning] = field(default_factory=list)
    skipped_candidates: int = 0


@dataclass
class ParagraphScan:
    markers: list[CitationMarker]
    skipped_spans: list[tuple[int, int]]


def normalize_surname(name: str) -> str:
    """Lowercase, strip diacritics and hyphens, collapse whitespace."""
    decomposed = unicodedata.normalize("NFKD", name)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    stripped = stripped.replace("-", "").replace("’", "'")
    return " ".join(stripped.lower().split())


def _valid_surname(text: str) -> bool:
    tokens = text.split()
    if not tokens:
        return False
    for token in tokens:
        bare = token.replace("-", "").replace("'", "").replace("’", "").replace(".", "")
        if not bare or not bare.isalpha():
            return False
        if not (token[0].isupper() or token.lower() in _PARTICLES):
            return False
    return any(token[0].isupper() for token in tokens)


def _split_authors(authors: str) -> list[str] | None:
    """Split an author listing into surnames; None if any part is not a surname."""
    parts: list[str] = []
    for chunk in re.split(r",\s*", authors):
        parts.extend(p for p in re.split(r"\s+and\s+", chunk) if p.strip())
    parts = [p.strip() for p in parts]
    if not parts or not all(_valid_surname(p) for p in parts):
        return None
    return parts


def _parse_conjunct(segment: str) -> tuple[list[str], int] | None:
    """Parse one parenthetical conjunct into (surnames, year); None if malformed."""
    match = _CONJUNCT_RE.match(segment.strip())
    if not match:
        return None
    year = int(match.group("year"))
    if not YEAR_MIN <= year <= YEAR_MAX:
        return None
    authors = _ETAL_RE.sub("", match.group("authors").strip())
    surnames = _split_authors(authors)
    if surnames is None or surnames[0] in _LEAD_STOPWORDS:
        return None
    return surnames, year


def scan_paragraph(paragraph: str, paragraph_index: int = 0) -> ParagraphScan:
    """Detect all citation markers in one paragraph, with skip diagnostics."""
    markers: list[CitationMarker] = []
    consumed: list[tuple[int, int]] = []
    skipped: list[tuple[int, int]] = []

    for match in _NARRATIVE_RE.finditer(paragraph):
        authors = match.group("authors")
        # Trim sentence-starter words the greedy surname run may have absorbed
        # ("Following Underwood (2018)" must yield lead "Underwood").
        start = match.start("authors")
        while True:
            head, _, rest = authors.partition(" ")
            if rest and head in _LEAD_STOPWORDS:
                start += len(authors) - len(rest)
                authors = rest
            else:
                break
        surnames = _split_authors(authors)
        if surnames is None or surnames[0] in _LEAD_STOPWORDS:
            continue
        year = int(match.group("year"))
        if not YEAR_MIN <= year <= YEAR_MAX:
            continue
        end = match.end()
        markers.append(CitationMarker(
            surface=paragraph[start:end],
            lead_surname=surnames[0],
            extra_surnames=tuple(surnames[1:]),
            year=year,
            span=(paragraph_index, start, end),
        ))
        consumed.append((start, end))

    for paren in _PAREN_RE.finditer(paragraph):
        pstart, pend = paren.start(), paren.end()
        if any(s < pend and pstart < e for s, e in consumed):
            continue
        content = paren.group(1)
        if not _YEAR_RE.search(content):
            continue
        offset = pstart + 1
        cursor = 0
        for segment in content.split(";"):
            seg_start = offset + cursor
            cursor += len(segment) + 1
            stripped = segment.strip()
            if not stripped:
                continue
            lead_ws = len(segment) - len(segment.lstrip())
            abs_start = seg_start + lead_ws
            abs_end = abs_start + len(stripped)
            parsed = _parse_conjunct(stripped)
            if parsed is None:
                if _YEAR_RE.search(stripped):
                    skipped.append((abs_start, abs_end))
                continue
            surnames, year = parsed
            markers.append(CitationMarker(
                surface=stripped,
                lead_surname=surnames[0],
                extra_surnames=tuple(surnames[1:]),
                year=year,
                span=(paragraph_index, abs_start, abs_end),
            ))

    markers.sort(key=lambda m: m.span[1])
    nonoverlapping: list[CitationMarker] = []
    last_end = -1
    for marker in markers:
        if marker.span[1] >= last_end:
            nonoverlapping.append(marker)
            last_end = marker.span[2]
    return ParagraphScan(markers=nonoverlapping, skipped_spans=skipped)


def extract_markers(paragraph: str, paragraph_index: int = 0) -> list[CitationMarker]:
    """Markers in one paragraph, ordered by char_start, spans non-overlapping."""
    return scan_paragraph(paragraph, paragraph_index).markers


def link_marker(marker: CitationMarker, references: Iterable[ReferenceEntry],
                warnings: list[AmbiguityWarning] | None = None,
                document_id: str = "") -> str | None:
    """Resolve a marker against a document's reference list.

    A match requires normalized lead-surname equality and exact year
    equality. Ties are narrowed by the marker's extra surnames (matched
    positionally against the reference's author list), then broken by
    earliest reference order; residual ties are recorded as
    :class:`AmbiguityWarning` and the first candidate wins.
    """
    lead = normalize_surname(marker.lead_surname)
    candidates = [
        ref for ref in references
        if ref.year == marker.year and ref.author_surnames
        and normalize_surname(ref.author_surnames[0]) == lead
    ]
    if not candidates:
        return None
    if len(candidates) > 1 and marker.extra_surnames:
        extras = [normalize_surname(s) for s in marker.extra_surnames]
        narrowed = [
            ref for ref in candidates
            if len(ref.author_surnames) > len(extras)
            and all(normalize_surname(ref.author_surnames[i + 1]) == extras[i]
                    for i in range(len(extras)))
        ]
        if narrowed:
            candidates = narrowed
    if len(candidates) > 1 and warnings is not None:
        warnings.append(AmbiguityWarning(
            document_id=document_id,
            surface=marker.surface,
            candidate_keys=tuple(ref.key for ref in candidates),
        ))
    return candidates[0].key


def citation_item_id(document_id: str, marker: CitationMarker) -> str:
    paragraph_index, char_start, _ = marker.span
    return f"{document_id}:p{paragraph_index}:{char_start}"


def extract_all(document: Document) -> tuple[list[LinkedCitation], UnlinkedReport]:
    """Extract and link every citation in a document.

    References- and Unknown-canonical sections are skipped (their paragraphs
    still advance the document-wide paragraph index, so spans stay stable).
    Total markers detected = linked + unlinked.
    """
    citations: list[LinkedCitation] = []
    report = UnlinkedReport()
    paragraph_index = 0
    for section in document.sections:
        for paragraph in section.paragraphs:
            if section.canonical in (CanonicalSection.REFERENCES, CanonicalSection.UNKNOWN):
                paragraph_index += 1
                continue
            scan = scan_paragraph(paragraph, paragraph_index)
            report.skipped_candidates += len(scan.skipped_spans)
            for marker in scan.markers:
                key = link_marker(marker, document.references,
                                  warnings=report.ambiguities,
                                  document_id=document.id)
                if key is None:
                    report.unlinked.append(UnlinkedMarker(
                        document_id=document.id, section=section.canonical,
                        marker=marker))
                    continue
                citations.append(LinkedCitation(
                    item_id=citation_item_id(document.id, marker),
                    document_id=document.id,
                    marker=marker,
                    reference_key=key,
                    section=section.canonical,
                    context_paragraph=paragraph,
                    abstract=document.abstract,
                ))
            paragraph_index += 1
    return citations, report


def with_discipline_flag(citation: LinkedCitation, flag: bool | None) -> LinkedCitation:
    return replace(citation, out_of_discipline=flag)


def citation_to_dict(citation: LinkedCitation) -> dict:
    m = citation.marker
    return {
        "item_id": citation.item_id,
        "document_id": citation.document_id,
        "reference_key": citation.reference_key,
        "section": citation.section.value,
        "span": list(m.span),
        "surface": m.surface,
        "lead_surname": m.lead_surname,
        "extra_surnames": list(m.extra_surnames),
        "year": m.year,
        "context_paragraph": citation.context_paragraph,
        "abstract": citation.abstract,
        "out_of_discipline": citation.out_of_discipline,
    }


def citation_from_dict(data: dict, lineno: int | None = None) -> LinkedCitation:
    where = f"line {lineno}" if lineno is not None else "record"
    try:
        span = tuple(int(v) for v in data["span"])
        if len(span) != 3:
            raise ValueError("span must have 3 entries")
        marker = CitationMarker(
            surface=data["surface"],
            lead_surname=data["lead_surname"],
            extra_surnames=tuple(data.get("extra_surnames", ())),
            year=int(data["year"]),
            span=span,  # type: ignore[arg-type]
        )
        return LinkedCitation(
            item_id=data["item_id"],
            document_id=data["document_id"],
            marker=marker,
            reference_key=data["reference_key"],
            section=CanonicalSection(data["section"]),
            context_paragraph=data["context_paragraph"],
            abstract=data["abstract"],
            out_of_discipline=data.get("out_of_discipline"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad citation record at {where}: {exc}") from exc


def write_citations(citations: Iterable[LinkedCitation], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for citation in citations:
            handle.write(json.dumps(citation_to_dict(citation), ensure_ascii=False) + "\n")


def read_citations(path: str | Path) -> list[LinkedCitation]:
    citations = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
            citations.append(citation_from_dict(data, lineno))
    return citations
