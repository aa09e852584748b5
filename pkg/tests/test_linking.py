import json

import pytest

from citegauge.corpus import CanonicalSection, ReferenceEntry, ingest_document
from citegauge.linking import (
    AmbiguityWarning,
    CitationMarker,
    citation_from_dict,
    citation_to_dict,
    extract_all,
    extract_markers,
    link_marker,
    normalize_surname,
    scan_paragraph,
)


def ref(key, surnames, year, title="T"):
    return ReferenceEntry(key=key, title=title, author_surnames=tuple(surnames),
                          year=year, venue=None, raw_text="")


class TestExtractMarkers:
    def test_single_parenthetical(self):
        markers = extract_markers("We report BLEU scores (Papineni et al., 2002)")
        assert len(markers) == 1
        assert markers[0].lead_surname == "Papineni"
        assert markers[0].year == 2002

    def test_multi_citation_parenthesis(self):
        markers = extract_markers("(Conover et al., 2011; Cohen and Ruths, 2013)")
        assert [m.year for m in markers] == [2011, 2013]
        assert markers[1].lead_surname == "Cohen"
        assert markers[1].extra_surnames == ("Ruths",)

    def test_empty_paragraph(self):
        assert extract_markers("") == []

    def test_narrative(self):
        markers = extract_markers("Sombart (1959), for example, divides the term.")
        assert len(markers) == 1
        assert markers[0].surface == "Sombart (1959)"
        assert markers[0].lead_surname == "Sombart"

    def test_narrative_trims_sentence_starters(self):
        markers = extract_markers("Following Underwood (2018), we annotate time.")
        assert len(markers) == 1
        assert markers[0].lead_surname == "Underwood"
        assert markers[0].surface == "Underwood (2018)"

    def test_year_suffix_drops_letter(self):
        markers = extract_markers("span annotations (Da San Martino et al., 2019b)")
        assert markers[0].year == 2019
        assert markers[0].lead_surname == "Da San Martino"

    def test_spans_slice_to_surface(self):
        text = ("Theory (Filipovic, 2007;Mantilla, 2013) and tools "
                "(O'Connor et al., 2010) plus Waseem et al. (2017).")
        for marker in extract_markers(text):
            _, start, end = marker.span
            assert text[start:end] == marker.surface

    def test_spans_sorted_and_nonoverlapping(self):
        text = "A (Smith, 2020) B Jones (2021) C (Lee and Kim, 2019; Park, 2018)"
        markers = extract_markers(text)
        starts = [m.span[1] for m in markers]
        assert starts == sorted(starts)
        for first, second in zip(markers, markers[1:]):
            assert first.span[2] <= second.span[1]

    def test_skipped_candidates_counted(self):
        scan = scan_paragraph("(see Papineni 2002) and (introduced in 2019)")
        assert scan.markers == []
        assert len(scan.skipped_spans) == 2

    def test_plain_parens_ignored(self):
        scan = scan_paragraph("regression (OLS) and topic models (LDA)")
        assert scan.markers == []
        assert scan.skipped_spans == []


class TestLinkMarker:
    def make_marker(self, lead, year, extras=()):
        return CitationMarker(surface=f"{lead}, {year}", lead_surname=lead,
                              extra_surnames=tuple(extras), year=year,
                              span=(0, 0, 1))

    def test_unique_exact_match(self):
        refs = [ref("r1", ["Papineni", "Roukos"], 2002)]
        assert link_marker(self.make_marker("Papineni", 2002), refs) == "r1"

    def test_year_mismatch_is_no_match(self):
        refs = [ref("r1", ["Smith"], 2019)]
        assert link_marker(self.make_marker("Smith", 2020), refs) is None

    def test_extra_surname_tiebreak(self):
        refs = [ref("r1", ["Smith", "Brown"], 2020), ref("r2", ["Smith", "Jones"], 2020)]
        marker = self.make_marker("Smith", 2020, extras=["Jones"])
        assert link_marker(marker, refs) == "r2"

    def test_ambiguity_recorded_first_returned(self):
        refs = [ref("r1", ["Smith"], 2020), ref("r2", ["Smith"], 2020)]
        warnings: list[AmbiguityWarning] = []
        key = link_marker(self.make_marker("Smith", 2020), refs, warnings=warnings)
        assert key == "r1"
        assert len(warnings) == 1
        assert warnings[0].candidate_keys == ("r1", "r2")

    def test_diacritics_and_hyphens_normalized(self):
        refs = [ref("r1", ["Barron-Cedeno"], 2019)]
        marker = self.make_marker("Barrón-Cedeño", 2019)
        assert link_marker(marker, refs) == "r1"

    def test_normalize_surname(self):
        assert normalize_surname("Barrón-Cedeño") == "barroncedeno"
        assert normalize_surname("Da  San Martino") == "da san martino"


def fixture_document():
    return ingest_document(json.dumps({
        "id": "docA",
        "title": "T",
        "abstract": "We examine citation practice.",
        "venue": "ACL",
        "year": 2022,
        "is_css": True,
        "sections": [
            {"raw_name": "Introduction",
             "paragraphs": [
                 "Prior work measured framing (Entman, 1993) and stance (Mohammad et al., 2016).",
                 "Our approach follows Card et al. (2015) closely.",
             ]},
            {"raw_name": "Ethics Note",
             "paragraphs": ["Unknown sections are skipped (Entman, 1993)."]},
            {"raw_name": "Method",
             "paragraphs": [
                 "We report BLEU (Papineni et al., 2002) and use VADER (Hutto and Gilbert, 2014).",
                 "One dangling citation (Nobody, 1999) stays unlinked.",
             ]},
            {"raw_name": "References",
             "paragraphs": ["Entman, R. 1993. Framing (Entman, 1993)."]},
        ],
        "references": [
            {"key": "entman93", "title": "Framing", "authors": ["Entman"],
             "year": 1993, "venue": None, "raw_text": ""},
            {"key": "mohammad16", "title": "Stance", "authors": ["Mohammad", "Kiritchenko"],
             "year": 2016, "venue": None, "raw_text": ""},
            {"key": "card15", "title": "Frames", "authors": ["Card", "Boydstun"],
             "year": 2015, "venue": None, "raw_text": ""},
            {"key": "papineni02", "title": "BLEU", "authors": ["Papineni", "Roukos"],
             "year": 2002, "venue": None, "raw_text": ""},
            {"key": "hutto14", "title": "VADER", "authors": ["Hutto", "Gilbert"],
             "year": 2014, "venue": None, "raw_text": ""},
        ],
    }))


class TestExtractAll:
    def test_no_citations(self):
        doc = ingest_document(json.dumps({
            "id": "empty", "title": "T", "abstract": "A.", "venue": "V",
            "year": 2020, "is_css": False,
            "sections": [{"raw_name": "Introduction", "paragraphs": ["No markers here."]}],
            "references": [],
        }))
        citations, report = extract_all(doc)
        assert citations == []
        assert report.unlinked == []

    def test_fixture_counts(self):
        doc = fixture_document()
        citations, report = extract_all(doc)
        # 6 markers in eligible sections, 5 linkable, 1 unlinked
        assert len(citations) == 5
        assert len(report.unlinked) == 1
        assert report.unlinked[0].marker.lead_surname == "Nobody"
        keys = {c.reference_key for c in citations}
        assert keys == {"entman93", "mohammad16", "card15", "papineni02", "hutto14"}

    def test_references_and_unknown_sections_excluded(self):
        doc = fixture_document()
        citations, _ = extract_all(doc)
        assert all(c.section not in (CanonicalSection.REFERENCES, CanonicalSection.UNKNOWN)
                   for c in citations)

    def test_context_and_abstract_carried(self):
        doc = fixture_document()
        citations, _ = extract_all(doc)
        for citation in citations:
            assert citation.abstract == doc.abstract
            assert citation.marker.surface in citation.context_paragraph
            _, start, end = citation.marker.span
            assert citation.context_paragraph[start:end] == citation.marker.surface

    def test_deterministic(self):
        doc = fixture_document()
        first = [citation_to_dict(c) for c in extract_all(doc)[0]]
        second = [citation_to_dict(c) for c in extract_all(doc)[0]]
        assert json.dumps(first) == json.dumps(second)

    def test_jsonl_round_trip(self):
        doc = fixture_document()
        citations, _ = extract_all(doc)
        for citation in citations:
            assert citation_from_dict(citation_to_dict(citation)) == citation
