import pytest

from citegauge.corpus import CanonicalSection
from citegauge.linking import CitationMarker, LinkedCitation
from citegauge.relatedness import RelatednessScore
from citegauge.taxonomy import (
    CitationPurpose,
    EngagementLevel,
    WeightError,
    codebook_text,
    engagement_profile,
    parse_purpose,
    parse_purpose_lenient,
    purpose_engagement,
    section_engagement,
)

# Golden lookup tables, checked entry by entry.
PURPOSE_GOLD = {
    CitationPurpose.SUBSTANTIATION_PLUS_BASIS: EngagementLevel.HIGH,
    CitationPurpose.BASIS: EngagementLevel.HIGH,
    CitationPurpose.SUBSTANTIATION: EngagementLevel.MEDIUM,
    CitationPurpose.USE: EngagementLevel.MEDIUM,
    CitationPurpose.DEFINITION: EngagementLevel.MEDIUM,
    CitationPurpose.ANALYSIS: EngagementLevel.LOW,
    CitationPurpose.RELATED_WORK: EngagementLevel.LOW,
}
SECTION_GOLD = {
    CanonicalSection.INTRODUCTION: EngagementLevel.HIGH,
    CanonicalSection.METHOD: EngagementLevel.HIGH,
    CanonicalSection.EXPERIMENTS: EngagementLevel.MEDIUM,
    CanonicalSection.APPENDIX: EngagementLevel.MEDIUM,
    CanonicalSection.CONCLUSION: EngagementLevel.LOW,
    CanonicalSection.RELATED_WORK: EngagementLevel.LOW,
}


def make_citation(section=CanonicalSection.INTRODUCTION):
    marker = CitationMarker(surface="X, 2020", lead_surname="X", extra_surnames=(),
                            year=2020, span=(0, 0, 7))
    return LinkedCitation(item_id="d:p0:0", document_id="d", marker=marker,
                          reference_key="r1", section=section,
                          context_paragraph="X, 2020 did things.", abstract="A.")


class TestLookupTables:
    def test_purpose_table_golden(self):
        for purpose, level in PURPOSE_GOLD.items():
            assert purpose_engagement(purpose) is level

    def test_section_table_golden(self):
        for section, level in SECTION_GOLD.items():
            assert section_engagement(section) is level

    def test_references_and_unknown_absent(self):
        assert section_engagement(CanonicalSection.REFERENCES) is None
        assert section_engagement(CanonicalSection.UNKNOWN) is None

    def test_level_order(self):
        assert EngagementLevel.HIGH > EngagementLevel.MEDIUM > EngagementLevel.LOW
        assert int(EngagementLevel.HIGH) == 3 and int(EngagementLevel.LOW) == 1


class TestLabels:
    def test_labels_bit_exact(self):
        assert [p.value for p in CitationPurpose] == [
            "Substantiation + Basis", "Basis", "Substantiation", "Use",
            "Definition", "Analysis", "Related Work",
        ]

    def test_round_trip(self):
        for purpose in CitationPurpose:
            assert parse_purpose(purpose.value) is purpose

    def test_strict_rejects_trailing_space(self):
        with pytest.raises(Exception, match="unknown purpose label"):
            parse_purpose("Basis ")

    def test_lenient_accepts_case_and_space(self):
        assert parse_purpose_lenient("  related WORK ") is CitationPurpose.RELATED_WORK
        assert parse_purpose_lenient("substantiation + basis") is \
            CitationPurpose.SUBSTANTIATION_PLUS_BASIS
        assert parse_purpose_lenient("Basically yes") is None


class TestEngagementProfile:
    def test_all_maximal(self):
        profile = engagement_profile(make_citation(CanonicalSection.INTRODUCTION),
                                     CitationPurpose.BASIS,
                                     RelatednessScore.from_cosine(1.0))
        assert profile.composite == pytest.approx(3.0)

    def test_all_minimal(self):
        profile = engagement_profile(make_citation(CanonicalSection.CONCLUSION),
                                     CitationPurpose.RELATED_WORK,
                                     RelatednessScore(raw_cosine=-1.0, normalized=0.0))
        assert profile.composite == pytest.approx(1.0)

    def test_mixed_formula(self):
        # 0.5*2 + 0.25*3 + 0.25*2 = 2.25
        profile = engagement_profile(make_citation(CanonicalSection.METHOD),
                                     CitationPurpose.SUBSTANTIATION,
                                     RelatednessScore(raw_cosine=0.0, normalized=0.5))
        assert profile.composite == pytest.approx(2.25)

    def test_absent_components_renormalize(self):
        profile = engagement_profile(make_citation(CanonicalSection.UNKNOWN),
                                     CitationPurpose.USE, None)
        assert profile.section_level is None
        assert profile.composite == pytest.approx(2.0)  # only the purpose term remains

    def test_composite_in_range_and_monotone(self):
        citation = make_citation(CanonicalSection.EXPERIMENTS)
        previous = None
        for normalized in (0.0, 0.25, 0.5, 0.75, 1.0):
            score = RelatednessScore(raw_cosine=2 * normalized - 1, normalized=normalized)
            composite = engagement_profile(citation, CitationPurpose.USE, score).composite
            assert 1.0 <= composite <= 3.0
            if previous is not None:
                assert composite > previous
            previous = composite

    def test_all_zero_weights_rejected(self):
        with pytest.raises(WeightError):
            engagement_profile(make_citation(), CitationPurpose.USE, None,
                               weights=(0.0, 0.0, 0.0))

    def test_negative_weight_rejected(self):
        with pytest.raises(WeightError):
            engagement_profile(make_citation(), CitationPurpose.USE, None,
                               weights=(1.0, -0.1, 0.0))


def test_codebook_contains_all_labels():
    text = codebook_text()
    for purpose in CitationPurpose:
        assert purpose.value in text
