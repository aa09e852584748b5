"""The 7-category citation-purpose taxonomy and engagement mappings.

Purpose and section each map to a qualitative engagement level; a weighted
composite folds both together with the semantic relatedness score. The
composite is a toolkit-defined convenience (one sortable number) and is
always labeled as such in exports; the three-component view is preserved
alongside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from importlib import resources

from .corpus import CanonicalSection
from .errors import CitegaugeError
from .relatedness import RelatednessScore


class CitationPurpose(Enum):
    SUBSTANTIATION_PLUS_BASIS = "Substantiation + Basis"
    BASIS = "Basis"
    SUBSTANTIATION = "Substantiation"
    USE = "Use"
    DEFINITION = "Definition"
    ANALYSIS = "Analysis"
    RELATED_WORK = "Related Work"

    def __str__(self) -> str:
        return self.value


PURPOSE_LABELS = tuple(p.value for p in CitationPurpose)


class EngagementLevel(IntEnum):
    HIGH = 3
    MEDIUM = 2
    LOW = 1

    def __str__(self) -> str:
        return self.name.capitalize()


PURPOSE_ENGAGEMENT: dict[CitationPurpose, EngagementLevel] = {
    CitationPurpose.SUBSTANTIATION_PLUS_BASIS: EngagementLevel.HIGH,
    CitationPurpose.BASIS: EngagementLevel.HIGH,
    CitationPurpose.SUBSTANTIATION: EngagementLevel.MEDIUM,
    CitationPurpose.USE: EngagementLevel.MEDIUM,
    CitationPurpose.DEFINITION: EngagementLevel.MEDIUM,
    CitationPurpose.ANALYSIS: EngagementLevel.LOW,
    CitationPurpose.RELATED_WORK: EngagementLevel.LOW,
}

SECTION_ENGAGEMENT: dict[CanonicalSection, EngagementLevel] = {
    CanonicalSection.INTRODUCTION: EngagementLevel.HIGH,
    CanonicalSection.METHOD: EngagementLevel.HIGH,
    CanonicalSection.EXPERIMENTS: EngagementLevel.MEDIUM,
    CanonicalSection.APPENDIX: EngagementLevel.MEDIUM,
    CanonicalSection.CONCLUSION: EngagementLevel.LOW,
    CanonicalSection.RELATED_WORK: EngagementLevel.LOW,
}

DEFAULT_WEIGHTS = (0.5, 0.25, 0.25)


class WeightError(CitegaugeError):
    """Composite weights are unusable (all zero or negative)."""


class UnknownLabelError(CitegaugeError):
    """A label string is not one of the seven canonical purpose labels."""


def purpose_engagement(purpose: CitationPurpose) -> EngagementLevel:
    return PURPOSE_ENGAGEMENT[purpose]


def section_engagement(section: CanonicalSection) -> EngagementLevel | None:
    """Engagement level of a section; None for References/Unknown."""
    return SECTION_ENGAGEMENT.get(section)


def parse_purpose(label: str) -> CitationPurpose:
    """Strict label lookup: the string must be byte-identical to a canonical label."""
    for purpose in CitationPurpose:
        if purpose.value == label:
            return purpose
    raise UnknownLabelError(f"unknown purpose label: {label!r}")


def parse_purpose_lenient(label: str) -> CitationPurpose | None:
    """Case-insensitive, whitespace-trimmed lookup; None if no label matches."""
    folded = " ".join(label.split()).casefold()
    for purpose in CitationPurpose:
        if purpose.value.casefold() == folded:
            return purpose
    return None


@dataclass(frozen=True)
class EngagementProfile:
    """Per-citation engagement components plus the toolkit-defined composite."""

    purpose_level: EngagementLevel
    section_level: EngagementLevel | None
    relatedness: RelatednessScore | None
    composite: float | None
    weights: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "purpose_level": int(self.purpose_level),
            "section_level": int(self.section_level) if self.section_level else None,
            "relatedness": (
                {"raw_cosine": self.relatedness.raw_cosine,
                 "normalized": self.relatedness.normalized}
                if self.relatedness else None
            ),
            "composite_toolkit_defined": self.composite,
            "weights": list(self.weights),
        }


def engagement_profile(citation, purpose: CitationPurpose,
                       relatedness: RelatednessScore | None = None,
                       weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
                       ) -> EngagementProfile:
    """Build the engagement profile for one citation.

    composite = (wp*L(purpose) + ws*L(section) + wr*(1 + 2*relatedness)) /
    (wp + ws + wr) where L maps High/Medium/Low to 3/2/1. Absent components
    (Unknown section, missing relatedness) renormalize over the remaining
    weights; the composite is absent only when every available component
    carries zero weight.
    """
    if len(weights) != 3:
        raise WeightError("weights must be a (purpose, section, relatedness) triple")
    if any(w < 0 for w in weights):
        raise WeightError("weights must be nonnegative")
    if sum(weights) <= 0:
        raise WeightError("weights must not all be zero")

    section_level = section_engagement(citation.section)
    purpose_level = purpose_engagement(purpose)

    wp, ws, wr = weights
    terms: list[tuple[float, float]] = [(wp, float(purpose_level))]
    if section_level is not None:
        terms.append((ws, float(section_level)))
    if relatedness is not None:
        terms.append((wr, 1.0 + 2.0 * relatedness.normalized))
    total_weight = sum(w for w, _ in terms)
    composite = None
    if total_weight > 0:
        composite = sum(w * v for w, v in terms) / total_weight

    return EngagementProfile(
        purpose_level=purpose_level,
        section_level=section_level,
        relatedness=relatedness,
        composite=composite,
        weights=tuple(weights),
    )


def codebook_text() -> str:
    """The annotator codebook shipped with the package."""
    return resources.files("citegauge").joinpath("assets/codebook.md").read_text(encoding="utf-8")
