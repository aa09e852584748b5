"""citegauge: measure how publications engage with the work they cite.

The pipeline: ingest structured documents, link in-text citations to
reference entries, resolve cited disciplines, score context/abstract
relatedness, annotate citation purpose (by humans or classifiers), and
report engagement and agreement statistics.
"""

from .annotation import (
    AgreementSummary,
    AnnotationRecord,
    Campaign,
    agreement_summary,
    build_campaign,
    export_annotations,
    import_annotations,
    krippendorff_alpha,
)
from .corpus import (
    CanonicalSection,
    Document,
    RawSection,
    ReferenceEntry,
    canonicalize_section,
    ingest_document,
    validate_corpus,
)
from .disciplines import (
    DisciplineConfig,
    DisciplineResolver,
    FieldRecord,
    FieldSource,
    annotate_corpus_disciplines,
    is_out_of_discipline,
)
from .linking import (
    CitationMarker,
    LinkedCitation,
    extract_all,
    extract_markers,
    link_marker,
)
from .relatedness import (
    EmbeddingVector,
    HashingStubProvider,
    HttpEmbeddingProvider,
    PrecomputedEmbeddingProvider,
    RelatednessScore,
    cosine,
    embed,
    relatedness,
)
from .stats import (
    AnalysisItem,
    ChiSquareResult,
    ClassificationReport,
    ContingencyTable,
    chi_square,
    classification_report,
    contingency,
    distribution_report,
)
from .taxonomy import (
    CitationPurpose,
    EngagementLevel,
    EngagementProfile,
    engagement_profile,
    purpose_engagement,
    section_engagement,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
