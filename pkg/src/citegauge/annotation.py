"""Annotation campaigns, agreement statistics, and majority adjudication.

Agreement definitions: an item has *full* agreement when every annotator
chose the same label, and *partial* agreement when at least two annotators
share a label. The adjudicated label is the unique label with >= 2 votes;
items without one are excluded from the adjudicated gold set.

Krippendorff's alpha is computed for nominal labels with a variable number
of annotators per item, via the coincidence-matrix construction: within an
item holding m >= 2 annotations, every ordered pair of distinct annotation
instances contributes 1/(m-1) to the matrix; alpha = 1 - D_o/D_e where D_o
is the off-diagonal share of the matrix mass and D_e the disagreement
expected from the marginal label totals.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CitegaugeError, SchemaError
from .taxonomy import CitationPurpose, UnknownLabelError, parse_purpose

ADJUDICATED_ANNOTATOR_ID = "ADJUDICATED"


class CoverageError(CitegaugeError):
    """An item has too few annotations, or a campaign asks for more annotators than exist."""


class DegenerateDataError(CitegaugeError):
    """Alpha is undefined: too few multiply-annotated items or a single label everywhere."""


class UnknownItemError(CitegaugeError):
    """An annotation references an item outside the campaign."""


@dataclass(frozen=True)
class AnnotationRecord:
    item_id: str
    annotator_id: str
    label: CitationPurpose
    annotated_at: str  # ISO-8601

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "annotator_id": self.annotator_id,
                "label": self.label.value, "annotated_at": self.annotated_at}


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def make_record(item_id: str, annotator_id: str, label: CitationPurpose,
                annotated_at: str | None = None) -> AnnotationRecord:
    return AnnotationRecord(item_id=item_id, annotator_id=annotator_id,
                            label=label, annotated_at=annotated_at or now_iso())


def latest_records(records: Iterable[AnnotationRecord]) -> list[AnnotationRecord]:
    """Collapse duplicate (item, annotator) pairs, keeping the last occurrence.

    Record order is submission order, so this implements last-write-wins;
    earlier submissions stay in the raw log as the audit trail.
    """
    latest: dict[tuple[str, str], AnnotationRecord] = {}
    for record in records:
        latest[(record.item_id, record.annotator_id)] = record
    return list(latest.values())


def _labels_by_item(records: Sequence[AnnotationRecord]) -> dict[str, list[CitationPurpose]]:
    by_item: dict[str, list[CitationPurpose]] = {}
    for record in latest_records(records):
        by_item.setdefault(record.item_id, []).append(record.label)
    return by_item


@dataclass
class AgreementSummary:
    n_items: int
    full_agreement_fraction: float
    partial_agreement_fraction: float
    alpha: float | None
    adjudicated: dict[str, CitationPurpose]

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "full_agreement_fraction": self.full_agreement_fraction,
            "partial_agreement_fraction": self.partial_agreement_fraction,
            "alpha": self.alpha,
            "adjudicated": {item: label.value
                            for item, label in sorted(self.adjudicated.items())},
        }


def agreement_summary(records: Sequence[AnnotationRecord]) -> AgreementSummary:
    """Full/partial agreement fractions, alpha, and majority adjudication.

    Every item must carry at least two annotations (CoverageError names the
    first offender). Alpha is None when its preconditions do not hold.
    """
    by_item = _labels_by_item(records)
    if not by_item:
        return AgreementSummary(0, 0.0, 0.0, None, {})
    for item_id in sorted(by_item):
        if len(by_item[item_id]) < 2:
            raise CoverageError(f"item {item_id} has fewer than 2 annotations")

    n_items = len(by_item)
    full = 0
    partial = 0
    adjudicated: dict[str, CitationPurpose] = {}
    for item_id, labels in by_item.items():
        counts = Counter(labels)
        if len(counts) == 1:
            full += 1
        majority = [label for label, count in counts.items() if count >= 2]
        if majority:
            partial += 1
        if len(majority) == 1:
            adjudicated[item_id] = majority[0]

    try:
        alpha = krippendorff_alpha(records)
    except DegenerateDataError:
        alpha = None

    return AgreementSummary(
        n_items=n_items,
        full_agreement_fraction=full / n_items,
        partial_agreement_fraction=partial / n_items,
        alpha=alpha,
        adjudicated=adjudicated,
    )


def krippendorff_alpha(records: Sequence[AnnotationRecord]) -> float:
    """Nominal-data alpha; items with a single annotation are excluded."""
    by_item = [labels for labels in _labels_by_item(records).values() if len(labels) >= 2]
    if len(by_item) < 2:
        raise DegenerateDataError("alpha needs at least 2 items with >= 2 annotations")

    coincidence: Counter[tuple[CitationPurpose, CitationPurpose]] = Counter()
    for labels in by_item:
        m = len(labels)
        weight = 1.0 / (m - 1)
        for i, a in enumerate(labels):
            for j, b in enumerate(labels):
                if i != j:
                    coincidence[(a, b)] += weight

    marginals: Counter[CitationPurpose] = Counter()
    for (a, _b), mass in coincidence.items():
        marginals[a] += mass
    n = sum(marginals.values())
    if len(marginals) < 2:
        raise DegenerateDataError("alpha undefined: a single label everywhere")

    observed = sum(mass for (a, b), mass in coincidence.items() if a != b) / n
    expected = sum(marginals[a] * marginals[b]
                   for a in marginals for b in marginals if a != b) / (n * (n - 1))
    if expected == 0:
        raise DegenerateDataError("alpha undefined: expected disagreement is zero")
    return 1.0 - observed / expected


@dataclass
class Campaign:
    """An assignment of citation items to annotators at a target coverage."""

    id: str
    item_ids: list[str]
    annotator_ids: list[str]
    target_coverage: int
    assignment: dict[str, list[str]] = field(default_factory=dict)

    def annotators_for(self, item_id: str) -> list[str]:
        return self.assignment.get(item_id, [])

    def items_for(self, annotator_id: str) -> list[str]:
        return [item for item in self.item_ids
                if annotator_id in self.assignment.get(item, [])]

    def to_dict(self) -> dict:
        return {"id": self.id, "item_ids": self.item_ids,
                "annotator_ids": self.annotator_ids,
                "target_coverage": self.target_coverage,
                "assignment": self.assignment}

    @classmethod
    def from_dict(cls, data: dict) -> "Campaign":
        try:
            return cls(id=data["id"], item_ids=list(data["item_ids"]),
                       annotator_ids=list(data["annotator_ids"]),
                       target_coverage=int(data["target_coverage"]),
                       assignment={k: list(v) for k, v in data["assignment"].items()})
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad campaign file: {exc}") from exc


def build_campaign(citations, annotators: Sequence[str], coverage: int,
                   seed: int) -> Campaign:
    """Deterministic seeded round-robin assignment, balanced within one item.

    Annotator order is shuffled once from the seed, then consecutive
    assignment slots walk that ring, so per-annotator load differs by at
    most one item.
    """
    if not citations:
        raise ValueError("cannot build a campaign over zero citations")
    if coverage < 2:
        raise CoverageError("target coverage must be at least 2")
    if coverage > len(annotators):
        raise CoverageError(
            f"coverage {coverage} exceeds the {len(annotators)} available annotators")

    item_ids = [getattr(c, "item_id", c) for c in citations]
    ring = list(annotators)
    random.Random(seed).shuffle(ring)
    assignment: dict[str, list[str]] = {}
    slot = 0
    for item_id in item_ids:
        assignment[item_id] = [ring[(slot + j) % len(ring)] for j in range(coverage)]
        slot += coverage

    digest = hashlib.sha1(
        json.dumps([seed, item_ids, list(annotators), coverage]).encode("utf-8")
    ).hexdigest()[:10]
    return Campaign(id=f"cmp-{digest}", item_ids=item_ids,
                    annotator_ids=list(annotators), target_coverage=coverage,
                    assignment=assignment)


def export_annotations(records: Iterable[AnnotationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


def import_annotations(path: str | Path, campaign: Campaign | None = None,
                       ) -> list[AnnotationRecord]:
    """Read annotation records, validating labels and (optionally) item ids.

    Label matching is strict: the stored string must equal a canonical label
    byte-for-byte. With a campaign, item ids must belong to it.
    """
    records = []
    known_items = set(campaign.item_ids) if campaign is not None else None
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", f"line {lineno}") from exc
            if not isinstance(data, dict):
                raise SchemaError("record must be an object", f"line {lineno}")
            for key in ("item_id", "annotator_id", "label", "annotated_at"):
                if key not in data:
                    raise SchemaError(f"missing field '{key}'", f"line {lineno}")
                if not isinstance(data[key], str):
                    raise SchemaError(f"field '{key}' must be a string", f"line {lineno}")
            try:
                label = parse_purpose(data["label"])
            except UnknownLabelError as exc:
                raise UnknownLabelError(f"line {lineno}: {exc}") from exc
            if known_items is not None and data["item_id"] not in known_items:
                raise UnknownItemError(
                    f"line {lineno}: item {data['item_id']!r} is not in campaign")
            records.append(AnnotationRecord(
                item_id=data["item_id"], annotator_id=data["annotator_id"],
                label=label, annotated_at=data["annotated_at"]))
    return records


def adjudicated_records(summary: AgreementSummary) -> list[AnnotationRecord]:
    """Express the adjudicated gold set in the annotation-record format."""
    timestamp = now_iso()
    return [make_record(item_id, ADJUDICATED_ANNOTATOR_ID, label, timestamp)
            for item_id, label in sorted(summary.adjudicated.items())]
