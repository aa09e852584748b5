"""Contingency tables, chi-square independence testing, and report metrics.

The chi-square p-value comes from the regularized upper incomplete gamma
function Q(dof/2, x/2), implemented here as the classic series /
continued-fraction hybrid (absolute error <= 1e-10 for dof <= 100), so the
statistical contract carries no statistics-library dependency. Residuals
are adjusted standardized residuals, (O - E) / sqrt(E (1 - row share)
(1 - col share)), which are approximately standard normal under
independence; raw Pearson residuals are emitted alongside for transparency.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import CanonicalSection
from .errors import CitegaugeError
from .taxonomy import CitationPurpose

# Row/column orders are fixed so CSV headers and golden fixtures are stable.
ANALYSIS_SECTIONS: tuple[CanonicalSection, ...] = (
    CanonicalSection.INTRODUCTION,
    CanonicalSection.RELATED_WORK,
    CanonicalSection.METHOD,
    CanonicalSection.EXPERIMENTS,
    CanonicalSection.CONCLUSION,
    CanonicalSection.APPENDIX,
)
PURPOSE_ORDER: tuple[CitationPurpose, ...] = tuple(CitationPurpose)


class UnknownSectionError(CitegaugeError):
    """An item sits in a References/Unknown section; the caller must filter."""


class DegenerateTableError(CitegaugeError):
    """The table has fewer than two non-degenerate rows or columns."""


class MissingPredictionError(CitegaugeError):
    """Gold items without predictions make the evaluation undefined."""

    def __init__(self, missing: list[str]):
        self.missing = missing
        shown = ", ".join(missing[:5]) + ("..." if len(missing) > 5 else "")
        super().__init__(f"{len(missing)} gold items lack predictions: {shown}")


@dataclass
class AnalysisItem:
    """One labeled citation, flattened for counting and testing."""

    item_id: str
    purpose: CitationPurpose
    section: CanonicalSection
    out_of_discipline: bool | None = None
    year: int | None = None
    venue: str | None = None


@dataclass
class ContingencyTable:
    row_labels: list[str]
    col_labels: list[str]
    counts: np.ndarray  # integer matrix, shape (rows, cols)
    zero_rows: list[str] = field(default_factory=list)
    zero_cols: list[str] = field(default_factory=list)

    @property
    def grand_total(self) -> int:
        return int(self.counts.sum())

    @property
    def testable(self) -> bool:
        nonzero_rows = int((self.counts.sum(axis=1) > 0).sum())
        nonzero_cols = int((self.counts.sum(axis=0) > 0).sum())
        return nonzero_rows >= 2 and nonzero_cols >= 2

    def to_csv_text(self, corner: str = "section") -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow([corner] + self.col_labels)
        for label, row in zip(self.row_labels, self.counts):
            writer.writerow([label] + [int(v) for v in row])
        return buffer.getvalue()


def contingency(items: Iterable[AnalysisItem]) -> ContingencyTable:
    """Section x purpose counts over the six analyzable sections.

    Items in References/Unknown sections raise UnknownSectionError; the
    caller filters them out explicitly rather than silently losing counts.
    All-zero rows/columns are kept in place but flagged.
    """
    row_index = {section: i for i, section in enumerate(ANALYSIS_SECTIONS)}
    col_index = {purpose: j for j, purpose in enumerate(PURPOSE_ORDER)}
    counts = np.zeros((len(ANALYSIS_SECTIONS), len(PURPOSE_ORDER)), dtype=np.int64)
    for item in items:
        if item.section not in row_index:
            raise UnknownSectionError(
                f"item {item.item_id}: section {item.section.value} is not analyzable")
        counts[row_index[item.section], col_index[item.purpose]] += 1

    row_labels = [s.value for s in ANALYSIS_SECTIONS]
    col_labels = [p.value for p in PURPOSE_ORDER]
    return ContingencyTable(
        row_labels=row_labels,
        col_labels=col_labels,
        counts=counts,
        zero_rows=[row_labels[i] for i in range(counts.shape[0])
                   if counts[i].sum() == 0],
        zero_cols=[col_labels[j] for j in range(counts.shape[1])
                   if counts[:, j].sum() == 0],
    )


@dataclass
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    expected: np.ndarray
    residuals: np.ndarray          # adjusted standardized residuals
    pearson_residuals: np.ndarray  # (O - E) / sqrt(E)
    low_expected_cells: int        # validity warning: count of cells with E < 5

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "low_expected_cells": self.low_expected_cells,
        }


def chi_square(table: ContingencyTable) -> ChiSquareResult:
    """Pearson chi-square test of independence with adjusted residuals.

    Cells whose expected count is zero (all-zero margin) contribute nothing
    to the statistic and get residual 0; dof stays (rows-1)(cols-1) over the
    declared table shape.
    """
    counts = np.asarray(table.counts, dtype=np.float64)
    n = counts.sum()
    if n < 1:
        raise DegenerateTableError("table has no observations")
    row_totals = counts.sum(axis=1)
    col_totals = counts.sum(axis=0)
    if (row_totals > 0).sum() < 2 or (col_totals > 0).sum() < 2:
        raise DegenerateTableError("need at least 2 non-degenerate rows and columns")

    expected = np.outer(row_totals, col_totals) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        contributions = np.where(expected > 0, (counts - expected) ** 2 / expected, 0.0)
        pearson = np.where(expected > 0, (counts - expected) / np.sqrt(expected), 0.0)
        row_share = row_totals / n
        col_share = col_totals / n
        adjust = expected * np.outer(1.0 - row_share, 1.0 - col_share)
        adjusted = np.where(adjust > 0, (counts - expected) / np.sqrt(adjust), 0.0)

    statistic = float(contributions.sum())
    dof = (counts.shape[0] - 1) * (counts.shape[1] - 1)
    if dof < 1:
        raise DegenerateTableError("table needs at least 2 rows and 2 columns")
    return ChiSquareResult(
        statistic=statistic,
        dof=dof,
        p_value=chi2_survival(statistic, dof),
        expected=expected,
        residuals=adjusted,
        pearson_residuals=pearson,
        low_expected_cells=int((expected < 5).sum()),
    )


def chi2_survival(x: float, dof: int) -> float:
    """P(X >= x) for a chi-square variable with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if x < 0:
        return 1.0
    return regularized_upper_gamma(dof / 2.0, x / 2.0)


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a) for a > 0, x >= 0.

    Series expansion of P(a, x) for x < a + 1, modified Lentz continued
    fraction for Q(a, x) otherwise.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, min(1.0, 1.0 - _lower_gamma_series(a, x)))
    return max(0.0, min(1.0, _upper_gamma_continued_fraction(a, x)))


_GAMMA_EPS = 1e-16
_GAMMA_MAX_ITER = 10_000
_GAMMA_TINY = 1e-300


def _lower_gamma_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    denominator = a
    for _ in range(_GAMMA_MAX_ITER):
        denominator += 1.0
        term *= x / denominator
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    return total * math.exp(log_prefactor)


def _upper_gamma_continued_fraction(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _GAMMA_TINY
    d = 1.0 / b if b != 0 else 1.0 / _GAMMA_TINY
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _GAMMA_TINY:
            d = _GAMMA_TINY
        c = b + an / c
        if abs(c) < _GAMMA_TINY:
            c = _GAMMA_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    return math.exp(log_prefactor) * h


@dataclass
class ClassificationReport:
    labels: list[str]
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    support: dict[str, int]
    macro_f1: float
    accuracy: float
    confusion: np.ndarray  # gold rows x predicted columns

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "per_class": {
                label: {"precision": self.precision[label],
                        "recall": self.recall[label],
                        "f1": self.f1[label],
                        "support": self.support[label]}
                for label in self.labels
            },
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
        }

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["label", "precision", "recall", "f1", "support"])
        for label in self.labels:
            writer.writerow([label, f"{self.precision[label]:.6f}",
                             f"{self.recall[label]:.6f}", f"{self.f1[label]:.6f}",
                             self.support[label]])
        writer.writerow(["macro_f1", "", "", f"{self.macro_f1:.6f}",
                         sum(self.support.values())])
        return buffer.getvalue()


def classification_report(predictions: Sequence[tuple[str, CitationPurpose]],
                          gold: Sequence[tuple[str, CitationPurpose]],
                          ) -> ClassificationReport:
    """Per-class precision/recall/F1 over all seven purpose classes.

    Macro F1 averages over all seven classes even when a class has zero
    support in this slice (its F1 counts as 0). Zero denominators yield 0.
    """
    gold_by_id = dict(gold)
    if len(gold_by_id) != len(gold):
        raise ValueError("duplicate item ids in gold")
    pred_by_id = dict(predictions)
    unknown = sorted(set(pred_by_id) - set(gold_by_id))
    if unknown:
        raise ValueError(f"predictions for items not in gold: {', '.join(unknown[:5])}")
    missing = sorted(set(gold_by_id) - set(pred_by_id))
    if missing:
        raise MissingPredictionError(missing)

    index = {purpose: i for i, purpose in enumerate(PURPOSE_ORDER)}
    confusion = np.zeros((len(PURPOSE_ORDER), len(PURPOSE_ORDER)), dtype=np.int64)
    for item_id, gold_label in gold_by_id.items():
        confusion[index[gold_label], index[pred_by_id[item_id]]] += 1

    precision: dict[str, float] = {}
    recall: dict[str, float] = {}
    f1: dict[str, float] = {}
    support: dict[str, int] = {}
    for purpose, i in index.items():
        tp = int(confusion[i, i])
        fp = int(confusion[:, i].sum()) - tp
        fn = int(confusion[i, :].sum()) - tp
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        label = purpose.value
        precision[label] = p
        recall[label] = r
        f1[label] = 2 * p * r / (p + r) if p + r > 0 else 0.0
        support[label] = tp + fn

    labels = [p.value for p in PURPOSE_ORDER]
    total = int(confusion.sum())
    return ClassificationReport(
        labels=labels,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        macro_f1=sum(f1[label] for label in labels) / len(labels),
        accuracy=float(np.trace(confusion)) / total if total else 0.0,
        confusion=confusion,
    )


@dataclass
class CountTable:
    """A labeled count matrix with CSV and plot-data renderings."""

    name: str
    row_header: str
    row_labels: list[str]
    col_labels: list[str]
    values: list[list[int]]

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow([self.row_header] + self.col_labels)
        for label, row in zip(self.row_labels, self.values):
            writer.writerow([label] + row)
        return buffer.getvalue()

    def to_plot_data(self, kind: str = "bar") -> dict:
        return {"kind": kind, "rows": self.row_labels, "cols": self.col_labels,
                "values": self.values}


DISCIPLINE_COLS = ["in_discipline", "out_of_discipline", "unresolved", "total"]


def _discipline_bucket(flag: bool | None) -> int:
    if flag is None:
        return 2
    return 1 if flag else 0


def _year_bucket(year: int, width: int) -> str:
    start = year - (year % width)
    return f"{start}-{start + width - 1}"


def distribution_report(items: Sequence[AnalysisItem],
                        year_bucket_width: int = 3) -> dict[str, CountTable]:
    """Count tables: purpose x discipline, section x discipline, purpose by
    year bucket, and purpose by venue. Items missing year/venue are grouped
    under "unknown"."""
    purposes = [p.value for p in PURPOSE_ORDER]

    purpose_rows = [[0, 0, 0, 0] for _ in PURPOSE_ORDER]
    section_rows = [[0, 0, 0, 0] for _ in ANALYSIS_SECTIONS]
    purpose_index = {p: i for i, p in enumerate(PURPOSE_ORDER)}
    section_index = {s: i for i, s in enumerate(ANALYSIS_SECTIONS)}
    by_year: dict[str, list[int]] = {}
    by_venue: dict[str, list[int]] = {}

    for item in items:
        bucket = _discipline_bucket(item.out_of_discipline)
        purpose_rows[purpose_index[item.purpose]][bucket] += 1
        purpose_rows[purpose_index[item.purpose]][3] += 1
        if item.section in section_index:
            section_rows[section_index[item.section]][bucket] += 1
            section_rows[section_index[item.section]][3] += 1
        year_label = (_year_bucket(item.year, year_bucket_width)
                      if item.year is not None else "unknown")
        by_year.setdefault(year_label, [0] * len(PURPOSE_ORDER))
        by_year[year_label][purpose_index[item.purpose]] += 1
        venue_label = item.venue if item.venue else "unknown"
        by_venue.setdefault(venue_label, [0] * len(PURPOSE_ORDER))
        by_venue[venue_label][purpose_index[item.purpose]] += 1

    return {
        "purpose_by_discipline": CountTable(
            name="purpose_by_discipline", row_header="purpose",
            row_labels=purposes, col_labels=list(DISCIPLINE_COLS),
            values=purpose_rows),
        "section_by_discipline": CountTable(
            name="section_by_discipline", row_header="section",
            row_labels=[s.value for s in ANALYSIS_SECTIONS],
            col_labels=list(DISCIPLINE_COLS), values=section_rows),
        "purpose_by_year_bucket": CountTable(
            name="purpose_by_year_bucket", row_header="year_bucket",
            row_labels=sorted(by_year), col_labels=purposes,
            values=[by_year[label] for label in sorted(by_year)]),
        "purpose_by_venue": CountTable(
            name="purpose_by_venue", row_header="venue",
            row_labels=sorted(by_venue), col_labels=purposes,
            values=[by_venue[label] for label in sorted(by_venue)]),
    }
