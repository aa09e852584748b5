"""Citation-purpose classifiers and their batch/evaluation drivers.

Two classifier kinds share one interface: a decision-tree prompt sent to an
HTTP chat-completion endpoint, and a deterministic lexical baseline that
gives CI a network-free floor. The chat response's final line must be
exactly one canonical purpose label (matched case-insensitively after
trimming); anything else triggers a stricter re-ask, up to the configured
retry budget.
"""

from __future__ import annotations

import logging
import os
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import requests

from .errors import CitegaugeError, NetworkError
from .linking import LinkedCitation
from .taxonomy import CitationPurpose, codebook_text, parse_purpose_lenient

logger = logging.getLogger(__name__)

CHAT_API_KEY_ENV = "CITEGAUGE_CHAT_API_KEY"


class ParseError(CitegaugeError):
    """No valid label after every parse retry; raw responses are preserved."""

    def __init__(self, message: str, raw_responses: list[str]):
        super().__init__(message)
        self.raw_responses = raw_responses


class ClassifierKind(str, Enum):
    LLM_DECISION_TREE = "llm_decision_tree"
    LEXICAL_BASELINE = "lexical_baseline"


@dataclass
class ClassifierConfig:
    kind: ClassifierKind
    endpoint_url: str | None = None
    model_name: str = "default"
    temperature: float = 0.0
    max_parse_retries: int = 2
    prompt_version: str = "v1"
    request_timeout: float = 60.0

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = ClassifierKind(self.kind)
        if self.kind is ClassifierKind.LLM_DECISION_TREE and not self.endpoint_url:
            raise ValueError("llm_decision_tree requires endpoint_url")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_parse_retries < 0:
            raise ValueError("max_parse_retries must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierConfig":
        return cls(**data)


@dataclass
class Prediction:
    item_id: str
    label: CitationPurpose
    raw_response: str | None = None
    attempts: int = 1

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "label": self.label.value,
                "attempts": self.attempts}


@dataclass
class ClassificationFailure:
    item_id: str
    kind: str  # "parse" | "network"
    error: str
    raw_responses: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "kind": self.kind, "error": self.error,
                "raw_responses": self.raw_responses}


_LABEL_LIST = ", ".join(p.value for p in CitationPurpose)

_SYSTEM_PROMPT = (
    "You are an expert annotator of scholarly citations. You classify the "
    "purpose of a single in-text citation, marked in bold, using the seven "
    "categories defined in the codebook below. Judge only from the citing "
    "paper's abstract and the paragraph around the citation.\n\n"
    "{codebook}"
)

# Walked in order; the first question answered "yes" decides the label.
_DECISION_TREE = """Walk these questions in order and stop at the first "yes":
1. Is the cited method or tool used directly in the citing work, with no or very trivial modifications? -> Use
2. Is the cited idea explicitly built upon AND does the citation also verify or substantiate a claim made in the citing work? -> Substantiation + Basis
3. Does the cited method, idea, or tool serve as the basis for the citing work, explicitly stated or clearly evident from the abstract? -> Basis
4. Is the citation used to verify or substantiate an identifiable theoretical, empirical, or methodological claim made in the citing work? -> Substantiation
5. Is the citation used to define or explain a topic or phrase (but not to validate it)? -> Definition
6. Is the cited method or idea analyzed through comparisons or critiques directly linked to the citing work, without being built upon? -> Analysis
7. Otherwise -> Related Work"""

_USER_TEMPLATE = (
    "{tree}\n\n"
    "Abstract:\n{abstract}\n\n"
    "Citation context (the citation to classify is wrapped in **):\n{context}\n\n"
    "Think step by step if needed, but your final line must be exactly one "
    "category name: {labels}."
)

_STRICT_REMINDER = (
    "Your final line was not a valid category. Reply again; the final line "
    "must be exactly one of: {labels}. No other words on that line."
)


def highlight_marker(citation: LinkedCitation) -> str:
    """The context paragraph with the target citation wrapped in ``**``."""
    _, start, end = citation.marker.span
    text = citation.context_paragraph
    return f"{text[:start]}**{text[start:end]}**{text[end:]}"


def render_messages(citation: LinkedCitation, config: ClassifierConfig) -> list[dict]:
    """Pure function of (citation, config): identical inputs give identical
    request messages, so runs are reproducible given a deterministic model."""
    system = _SYSTEM_PROMPT.format(codebook=codebook_text())
    user = _USER_TEMPLATE.format(tree=_DECISION_TREE, abstract=citation.abstract,
                                 context=highlight_marker(citation),
                                 labels=_LABEL_LIST)
    return [{"role": "system", "content": system},
            {"role": "user", "content": user}]


def parse_label(response_text: str) -> CitationPurpose | None:
    """Accept exactly the seven canonical labels on the final nonempty line,
    case-insensitively and whitespace-trimmed; anything else is a failure."""
    lines = [line for line in response_text.splitlines() if line.strip()]
    if not lines:
        return None
    return parse_purpose_lenient(lines[-1])


def _post_chat(messages: list[dict], config: ClassifierConfig, session) -> str:
    headers = {}
    api_key = os.environ.get(CHAT_API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {"model": config.model_name, "temperature": config.temperature,
            "messages": messages}
    try:
        response = session.post(config.endpoint_url, json=body, headers=headers,
                                timeout=config.request_timeout)
    except requests.RequestException as exc:
        raise NetworkError(f"chat endpoint request failed: {exc}") from exc
    if response.status_code != 200:
        raise NetworkError(f"chat endpoint returned HTTP {response.status_code}")
    try:
        return response.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise NetworkError(f"malformed chat response: {exc}") from exc


def classify(citation: LinkedCitation, config: ClassifierConfig,
             session=None) -> Prediction:
    """Classify one citation. Raises ParseError/NetworkError on failure;
    batch drivers record those per item instead of aborting."""
    if config.kind is ClassifierKind.LEXICAL_BASELINE:
        return Prediction(item_id=citation.item_id,
                          label=lexical_classify(citation))

    session = session or requests.Session()
    messages = render_messages(citation, config)
    raw_responses: list[str] = []
    for attempt in range(1, config.max_parse_retries + 2):
        raw = _post_chat(messages, config, session)
        raw_responses.append(raw)
        label = parse_label(raw)
        if label is not None:
            return Prediction(item_id=citation.item_id, label=label,
                              raw_response=raw, attempts=attempt)
        messages = messages + [
            {"role": "assistant", "content": raw},
            {"role": "user", "content": _STRICT_REMINDER.format(labels=_LABEL_LIST)},
        ]
    raise ParseError(
        f"no valid label after {config.max_parse_retries + 1} attempts",
        raw_responses)


# Lexical baseline cue rules, applied in order. The "we ..." cues must
# precede the citation marker; the rest may appear anywhere in the context.
_USE_CUES = ("we use", "we adopt", "we report", "we apply", "we employ")
_DEFINITION_RE = re.compile(r"\bis defined as\b|\bdefines\b|\bare defined\b")
_BASIS_RE = re.compile(r"\bdraws? on\b|\bbuilds? on\b|\bbuilt on\b|\bbased on\b|\bbuilding on\b")
_SUBSTANTIATION_RE = re.compile(
    r"\b(?:has|have) shown\b|\bdemonstrated? that\b|\bshowed that\b|\bevidence that\b")
_ANALYSIS_RE = re.compile(r"\bunlike\b|\bin contrast\b|\bcompared to\b|\bcompared with\b")


def lexical_classify(citation: LinkedCitation) -> CitationPurpose:
    """Deterministic cue-based baseline; Related Work is the fall-through."""
    context = citation.context_paragraph.lower()
    before_marker = context[:citation.marker.span[1]]
    if any(cue in before_marker for cue in _USE_CUES):
        return CitationPurpose.USE
    if _DEFINITION_RE.search(context):
        return CitationPurpose.DEFINITION
    if _BASIS_RE.search(context):
        return CitationPurpose.BASIS
    if _SUBSTANTIATION_RE.search(context):
        return CitationPurpose.SUBSTANTIATION
    if _ANALYSIS_RE.search(context):
        return CitationPurpose.ANALYSIS
    return CitationPurpose.RELATED_WORK


def classify_batch(citations: list[LinkedCitation], config: ClassifierConfig,
                   concurrency_limit: int = 4, session=None,
                   ) -> tuple[list[Prediction], list[ClassificationFailure]]:
    """Classify a batch; output order matches input order, at most
    ``concurrency_limit`` requests in flight, failures isolated per item."""
    if concurrency_limit < 1:
        raise ValueError("concurrency_limit must be >= 1")
    session = session or requests.Session()
    results: list[Prediction | None] = [None] * len(citations)
    failures_by_index: dict[int, ClassificationFailure] = {}
    lock = threading.Lock()

    def work(index: int, citation: LinkedCitation) -> None:
        try:
            prediction = classify(citation, config, session=session)
        except ParseError as exc:
            with lock:
                failures_by_index[index] = ClassificationFailure(
                    item_id=citation.item_id, kind="parse", error=str(exc),
                    raw_responses=exc.raw_responses)
            return
        except NetworkError as exc:
            with lock:
                failures_by_index[index] = ClassificationFailure(
                    item_id=citation.item_id, kind="network", error=str(exc))
            return
        results[index] = prediction

    if concurrency_limit == 1 or len(citations) <= 1:
        for i, citation in enumerate(citations):
            work(i, citation)
    else:
        with ThreadPoolExecutor(max_workers=concurrency_limit) as pool:
            futures = [pool.submit(work, i, c) for i, c in enumerate(citations)]
            for future in futures:
                future.result()

    predictions = [p for p in results if p is not None]
    failures = [failures_by_index[i] for i in sorted(failures_by_index)]
    return predictions, failures


# Published macro-F1 reference points for this taxonomy's classifiers.
REFERENCE_MACRO_F1 = {"llm_decision_tree": 0.47, "synthetic_trained_encoder": 0.30}
REFERENCE_NOTE = "non-binding reference — LLM outputs are not reproducible"


def evaluate(predictions: list[tuple[str, CitationPurpose]],
             gold: list[tuple[str, CitationPurpose]]) -> dict:
    """Score predictions against adjudicated gold labels and attach the
    reference comparison block."""
    from .stats import classification_report

    report = classification_report(predictions, gold)
    return {
        "report": report.to_dict(),
        "reference": {
            "macro_f1": dict(REFERENCE_MACRO_F1),
            "note": REFERENCE_NOTE,
        },
    }
