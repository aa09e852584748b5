import json
import random

import pytest

from citegauge.corpus import CanonicalSection
from citegauge.linking import CitationMarker, LinkedCitation
from citegauge.relatedness import (
    DimensionMismatchError,
    EmbeddingCache,
    EmbeddingVector,
    EmptyTextError,
    HashingStubProvider,
    MissingVectorError,
    PrecomputedEmbeddingProvider,
    RelatednessScore,
    ZeroVectorError,
    cosine,
    embed,
    grouped_score_summary,
    relatedness,
    text_key,
)

from oracles import cosine_bruteforce


def vec(*values):
    return EmbeddingVector(values=tuple(float(v) for v in values))


def make_citation(context, abstract, item_id="d:p0:0"):
    marker = CitationMarker(surface="X, 2020", lead_surname="X", extra_surnames=(),
                            year=2020, span=(0, 0, 7))
    return LinkedCitation(item_id=item_id, document_id="d", marker=marker,
                          reference_key="r", section=CanonicalSection.METHOD,
                          context_paragraph=context, abstract=abstract)


class TestCosine:
    def test_identity(self):
        v = vec(0.3, -0.2, 0.9)
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(vec(1, 0), vec(0, 1)) == pytest.approx(0.0)

    def test_oracle_value(self):
        # frozen from the direct-formula oracle
        assert cosine(vec(1, 2, 3), vec(4, 5, 6)) == pytest.approx(
            0.9746318461970762, abs=1e-6)

    def test_matches_oracle_on_random_vectors(self):
        rng = random.Random(7)
        for _ in range(50):
            u = [rng.uniform(-2, 2) for _ in range(8)]
            v = [rng.uniform(-2, 2) for _ in range(8)]
            assert cosine(vec(*u), vec(*v)) == pytest.approx(
                cosine_bruteforce(u, v), abs=1e-12)

    def test_symmetric(self):
        u, v = vec(1, 2, -1), vec(0.5, -3, 2)
        assert abs(cosine(u, v) - cosine(v, u)) < 1e-12

    def test_scale_invariant(self):
        u, v = vec(1, 2, -1), vec(0.5, -3, 2)
        scaled = vec(*(3.7 * x for x in u.values))
        assert cosine(scaled, v) == pytest.approx(cosine(u, v), abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cosine(vec(1, 2), vec(1, 2, 3))

    def test_zero_vector(self):
        with pytest.raises(ZeroVectorError):
            cosine(vec(0, 0), vec(1, 1))

    def test_clamped(self):
        v = vec(1e-8, 1e-8, 1e-8)
        assert -1.0 <= cosine(v, v) <= 1.0


class TestProviders:
    def test_stub_deterministic(self):
        provider = HashingStubProvider(dimension=16)
        first = embed("some text", provider)
        second = embed("some  text", provider)  # whitespace collapse only
        assert first == second

    def test_precomputed_lookup(self, tmp_path):
        provider_stub = HashingStubProvider(dimension=4)
        stored = provider_stub.embed_batch(["abc"])[0]
        path = tmp_path / "vectors.jsonl"
        path.write_text(json.dumps({"sha256": text_key("abc"), "vector": stored}) + "\n")
        provider = PrecomputedEmbeddingProvider(path)
        assert list(embed("abc", provider).values) == stored

    def test_precomputed_missing(self, tmp_path):
        path = tmp_path / "vectors.jsonl"
        path.write_text(json.dumps({"sha256": "00" * 32, "vector": [1.0]}) + "\n")
        with pytest.raises(MissingVectorError):
            embed("unseen", PrecomputedEmbeddingProvider(path))

    def test_empty_text(self):
        with pytest.raises(EmptyTextError):
            embed("   ", HashingStubProvider())

    def test_truncation_warns(self, caplog):
        provider = HashingStubProvider(dimension=4)
        provider.max_text_length = 10
        with caplog.at_level("WARNING"):
            embed("x" * 50, provider)
        assert any("truncating" in r.message for r in caplog.records)


class TestRelatedness:
    def test_identical_texts_score_one(self):
        citation = make_citation("same words here", "same words here")
        score = relatedness(citation, HashingStubProvider())
        assert score.normalized == pytest.approx(1.0)
        assert score.raw_cosine == pytest.approx(1.0)

    def test_stub_pair_matches_hand_computation(self):
        provider = HashingStubProvider(dimension=32)
        citation = make_citation("the citation context", "the paper abstract")
        u = provider.embed_batch(["the citation context"])[0]
        v = provider.embed_batch(["the paper abstract"])[0]
        expected = cosine_bruteforce(u, v)
        score = relatedness(citation, provider)
        assert score.raw_cosine == pytest.approx(expected, abs=1e-12)
        assert score.normalized == pytest.approx((expected + 1) / 2, abs=1e-12)

    def test_normalization_affine(self):
        for raw in (-1.0, -0.5, 0.0, 0.5, 1.0):
            assert RelatednessScore.from_cosine(raw).normalized == (raw + 1) / 2

    def test_cache_does_not_change_results(self):
        provider = HashingStubProvider(dimension=16)
        citations = [make_citation(f"context {i % 3}", "abstract", item_id=f"i{i}")
                     for i in range(10)]
        cache = EmbeddingCache()
        with_cache = [relatedness(c, provider, cache) for c in citations]
        without = [relatedness(c, provider) for c in citations]
        assert with_cache == without

    def test_provider_error_carries_item_id(self, tmp_path):
        path = tmp_path / "vectors.jsonl"
        path.write_text("")
        citation = make_citation("ctx", "abs", item_id="docZ:p3:14")
        with pytest.raises(MissingVectorError, match="docZ:p3:14"):
            relatedness(citation, PrecomputedEmbeddingProvider(path))


def test_grouped_summary_quartiles():
    summary = grouped_score_summary({"Use": [0.1, 0.2, 0.3, 0.4], "Basis": [0.5]})
    rows = {row["group"]: row for row in summary["summary"]}
    assert rows["Use"]["median"] == pytest.approx(0.25)
    assert rows["Use"]["q1"] == pytest.approx(0.175)
    assert rows["Basis"]["n"] == 1
    assert summary["plot_data"]["kind"] == "box"
