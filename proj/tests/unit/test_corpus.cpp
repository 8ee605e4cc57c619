#include "doctest.h"

#include <sstream>

#include "corpus_mixer/corpus.hpp"
#include "corpus_mixer/error.hpp"
#include "corpus_mixer/rng.hpp"

using namespace corpus_mixer;

namespace {

std::vector<DocumentRecord> random_records(std::uint64_t seed, std::size_t n, bool clusters) {
    RngStream rng(seed, 0);
    std::vector<DocumentRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        DocumentRecord d;
        d.id = "d" + std::to_string(rng.uniform_index(1u << 30)) + "-" + std::to_string(i);
        d.tokens = 1 + rng.uniform_index(1000);
        d.topic = rng.uniform_index(24);
        d.format = rng.uniform_index(24);
        if (clusters) d.cluster = rng.uniform_index(5);
        d.scores["q"] = rng.normal();
        out.push_back(std::move(d));
    }
    return out;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::io_error;
}

}  // namespace

TEST_CASE("record parsing") {
    const auto& t = *canonical_topics();
    const auto& f = *canonical_formats();
    auto r = parse_record(R"({"id":"a","tokens":12,"topic":"Science & Tech.","format":3,"cluster":2,"scores":{"q":0.5}})",
                          t, f);
    CHECK(r.id == "a");
    CHECK(r.tokens == 12);
    CHECK(t.name(r.topic) == "Science & Technology");
    CHECK(f.name(r.format) == "Audio Transcript");
    CHECK(r.cluster == 2u);
    CHECK(r.scores.at("q") == 0.5);
    CHECK(parse_record(record_to_json(r, t, f).dump(), t, f) == r);

    CHECK(code_of([&] { parse_record("{", t, f); }) == ErrorCode::malformed_record);
    CHECK(code_of([&] { parse_record(R"({"id":"a","tokens":0,"topic":0,"format":0})", t, f); }) ==
          ErrorCode::malformed_record);
    CHECK(code_of([&] { parse_record(R"({"id":"a","tokens":3,"topic":24,"format":0})", t, f); }) ==
          ErrorCode::invalid_category);
    CHECK(code_of([&] { parse_record(R"({"id":"a","tokens":3,"topic":"Astrology","format":0})", t, f); }) ==
          ErrorCode::invalid_category);
    CHECK(code_of([&] { parse_record(R"({"id":"a","tokens":3,"topic":0})", t, f); }) ==
          ErrorCode::malformed_record);
}

TEST_CASE("stream ingestion") {
    std::istringstream in(
        "{\"id\":\"x\",\"tokens\":5,\"topic\":0,\"format\":1}\n"
        "\n"
        "not json\n"
        "{\"id\":\"y\",\"tokens\":7,\"topic\":0,\"format\":2}\n");
    auto res = read_corpus(in, "mem", canonical_topics(), canonical_formats(), {false, true});
    CHECK(res.malformed_lines == 1);
    CHECK(res.index.document_count() == 2);
    CHECK(res.index.token_count() == 12);
    CHECK(res.index.find("y")->tokens == 7);
    CHECK(res.index.find("z") == nullptr);

    std::istringstream strict("{\"id\":\"x\",\"tokens\":5,\"topic\":0,\"format\":1}\nnot json\n");
    try {
        read_corpus(strict, "mem", canonical_topics(), canonical_formats());
        FAIL("expected MalformedRecord");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::malformed_record);
        CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
    }
}

TEST_CASE("duplicate ids are rejected") {
    auto recs = random_records(1, 3, false);
    recs[2].id = recs[0].id;
    CHECK(code_of([&] { ingest(recs, canonical_topics(), canonical_formats()); }) == ErrorCode::duplicate_doc_id);
    CHECK(code_of([&] { ingest(recs, canonical_topics(), canonical_formats(), true); }) ==
          ErrorCode::duplicate_doc_id);
}

TEST_CASE("sharded ingestion merges to the same index") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto recs = random_records(seed, 200, seed % 2 == 0);
        for (bool stats_only : {false, true}) {
            auto whole = ingest(recs, canonical_topics(), canonical_formats(), stats_only);
            RngStream rng(seed, 99);
            const std::size_t cut1 = rng.uniform_index(201);
            const std::size_t cut2 = cut1 + rng.uniform_index(201 - cut1);
            std::vector<DocumentRecord> a(recs.begin(), recs.begin() + cut1);
            std::vector<DocumentRecord> b(recs.begin() + cut1, recs.begin() + cut2);
            std::vector<DocumentRecord> c(recs.begin() + cut2, recs.end());
            auto ia = ingest(a, canonical_topics(), canonical_formats(), stats_only);
            auto ib = ingest(b, canonical_topics(), canonical_formats(), stats_only);
            auto ic = ingest(c, canonical_topics(), canonical_formats(), stats_only);
            CHECK(CorpusIndex::merge(CorpusIndex::merge(ia, ib), ic) == whole);
            CHECK(CorpusIndex::merge(ic, CorpusIndex::merge(ib, ia)) == whole);
        }
    }
}

TEST_CASE("stats-only counts equal full counts") {
    auto recs = random_records(5, 500, true);
    auto full = ingest(recs, canonical_topics(), canonical_formats());
    auto lean = ingest(recs, canonical_topics(), canonical_formats(), true);
    CHECK(lean.documents().empty());
    for (const auto& tax : {canonical_topics(), canonical_formats(), canonical_product(), global_taxonomy(),
                            cluster_taxonomy(5)}) {
        CHECK(full.category_counts(*tax) == lean.category_counts(*tax));
    }
    CHECK(full.joint_counts(*cluster_taxonomy(5), *canonical_topics()) ==
          lean.joint_counts(*cluster_taxonomy(5), *canonical_topics()));
    CHECK(full.fully_clustered());
    CHECK(full.cluster_arity() == 5);

    std::uint64_t tokens = 0;
    for (const auto& r : recs) tokens += r.tokens;
    auto g = full.category_counts(*global_taxonomy());
    CHECK(g[0].tokens == tokens);
    CHECK(g[0].documents == 500);
}

TEST_CASE("missing cluster annotations") {
    auto recs = random_records(2, 10, false);
    auto idx = ingest(recs, canonical_topics(), canonical_formats());
    CHECK_FALSE(idx.fully_clustered());
    CHECK(code_of([&] { idx.category_counts(*cluster_taxonomy(3)); }) == ErrorCode::missing_annotation);
    CHECK(parse_weighting("documents") == Weighting::documents);
    CHECK_THROWS_AS(parse_weighting("bytes"), Error);
}
