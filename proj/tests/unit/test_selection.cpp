#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/rng.hpp"
#include "corpus_mixer/selection.hpp"

using namespace corpus_mixer;

namespace {

CorpusIndex random_corpus(std::uint64_t seed, std::size_t n, std::size_t topics_used) {
    RngStream rng(seed, 0);
    std::vector<DocumentRecord> recs;
    for (std::size_t i = 0; i < n; ++i) {
        DocumentRecord d;
        d.id = "doc-" + std::to_string(i);
        d.tokens = 1 + rng.uniform_index(300);
        d.topic = rng.uniform_index(topics_used);
        d.format = rng.uniform_index(3);
        d.scores["q"] = std::floor(rng.normal() * 4) / 4;
        recs.push_back(std::move(d));
    }
    return ingest(recs, canonical_topics(), canonical_formats());
}

Mixture first_topics(const std::vector<double>& w) {
    std::vector<double> full(24, 0.0);
    std::copy(w.begin(), w.end(), full.begin());
    return Mixture::from_masses(canonical_topics(), full);
}

}  // namespace

TEST_CASE("largest-remainder budgets") {
    auto t = cluster_taxonomy(3);
    CHECK(token_budgets(Mixture(t, {0.335, 0.333, 0.332}), 100) == std::vector<std::uint64_t>{34, 33, 33});
    CHECK(token_budgets(Mixture::uniform(t), 2) == std::vector<std::uint64_t>{1, 1, 0});
    CHECK(token_budgets(Mixture::indicator(t, 2), 7) == std::vector<std::uint64_t>{0, 0, 7});
    CHECK_THROWS_AS(token_budgets(Mixture::uniform(t), 0), Error);

    RngStream rng(1, 1);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 1 + rng.uniform_index(30);
        std::vector<double> w(k);
        for (auto& x : w) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        w[0] += 1e-3;
        auto mix = Mixture::from_masses(cluster_taxonomy(k), w);
        const std::uint64_t b = 1 + rng.uniform_index(1'000'000'000);
        auto out = token_budgets(mix, b);
        std::uint64_t s = 0;
        for (std::size_t i = 0; i < k; ++i) {
            s += out[i];
            CHECK(std::abs(static_cast<double>(out[i]) - mix[i] * static_cast<double>(b)) < 1.0 + 1e-6);
        }
        CHECK(s == b);
    }
}

TEST_CASE("overflow redistribution") {
    auto two = cluster_taxonomy(2);
    const std::vector<std::uint64_t> a2 = {50, 1000};
    auto r = redistribute_overflow(Mixture(two, {0.9, 0.1}), a2, 100);
    CHECK(r.mixture[0] == doctest::Approx(0.5));
    CHECK(r.mixture[1] == doctest::Approx(0.5));
    CHECK(r.clamped == std::vector<bool>{true, false});

    auto three = cluster_taxonomy(3);
    const std::vector<std::uint64_t> a3 = {10, 25, 1000};
    auto r3 = redistribute_overflow(Mixture(three, {0.4, 0.2, 0.4}), a3, 100);
    CHECK(r3.mixture[0] == doctest::Approx(0.10));
    CHECK(r3.mixture[1] == doctest::Approx(0.25));
    CHECK(r3.mixture[2] == doctest::Approx(0.65));
    CHECK(r3.rounds == 2);

    // A pure indicator whose cell is too small spills onto empty-weight cells.
    const std::vector<std::uint64_t> a4 = {30, 10, 60};
    auto ind = redistribute_overflow(Mixture::indicator(three, 0), a4, 100);
    CHECK(ind.mixture[0] == doctest::Approx(0.3));
    CHECK(ind.mixture[1] == doctest::Approx(0.1));
    CHECK(ind.mixture[2] == doctest::Approx(0.6));

    const std::vector<std::uint64_t> feasible = {1000, 1000};
    CHECK(redistribute_overflow(Mixture(two, {0.9, 0.1}), feasible, 100).mixture == Mixture(two, {0.9, 0.1}));
    CHECK_THROWS_AS(redistribute_overflow(Mixture(two, {0.9, 0.1}), a2, 2000), Error);
    CHECK_THROWS_AS(redistribute_overflow(Mixture(two, {0.9, 0.1}), a3, 100), Error);
}

TEST_CASE("random selection reaches targets with bounded overshoot") {
    auto idx = random_corpus(3, 2000, 4);
    auto mix = first_topics({0.1, 0.2, 0.3, 0.4});
    auto budgets = token_budgets(mix, 60000);
    auto m = select_random(idx, canonical_topics(), budgets, 11);
    auto again = select_random(idx, canonical_topics(), budgets, 11);
    CHECK(manifest_jsonl(m) == manifest_jsonl(again));
    CHECK(manifest_jsonl(m) != manifest_jsonl(select_random(idx, canonical_topics(), budgets, 12)));

    std::set<std::string> seen;
    for (std::size_t d = 0; d < 24; ++d) {
        const auto& dom = m.domains[d];
        for (const auto& doc : dom.documents) {
            CHECK(seen.insert(doc.id).second);
            CHECK(idx.find(doc.id)->topic == d);
        }
        if (dom.exhausted) {
            CHECK(dom.realized_tokens == dom.available_tokens);
        } else {
            CHECK(dom.realized_tokens >= dom.target_tokens);
            if (dom.target_tokens > 0) CHECK(dom.realized_tokens < dom.target_tokens + dom.max_document_tokens);
            else CHECK(dom.realized_tokens == 0);
        }
    }
    auto realized = implicit_mixture(m, idx, canonical_topics());
    for (std::size_t d = 0; d < 4; ++d) CHECK(std::abs(realized[d] - mix[d]) < 0.01);
}

TEST_CASE("exhausted domains are flagged") {
    auto idx = random_corpus(4, 100, 2);
    auto budgets = token_budgets(first_topics({0.9, 0.1}), 50000);
    auto m = select_random(idx, canonical_topics(), budgets, 0);
    CHECK(m.domains[0].exhausted);
    auto stats = manifest_stats(m);
    CHECK(stats.exhausted.front() == 0);
    CHECK(stats.shortfall[0] == m.domains[0].target_tokens - m.domains[0].available_tokens);
    auto summary = manifest_summary(m);
    CHECK(summary["exhausted_domains"][0] == "Adult");
}

TEST_CASE("quality selection takes the top-scored prefix") {
    auto idx = random_corpus(5, 1500, 3);
    auto budgets = token_budgets(first_topics({0.5, 0.3, 0.2}), 40000);
    auto m = select_by_quality(idx, canonical_topics(), budgets, "q");
    auto members = domain_members(idx, *canonical_topics());
    for (std::size_t d = 0; d < 3; ++d) {
        auto pool = members[d];
        std::sort(pool.begin(), pool.end(), [](auto* a, auto* b) {
            const double sa = a->scores.at("q"), sb = b->scores.at("q");
            return sa != sb ? sa > sb : a->id < b->id;
        });
        const auto& docs = m.domains[d].documents;
        REQUIRE(docs.size() <= pool.size());
        for (std::size_t i = 0; i < docs.size(); ++i) CHECK(docs[i].id == pool[i]->id);
    }
    CHECK_THROWS_AS(select_by_quality(idx, canonical_topics(), budgets, "missing"), Error);
}

TEST_CASE("global taxonomy reduces to corpus-wide filtering") {
    auto idx = random_corpus(6, 500, 5);
    const std::vector<std::uint64_t> budget = {20000};
    auto m = select_by_quality(idx, global_taxonomy(), budget, "q");
    CHECK(m.domains.size() == 1);
    CHECK(m.total_realized() >= 20000);
}

TEST_CASE("implicit mixtures") {
    auto idx = random_corpus(7, 300, 24);
    auto whole = implicit_mixture(idx, canonical_topics());
    std::vector<std::string> all;
    for (const auto& d : idx.documents()) all.push_back(d.id);
    auto same = implicit_mixture(all, idx, canonical_topics());
    for (std::size_t i = 0; i < 24; ++i) CHECK(whole[i] == doctest::Approx(same[i]));
    const std::vector<std::string> none;
    CHECK_THROWS_AS(implicit_mixture(none, idx, canonical_topics()), Error);
    const std::vector<std::string> ghost = {"nope"};
    CHECK_THROWS_AS(implicit_mixture(ghost, idx, canonical_topics()), Error);
}

TEST_CASE("holdout split is deterministic and order-independent") {
    auto idx = random_corpus(8, 1000, 24);
    auto a = split_holdout(idx, 0.1, 3);
    auto b = split_holdout(idx, 0.1, 3);
    CHECK(a.holdout_ids == b.holdout_ids);
    CHECK(a.train == b.train);
    CHECK(a.holdout_ids.size() > 60);
    CHECK(a.holdout_ids.size() < 140);
    CHECK(a.train.document_count() + a.holdout_ids.size() == 1000);
    for (const auto& id : a.holdout_ids) CHECK(a.train.find(id) == nullptr);
    CHECK(split_holdout(idx, 0.0, 3).holdout_ids.empty());
    CHECK_THROWS_AS(split_holdout(idx, 1.0, 3), Error);
}

TEST_CASE("composed quality selection") {
    auto idx = random_corpus(9, 3000, 4);
    auto topic = first_topics({0.25, 0.25, 0.25, 0.25});
    std::vector<double> f(24, 0.0);
    f[0] = 0.5;
    f[1] = 0.5;
    auto fmt = Mixture::from_masses(canonical_formats(), f);
    auto c = compose_quality_mixture(idx, topic, fmt, "q", 50000);
    CHECK(c.intended[product_cell(0, 0, 24)] == doctest::Approx(0.125));
    std::uint64_t s = 0;
    for (auto b : c.budgets) s += b;
    CHECK(s == 50000);
    for (std::size_t cell = 0; cell < 576; ++cell) {
        CHECK(c.manifest.domains[cell].target_tokens <= c.manifest.domains[cell].available_tokens);
    }
}

TEST_CASE("stats-only index cannot drive selection") {
    std::vector<DocumentRecord> recs = {{"a", 5, 0, 0, std::nullopt, {}}};
    auto lean = ingest(recs, canonical_topics(), canonical_formats(), true);
    CHECK_THROWS_AS(domain_members(lean, *canonical_topics()), Error);
}
