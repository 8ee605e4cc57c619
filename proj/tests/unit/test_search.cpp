#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/search.hpp"

using namespace corpus_mixer;

namespace {

class Linear final : public LossPredictor {
public:
    Linear(TaxonomyPtr tax, std::vector<double> c) : tax_(std::move(tax)), c_(std::move(c)) {}
    const TaxonomyPtr& taxonomy() const override { return tax_; }
    using LossPredictor::predict;
    double predict(std::span<const double> w) const override {
        double s = 0;
        for (std::size_t i = 0; i < w.size(); ++i) s += c_[i] * w[i];
        return s;
    }

private:
    TaxonomyPtr tax_;
    std::vector<double> c_;
};

class Bowl final : public LossPredictor {
public:
    Bowl(TaxonomyPtr tax, std::vector<double> center) : tax_(std::move(tax)), center_(std::move(center)) {}
    const TaxonomyPtr& taxonomy() const override { return tax_; }
    using LossPredictor::predict;
    double predict(std::span<const double> w) const override {
        double s = 0;
        for (std::size_t i = 0; i < w.size(); ++i) s += (w[i] - center_[i]) * (w[i] - center_[i]);
        return s;
    }

private:
    TaxonomyPtr tax_;
    std::vector<double> center_;
};

SearchParams small_params() {
    SearchParams p;
    p.n_per_step = 2000;
    p.steps = 8;
    p.kl_coeff = 0.0;
    return p;
}

void set_threads(const char* n) { ::setenv("CORPUS_MIXER_THREADS", n, 1); }

}  // namespace

TEST_CASE("objective adds the KL penalty") {
    auto tax = cluster_taxonomy(2);
    Linear lin(tax, {1.0, 0.0});
    const Mixture prior(tax, {0.5, 0.5});
    const Mixture cand(tax, {0.25, 0.75});
    CHECK(objective(lin, prior, 0.0, cand) == doctest::Approx(0.25));
    CHECK(objective(lin, prior, 2.0, cand) == doctest::Approx(0.25 + 2.0 * kl_divergence(prior, cand)));
    CHECK(std::isinf(objective(lin, prior, 1.0, Mixture::indicator(tax, 1))));
    CHECK(objective(lin, prior, 0.0, Mixture::indicator(tax, 1)) == 0.0);
}

TEST_CASE("line search evaluates both endpoints and breaks ties toward the candidate") {
    auto tax = cluster_taxonomy(2);
    const Mixture prior = Mixture::uniform(tax);
    const Mixture w(tax, {0.2, 0.8}), wt(tax, {0.6, 0.4});
    Linear lin(tax, {1.0, 0.0});
    CHECK(line_search(lin, prior, 0.0, w, wt, 5).mixture == w);
    Linear rev(tax, {0.0, 1.0});
    CHECK(line_search(rev, prior, 0.0, w, wt, 5).mixture == wt);
    Linear flat(tax, {1.0, 1.0});
    CHECK(line_search(flat, prior, 0.0, w, wt, 5).mixture == wt);
    Bowl bowl(tax, {0.4, 0.6});
    auto mid = line_search(bowl, prior, 0.0, w, wt, 5);
    CHECK(mid.mixture[0] == doctest::Approx(0.4));
    CHECK(mid.value == doctest::Approx(0.0));
}

TEST_CASE("brute force on a linear law fills the cheapest domain up to the cap") {
    auto tax = cluster_taxonomy(3);
    Linear lin(tax, {3.0, 1.0, 2.0});
    const Mixture prior(tax, {0.3, 0.2, 0.5});
    auto r = brute_force_search(lin, prior, 0.0, 2.0, 0.05);
    CHECK(r.mixture[1] == doctest::Approx(0.4));
    CHECK(r.mixture[2] == doctest::Approx(0.6));
    CHECK(r.value == doctest::Approx(0.4 + 1.2));
    // 3 parts of 20: C(22, 2) lattice points, filtered by the cap
    CHECK(r.evaluated < 231);
    CHECK_THROWS_AS(brute_force_search(lin, prior, 0.0, 2.0, 0.3), Error);
    CHECK_THROWS_AS(brute_force_search(Linear(cluster_taxonomy(6), std::vector<double>(6, 1.0)),
                                       Mixture::uniform(cluster_taxonomy(6)), 0.0, 2.0, 0.5),
                    Error);
}

TEST_CASE("adaptive search respects the cap and never worsens") {
    auto tax = cluster_taxonomy(4);
    const Mixture prior(tax, {0.4, 0.3, 0.2, 0.1});
    Bowl bowl(tax, {0.1, 0.2, 0.3, 0.4});
    auto p = small_params();
    p.cap = 4.5;
    auto r = adaptive_search(bowl, prior, p);
    REQUIRE(r.trace.size() == p.steps);
    double prev = objective(bowl, prior, 0.0, prior);
    for (const auto& s : r.trace) {
        CHECK(s.best_value <= prev);
        prev = s.best_value;
        CHECK(s.accepted <= p.n_per_step);
        CHECK(s.draws >= s.accepted);
        CHECK(s.after_line_search.value <= s.best_candidate.value);
        CHECK(within_cap(s.after_line_search.mixture.weights(), prior.weights(), p.cap));
    }
    CHECK(within_cap(r.mixture.weights(), prior.weights(), p.cap));
    CHECK(r.value == r.trace.back().best_value);
    CHECK(r.value < 2e-3);
}

TEST_CASE("adaptive search is reproducible across thread counts") {
    auto tax = cluster_taxonomy(5);
    const Mixture prior(tax, {0.3, 0.25, 0.2, 0.15, 0.1});
    Linear lin(tax, {1.0, 2.0, 0.5, 3.0, 1.5});
    auto p = small_params();
    p.kl_coeff = 0.01;
    set_threads("1");
    auto a = adaptive_search(lin, prior, p);
    set_threads("4");
    auto b = adaptive_search(lin, prior, p);
    ::unsetenv("CORPUS_MIXER_THREADS");
    CHECK(a.mixture == b.mixture);
    CHECK(a.value == b.value);
    CHECK(trace_to_json(a) == trace_to_json(b));

    const std::vector<std::uint64_t> seeds = {3, 4};
    auto m = multi_seed_search(lin, prior, p, seeds);
    p.seed = 3;
    auto s3 = adaptive_search(lin, prior, p);
    p.seed = 4;
    auto s4 = adaptive_search(lin, prior, p);
    CHECK(m.value == std::min(s3.value, s4.value));
}

TEST_CASE("search validation") {
    auto tax = cluster_taxonomy(2);
    Linear lin(tax, {1.0, 0.0});
    const Mixture prior = Mixture::uniform(tax);
    auto p = small_params();
    p.cap = 0.5;
    CHECK_THROWS_AS(adaptive_search(lin, prior, p), Error);
    p = small_params();
    p.smoothing = 0.0;
    CHECK_THROWS_AS(adaptive_search(lin, prior, p), Error);
    p = small_params();
    p.kl_coeff = -1.0;
    CHECK_THROWS_AS(adaptive_search(lin, prior, p), Error);
    CHECK_THROWS_AS(adaptive_search(lin, Mixture::uniform(cluster_taxonomy(3)), small_params()), Error);
    CHECK_THROWS_AS(multi_seed_search(lin, prior, small_params(), std::span<const std::uint64_t>{}), Error);
}
