#include "doctest.h"

#include <cmath>
#include <limits>

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/mixture.hpp"
#include "corpus_mixer/rng.hpp"

using namespace corpus_mixer;

namespace {

TaxonomyPtr k(std::size_t n) { return cluster_taxonomy(n); }

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

TEST_CASE("mixture validation") {
    CHECK(Mixture(k(3), {0.2, 0.3, 0.5}).arity() == 3);
    Mixture renorm(k(2), {0.5, 0.5 + 5e-7});
    CHECK(renorm[0] + renorm[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(code_of([] { Mixture(k(2), {0.5, 0.6}); }) == ErrorCode::invalid_mixture);
    CHECK(code_of([] { Mixture(k(2), {-0.1, 1.1}); }) == ErrorCode::invalid_mixture);
    CHECK(code_of([] { Mixture(k(2), {0.5, 0.25, 0.25}); }) == ErrorCode::invalid_mixture);
    CHECK(code_of([] { Mixture(k(2), {std::nan(""), 1.0}); }) == ErrorCode::invalid_mixture);
}

TEST_CASE("from_masses and json") {
    const double m[] = {4.1, 95.8};
    auto mix = Mixture::from_masses(k(2), m);
    CHECK(mix[0] == doctest::Approx(4.1 / 99.9));
    auto back = Mixture::from_json(mix.to_json());
    CHECK(back == mix);
    json partial = {{"taxonomy", "topic"}, {"weights", {{"Science & Tech.", 1.0}}}};
    auto ind = Mixture::from_json(partial);
    CHECK(ind[17] == 1.0);
    CHECK(ind[0] == 0.0);
}

TEST_CASE("temper") {
    const Mixture p(k(4), {0.81, 0.09, 0.09, 0.01});
    auto q = temper(p, 2.0);
    CHECK(q[0] == doctest::Approx(0.5625));
    CHECK(q[1] == doctest::Approx(0.1875));
    CHECK(q[3] == doctest::Approx(0.0625));
    CHECK(temper(p, 1.0) == p);
    auto u = Mixture::uniform(k(4));
    CHECK(temper(u, 3.0)[2] == doctest::Approx(0.25));
    CHECK_THROWS_AS(temper(p, 0.0), Error);
    CHECK_THROWS_AS(temper(p, -1.0), Error);
}

TEST_CASE("tempering flattens: entropy grows with tau") {
    RngStream rng(11, 0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> w(6);
        for (auto& x : w) x = rng.uniform() + 1e-3;
        auto p = Mixture::from_masses(k(6), w);
        auto h = [](const Mixture& m) {
            double s = 0;
            for (double x : m.weights()) s -= x > 0 ? x * std::log(x) : 0.0;
            return s;
        };
        CHECK(h(temper(p, 2.0)) >= h(p) - 1e-12);
        CHECK(h(temper(p, 4.0)) >= h(temper(p, 2.0)) - 1e-12);
    }
}

TEST_CASE("kl divergence") {
    const Mixture p(k(2), {0.5, 0.5});
    const Mixture q(k(2), {0.25, 0.75});
    // 0.5 ln 2 + 0.5 ln(2/3)
    CHECK(kl_divergence(p, q) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)));
    CHECK(kl_divergence(p, p) == 0.0);
    CHECK(std::isinf(kl_divergence(p, Mixture::indicator(k(2), 0))));
    CHECK(kl_divergence(Mixture::indicator(k(2), 0), p) == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(kl_divergence(p, Mixture::uniform(k(3))), Error);
}

TEST_CASE("upsampling factors") {
    const Mixture mix(k(3), {0.5, 0.5, 0.0});
    const Mixture corpus(k(3), {0.25, 0.0, 0.75});
    auto f = upsampling_factors(mix, corpus);
    CHECK(f[0] == 2.0);
    CHECK(std::isinf(f[1]));
    CHECK(f[2] == 0.0);
    const Mixture z(k(2), {1.0, 0.0});
    CHECK(upsampling_factors(z, z)[1] == 0.0);
}

TEST_CASE("product mixtures and marginals") {
    const Mixture a(k(2), {0.7, 0.3});
    const Mixture b(parse_taxonomy_spec("cluster:2"), {0.6, 0.4});
    auto p = product_mixture(a, b);
    CHECK(p.arity() == 4);
    CHECK(p[0] == doctest::Approx(0.42));
    CHECK(p[1] == doctest::Approx(0.28));
    CHECK(p[2] == doctest::Approx(0.18));
    CHECK(p[3] == doctest::Approx(0.12));
    CHECK(product_marginal(p, 0)[0] == doctest::Approx(0.7));
    CHECK(product_marginal(p, 1)[1] == doctest::Approx(0.4));

    RngStream rng(5, 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> t(24), f(24);
        for (auto& x : t) x = rng.uniform();
        for (auto& x : f) x = rng.uniform();
        auto tm = Mixture::from_masses(canonical_topics(), t);
        auto fm = Mixture::from_masses(canonical_formats(), f);
        auto prod = product_mixture(tm, fm);
        double s = 0;
        for (double x : prod.weights()) s += x;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        auto back = product_marginal(prod, 0);
        for (std::size_t i = 0; i < 24; ++i) CHECK(back[i] == doctest::Approx(tm[i]).epsilon(1e-12));
    }
}

TEST_CASE("cap check") {
    const double ref[] = {0.1, 0.9, 0.0};
    const double ok[] = {0.65, 0.35, 0.0};
    const double over[] = {0.66, 0.34, 0.0};
    const double leak[] = {0.5, 0.4, 0.1};
    CHECK(within_cap(ok, ref, 6.5));
    CHECK_FALSE(within_cap(over, ref, 6.5));
    CHECK_FALSE(within_cap(leak, ref, std::numeric_limits<double>::infinity()));
    CHECK(within_cap(ok, ref, std::numeric_limits<double>::infinity()));
}
