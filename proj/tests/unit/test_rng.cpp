#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/parallel.hpp"
#include "corpus_mixer/rng.hpp"

using namespace corpus_mixer;

TEST_CASE("philox4x32-10 known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, A2{0xffffffffu, 0xffffffffu}) ==
          A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, A2{0xa4093822u, 0x299f31d0u}) ==
          A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    std::set<std::uint64_t> firsts;
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        firsts.insert(x);
    }
    CHECK(firsts.size() == 100);
    RngStream a2(42, 7);
    CHECK(a2() != c());
    CHECK(RngStream(42, 7)() != d());
}

TEST_CASE("uniform draws stay in range and have the right mean") {
    RngStream rng(1, 0);
    double sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const double o = rng.uniform_open();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(o > 0.0);
        REQUIRE(o < 1.0);
        sum += u;
    }
    // SE of the mean is sqrt(1/12 / n) ~ 6.5e-4
    CHECK(std::abs(sum / n - 0.5) < 4e-3);

    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("gamma moments") {
    for (double shape : {0.05, 0.5, 1.0, 3.7, 40.0}) {
        RngStream rng(9, static_cast<std::uint64_t>(shape * 100));
        const int n = 100000;
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double g = rng.gamma(shape);
            REQUIRE(g >= 0.0);
            s += g;
            s2 += g * g;
        }
        const double mean = s / n;
        const double var = s2 / n - mean * mean;
        CAPTURE(shape);
        CHECK(std::abs(mean - shape) < 5.0 * std::sqrt(shape / n));
        CHECK(std::abs(var / shape - 1.0) < 0.1);
    }
    RngStream rng(0, 0);
    CHECK(std::isfinite(rng.log_gamma(1e-6)));
}

TEST_CASE("dirichlet draws") {
    RngStream rng(3, 3);
    const std::vector<double> alpha = {1.0, 2.0, 3.0};
    std::vector<double> out(3);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        sample_dirichlet(alpha, rng, out);
        REQUIRE(out[0] + out[1] + out[2] == doctest::Approx(1.0).epsilon(1e-12));
        s += out[1];
        s2 += out[1] * out[1];
    }
    const double mean = s / n;
    // a1 (a0 - a1) / (a0^2 (a0 + 1)) = 2 * 4 / (36 * 7)
    CHECK(mean == doctest::Approx(1.0 / 3.0).epsilon(0.01));
    CHECK(s2 / n - mean * mean == doctest::Approx(8.0 / 252.0).epsilon(0.03));

    const std::vector<double> sparse = {0.0, 1e-4, 0.0, 1e-4};
    std::vector<double> o4(4);
    for (int i = 0; i < 1000; ++i) {
        sample_dirichlet(sparse, rng, o4);
        REQUIRE(o4[0] == 0.0);
        REQUIRE(o4[2] == 0.0);
        REQUIRE(o4[1] + o4[3] == doctest::Approx(1.0));
    }
    const std::vector<double> bad = {1.0, -1.0};
    std::vector<double> o2(2);
    CHECK_THROWS_AS(sample_dirichlet(bad, rng, o2), Error);
    const std::vector<double> zero = {0.0, 0.0};
    CHECK_THROWS_AS(sample_dirichlet(zero, rng, o2), Error);
}

TEST_CASE("parallel_for covers every index exactly once") {
    for (std::size_t n : {0u, 1u, 7u, 1000u}) {
        std::vector<int> hits(n, 0);
        parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) ++hits[i];
        });
        for (int h : hits) CHECK(h == 1);
    }
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t, std::size_t) { throw Error(ErrorCode::io_error, "x"); }),
                    Error);
    CHECK(thread_count() >= 1);
}
