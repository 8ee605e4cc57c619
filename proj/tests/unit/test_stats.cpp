#include "doctest.h"

#include <cmath>

#include "corpus_mixer/corpus.hpp"
#include "corpus_mixer/error.hpp"
#include "corpus_mixer/rng.hpp"
#include "corpus_mixer/stats.hpp"

using namespace corpus_mixer;

namespace {

// Straightforward double-loop reference implementations.
struct Oracle {
    std::size_t rows, cols;
    std::vector<double> p, pa, pb;

    Oracle(std::size_t r, std::size_t c, const std::vector<double>& masses) : rows(r), cols(c), pa(r, 0), pb(c, 0) {
        double total = 0;
        for (double m : masses) total += m;
        for (double m : masses) p.push_back(m / total);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                pa[i] += p[i * c + j];
                pb[j] += p[i * c + j];
            }
    }
    double npmi(std::size_t i, std::size_t j) const {
        const double pij = p[i * cols + j];
        if (pij == 0) return -1;
        if (pij == 1) return 1;
        return std::log(pij / (pa[i] * pb[j])) / -std::log(pij);
    }
    double mi() const {
        double s = 0;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                const double pij = p[i * cols + j];
                if (pij > 0) s += pij * std::log(pij / (pa[i] * pb[j]));
            }
        return s;
    }
    static double h(const std::vector<double>& q) {
        double s = 0;
        for (double x : q)
            if (x > 0) s -= x * std::log(x);
        return s;
    }
    double nmi() const { return 2 * mi() / (h(pa) + h(pb)); }
};

}  // namespace

TEST_CASE("frozen two-by-two values") {
    const std::vector<double> m = {0.4, 0.1, 0.1, 0.4};
    auto j = JointDistribution::from_masses(2, 2, m);
    const auto n = npmi(j);
    CHECK(n[0] == doctest::Approx(0.5129).epsilon(1e-4));
    CHECK(n[1] == doctest::Approx(std::log(0.4) / -std::log(0.1)));
    CHECK(mutual_information(j) == doctest::Approx(0.1927).epsilon(1e-3));
    CHECK(nmi(j) == doctest::Approx(0.2781).epsilon(1e-3));
}

TEST_CASE("degenerate tables") {
    const std::vector<double> one = {0.0, 3.0, 0.0, 0.0};
    auto j = JointDistribution::from_masses(2, 2, one);
    const auto n = npmi(j);
    CHECK(n[0] == -1.0);
    CHECK(n[1] == 1.0);
    CHECK_THROWS_AS(nmi(j), Error);

    const std::vector<double> indep = {0.06, 0.14, 0.24, 0.56};
    auto k = JointDistribution::from_masses(2, 2, indep);
    CHECK(mutual_information(k) == doctest::Approx(0.0).epsilon(1e-12));
    for (double v : npmi(k)) CHECK(std::abs(v) < 1e-12);

    const std::vector<double> row_only = {0.5, 0.5};
    CHECK(nmi(JointDistribution::from_masses(1, 2, row_only)) == 0.0);
    CHECK_THROWS_AS(JointDistribution(2, 2, {0.5, 0.5, 0.5, 0.0}), Error);
}

TEST_CASE("random tables agree with the double-loop oracle") {
    RngStream rng(77, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t r = 1 + rng.uniform_index(6), c = 1 + rng.uniform_index(6);
        std::vector<double> m(r * c);
        for (auto& x : m) x = rng.uniform() < 0.2 ? 0.0 : rng.uniform() * 100;
        m[rng.uniform_index(m.size())] += 1.0;
        Oracle o(r, c, m);
        auto j = JointDistribution::from_masses(r, c, m);
        const auto n = npmi(j);
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = 0; b < c; ++b) CHECK(n[a * c + b] == doctest::Approx(o.npmi(a, b)).epsilon(1e-12));
        CHECK(mutual_information(j) == doctest::Approx(o.mi()).epsilon(1e-12));
        if (Oracle::h(o.pa) + Oracle::h(o.pb) > 0) {
            const double v = nmi(j);
            CHECK(v == doctest::Approx(o.nmi()).epsilon(1e-12));
            CHECK(v >= -1e-12);
            CHECK(v <= 1 + 1e-12);
        }
        for (double v : n) {
            CHECK(v >= -1 - 1e-12);
            CHECK(v <= 1 + 1e-12);
        }
    }
}

TEST_CASE("entropy") {
    const std::vector<double> u = {0.25, 0.25, 0.25, 0.25};
    CHECK(entropy(u) == doctest::Approx(std::log(4.0)));
    const std::vector<double> d = {0.0, 1.0};
    CHECK(entropy(d) == 0.0);
}

TEST_CASE("domain proportions and the composition report") {
    std::vector<DocumentRecord> recs = {
        {"a", 30, 0, 0, 0, {}},
        {"b", 10, 0, 1, 1, {}},
        {"c", 60, 1, 1, 1, {}},
    };
    auto idx = ingest(recs, canonical_topics(), canonical_formats());
    auto tok = domain_proportions(idx, canonical_topics());
    CHECK(tok[0] == doctest::Approx(0.4));
    CHECK(tok[1] == doctest::Approx(0.6));
    auto docs = domain_proportions(idx, canonical_topics(), Weighting::documents);
    CHECK(docs[0] == doctest::Approx(2.0 / 3.0));
    auto j = joint_distribution(idx, *canonical_topics(), *canonical_formats());
    CHECK(j.at(0, 0) == doctest::Approx(0.3));
    CHECK(j.row_marginal()[1] == doctest::Approx(0.6));

    auto rep = composition_report(idx);
    CHECK(rep["totals"]["tokens"] == 100);
    CHECK(rep["taxonomies"].size() == 3);
    CHECK(rep["taxonomies"][0]["categories"][0]["proportion"].get<double>() == doctest::Approx(0.4));
    CHECK(rep["npmi"]["matrix"].size() == 24);
    CHECK(rep["nmi"].contains("cluster;topic"));

    CorpusIndex empty(canonical_topics(), canonical_formats(), false);
    CHECK_THROWS_AS(composition_report(empty), Error);
    CHECK_THROWS_AS(domain_proportions(empty, canonical_topics()), Error);
}
