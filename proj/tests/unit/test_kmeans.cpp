#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/kmeans.hpp"
#include "corpus_mixer/rng.hpp"

using namespace corpus_mixer;

namespace {

// Points around k well-separated corners of a simplex in `dim` dimensions.
EmbeddingSet blobs(std::size_t k, std::size_t per, std::size_t dim, double noise, std::uint64_t seed,
                   std::vector<std::size_t>* truth = nullptr) {
    EmbeddingSet s;
    s.dim = dim;
    RngStream rng(seed, 0);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per; ++i) {
            s.ids.push_back("p" + std::to_string(c) + "-" + std::to_string(i));
            for (std::size_t j = 0; j < dim; ++j) {
                s.values.push_back(static_cast<float>((j == c ? 1.0 : 0.0) + noise * rng.normal()));
            }
            if (truth) truth->push_back(c);
        }
    }
    return s;
}

}  // namespace

TEST_CASE("k-means separates planted blobs") {
    std::vector<std::size_t> truth;
    auto pts = blobs(5, 60, 8, 0.05, 1, &truth);
    auto model = kmeans(pts, {5, 0, 100, 1e-6});
    CHECK(model.converged);
    auto labels = assign_all(model, pts);
    CHECK(cluster_taxonomy_nmi(labels, truth) == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 1; i < model.inertia_history.size(); ++i) {
        CHECK(model.inertia_history[i] <= model.inertia_history[i - 1] + 1e-9);
    }
    CHECK(model.inertia == doctest::Approx(model.inertia_history.back()));
}

TEST_CASE("k-means is deterministic per seed") {
    auto pts = blobs(4, 50, 6, 0.3, 2);
    auto a = kmeans(pts, {4, 9, 50, 1e-6});
    auto b = kmeans(pts, {4, 9, 50, 1e-6});
    CHECK(a.centroids == b.centroids);
    CHECK(a.to_json() == b.to_json());
    auto back = ClusterModel::from_json(json::parse(a.to_json().dump()));
    CHECK(back.centroids == a.centroids);
    CHECK(assign_all(back, pts) == assign_all(a, pts));
}

TEST_CASE("assignment ties and errors") {
    ClusterModel m;
    m.k = 2;
    m.dim = 2;
    m.centroids = {1.0, 0.0, -1.0, 0.0};
    const std::vector<float> mid = {0.0f, 1.0f};
    CHECK(assign(m, mid) == 0);
    const std::vector<float> right = {-0.5f, 0.0f};
    CHECK(assign(m, right) == 1);
    const std::vector<float> bad = {0.0f};
    CHECK_THROWS_AS(assign(m, bad), Error);

    auto few = blobs(1, 3, 2, 0.1, 3);
    CHECK_THROWS_AS(kmeans(few, {4, 0, 10, 1e-6}), Error);
}

TEST_CASE("duplicate points do not leave empty clusters") {
    EmbeddingSet s;
    s.dim = 2;
    for (int i = 0; i < 20; ++i) {
        s.ids.push_back("d" + std::to_string(i));
        s.values.push_back(i < 18 ? 1.0f : 0.0f);
        s.values.push_back(i < 18 ? 0.0f : static_cast<float>(i));
    }
    auto m = kmeans(s, {3, 0, 20, 1e-9});
    auto labels = assign_all(m, s);
    std::vector<int> sizes(3, 0);
    for (auto l : labels) ++sizes[l];
    for (int n : sizes) CHECK(n > 0);
}

TEST_CASE("binary embedding round trip") {
    auto pts = blobs(2, 5, 3, 0.1, 4);
    const auto dir = std::filesystem::temp_directory_path() / "corpus_mixer_kmeans_test";
    std::filesystem::create_directories(dir);
    write_embeddings(pts, dir / "v.bin", dir / "ids.txt");
    auto back = read_embeddings(dir / "v.bin", dir / "ids.txt");
    CHECK(back.ids == pts.ids);
    CHECK(back.values == pts.values);
    CHECK(back.dim == 3);

    std::ofstream(dir / "short.txt") << "only-one\n";
    CHECK_THROWS_AS(read_embeddings(dir / "v.bin", dir / "short.txt"), Error);
    CHECK_THROWS_AS(read_embeddings(dir / "missing.bin", dir / "ids.txt"), Error);
    std::filesystem::remove_all(dir);

    l2_normalize(back);
    for (std::size_t i = 0; i < back.size(); ++i) {
        double n = 0;
        for (float v : back.row(i)) n += double(v) * v;
        CHECK(n == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("cluster NMI weighting") {
    const std::vector<std::size_t> a = {0, 0, 1, 1}, b = {0, 0, 1, 1}, c = {0, 1, 0, 1};
    CHECK(cluster_taxonomy_nmi(a, b) == doctest::Approx(1.0));
    CHECK(cluster_taxonomy_nmi(a, c) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    const std::vector<double> w = {1, 1, 1, 1};
    CHECK(cluster_taxonomy_nmi(a, b, std::span<const double>(w)) == doctest::Approx(1.0));
    const std::vector<std::size_t> shorter = {0};
    CHECK_THROWS_AS(cluster_taxonomy_nmi(a, shorter), Error);
}
