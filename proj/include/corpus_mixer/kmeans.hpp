#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corpus_mixer/corpus.hpp"
#include "corpus_mixer/json_io.hpp"

namespace corpus_mixer {

inline constexpr std::size_t kDefaultClusterCount = 24;

// Row-major n x d float vectors with one id per row.
struct EmbeddingSet {
    std::vector<std::string> ids;
    std::size_t dim = 0;
    std::vector<float> values;

    std::size_t size() const noexcept { return ids.size(); }
    std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

// Binary layout: little-endian u64 n, u64 d, then n*d float32. Ids come from a
// sidecar text file, one per line.
EmbeddingSet read_embeddings(const std::filesystem::path& vectors, const std::filesystem::path& ids);
void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& vectors,
                      const std::filesystem::path& ids);

// Scales each row to unit length; zero rows are left alone.
void l2_normalize(EmbeddingSet& set);

struct KMeansParams {
    std::size_t k = kDefaultClusterCount;
    std::uint64_t seed = 0;
    std::size_t max_iters = 100;
    double tol = 1e-6;  // max centroid movement (Euclidean) to stop
};

struct ClusterModel {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;  // k x dim
    std::size_t iterations = 0;
    double inertia = 0.0;
    std::vector<double> inertia_history;  // one entry per assignment step
    bool converged = false;

    std::span<const double> centroid(std::size_t j) const { return {centroids.data() + j * dim, dim}; }
    json to_json() const;
    static ClusterModel from_json(const json& doc);
};

// k-means++ seeding then Lloyd iterations. Throws TooFewPoints.
ClusterModel kmeans(const EmbeddingSet& points, const KMeansParams& params);

// Nearest centroid by squared Euclidean distance, ties to the lower id.
// Throws DimensionMismatch.
std::size_t assign(const ClusterModel& model, std::span<const float> vector);
std::vector<std::size_t> assign_all(const ClusterModel& model, const EmbeddingSet& points);

// NMI between cluster ids and category ids over the same documents, each
// document weighted by `weights` (tokens) or 1. Throws LengthMismatch.
double cluster_taxonomy_nmi(std::span<const std::size_t> assignments, std::span<const std::size_t> labels,
                            std::optional<std::span<const double>> weights = std::nullopt);

}  // namespace corpus_mixer
