#include "corpus_mixer/kmeans.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/parallel.hpp"
#include "corpus_mixer/rng.hpp"
#include "corpus_mixer/stats.hpp"

namespace corpus_mixer {

namespace {

template <class T>
T from_little_endian(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <class T>
void put_little_endian(std::string& out, T v) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(from_little_endian(v));
    out.append(bytes.data(), bytes.size());
}

double squared_distance(std::span<const float> x, std::span<const double> c) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - c[i];
        s += d * d;
    }
    return s;
}

struct Nearest {
    std::size_t id;
    double d2;
};

Nearest nearest(const ClusterModel& m, std::span<const float> x) {
    Nearest best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < m.k; ++j) {
        const double d2 = squared_distance(x, m.centroid(j));
        if (d2 < best.d2) best = {j, d2};
    }
    return best;
}

}  // namespace

EmbeddingSet read_embeddings(const std::filesystem::path& vectors, const std::filesystem::path& ids) {
    std::ifstream in(vectors, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + vectors.string());
    std::uint64_t header[2];
    if (!in.read(reinterpret_cast<char*>(header), sizeof header))
        throw Error(ErrorCode::io_error, vectors.string() + ": truncated header");
    const std::uint64_t n = from_little_endian(header[0]);
    const std::uint64_t d = from_little_endian(header[1]);
    if (d == 0) throw Error(ErrorCode::dimension_mismatch, vectors.string() + ": dimension is 0");
    EmbeddingSet set;
    set.dim = d;
    set.values.resize(n * d);
    if (!in.read(reinterpret_cast<char*>(set.values.data()),
                 static_cast<std::streamsize>(set.values.size() * sizeof(float))))
        throw Error(ErrorCode::io_error, vectors.string() + ": expected " + std::to_string(n * d) + " floats");
    for (auto& v : set.values) {
        v = from_little_endian(v);
        if (!std::isfinite(v)) throw Error(ErrorCode::malformed_record, vectors.string() + ": non-finite entry");
    }
    for (auto& line : read_lines(ids)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) set.ids.push_back(std::move(line));
    }
    if (set.ids.size() != n)
        throw Error(ErrorCode::length_mismatch, ids.string() + " lists " + std::to_string(set.ids.size()) +
                                                    " ids for " + std::to_string(n) + " vectors");
    return set;
}

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& vectors,
                      const std::filesystem::path& ids) {
    std::string bin;
    bin.reserve(16 + set.values.size() * sizeof(float));
    put_little_endian<std::uint64_t>(bin, set.size());
    put_little_endian<std::uint64_t>(bin, set.dim);
    for (float v : set.values) put_little_endian(bin, v);
    write_file_atomic(vectors, bin);
    std::string text;
    for (const auto& id : set.ids) text += id + "\n";
    write_file_atomic(ids, text);
}

void l2_normalize(EmbeddingSet& set) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        float* row = set.values.data() + i * set.dim;
        double norm = 0.0;
        for (std::size_t j = 0; j < set.dim; ++j) norm += static_cast<double>(row[j]) * row[j];
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        for (std::size_t j = 0; j < set.dim; ++j) row[j] = static_cast<float>(row[j] / norm);
    }
}

json ClusterModel::to_json() const {
    json c = json::array();
    for (std::size_t j = 0; j < k; ++j) {
        auto row = centroid(j);
        c.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return {{"format", "corpus-mixer-kmeans"},
            {"k", k},
            {"dim", dim},
            {"iterations", iterations},
            {"converged", converged},
            {"inertia", inertia},
            {"inertia_history", inertia_history},
            {"centroids", c}};
}

ClusterModel ClusterModel::from_json(const json& doc) {
    try {
        if (doc.at("format") != "corpus-mixer-kmeans")
            throw Error(ErrorCode::invalid_spec, "not a k-means model");
        ClusterModel m;
        m.k = doc.at("k").get<std::size_t>();
        m.dim = doc.at("dim").get<std::size_t>();
        m.iterations = doc.at("iterations").get<std::size_t>();
        m.converged = doc.at("converged").get<bool>();
        m.inertia = doc.at("inertia").get<double>();
        m.inertia_history = doc.at("inertia_history").get<std::vector<double>>();
        const auto& c = doc.at("centroids");
        if (c.size() != m.k) throw Error(ErrorCode::invalid_spec, "centroid count does not match k");
        for (const auto& row : c) {
            auto v = row.get<std::vector<double>>();
            if (v.size() != m.dim) throw Error(ErrorCode::dimension_mismatch, "centroid has wrong dimension");
            m.centroids.insert(m.centroids.end(), v.begin(), v.end());
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_spec, std::string("bad k-means model: ") + e.what());
    }
}

ClusterModel kmeans(const EmbeddingSet& points, const KMeansParams& params) {
    const std::size_t n = points.size();
    const std::size_t d = points.dim;
    if (params.k == 0) throw Error(ErrorCode::invalid_config, "k must be at least 1");
    if (n < params.k)
        throw Error(ErrorCode::too_few_points,
                    std::to_string(n) + " points cannot form " + std::to_string(params.k) + " clusters");
    if (!(params.tol >= 0.0)) throw Error(ErrorCode::invalid_config, "tol must be non-negative");

    ClusterModel m;
    m.k = params.k;
    m.dim = d;
    m.centroids.resize(m.k * d);
    auto set_centroid = [&](std::size_t j, std::size_t point) {
        auto row = points.row(point);
        std::copy(row.begin(), row.end(), m.centroids.begin() + static_cast<std::ptrdiff_t>(j * d));
    };

    // k-means++ seeding.
    RngStream rng(params.seed, 0);
    set_centroid(0, rng.uniform_index(n));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), m.centroid(0));
    for (std::size_t j = 1; j < m.k; ++j) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n - 1;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > r && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_index(n);
        }
        set_centroid(j, pick);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), m.centroid(j)));
    }

    std::vector<std::size_t> labels(n);
    auto assign_step = [&] {
        parallel_for(n, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                const auto nb = nearest(m, points.row(i));
                labels[i] = nb.id;
                d2[i] = nb.d2;
            }
        });
        double inertia = 0.0;
        for (double v : d2) inertia += v;
        m.inertia = inertia;
        m.inertia_history.push_back(inertia);
    };

    assign_step();
    std::vector<double> sums(m.k * d);
    std::vector<std::size_t> sizes(m.k);
    for (std::size_t it = 0; it < params.max_iters; ++it) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto row = points.row(i);
            double* s = sums.data() + labels[i] * d;
            for (std::size_t c = 0; c < d; ++c) s[c] += row[c];
            ++sizes[labels[i]];
        }
        std::vector<double> next(m.k * d);
        std::vector<bool> taken(n, false);
        for (std::size_t j = 0; j < m.k; ++j) {
            if (sizes[j] > 0) {
                for (std::size_t c = 0; c < d; ++c)
                    next[j * d + c] = sums[j * d + c] / static_cast<double>(sizes[j]);
                continue;
            }
            // Empty cluster: move it onto the worst-served point.
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i] && (far == n || d2[i] > d2[far])) far = i;
            taken[far] = true;
            auto row = points.row(far);
            for (std::size_t c = 0; c < d; ++c) next[j * d + c] = row[c];
        }
        double movement = 0.0;
        for (std::size_t j = 0; j < m.k; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double delta = next[j * d + c] - m.centroids[j * d + c];
                s += delta * delta;
            }
            movement = std::max(movement, std::sqrt(s));
        }
        m.centroids = std::move(next);
        assign_step();
        m.iterations = it + 1;
        if (movement < params.tol) {
            m.converged = true;
            break;
        }
    }
    return m;
}

std::size_t assign(const ClusterModel& model, std::span<const float> vector) {
    if (vector.size() != model.dim)
        throw Error(ErrorCode::dimension_mismatch, "vector has dimension " + std::to_string(vector.size()) +
                                                       ", model expects " + std::to_string(model.dim));
    return nearest(model, vector).id;
}

std::vector<std::size_t> assign_all(const ClusterModel& model, const EmbeddingSet& points) {
    if (points.dim != model.dim)
        throw Error(ErrorCode::dimension_mismatch, "embeddings have dimension " + std::to_string(points.dim) +
                                                       ", model expects " + std::to_string(model.dim));
    std::vector<std::size_t> out(points.size());
    parallel_for(points.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) out[i] = nearest(model, points.row(i)).id;
    });
    return out;
}

double cluster_taxonomy_nmi(std::span<const std::size_t> assignments, std::span<const std::size_t> labels,
                            std::optional<std::span<const double>> weights) {
    if (assignments.size() != labels.size() || (weights && weights->size() != labels.size()))
        throw Error(ErrorCode::length_mismatch, "assignments, labels and weights must be aligned");
    if (assignments.empty()) throw Error(ErrorCode::empty_corpus, "no documents to compare");
    const std::size_t rows = *std::max_element(assignments.begin(), assignments.end()) + 1;
    const std::size_t cols = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<double> masses(rows * cols, 0.0);
    for (std::size_t i = 0; i < assignments.size(); ++i)
        masses[assignments[i] * cols + labels[i]] += weights ? (*weights)[i] : 1.0;
    return nmi(JointDistribution::from_masses(rows, cols, masses));
}

}  // namespace corpus_mixer
