#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace corpus_mixer {

// Counter-based generator (Philox4x32-10). A stream is identified by
// (seed, stream id); draws inside a stream are a pure function of the
// position, so work can be split across threads by stream without changing
// results.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();
    // Uniform in (0, 1); safe to take the log of.
    double uniform_open();
    // Unbiased integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);
    double normal();
    // log of a Gamma(shape, 1) variate. Working in log space keeps tiny shapes
    // (alpha * p_i well below 1) from underflowing to an all-zero draw.
    double log_gamma(double shape);
    double gamma(double shape);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
};

// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Dirichlet(alpha) via normalized Gamma draws. Zero entries of alpha are
// excluded from the draw and come back as exact zeros; at least one entry
// must be positive. Throws InvalidAlpha on negative or non-finite entries.
void sample_dirichlet(std::span<const double> alpha, RngStream& rng, std::span<double> out);

}  // namespace corpus_mixer
