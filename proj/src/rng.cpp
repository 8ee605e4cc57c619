#include "corpus_mixer/rng.hpp"

#include "corpus_mixer/error.hpp"

#include <cmath>
#include <vector>

namespace corpus_mixer {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = std::uint64_t{a} * std::uint64_t{b};
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

void RngStream::refill() {
    block_ = philox4x32_10(counter_, key_);
    if (++counter_[0] == 0) ++counter_[1];
    used_ = 0;
}

std::uint32_t RngStream::next_u32() {
    if (used_ == 4) refill();
    return block_[used_++];
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    // Lemire's nearly-divisionless bounded draw.
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<unsigned __int128>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::normal() {
    // Box-Muller; one variate per pair of uniforms keeps the stream position
    // independent of call history.
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double RngStream::log_gamma(double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape)) {
        throw Error(ErrorCode::invalid_alpha, "gamma shape must be positive and finite");
    }
    if (shape < 1.0) {
        // G(a) = G(a + 1) * U^(1/a)
        return log_gamma(shape + 1.0) + std::log(uniform_open()) / shape;
    }
    // Marsaglia & Tsang (2000).
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
    }
}

double RngStream::gamma(double shape) {
    return std::exp(log_gamma(shape));
}

void sample_dirichlet(std::span<const double> alpha, RngStream& rng, std::span<double> out) {
    if (alpha.size() != out.size() || alpha.empty()) {
        throw Error(ErrorCode::invalid_alpha, "alpha and output sizes differ or are empty");
    }
    double max_log = -INFINITY;
    bool any_positive = false;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double a = alpha[i];
        if (!std::isfinite(a) || a < 0.0) {
            throw Error(ErrorCode::invalid_alpha, "alpha entries must be finite and non-negative");
        }
        if (a == 0.0) {
            out[i] = -INFINITY;
            continue;
        }
        any_positive = true;
        out[i] = rng.log_gamma(a);
        if (out[i] > max_log) max_log = out[i];
    }
    if (!any_positive) {
        throw Error(ErrorCode::invalid_alpha, "alpha has no positive entry");
    }
    double total = 0.0;
    for (double& v : out) {
        v = std::isinf(v) ? 0.0 : std::exp(v - max_log);
        total += v;
    }
    for (double& v : out) v /= total;
}

}  // namespace corpus_mixer
