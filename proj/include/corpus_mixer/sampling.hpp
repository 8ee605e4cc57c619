#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "corpus_mixer/mixture.hpp"
#include "corpus_mixer/rng.hpp"

namespace corpus_mixer {

inline constexpr double kPriorTemperature = 2.0;
inline constexpr std::size_t kConfigMixtureCount = 512;
inline const double kConfigLogAlphaLow = std::log(0.1);
inline const double kConfigLogAlphaHigh = std::log(10.0);
inline constexpr std::size_t kCapAttemptsPerMixture = 10000;

struct SamplerConfig {
    Mixture prior;  // already tempered
    std::size_t n_mixtures = kConfigMixtureCount;
    double log_alpha_low = kConfigLogAlphaLow;
    double log_alpha_high = kConfigLogAlphaHigh;
    // Max ratio to the untempered reference; unset means no cap.
    std::optional<double> cap;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SampledMixture {
    std::size_t index;
    double alpha;
    Mixture mixture;
};

// Draws pi ~ Dirichlet(alpha); zero entries of alpha yield zero weights.
Mixture sample_dirichlet(TaxonomyPtr tax, std::span<const double> alpha, RngStream& rng);

// Mixture `index` of a config run: log alpha ~ U(low, high), then
// pi ~ Dirichlet(alpha * prior), resampled until within the cap. Depends only
// on (cfg, reference, index).
SampledMixture sample_config_mixture(const SamplerConfig& cfg, const Mixture& reference, std::size_t index);

// All n_mixtures draws, generated in parallel and ordered by index.
std::vector<SampledMixture> sample_config_mixtures(const SamplerConfig& cfg, const Mixture& reference);

}  // namespace corpus_mixer
