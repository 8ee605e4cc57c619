#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "corpus_mixer/json_io.hpp"
#include "corpus_mixer/mixture.hpp"
#include "corpus_mixer/regression.hpp"

namespace corpus_mixer {

inline constexpr std::size_t kSearchSeedCount = 2;

struct SearchParams {
    std::size_t n_per_step = 500000;
    std::size_t steps = 15;
    double kl_coeff = 0.002;
    double smoothing = 0.2;
    double cap = 6.5;
    double log_alpha_low = 0.0;  // log 1
    double log_alpha_high = std::log(1000.0);
    std::size_t line_search_points = 500;
    std::uint64_t seed = 0;
    // Each candidate slot redraws until it satisfies the cap, at most this
    // many times; a step therefore spends at most 100 * n_per_step draws.
    std::size_t attempts_per_candidate = 100;

    void validate() const;
    json to_json() const;
};

// predicted loss + gamma * KL(p || pi); the KL term is skipped when gamma is 0.
double objective(const LossPredictor& predictor, std::span<const double> prior, double gamma,
                 std::span<const double> candidate);
double objective(const LossPredictor& predictor, const Mixture& prior, double gamma, const Mixture& candidate);

struct ScoredMixture {
    Mixture mixture;
    double value;
};

// Evaluates beta_j * w + (1 - beta_j) * w_tilde for beta_j = j / (points - 1)
// and returns the argmin (smallest j on ties).
ScoredMixture line_search(const LossPredictor& predictor, const Mixture& prior, double gamma, const Mixture& w,
                          const Mixture& w_tilde, std::size_t points);

struct SearchStep {
    std::size_t step;
    std::size_t accepted;
    std::size_t draws;
    ScoredMixture best_candidate;
    ScoredMixture after_line_search;
    Mixture updated_prior;
    double best_value;
};

struct SearchResult {
    Mixture mixture;
    double value;
    std::uint64_t seed;
    std::vector<SearchStep> trace;
};

// Adaptive simplex search: each step draws candidates from
// Dirichlet(alpha * w) under the elementwise cap against `prior`, line-searches
// between w and the best candidate, then moves w toward it by `smoothing`.
// Returns the best mixture seen. Throws CapInfeasible, NoFeasibleCandidate.
SearchResult adaptive_search(const LossPredictor& predictor, const Mixture& prior, const SearchParams& params);

// Runs adaptive_search once per seed and keeps the lowest objective (first
// seed on ties).
SearchResult multi_seed_search(const LossPredictor& predictor, const Mixture& prior, SearchParams params,
                               std::span<const std::uint64_t> seeds);

// Exhaustive search over simplex lattice points with spacing `resolution`
// that satisfy the cap; lexicographically first argmin. Arity <= 5.
struct BruteForceResult {
    Mixture mixture;
    double value;
    std::size_t evaluated;
};
BruteForceResult brute_force_search(const LossPredictor& predictor, const Mixture& prior, double gamma, double cap,
                                    double resolution);

json trace_to_json(const SearchResult& result);

}  // namespace corpus_mixer
